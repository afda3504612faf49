#pragma once

// Discrete gradient descent, the first-order modified vector field from
// backward error analysis, a fixed-step 4th-order reference integrator for
// exact and modified gradient flows, and local-error order fitting.

#include <functional>
#include <limits>
#include <optional>

#include "igr/model.hpp"

namespace igr {

enum class Termination { completed, converged, diverged, stopped_by_criterion };

struct TrajectoryRow {
    long iteration = 0;
    double time = 0.0;  // n * h
    ParamVector theta;  // empty when parameter storage is disabled
    double loss = 0.0;
    double r_ig = 0.0;
    double slope = 0.0;
    double param_norm = 0.0;
    double loss_modified = 0.0;
    double train_accuracy = std::numeric_limits<double>::quiet_NaN();
    double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    double h = 0.0;
    Termination termination = Termination::completed;
    ParamVector final_theta;
    long final_iteration = 0;
    // step indices n where | |theta_{n+1}| - |theta_n| | > h*slope_n + 1e-9,
    // checked at every step during the run
    std::vector<long> norm_bound_violations;
};

struct FlowRunConfig {
    double h = 0.0;
    long max_iterations = 0;
    long eval_every = 10;
    // stop early once |grad| < grad_tol (0 disables)
    double grad_tol = 0.0;
    bool store_params = true;
};

inline constexpr double kDivergenceLossLimit = 1e12;

struct VectorField {
    enum class Kind { exact_flow, modified_first_order };
    Kind kind = Kind::exact_flow;
    std::function<ParamVector(const ParamVector&)> velocity;
};

// One gradient descent update theta - h * grad E(theta). h must be > 0.
ParamVector gd_step(const LossModel& model, const ParamVector& theta, double h,
                    const Batch& batch);

// Full-batch gradient descent; records a row every eval_every iterations and
// at the final step. Divergence keeps the partial trajectory.
Trajectory run_gd(const LossModel& model, const ParamVector& theta0, const Batch& batch,
                  const FlowRunConfig& config);

// Exact gradient flow field theta' = -grad E(theta).
VectorField exact_field(const LossModel& model, const Batch& batch);

// First-order modified field theta' = -grad E - (h/2) H grad E, the gradient
// flow of the modified loss truncated at first order in h.
VectorField modified_field(const LossModel& model, double h, const Batch& batch);

// Fixed-step classical RK4 from theta0 to t_end; returns the states at the
// given sample times (each must be a multiple of h_ref within rounding).
std::vector<std::pair<double, ParamVector>> integrate_reference(
    const VectorField& field, const ParamVector& theta0, double t_end, double h_ref,
    const std::vector<double>& sample_times);

class OrderFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OrderFit {
    double order_vs_exact = 0.0;
    double order_vs_modified = 0.0;
    double r2_exact = 0.0;
    double r2_modified = 0.0;
    std::vector<double> h_values;
    std::vector<double> err_exact;
    std::vector<double> err_modified;
};

// For each h: one GD step vs the time-h state of the exact and modified
// flows (RK4, h_ref = h/100). Fits both log-log slopes; throws OrderFitError
// if a fit has R^2 < 0.99 or the errors are degenerate.
OrderFit estimate_local_order(const LossModel& model, const ParamVector& theta0,
                              const Batch& batch, const std::vector<double>& h_grid);

}  // namespace igr
