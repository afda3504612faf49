#pragma once

// Implicit-regularization metrics: the regularizer R_IG = |grad E|^2 / m,
// the rate lambda = h*m/4, the modified loss, loss-surface geometry (slope,
// tangent angle, metric determinant, surface-normal z-component), the
// per-step norm bound check, and the kernel form of the modified loss for
// least-squares models.

#include "igr/flow.hpp"
#include "igr/least_squares.hpp"
#include "igr/model.hpp"

namespace igr {

struct MetricsSnapshot {
    double loss = 0.0;
    double r_ig = 0.0;
    double lambda = 0.0;
    double loss_modified = 0.0;
    double slope = 0.0;
    double angle_alpha = 0.0;  // radians, in [0, pi/2)
    double metric_det = 1.0;   // 1 + m * R_IG
    double normal_z = 1.0;     // 1 / sqrt(1 + m * R_IG)
};

// |grad E(theta)|^2 / m
double r_ig(const LossModel& model, const ParamVector& theta, const Batch& batch);

// lambda = h * m / 4
double reg_rate(double h, std::size_t m);

// E + (h/4) |grad E|^2
double modified_loss(const LossModel& model, const ParamVector& theta, double h,
                     const Batch& batch);

// All geometric quantities at theta. lambda and loss_modified use the given
// step size h.
MetricsSnapshot geometry_snapshot(const LossModel& model, const ParamVector& theta,
                                  double h, const Batch& batch);

// Re-checks | |theta_{n+1}| - |theta_n| | <= h * slope_n + 1e-9 on the
// trajectory: consecutive recorded rows one iteration apart are re-verified,
// and violations detected during the run (every step) are merged in.
std::vector<long> check_norm_bound(const Trajectory& trajectory, double h);

struct NtkRecord {
    // errors[k]: epsilon_k, length c
    std::vector<std::vector<double>> errors;
    // kernel[i][j]: c x c block K(x_i, x_j), row-major
    std::vector<std::vector<std::vector<double>>> kernel;
    double ntk_modified_loss = 0.0;
};

// Modified loss via the kernel form: E + h * sum_ij eps_i^T K(x_i,x_j) eps_j.
// Only valid for the sum-convention least-squares family.
NtkRecord ntk_modified_loss(const LeastSquaresModel& model, const ParamVector& theta,
                            const Batch& batch, double h);

}  // namespace igr
