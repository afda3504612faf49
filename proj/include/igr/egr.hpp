#pragma once

// Explicit gradient regularization: the objective E_mu = E + mu * |grad E|^2,
// its exact gradient grad E + 2 mu H grad E, and a training loop doing
// gradient descent on E_mu.

#include "igr/flow.hpp"
#include "igr/model.hpp"

namespace igr {

struct EgrConfig {
    double mu = 0.0;       // explicit regularization rate, >= 0
    double h_inner = 0.0;  // learning rate for descent on E_mu
    long max_iterations = 0;
    long eval_every = 10;
    double grad_tol = 1e-10;  // stop once |grad E_mu| < grad_tol
    bool store_params = true;
};

struct EgrEval {
    double value = 0.0;  // E_mu
    ParamVector gradient;
};

EgrEval egr_value_grad(const LossModel& model, const ParamVector& theta, double mu,
                       const Batch& batch);

// Trajectory rows carry the metrics of the underlying loss E; the E_mu value
// per recorded row is returned alongside.
struct EgrRun {
    Trajectory trajectory;
    std::vector<double> regularized_loss;  // E_mu at each recorded row
};

EgrRun run_egr(const LossModel& model, const ParamVector& theta0, const Batch& batch,
               const EgrConfig& config);

}  // namespace igr
