#include "igr/egr.hpp"

#include <cmath>

#include "igr/kernels.hpp"

namespace igr {

EgrEval egr_value_grad(const LossModel& model, const ParamVector& theta, double mu,
                       const Batch& batch) {
    if (mu < 0.0) throw std::invalid_argument("egr: mu must be >= 0");
    const ParamVector g = model.grad(theta, batch);
    EgrEval out;
    out.value = model.loss(theta, batch) + mu * kern::sqnorm(g.data(), g.size());
    out.gradient = g;
    if (mu > 0.0) {
        const ParamVector hg = model.hvp(theta, g, batch);
        kern::axpy(2.0 * mu, hg.data(), out.gradient.data(), out.gradient.size());
    }
    require_finite(out.value, "egr value");
    require_finite(out.gradient, "egr gradient");
    return out;
}

EgrRun run_egr(const LossModel& model, const ParamVector& theta0, const Batch& batch,
               const EgrConfig& config) {
    if (!(config.h_inner > 0.0)) throw std::invalid_argument("run_egr: h_inner > 0");
    if (config.max_iterations < 1)
        throw std::invalid_argument("run_egr: max_iterations must be >= 1");

    EgrRun run;
    Trajectory& traj = run.trajectory;
    traj.h = config.h_inner;
    ParamVector theta = theta0;
    double norm_prev = param_norm(theta);

    long n = 0;
    try {
        for (;; ++n) {
            const EgrEval ev = egr_value_grad(model, theta, config.mu, batch);
            if (std::abs(ev.value) > kDivergenceLossLimit)
                throw DivergenceError("E_mu magnitude exceeds divergence limit", n);
            const double slope_mu = param_norm(ev.gradient);

            const bool converged = config.grad_tol > 0.0 && slope_mu < config.grad_tol;
            const bool last = converged || n >= config.max_iterations;
            if (n % config.eval_every == 0 || last) {
                const ParamVector g = model.grad(theta, batch);
                const double slope = param_norm(g);
                TrajectoryRow row;
                row.iteration = n;
                row.time = static_cast<double>(n) * config.h_inner;
                if (config.store_params) row.theta = theta;
                row.loss = model.loss(theta, batch);
                row.slope = slope;
                row.r_ig = slope * slope / static_cast<double>(model.param_count());
                row.param_norm = param_norm(theta);
                row.loss_modified =
                    row.loss + (config.h_inner / 4.0) * slope * slope;
                traj.rows.push_back(std::move(row));
                run.regularized_loss.push_back(ev.value);
            }
            if (last) {
                traj.termination =
                    converged ? Termination::converged : Termination::completed;
                break;
            }

            kern::axpy(-config.h_inner, ev.gradient.data(), theta.data(), theta.size());
            require_finite(theta, "egr iterate", n + 1);
            // descent on E_mu, so the norm bound uses the E_mu slope
            const double norm_next = param_norm(theta);
            if (std::abs(norm_next - norm_prev) > config.h_inner * slope_mu + 1e-9)
                traj.norm_bound_violations.push_back(n);
            norm_prev = norm_next;
        }
    } catch (const DivergenceError&) {
        traj.termination = Termination::diverged;
    }
    traj.final_theta = theta;
    traj.final_iteration = n;
    return run;
}

}  // namespace igr
