#include "igr/flow.hpp"

#include <algorithm>
#include <cmath>

#include "igr/kernels.hpp"

namespace igr {

ParamVector gd_step(const LossModel& model, const ParamVector& theta, double h,
                    const Batch& batch) {
    if (!(h > 0.0)) throw std::invalid_argument("gd_step: h must be > 0");
    const ParamVector g = model.grad(theta, batch);
    ParamVector next = theta;
    kern::axpy(-h, g.data(), next.data(), next.size());
    require_finite(next, "gd_step output");
    return next;
}

namespace {
TrajectoryRow make_row(const LossModel& model, long n, double h,
                       const ParamVector& theta, double loss, double slope,
                       bool store_params) {
    TrajectoryRow row;
    row.iteration = n;
    row.time = static_cast<double>(n) * h;
    if (store_params) row.theta = theta;
    row.loss = loss;
    row.slope = slope;
    const double m = static_cast<double>(model.param_count());
    row.r_ig = slope * slope / m;
    row.param_norm = param_norm(theta);
    row.loss_modified = loss + (h / 4.0) * slope * slope;
    return row;
}
}  // namespace

Trajectory run_gd(const LossModel& model, const ParamVector& theta0, const Batch& batch,
                  const FlowRunConfig& config) {
    if (!(config.h > 0.0)) throw std::invalid_argument("run_gd: h must be > 0");
    if (config.max_iterations < 1)
        throw std::invalid_argument("run_gd: max_iterations must be >= 1");

    Trajectory traj;
    traj.h = config.h;
    ParamVector theta = theta0;
    double norm_prev = param_norm(theta);
    traj.termination = Termination::completed;

    long n = 0;
    try {
        for (;; ++n) {
            const double loss = model.loss(theta, batch);
            if (std::abs(loss) > kDivergenceLossLimit)
                throw DivergenceError("loss magnitude exceeds divergence limit", n);
            const ParamVector g = model.grad(theta, batch);
            const double slope = param_norm(g);

            const bool converged = config.grad_tol > 0.0 && slope < config.grad_tol;
            const bool last = converged || n >= config.max_iterations;
            if (n % config.eval_every == 0 || last) {
                traj.rows.push_back(make_row(model, n, config.h, theta, loss,
                                             slope, config.store_params));
            }
            if (last) {
                traj.termination =
                    converged ? Termination::converged : Termination::completed;
                break;
            }

            kern::axpy(-config.h, g.data(), theta.data(), theta.size());
            require_finite(theta, "gd iterate", n + 1);
            const double norm_next = param_norm(theta);
            if (std::abs(norm_next - norm_prev) > config.h * slope + 1e-9)
                traj.norm_bound_violations.push_back(n);
            norm_prev = norm_next;
        }
    } catch (const DivergenceError&) {
        traj.termination = Termination::diverged;
    }
    traj.final_theta = theta;
    traj.final_iteration = n;
    return traj;
}

VectorField exact_field(const LossModel& model, const Batch& batch) {
    VectorField f;
    f.kind = VectorField::Kind::exact_flow;
    f.velocity = [&model, &batch](const ParamVector& theta) {
        ParamVector g = model.grad(theta, batch);
        kern::scale(-1.0, g.data(), g.size());
        return g;
    };
    return f;
}

VectorField modified_field(const LossModel& model, double h, const Batch& batch) {
    if (!(h > 0.0)) throw std::invalid_argument("modified_field: h must be > 0");
    VectorField f;
    f.kind = VectorField::Kind::modified_first_order;
    f.velocity = [&model, h, &batch](const ParamVector& theta) {
        const ParamVector g = model.grad(theta, batch);
        const ParamVector hg = model.hvp(theta, g, batch);
        ParamVector v = g;
        kern::scale(-1.0, v.data(), v.size());
        kern::axpy(-h / 2.0, hg.data(), v.data(), v.size());
        return v;
    };
    return f;
}

std::vector<std::pair<double, ParamVector>> integrate_reference(
    const VectorField& field, const ParamVector& theta0, double t_end, double h_ref,
    const std::vector<double>& sample_times) {
    if (!(h_ref > 0.0)) throw std::invalid_argument("integrate_reference: h_ref > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate_reference: t_end > 0");

    const long total_steps = std::llround(t_end / h_ref);
    std::vector<long> sample_steps;
    sample_steps.reserve(sample_times.size());
    for (double t : sample_times) {
        const long k = std::llround(t / h_ref);
        if (k < 0 || k > total_steps)
            throw std::invalid_argument("integrate_reference: sample time out of range");
        sample_steps.push_back(k);
    }

    const std::size_t m = theta0.size();
    ParamVector theta = theta0, tmp(m), k1, k2, k3, k4;
    std::vector<std::pair<double, ParamVector>> out;
    std::size_t next_sample = 0;
    auto maybe_record = [&](long step) {
        while (next_sample < sample_steps.size() && sample_steps[next_sample] == step) {
            out.emplace_back(static_cast<double>(step) * h_ref, theta);
            ++next_sample;
        }
    };
    maybe_record(0);
    for (long step = 0; step < total_steps; ++step) {
        k1 = field.velocity(theta);
        tmp = theta;
        kern::axpy(0.5 * h_ref, k1.data(), tmp.data(), m);
        k2 = field.velocity(tmp);
        tmp = theta;
        kern::axpy(0.5 * h_ref, k2.data(), tmp.data(), m);
        k3 = field.velocity(tmp);
        tmp = theta;
        kern::axpy(h_ref, k3.data(), tmp.data(), m);
        k4 = field.velocity(tmp);
        kern::axpy(h_ref / 6.0, k1.data(), theta.data(), m);
        kern::axpy(h_ref / 3.0, k2.data(), theta.data(), m);
        kern::axpy(h_ref / 3.0, k3.data(), theta.data(), m);
        kern::axpy(h_ref / 6.0, k4.data(), theta.data(), m);
        require_finite(theta, "reference flow state", step + 1);
        maybe_record(step + 1);
    }
    return out;
}

namespace {
// least-squares slope of y on x plus R^2
std::pair<double, double> fit_line(const std::vector<double>& x,
                                   const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n;
    const double varx = sxx - sx * sx / n;
    const double vary = syy - sy * sy / n;
    const double slope = cov / varx;
    const double r2 = vary > 0.0 ? (cov * cov) / (varx * vary) : 0.0;
    return {slope, r2};
}
}  // namespace

OrderFit estimate_local_order(const LossModel& model, const ParamVector& theta0,
                              const Batch& batch, const std::vector<double>& h_grid) {
    if (h_grid.size() < 4)
        throw std::invalid_argument("estimate_local_order: need >= 4 h values");
    const auto [hmin, hmax] = std::minmax_element(h_grid.begin(), h_grid.end());
    if (*hmax < 10.0 * *hmin)
        throw std::invalid_argument("estimate_local_order: grid must span >= one decade");

    OrderFit fit;
    const VectorField exact = exact_field(model, batch);
    for (double h : h_grid) {
        const ParamVector stepped = gd_step(model, theta0, h, batch);
        const auto ex = integrate_reference(exact, theta0, h, h / 100.0, {h});
        const VectorField mod = modified_field(model, h, batch);
        const auto mo = integrate_reference(mod, theta0, h, h / 100.0, {h});

        auto dist = [&](const ParamVector& a, const ParamVector& b) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
            return std::sqrt(s);
        };
        fit.h_values.push_back(h);
        fit.err_exact.push_back(dist(stepped, ex.back().second));
        fit.err_modified.push_back(dist(stepped, mo.back().second));
    }

    for (double e : fit.err_exact)
        if (e <= 0.0) throw OrderFitError("estimate_local_order: degenerate zero error");
    for (double e : fit.err_modified)
        if (e <= 0.0) throw OrderFitError("estimate_local_order: degenerate zero error");

    std::vector<double> lh, le, lm;
    for (std::size_t i = 0; i < fit.h_values.size(); ++i) {
        lh.push_back(std::log(fit.h_values[i]));
        le.push_back(std::log(fit.err_exact[i]));
        lm.push_back(std::log(fit.err_modified[i]));
    }
    std::tie(fit.order_vs_exact, fit.r2_exact) = fit_line(lh, le);
    std::tie(fit.order_vs_modified, fit.r2_modified) = fit_line(lh, lm);
    if (fit.r2_exact < 0.99 || fit.r2_modified < 0.99)
        throw OrderFitError("estimate_local_order: fit rejected, R^2 < 0.99");
    return fit;
}

}  // namespace igr
