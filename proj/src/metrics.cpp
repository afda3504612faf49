#include "igr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "igr/kernels.hpp"

namespace igr {

double r_ig(const LossModel& model, const ParamVector& theta, const Batch& batch) {
    const ParamVector g = model.grad(theta, batch);
    return kern::sqnorm(g.data(), g.size()) / static_cast<double>(model.param_count());
}

double reg_rate(double h, std::size_t m) {
    if (!(h > 0.0)) throw std::invalid_argument("reg_rate: h must be > 0");
    if (m < 1) throw std::invalid_argument("reg_rate: m must be >= 1");
    return h * static_cast<double>(m) / 4.0;
}

double modified_loss(const LossModel& model, const ParamVector& theta, double h,
                     const Batch& batch) {
    if (!(h > 0.0)) throw std::invalid_argument("modified_loss: h must be > 0");
    const ParamVector g = model.grad(theta, batch);
    return model.loss(theta, batch) + (h / 4.0) * kern::sqnorm(g.data(), g.size());
}

MetricsSnapshot geometry_snapshot(const LossModel& model, const ParamVector& theta,
                                  double h, const Batch& batch) {
    const ParamVector g = model.grad(theta, batch);
    const double gradsq = kern::sqnorm(g.data(), g.size());
    const double m = static_cast<double>(model.param_count());

    MetricsSnapshot s;
    s.loss = model.loss(theta, batch);
    s.slope = std::sqrt(gradsq);
    s.r_ig = gradsq / m;
    s.lambda = reg_rate(h, model.param_count());
    s.loss_modified = s.loss + (h / 4.0) * gradsq;
    s.metric_det = 1.0 + gradsq;  // = 1 + m * R_IG
    s.normal_z = 1.0 / std::sqrt(1.0 + gradsq);
    s.angle_alpha = std::atan(s.slope);
    return s;
}

std::vector<long> check_norm_bound(const Trajectory& trajectory, double h) {
    std::vector<long> violations = trajectory.norm_bound_violations;
    for (std::size_t i = 0; i + 1 < trajectory.rows.size(); ++i) {
        const auto& a = trajectory.rows[i];
        const auto& b = trajectory.rows[i + 1];
        if (b.iteration != a.iteration + 1) continue;
        if (std::abs(b.param_norm - a.param_norm) > h * a.slope + 1e-9)
            violations.push_back(a.iteration);
    }
    std::sort(violations.begin(), violations.end());
    violations.erase(std::unique(violations.begin(), violations.end()),
                     violations.end());
    return violations;
}

NtkRecord ntk_modified_loss(const LeastSquaresModel& model, const ParamVector& theta,
                            const Batch& batch, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("ntk_modified_loss: h must be > 0");
    const std::size_t n = batch.count;
    const std::size_t c = model.output_dim();
    const std::size_t m = model.param_count();

    NtkRecord rec;
    rec.errors.reserve(n);
    std::vector<std::vector<double>> jac;
    jac.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        rec.errors.push_back(model.point_error(theta, batch, k));
        jac.push_back(model.point_jacobian(theta, batch, k));
    }

    // K(x_i, x_j)[u, v] = <d eps_i_u / d theta, d eps_j_v / d theta>
    rec.kernel.assign(n, std::vector<std::vector<double>>(n));
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> block(c * c);
            for (std::size_t u = 0; u < c; ++u)
                for (std::size_t v = 0; v < c; ++v)
                    block[u * c + v] =
                        kern::dot(jac[i].data() + u * m, jac[j].data() + v * m, m);
            for (std::size_t u = 0; u < c; ++u)
                for (std::size_t v = 0; v < c; ++v)
                    quad += rec.errors[i][u] * block[u * c + v] * rec.errors[j][v];
            rec.kernel[i][j] = std::move(block);
        }
    }
    rec.ntk_modified_loss = model.loss(theta, batch) + h * quad;
    return rec;
}

}  // namespace igr
