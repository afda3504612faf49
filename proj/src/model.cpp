#include "igr/model.hpp"

#include <cmath>
#include <limits>

#include "igr/kernels.hpp"

namespace igr {

void require_finite(double value, const char* what, long iteration) {
    if (!std::isfinite(value))
        throw DivergenceError(std::string(what) + " is non-finite", iteration);
}

void require_finite(const ParamVector& values, const char* what, long iteration) {
    for (double v : values)
        if (!std::isfinite(v))
            throw DivergenceError(std::string(what) + " has a non-finite entry", iteration);
}

double param_norm(const ParamVector& theta) {
    return std::sqrt(kern::sqnorm(theta.data(), theta.size()));
}

void LossModel::check_theta(const ParamVector& theta) const {
    if (theta.size() != param_count())
        throw std::invalid_argument("theta length " + std::to_string(theta.size()) +
                                    " != model parameter count " +
                                    std::to_string(param_count()));
}

ParamVector LossModel::hvp(const ParamVector& theta, const ParamVector& v,
                           const Batch& batch) const {
    check_theta(theta);
    if (v.size() != param_count())
        throw std::invalid_argument("hvp: direction length mismatch");
    const std::size_t m = param_count();
    const double vnorm = param_norm(v);
    if (vnorm == 0.0) return ParamVector(m, 0.0);
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) *
                       (1.0 + param_norm(theta)) / std::max(vnorm, 1e-12);
    ParamVector plus = theta, minus = theta;
    kern::axpy(eps, v.data(), plus.data(), m);
    kern::axpy(-eps, v.data(), minus.data(), m);
    ParamVector gp = grad(plus, batch);
    const ParamVector gm = grad(minus, batch);
    kern::axpy(-1.0, gm.data(), gp.data(), m);
    kern::scale(1.0 / (2.0 * eps), gp.data(), m);
    require_finite(gp, "hvp");
    return gp;
}

}  // namespace igr
