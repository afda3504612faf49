#include "igr/bilinear.hpp"

namespace igr {

BilinearModel::BilinearModel(double x, double y) : x_(x), y_(y) {
    if (x == 0.0)
        throw std::invalid_argument(
            "bilinear model requires x != 0 (every theta would be a global minimum)");
}

double BilinearModel::loss(const ParamVector& theta, const Batch&) const {
    check_theta(theta);
    const double r = y_ - theta[0] * theta[1] * x_;
    const double e = 0.5 * r * r;
    require_finite(e, "bilinear loss");
    return e;
}

ParamVector BilinearModel::grad(const ParamVector& theta, const Batch&) const {
    check_theta(theta);
    const double a = theta[0], b = theta[1];
    const double r = y_ - a * b * x_;
    ParamVector g{-b * x_ * r, -a * x_ * r};
    require_finite(g, "bilinear gradient");
    return g;
}

std::array<double, 4> BilinearModel::hessian(const ParamVector& theta) const {
    const double a = theta[0], b = theta[1];
    const double haa = b * b * x_ * x_;
    const double hab = (2.0 * a * b * x_ - y_) * x_;
    const double hbb = a * a * x_ * x_;
    return {haa, hab, hab, hbb};
}

ParamVector BilinearModel::hvp(const ParamVector& theta, const ParamVector& v,
                               const Batch&) const {
    check_theta(theta);
    if (v.size() != 2) throw std::invalid_argument("hvp: direction length mismatch");
    const auto h = hessian(theta);
    ParamVector out{h[0] * v[0] + h[1] * v[1], h[2] * v[0] + h[3] * v[1]};
    require_finite(out, "bilinear hvp");
    return out;
}

BilinearModel make_bilinear(double x, double y) { return BilinearModel(x, y); }

}  // namespace igr
