#pragma once

// Two-parameter model E(a, b) = (y - a*b*x)^2 / 2 with closed-form gradient
// and Hessian. The single data point (x, y) is fixed at construction; the
// batch argument is ignored. Global minima lie on the hyperbola a*b = y/x.

#include <array>

#include "igr/model.hpp"

namespace igr {

class BilinearModel final : public LossModel {
public:
    BilinearModel(double x, double y);

    std::size_t param_count() const override { return 2; }
    std::string family() const override { return "bilinear"; }

    double loss(const ParamVector& theta, const Batch& batch) const override;
    ParamVector grad(const ParamVector& theta, const Batch& batch) const override;
    ParamVector hvp(const ParamVector& theta, const ParamVector& v,
                    const Batch& batch) const override;

    // Dense 2x2 Hessian, row-major.
    std::array<double, 4> hessian(const ParamVector& theta) const;

    double x() const { return x_; }
    double y() const { return y_; }

private:
    double x_, y_;
};

BilinearModel make_bilinear(double x, double y);

}  // namespace igr
