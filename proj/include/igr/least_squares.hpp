#pragma once

// Least-squares regression model f_theta(x) = W phi(x), linear in the
// parameters, with the sum loss convention E(theta) = sum_i |f(x_i) - y_i|^2
// (no 1/2, no mean). The sum convention keeps the kernel identities of the
// modified loss exact. Exposes per-point error vectors and error Jacobians
// for the NTK computation.

#include "igr/model.hpp"

namespace igr {

// phi(x): identity passes the raw features; affine appends a constant 1.
enum class FeatureMap { identity, affine };

class LeastSquaresModel final : public LossModel {
public:
    LeastSquaresModel(FeatureMap fm, std::size_t input_dim, std::size_t output_dim);

    std::size_t param_count() const override { return output_dim_ * feature_dim_; }
    std::string family() const override { return "least_squares"; }

    double loss(const ParamVector& theta, const Batch& batch) const override;
    ParamVector grad(const ParamVector& theta, const Batch& batch) const override;
    ParamVector hvp(const ParamVector& theta, const ParamVector& v,
                    const Batch& batch) const override;

    // epsilon_k = f_theta(x_k) - y_k, length output_dim
    std::vector<double> point_error(const ParamVector& theta, const Batch& batch,
                                    std::size_t k) const;

    // d epsilon_k / d theta, output_dim x m, row-major
    std::vector<double> point_jacobian(const ParamVector& theta, const Batch& batch,
                                       std::size_t k) const;

    std::size_t output_dim() const { return output_dim_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t feature_dim() const { return feature_dim_; }

private:
    std::vector<double> features(const Batch& batch, std::size_t k) const;
    void check_batch(const Batch& batch) const;

    FeatureMap fm_;
    std::size_t input_dim_, output_dim_, feature_dim_;
};

LeastSquaresModel make_least_squares(FeatureMap fm, std::size_t input_dim,
                                     std::size_t output_dim);

}  // namespace igr
