#include "igr/least_squares.hpp"

#include "igr/kernels.hpp"

namespace igr {

LeastSquaresModel::LeastSquaresModel(FeatureMap fm, std::size_t input_dim,
                                     std::size_t output_dim)
    : fm_(fm),
      input_dim_(input_dim),
      output_dim_(output_dim),
      feature_dim_(fm == FeatureMap::affine ? input_dim + 1 : input_dim) {
    if (input_dim < 1) throw std::invalid_argument("least_squares: input_dim >= 1");
    if (output_dim < 1) throw std::invalid_argument("least_squares: output_dim >= 1");
}

void LeastSquaresModel::check_batch(const Batch& batch) const {
    if (batch.count == 0) throw std::invalid_argument("least_squares: empty batch");
    if (batch.input_dim != input_dim_)
        throw std::invalid_argument("least_squares: batch input_dim mismatch");
    if (batch.targets.size() != batch.count * output_dim_)
        throw std::invalid_argument("least_squares: targets missing or wrong shape");
}

std::vector<double> LeastSquaresModel::features(const Batch& batch, std::size_t k) const {
    std::vector<double> phi(feature_dim_);
    const double* x = batch.inputs.data() + k * input_dim_;
    std::copy(x, x + input_dim_, phi.begin());
    if (fm_ == FeatureMap::affine) phi[input_dim_] = 1.0;
    return phi;
}

std::vector<double> LeastSquaresModel::point_error(const ParamVector& theta,
                                                   const Batch& batch,
                                                   std::size_t k) const {
    check_theta(theta);
    check_batch(batch);
    const auto phi = features(batch, k);
    std::vector<double> eps(output_dim_);
    for (std::size_t u = 0; u < output_dim_; ++u)
        eps[u] = kern::dot(theta.data() + u * feature_dim_, phi.data(), feature_dim_) -
                 batch.targets[k * output_dim_ + u];
    return eps;
}

std::vector<double> LeastSquaresModel::point_jacobian(const ParamVector& theta,
                                                      const Batch& batch,
                                                      std::size_t k) const {
    check_theta(theta);
    check_batch(batch);
    const auto phi = features(batch, k);
    // d eps_u / d W[v, j] = delta_{uv} phi_j
    std::vector<double> jac(output_dim_ * param_count(), 0.0);
    for (std::size_t u = 0; u < output_dim_; ++u)
        std::copy(phi.begin(), phi.end(),
                  jac.begin() + u * param_count() + u * feature_dim_);
    return jac;
}

double LeastSquaresModel::loss(const ParamVector& theta, const Batch& batch) const {
    check_theta(theta);
    check_batch(batch);
    double e = 0.0;
    for (std::size_t k = 0; k < batch.count; ++k) {
        const auto eps = point_error(theta, batch, k);
        e += kern::sqnorm(eps.data(), eps.size());
    }
    require_finite(e, "least_squares loss");
    return e;
}

ParamVector LeastSquaresModel::grad(const ParamVector& theta, const Batch& batch) const {
    check_theta(theta);
    check_batch(batch);
    ParamVector g(param_count(), 0.0);
    for (std::size_t k = 0; k < batch.count; ++k) {
        const auto phi = features(batch, k);
        const auto eps = point_error(theta, batch, k);
        for (std::size_t u = 0; u < output_dim_; ++u)
            kern::axpy(2.0 * eps[u], phi.data(), g.data() + u * feature_dim_,
                       feature_dim_);
    }
    require_finite(g, "least_squares gradient");
    return g;
}

ParamVector LeastSquaresModel::hvp(const ParamVector& theta, const ParamVector& v,
                                   const Batch& batch) const {
    check_theta(theta);
    check_batch(batch);
    if (v.size() != param_count())
        throw std::invalid_argument("hvp: direction length mismatch");
    // H = 2 sum_k J_k^T J_k (constant for a parameter-linear model)
    ParamVector out(param_count(), 0.0);
    for (std::size_t k = 0; k < batch.count; ++k) {
        const auto phi = features(batch, k);
        for (std::size_t u = 0; u < output_dim_; ++u) {
            const double s =
                kern::dot(v.data() + u * feature_dim_, phi.data(), feature_dim_);
            kern::axpy(2.0 * s, phi.data(), out.data() + u * feature_dim_, feature_dim_);
        }
    }
    require_finite(out, "least_squares hvp");
    return out;
}

LeastSquaresModel make_least_squares(FeatureMap fm, std::size_t input_dim,
                                     std::size_t output_dim) {
    return LeastSquaresModel(fm, input_dim, output_dim);
}

}  // namespace igr
