#include "igr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "igr/kernels.hpp"

namespace igr {

MlpModel::MlpModel(std::vector<std::size_t> widths, Activation /*act*/,
                   std::uint64_t init_seed)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("mlp needs at least 2 layers");
    for (std::size_t w : widths_)
        if (w < 1) throw std::invalid_argument("mlp widths must be >= 1");

    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        w_offset_.push_back(param_count_);
        param_count_ += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }

    theta0_.assign(param_count_, 0.0);
    std::mt19937_64 rng(init_seed);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const std::size_t fan_in = widths_[l];
        const double bound = std::sqrt(2.0 / static_cast<double>(fan_in));
        double* w = theta0_.data() + w_offset_[l];
        const std::size_t nw = widths_[l + 1] * widths_[l];
        for (std::size_t i = 0; i < nw; ++i) {
            // map u64 -> [0,1) -> [-bound, bound); avoids distribution
            // implementation differences across standard libraries
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            w[i] = (2.0 * u - 1.0) * bound;
        }
        // biases stay zero
    }
}

void MlpModel::forward(const ParamVector& theta, const double* x, double* logits,
                       std::vector<double>* pre, std::vector<double>* act) const {
    const std::size_t L = widths_.size() - 1;
    std::vector<double> cur(x, x + widths_[0]);
    std::size_t pre_off = 0;
    if (act) std::copy(cur.begin(), cur.end(), act->begin());
    std::size_t act_off = widths_[0];
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = widths_[l], out = widths_[l + 1];
        const double* W = theta.data() + w_offset_[l];
        const double* b = W + out * in;
        std::vector<double> next(out);
        for (std::size_t i = 0; i < out; ++i)
            next[i] = b[i] + kern::dot(W + i * in, cur.data(), in);
        if (pre) std::copy(next.begin(), next.end(), pre->begin() + pre_off);
        pre_off += out;
        if (l + 1 < L) {
            kern::relu(next.data(), next.data(), out);
            if (act) std::copy(next.begin(), next.end(), act->begin() + act_off);
            act_off += out;
        }
        cur = std::move(next);
    }
    std::copy(cur.begin(), cur.end(), logits);
}

namespace {
// log(sum exp(z)) with max subtraction; also writes softmax into p if given
double log_sum_exp(const double* z, std::size_t n, double* p = nullptr) {
    const double zmax = *std::max_element(z, z + n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(z[i] - zmax);
    if (p)
        for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(z[i] - zmax) / s;
    return zmax + std::log(s);
}

void check_batch(const Batch& batch, std::size_t input_dim, std::size_t classes) {
    if (batch.count == 0) throw std::invalid_argument("mlp: empty batch");
    if (batch.input_dim != input_dim)
        throw std::invalid_argument("mlp: batch input_dim mismatch");
    if (batch.labels.size() != batch.count)
        throw std::invalid_argument("mlp: labels missing or wrong length");
    for (int y : batch.labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::invalid_argument("mlp: label out of range");
}
}  // namespace

double MlpModel::loss(const ParamVector& theta, const Batch& batch) const {
    check_theta(theta);
    check_batch(batch, widths_[0], num_classes());
    const std::size_t c = num_classes();
    std::vector<double> logits(c);
    double total = 0.0;
    for (std::size_t k = 0; k < batch.count; ++k) {
        forward(theta, batch.inputs.data() + k * widths_[0], logits.data(), nullptr,
                nullptr);
        total += log_sum_exp(logits.data(), c) - logits[batch.labels[k]];
    }
    const double e = total / static_cast<double>(batch.count);
    require_finite(e, "mlp loss");
    return e;
}

ParamVector MlpModel::grad(const ParamVector& theta, const Batch& batch) const {
    check_theta(theta);
    check_batch(batch, widths_[0], num_classes());
    const std::size_t L = widths_.size() - 1;
    const std::size_t c = num_classes();

    std::size_t pre_total = 0, act_total = widths_[0];
    for (std::size_t l = 1; l <= L; ++l) pre_total += widths_[l];
    for (std::size_t l = 1; l < L; ++l) act_total += widths_[l];

    ParamVector g(param_count_, 0.0);
    std::vector<double> pre(pre_total), act(act_total), logits(c), prob(c);
    const double inv_n = 1.0 / static_cast<double>(batch.count);

    for (std::size_t k = 0; k < batch.count; ++k) {
        forward(theta, batch.inputs.data() + k * widths_[0], logits.data(), &pre, &act);
        log_sum_exp(logits.data(), c, prob.data());
        std::vector<double> delta(prob);
        delta[batch.labels[k]] -= 1.0;
        kern::scale(inv_n, delta.data(), c);

        // walk layers backward; offsets of pre/act blocks for layer l
        std::size_t pre_off = pre_total, act_off = act_total;
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = widths_[l], out = widths_[l + 1];
            pre_off -= out;
            act_off -= in;
            const double* a_in = act.data() + act_off;
            const double* W = theta.data() + w_offset_[l];
            double* gW = g.data() + w_offset_[l];
            double* gb = gW + out * in;
            for (std::size_t i = 0; i < out; ++i) {
                kern::axpy(delta[i], a_in, gW + i * in, in);
                gb[i] += delta[i];
            }
            if (l > 0) {
                std::vector<double> back(in, 0.0);
                for (std::size_t i = 0; i < out; ++i)
                    kern::axpy(delta[i], W + i * in, back.data(), in);
                std::vector<double> nd(in);
                kern::relu_grad(pre.data() + (pre_off - in), back.data(), nd.data(), in);
                delta = std::move(nd);
            }
        }
    }
    require_finite(g, "mlp gradient");
    return g;
}

double MlpModel::accuracy(const ParamVector& theta, const Batch& batch) const {
    check_theta(theta);
    check_batch(batch, widths_[0], num_classes());
    const std::size_t c = num_classes();
    std::vector<double> logits(c);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < batch.count; ++k) {
        forward(theta, batch.inputs.data() + k * widths_[0], logits.data(), nullptr,
                nullptr);
        const auto best = std::max_element(logits.begin(), logits.end());
        if (static_cast<int>(best - logits.begin()) == batch.labels[k]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.count);
}

MlpModel make_mlp(std::vector<std::size_t> widths, Activation act, std::uint64_t seed) {
    return MlpModel(std::move(widths), act, seed);
}

}  // namespace igr
