#pragma once

// Fully connected ReLU classifier with softmax cross-entropy, mean-reduced
// over the batch. Parameters are stored flat, per layer: weight matrix
// (rows = output units, row-major) followed by the bias vector.
//
// Initialization is fan-in-scaled uniform, bound sqrt(2 / fan_in), biases
// zero, fully determined by the seed.

#include <cstdint>
#include <vector>

#include "igr/model.hpp"

namespace igr {

enum class Activation { relu };

class MlpModel final : public LossModel {
public:
    MlpModel(std::vector<std::size_t> widths, Activation act, std::uint64_t init_seed);

    std::size_t param_count() const override { return param_count_; }
    std::string family() const override { return "mlp"; }

    double loss(const ParamVector& theta, const Batch& batch) const override;
    ParamVector grad(const ParamVector& theta, const Batch& batch) const override;

    // Fraction of batch samples whose argmax logit equals the label.
    double accuracy(const ParamVector& theta, const Batch& batch) const;

    ParamVector initial_params() const { return theta0_; }

    const std::vector<std::size_t>& widths() const { return widths_; }
    std::size_t num_classes() const { return widths_.back(); }

private:
    // Logits for one sample; scratch holds per-layer pre-activations and
    // activations when requested (for backprop).
    void forward(const ParamVector& theta, const double* x, double* logits,
                 std::vector<double>* pre, std::vector<double>* act) const;

    std::vector<std::size_t> widths_;
    std::vector<std::size_t> w_offset_;  // per layer, offset of W then b
    std::size_t param_count_ = 0;
    ParamVector theta0_;
};

MlpModel make_mlp(std::vector<std::size_t> widths, Activation act, std::uint64_t init_seed);

}  // namespace igr
