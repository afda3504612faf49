#pragma once

// Differentiable loss-model abstraction. A model evaluates a scalar loss,
// its gradient and Hessian-vector products at a flat parameter vector, on a
// data batch. Models are immutable after construction and evaluations are
// pure, so concurrent use is safe.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace igr {

using ParamVector = std::vector<double>;

// Row-aligned batch of data. Classification models read `labels`,
// regression models read `targets` (n x output_dim, row-major). A model
// with baked-in data (the bilinear family) accepts an empty batch.
struct Batch {
    std::vector<double> inputs;   // n x input_dim, row-major
    std::vector<double> targets;  // n x output_dim, row-major
    std::vector<int> labels;      // n, values in [0, num_classes)
    std::size_t count = 0;
    std::size_t input_dim = 0;
};

// Raised when an evaluation or flow produces a non-finite value (or the loss
// exceeds the divergence threshold). Carries enough context to report where.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::string what, long iteration = -1)
        : std::runtime_error(std::move(what)), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

class LossModel {
public:
    virtual ~LossModel() = default;

    virtual std::size_t param_count() const = 0;
    virtual std::string family() const = 0;

    // E(theta) on the batch. Throws DivergenceError on non-finite output.
    virtual double loss(const ParamVector& theta, const Batch& batch) const = 0;

    // grad E(theta), length param_count().
    virtual ParamVector grad(const ParamVector& theta, const Batch& batch) const = 0;

    // H(theta) v. Default: central finite difference of the gradient with
    // step sqrt(eps) * (1 + |theta|) / max(|v|, 1e-12).
    virtual ParamVector hvp(const ParamVector& theta, const ParamVector& v,
                            const Batch& batch) const;

protected:
    void check_theta(const ParamVector& theta) const;
};

// Require finiteness; context names the failing quantity.
void require_finite(double value, const char* what, long iteration = -1);
void require_finite(const ParamVector& values, const char* what, long iteration = -1);

double param_norm(const ParamVector& theta);

}  // namespace igr
