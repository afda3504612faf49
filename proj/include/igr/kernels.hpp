#pragma once

// Dense double-precision kernels used by the model evaluators and flow
// integrators. Each kernel has a scalar reference implementation and an
// AVX2/FMA variant compiled in a separate translation unit; the backend is
// picked once at startup from CPUID and can be overridden for testing.

#include <cstddef>

namespace igr::kern {

enum class Backend { scalar, avx2 };

// Currently active backend.
Backend active();

// Override the backend. Requesting avx2 on a CPU without AVX2+FMA throws.
void force(Backend b);

// Backend chosen by CPU detection (what force() resets to with detect()).
Backend detect();

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i x[i]^2
double sqnorm(const double* x, std::size_t n);

// x[i] *= a
void scale(double a, double* x, std::size_t n);

// y[i] = max(x[i], 0)
void relu(const double* x, double* y, std::size_t n);

// dx[i] = x[i] > 0 ? dy[i] : 0   (x is the pre-activation)
void relu_grad(const double* x, const double* dy, double* dx, std::size_t n);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sqnorm(const double* x, std::size_t n);
void scale(double a, double* x, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_grad(const double* x, const double* dy, double* dx, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool supported();
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sqnorm(const double* x, std::size_t n);
void scale(double a, double* x, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_grad(const double* x, const double* dy, double* dx, std::size_t n);
}  // namespace avx2

}  // namespace igr::kern
