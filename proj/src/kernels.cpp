#include "igr/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace igr::kern {

namespace {
std::atomic<Backend> g_backend{detect()};
}

Backend detect() { return avx2::supported() ? Backend::avx2 : Backend::scalar; }

Backend active() { return g_backend.load(std::memory_order_relaxed); }

void force(Backend b) {
    if (b == Backend::avx2 && !avx2::supported())
        throw std::runtime_error("kern::force: AVX2/FMA not available on this CPU");
    g_backend.store(b, std::memory_order_relaxed);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    active() == Backend::avx2 ? avx2::axpy(a, x, y, n) : scalar::axpy(a, x, y, n);
}

double dot(const double* a, const double* b, std::size_t n) {
    return active() == Backend::avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

double sqnorm(const double* x, std::size_t n) {
    return active() == Backend::avx2 ? avx2::sqnorm(x, n) : scalar::sqnorm(x, n);
}

void scale(double a, double* x, std::size_t n) {
    active() == Backend::avx2 ? avx2::scale(a, x, n) : scalar::scale(a, x, n);
}

void relu(const double* x, double* y, std::size_t n) {
    active() == Backend::avx2 ? avx2::relu(x, y, n) : scalar::relu(x, y, n);
}

void relu_grad(const double* x, const double* dy, double* dx, std::size_t n) {
    active() == Backend::avx2 ? avx2::relu_grad(x, dy, dx, n)
                              : scalar::relu_grad(x, dy, dx, n);
}

}  // namespace igr::kern
