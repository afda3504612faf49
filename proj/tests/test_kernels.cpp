#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "igr/kernels.hpp"

using namespace igr;

namespace {
std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v)
        x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    return v;
}
}  // namespace

TEST_CASE("scalar and simd kernels agree on random inputs") {
    if (!kern::avx2::supported()) return;  // nothing to compare on this host
    std::mt19937_64 rng(42);
    // odd lengths exercise the vector tails
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 64u, 1001u}) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);

        const double ds = kern::scalar::dot(a.data(), b.data(), n);
        const double dv = kern::avx2::dot(a.data(), b.data(), n);
        CHECK(dv == doctest::Approx(ds).epsilon(1e-12));

        CHECK(kern::avx2::sqnorm(a.data(), n) ==
              doctest::Approx(kern::scalar::sqnorm(a.data(), n)).epsilon(1e-12));

        auto ys = b, yv = b;
        kern::scalar::axpy(0.37, a.data(), ys.data(), n);
        kern::avx2::axpy(0.37, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(yv[i] == doctest::Approx(ys[i]).epsilon(1e-14));

        auto xs = a, xv = a;
        kern::scalar::scale(-1.7, xs.data(), n);
        kern::avx2::scale(-1.7, xv.data(), n);
        CHECK(xs == xv);

        std::vector<double> rs(n), rv(n);
        kern::scalar::relu(a.data(), rs.data(), n);
        kern::avx2::relu(a.data(), rv.data(), n);
        CHECK(rs == rv);

        std::vector<double> gs(n), gv(n);
        kern::scalar::relu_grad(a.data(), b.data(), gs.data(), n);
        kern::avx2::relu_grad(a.data(), b.data(), gv.data(), n);
        CHECK(gs == gv);
    }
}

TEST_CASE("backend dispatch") {
    const kern::Backend detected = kern::detect();
    CHECK(kern::active() == detected);
    kern::force(kern::Backend::scalar);
    CHECK(kern::active() == kern::Backend::scalar);
    const double a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
    CHECK(kern::dot(a, b, 3) == 32.0);
    kern::force(detected);
}

TEST_CASE("relu clamps negatives and keeps zero sign convention") {
    const double x[5] = {-1.0, 0.0, 2.5, -0.0, 1e-300};
    double y[5];
    kern::scalar::relu(x, y, 5);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.5);
    CHECK(y[4] == 1e-300);
}
