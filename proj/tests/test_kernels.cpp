#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nlg/kernels.hpp"

using namespace nlg;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = scale * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
    }
    return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels are bitwise equivalent") {
    if (!kernels::avx2_available()) return;
    std::mt19937_64 rng(12345);
    for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 5ul, 17ul, 64ul, 127ul, 257ul, 1000ul}) {
        auto a = random_vec(rng, n), b = random_vec(rng, n);

        kernels::select(kernels::Impl::Scalar);
        double dot_s = kernels::dot(a, b);
        double sum_s = kernels::sum(a);
        double amax_s = kernels::abs_max(a);
        double was_s = kernels::weighted_abs_sum(a, b);
        auto y_s = b;
        kernels::axpy(0.37, a, y_s);
        auto m_s = a;
        std::vector<double> p_s(n);
        kernels::pointwise_mul(a, b, p_s);
        kernels::scale(1.618, m_s);

        kernels::select(kernels::Impl::Avx2);
        CHECK(kernels::active_name() == "avx2");
        CHECK(kernels::dot(a, b) == dot_s);
        CHECK(kernels::sum(a) == sum_s);
        CHECK(kernels::abs_max(a) == amax_s);
        CHECK(kernels::weighted_abs_sum(a, b) == was_s);
        auto y_v = b;
        kernels::axpy(0.37, a, y_v);
        CHECK(y_v == y_s);
        auto m_v = a;
        kernels::scale(1.618, m_v);
        CHECK(m_v == m_s);
        std::vector<double> p_v(n);
        kernels::pointwise_mul(a, b, p_v);
        CHECK(p_v == p_s);

        kernels::select(kernels::Impl::Auto);
    }
}

TEST_CASE("kernel reductions match straightforward loops") {
    std::mt19937_64 rng(99);
    auto a = random_vec(rng, 321), b = random_vec(rng, 321);
    double dot_ref = 0.0, sum_ref = 0.0, amax_ref = 0.0, was_ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot_ref += a[i] * b[i];
        sum_ref += a[i];
        amax_ref = std::max(amax_ref, std::fabs(a[i]));
        was_ref += a[i] * std::fabs(b[i]);
    }
    CHECK(kernels::dot(a, b) == doctest::Approx(dot_ref).epsilon(1e-13));
    CHECK(kernels::sum(a) == doctest::Approx(sum_ref).epsilon(1e-13));
    CHECK(kernels::abs_max(a) == amax_ref);
    CHECK(kernels::weighted_abs_sum(a, b) == doctest::Approx(was_ref).epsilon(1e-13));
}
