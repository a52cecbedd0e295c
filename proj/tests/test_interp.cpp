#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nlg/interp.hpp"

using namespace nlg;
namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("not-a-knot spline reproduces cubics exactly") {
    auto f = [](double x) { return 2.0 - x + 3.0 * x * x - 0.5 * x * x * x; };
    auto fp = [](double x) { return -1.0 + 6.0 * x - 1.5 * x * x; };
    int n = 9;
    double h = 1.0 / (n - 1);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = f(i * h);
    auto s = Interp1D::spline(0.0, h, y, Interp1D::Closure::NotAKnot);
    for (double x : {0.0, 0.03, 0.21, 0.5, 0.77, 1.0}) {
        CHECK(s.eval(x) == doctest::Approx(f(x)).epsilon(1e-13));
        CHECK(s.deriv(x) == doctest::Approx(fp(x)).epsilon(1e-12));
    }
    // Extrapolation continues the end cubic, so it stays exact as well.
    CHECK(s.eval(1.2) == doctest::Approx(f(1.2)).epsilon(1e-12));
    CHECK(s.eval(-0.15) == doctest::Approx(f(-0.15)).epsilon(1e-12));
    // Exact piecewise integral of a cubic.
    auto F = [](double x) {
        return 2.0 * x - x * x / 2.0 + x * x * x - 0.125 * x * x * x * x;
    };
    CHECK(s.integral_from_start(1.0) == doctest::Approx(F(1.0)).epsilon(1e-13));
    CHECK(s.integral_from_start(0.37) == doctest::Approx(F(0.37)).epsilon(1e-12));
}

TEST_CASE("spline converges at fourth order on smooth data") {
    auto f = [](double x) { return std::sin(3.0 * x) + 0.2 * std::cos(7.0 * x); };
    double err_prev = 0.0;
    for (int n : {17, 33, 65}) {
        double h = 1.0 / (n - 1);
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) y[i] = f(i * h);
        auto s = Interp1D::spline(0.0, h, y, Interp1D::Closure::NotAKnot);
        double err = 0.0;
        for (int k = 0; k <= 500; ++k) {
            double x = k / 500.0;
            err = std::max(err, std::fabs(s.eval(x) - f(x)));
        }
        if (err_prev > 0.0) CHECK(err < err_prev / 10.0);  // ~16x expected
        err_prev = err;
    }
    CHECK(err_prev < 2e-6);
}

TEST_CASE("periodic spline handles trig data") {
    int n = 32;
    double h = kTwoPi / n;
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(i * h) + 0.3 * std::cos(2.0 * i * h);
    auto s = Interp1D::spline(0.0, h, y, Interp1D::Closure::Periodic);
    for (double x : {0.0, 1.0, 3.5, 6.1, -2.0, 9.0}) {
        double ref = std::sin(x) + 0.3 * std::cos(2.0 * x);
        CHECK(s.eval(x) == doctest::Approx(ref).epsilon(5e-5));
    }
    CHECK(s.integral_from_start(kTwoPi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    // Wrap consistency.
    CHECK(s.eval(1.0 + kTwoPi) == doctest::Approx(s.eval(1.0)).epsilon(1e-14));
}

TEST_CASE("quintic hermite reproduces quintics and their derivatives") {
    auto f = [](double x) { return ((x - 0.3) * x + 1.0) * x * x * x - 0.37 * x + 2.0; };
    auto fp = [](double x) { return 5.0 * x * x * x * x - 1.2 * x * x * x + 3.0 * x * x - 0.37; };
    auto fpp = [](double x) { return 20.0 * x * x * x - 3.6 * x * x + 6.0 * x; };
    int n = 5;
    double h = 0.25;
    std::vector<double> v(n), d(n), s2(n);
    for (int i = 0; i < n; ++i) {
        double x = i * h;
        v[i] = f(x);
        d[i] = fp(x);
        s2[i] = fpp(x);
    }
    auto q = Interp1D::hermite(0.0, h, v, d, s2, Interp1D::Closure::NotAKnot);
    for (double x : {0.0, 0.1, 0.33, 0.6, 0.98, 1.0}) {
        CHECK(q.eval(x) == doctest::Approx(f(x)).epsilon(1e-13));
        CHECK(q.deriv(x) == doctest::Approx(fp(x)).epsilon(1e-12));
        CHECK(q.deriv2(x) == doctest::Approx(fpp(x)).epsilon(1e-11));
    }
}

TEST_CASE("monotone inversion") {
    auto f = [](double x) { return x * x * x + x; };
    auto fp = [](double x) { return 3.0 * x * x + 1.0; };
    double x = invert_monotone(f, fp, 10.0, 0.0, 3.0);
    CHECK(f(x) == doctest::Approx(10.0).epsilon(1e-12));
    // Decreasing function.
    auto g = [](double x2) { return 1.0 - x2 * x2; };
    double x2 = invert_monotone(g, nullptr, 0.19, 0.0, 1.0);
    CHECK(x2 == doctest::Approx(0.9).epsilon(1e-10));
}
