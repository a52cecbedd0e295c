#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nlg/mesh.hpp"

using namespace nlg;
namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Brute-force disk quadrature on a fine Cartesian mask, used as the
// independent oracle for disk integrals.
double brute_disk_integral(const std::function<double(double, double)>& f, int n = 2000) {
    double h = 2.0 / n, acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x = -1.0 + (i + 0.5) * h, y = -1.0 + (j + 0.5) * h;
            if (x * x + y * y <= 1.0) acc += f(x, y);
        }
    }
    return acc * h * h;
}

}  // namespace

TEST_CASE("interval grid: 11 equispaced nodes, trapezoid weights sum to 1") {
    auto g = build_grid(ManifoldKind::Interval01, 11);
    CHECK(g->size() == 11);
    CHECK(g->boundary_nodes == std::vector<std::size_t>{0, 10});
    CHECK(g->node(3)[0] == doctest::Approx(0.3).epsilon(1e-15));
    double sum = 0.0;
    for (double w : g->quad_weights) {
        CHECK(w > 0.0);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("circle grid: 64 nodes, no boundary, weights sum to 2pi") {
    auto g = build_grid(ManifoldKind::Circle, 64);
    CHECK(g->size() == 64);
    CHECK(g->boundary_count() == 0);
    double sum = 0.0;
    for (double w : g->quad_weights) sum += w;
    CHECK(sum == doctest::Approx(kTwoPi).epsilon(1e-14));
}

TEST_CASE("disk grid: weights are exact cell areas summing to pi") {
    for (int r : {8, 16, 48}) {
        auto g = build_grid(ManifoldKind::ClosedDisk, r);
        double sum = 0.0;
        for (double w : g->quad_weights) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(std::fabs(sum - kPi) < 1e-12);
        for (std::size_t b : g->boundary_nodes) {
            double x = g->node(b)[0], y = g->node(b)[1];
            CHECK(std::hypot(x, y) == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
}

TEST_CASE("resolution below 4 is rejected") {
    CHECK_THROWS_AS((void)build_grid(ManifoldKind::Interval01, 3), Error);
    try {
        (void)build_grid(ManifoldKind::Circle, 2);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidResolution);
    }
}

TEST_CASE("integrate: interval and circle basics") {
    auto g = build_grid(ManifoldKind::Interval01, 101);
    std::vector<double> mu(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) mu[i] = 0.5 + g->node(i)[0];
    // trapezoid is exact for linear densities
    CHECK(integrate(g, DensityForm::top(g, mu)) == doctest::Approx(1.0).epsilon(1e-13));

    auto c = build_grid(ManifoldKind::Circle, 64);
    CHECK(integrate(c, DensityForm::uniform(c)) == doctest::Approx(kTwoPi).epsilon(1e-13));

    auto other = build_grid(ManifoldKind::Interval01, 55);
    CHECK_THROWS_AS((void)integrate(other, DensityForm::uniform(g)), Error);
}

TEST_CASE("integrate: (1 + x) over the unit disk") {
    auto g = build_grid(ManifoldKind::ClosedDisk, 24);
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) v[i] = 1.0 + g->node(i)[0];
    double q = integrate(g, DensityForm::top(g, v));
    // Odd term cancels ring-by-ring; the quadrature is exact up to roundoff.
    CHECK(q == doctest::Approx(kPi).epsilon(1e-12));
    double oracle = brute_disk_integral([](double x, double) { return 1.0 + x; });
    CHECK(std::fabs(oracle - kPi) < 5e-3);
    CHECK(std::fabs(q - oracle) < 5e-3);
}

TEST_CASE("quadrature exact for degree <= 1 in reference coordinates") {
    auto g = build_grid(ManifoldKind::Interval01, 33);
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) v[i] = -0.7 + 2.0 * g->node(i)[0];
    CHECK(integrate(g, DensityForm::top(g, v)) == doctest::Approx(-0.7 + 1.0).epsilon(1e-10));

    auto c = build_grid(ManifoldKind::Circle, 48);
    for (std::size_t i = 0; i < c->size(); ++i) {
        double th = c->node(i)[0];
        v.resize(c->size());
        v[i] = 0.4 + 0.9 * std::cos(th) - 0.3 * std::sin(th);
    }
    CHECK(integrate(c, DensityForm::top(c, v)) == doctest::Approx(0.4 * kTwoPi).epsilon(1e-10));

    auto d = build_grid(ManifoldKind::ClosedDisk, 12);
    std::vector<double> vd(d->size());
    for (std::size_t i = 0; i < d->size(); ++i) {
        vd[i] = 0.25 - 1.5 * d->node(i)[0] + 0.8 * d->node(i)[1];
    }
    CHECK(integrate(d, DensityForm::top(d, vd)) == doctest::Approx(0.25 * kPi).epsilon(1e-10));
}

TEST_CASE("refinement improves smooth integrals monotonically") {
    auto f1 = [](double s) { return std::exp(s) * std::sin(3.0 * s); };
    double prev_gap = -1.0;
    double prev_val = 0.0;
    std::vector<double> vals;
    for (int r : {9, 17, 33, 65}) {
        auto g = build_grid(ManifoldKind::Interval01, r);
        std::vector<double> v(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) v[i] = f1(g->node(i)[0]);
        vals.push_back(integrate(g, DensityForm::top(g, v)));
    }
    for (std::size_t i = 1; i + 1 < vals.size(); ++i) {
        double gap_a = std::fabs(vals[i] - vals[i - 1]);
        double gap_b = std::fabs(vals[i + 1] - vals[i]);
        CHECK(gap_b < gap_a);
        (void)prev_gap;
        (void)prev_val;
    }
}

TEST_CASE("boundary_restrict") {
    auto g = build_grid(ManifoldKind::Interval01, 21);
    std::vector<double> field(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) field[i] = g->node(i)[0];
    auto b = boundary_restrict(g, field);
    CHECK(b[0] == doctest::Approx(0.0));
    CHECK(b[1] == doctest::Approx(1.0));

    auto d = build_grid(ManifoldKind::ClosedDisk, 10);
    std::vector<double> cf(d->size(), 3.25);
    for (double x : boundary_restrict(d, cf)) CHECK(x == doctest::Approx(3.25));
    // x restricted to the boundary circle is cos(theta)
    std::vector<double> xf(d->size());
    for (std::size_t i = 0; i < d->size(); ++i) xf[i] = d->node(i)[0];
    auto bx = boundary_restrict(d, xf);
    auto angles = d->boundary_angles();
    for (std::size_t k = 0; k < bx.size(); ++k) {
        CHECK(bx[k] == doctest::Approx(std::cos(angles[k])).epsilon(1e-12));
    }

    auto c = build_grid(ManifoldKind::Circle, 16);
    CHECK_THROWS_AS((void)boundary_restrict(c, std::vector<double>(16, 1.0)), Error);
}

TEST_CASE("boundary restriction of constant extension is identity") {
    auto d = build_grid(ManifoldKind::ClosedDisk, 8);
    std::vector<double> bvals(d->boundary_count());
    for (std::size_t k = 0; k < bvals.size(); ++k) bvals[k] = std::sin(0.1 + 0.3 * k);
    std::vector<double> field(d->size(), 0.0);
    for (std::size_t k = 0; k < bvals.size(); ++k) field[d->boundary_nodes[k]] = bvals[k];
    auto back = boundary_restrict(d, field);
    CHECK(back == bvals);
}

TEST_CASE("density forms with a sign change are rejected as volume forms") {
    auto g = build_grid(ManifoldKind::Interval01, 9);
    std::vector<double> v(g->size(), 1.0);
    v[4] = -0.5;
    auto rho = DensityForm::top(g, v);
    CHECK(!rho.is_volume_form());
    CHECK_THROWS_AS(require_volume_form(rho, "mu"), Error);
    auto ok = DensityForm::uniform(g, -2.0);
    CHECK(ok.is_volume_form());
    CHECK(ok.sign() == -1);
}

TEST_CASE("disk scattered fits reproduce cubics") {
    auto d = build_grid(ManifoldKind::ClosedDisk, 12);
    auto f = [](double x, double y) { return 0.3 + x - 2.0 * y + x * y - y * y + 0.5 * x * x * y; };
    std::vector<double> v(d->size());
    for (std::size_t i = 0; i < d->size(); ++i) v[i] = f(d->node(i)[0], d->node(i)[1]);
    // At a node (cached stencil)
    std::size_t probe = d->ring_offsets[6] + 3;
    auto fit = d->fit_at_node(probe, v);
    double x = d->node(probe)[0], y = d->node(probe)[1];
    CHECK(fit.value() == doctest::Approx(f(x, y)).epsilon(1e-10));
    auto g = fit.grad();
    CHECK(g[0] == doctest::Approx(1.0 + y + x * y).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(-2.0 + x - 2.0 * y + 0.5 * x * x).epsilon(1e-9));
    // At an arbitrary point
    auto fit2 = d->fit_at_point({0.31, -0.42}, v);
    CHECK(fit2.value() == doctest::Approx(f(0.31, -0.42)).epsilon(1e-9));
}
