#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlg/tubular.hpp"

using namespace nlg;
namespace {
constexpr double kPi = std::numbers::pi;

Embedding flat_interval(const GridPtr& g) {
    return Embedding::sample(
        g, 2, [](const Param& s, double* p) { p[0] = s[0], p[1] = 0.0; },
        [](const Param&, double* J) { J[0] = 1.0, J[1] = 0.0; });
}

Embedding unit_circle(const GridPtr& c) {
    return Embedding::sample(
        c, 2,
        [](const Param& s, double* p) {
            p[0] = std::cos(s[0]);
            p[1] = std::sin(s[0]);
        },
        [](const Param& s, double* J) {
            J[0] = -std::sin(s[0]);
            J[1] = std::cos(s[0]);
        });
}

}  // namespace

TEST_CASE("bump profile satisfies the stated constraints") {
    auto rep = BumpFunction::quintic().validate();
    CHECK(rep.ok);
    CHECK(rep.value_at_zero == doctest::Approx(1.0));
    CHECK(rep.max_slope <= 2.0);
    CHECK(rep.max_slope == doctest::Approx(1.875).epsilon(1e-3));
    CHECK(BumpFunction::linear_ramp().validate().ok);
}

TEST_CASE("chart frames: circle normal is radial, interval conormals") {
    auto c = build_grid(ManifoldKind::Circle, 96);
    auto circ = unit_circle(c);
    auto chart = build_tubular_chart(circ, 0.3, 0.3);
    // Normal frame at angle theta is the radial unit vector up to a global
    // sign fixed by continuity.
    double e0[2];
    chart.node_frame(0, e0);
    double sign = e0[0] > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < c->size(); ++i) {
        double th = c->nodes[i];
        double e[2];
        chart.node_frame(i, e);
        CHECK(e[0] == doctest::Approx(sign * std::cos(th)).epsilon(1e-7));
        CHECK(e[1] == doctest::Approx(sign * std::sin(th)).epsilon(1e-7));
    }

    auto g = build_grid(ManifoldKind::Interval01, 33);
    auto seg = flat_interval(g);
    auto ich = build_tubular_chart(seg, 0.3, 0.2);
    CHECK(ich.dagger[0] == doctest::Approx(-1.0));
    CHECK(ich.dagger[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(ich.dagger[2] == doctest::Approx(1.0));
    CHECK(ich.dagger[3] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("frame orthogonality invariant") {
    auto g = build_grid(ManifoldKind::Interval01, 48);
    auto f = Embedding::sample(g, 3, [](const Param& s, double* p) {
        p[0] = s[0];
        p[1] = 0.2 * std::sin(2.0 * s[0]);
        p[2] = 0.1 * s[0] * s[0];
    });
    auto chart = build_tubular_chart(f, 0.2, 0.15);
    for (std::size_t i = 0; i < g->size(); ++i) {
        double E[6], J[3];
        chart.node_frame(i, E);
        f.node_jacobian(i, J);
        for (int c = 0; c < 2; ++c) {
            double dot_t = 0.0, nrm = 0.0;
            for (int r = 0; r < 3; ++r) {
                dot_t += E[c * 3 + r] * J[r];
                nrm += E[c * 3 + r] * E[c * 3 + r];
            }
            CHECK(std::fabs(dot_t) < 1e-8);
            CHECK(nrm == doctest::Approx(1.0).epsilon(1e-10));
        }
        double cross = E[0] * E[3] + E[1] * E[4] + E[2] * E[5];
        CHECK(std::fabs(cross) < 1e-10);
    }
}

TEST_CASE("reach estimate: circle reach is its radius; 1.5r is rejected") {
    auto c = build_grid(ManifoldKind::Circle, 128);
    for (double r : {1.0, 2.0}) {
        auto circ = Embedding::sample(
            c, 2,
            [r](const Param& s, double* p) {
                p[0] = r * std::cos(s[0]);
                p[1] = r * std::sin(s[0]);
            },
            [r](const Param& s, double* J) {
                J[0] = -r * std::sin(s[0]);
                J[1] = r * std::cos(s[0]);
            });
        double est = estimate_reach(circ);
        CHECK(est == doctest::Approx(r).epsilon(0.05));
        CHECK_THROWS_AS((void)build_tubular_chart(circ, 1.5 * r, 0.2 * r), Error);
        try {
            (void)build_tubular_chart(circ, 1.5 * r, 0.2 * r);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::RadiusExceedsReach);
        }
        (void)build_tubular_chart(circ, 0.3 * r, 0.3 * r);  // accepted
    }
}

TEST_CASE("closest point projection: circle, on-base, parabola oracle") {
    auto c = build_grid(ManifoldKind::Circle, 128);
    auto chart = build_tubular_chart(unit_circle(c), 0.45, 0.3);
    // Outside point (2,0) is beyond delta.
    double far_pt[2] = {2.0, 0.0};
    CHECK_THROWS_AS((void)closest_point_project(far_pt, chart, false), Error);
    double x[2] = {1.3, 0.0};
    auto res = closest_point_project(x, chart, false);
    CHECK(std::fabs(std::remainder(res.param[0], 2 * kPi)) < 1e-10);
    double e[2];
    chart.frame_at(res.param, e);
    CHECK(res.normal_coords[0] * e[0] == doctest::Approx(0.3).epsilon(1e-9));

    // A point on the (discrete) base projects with zero normal coordinates.
    double on[2];
    chart.f0.eval({1.1, 0.0}, on);
    auto res2 = closest_point_project(on, chart, false);
    CHECK(std::fabs(res2.normal_coords[0]) < 1e-10);
    CHECK(res2.param[0] == doctest::Approx(1.1).epsilon(1e-9));

    // Parabola graph f0(s) = (2s-1, (2s-1)^2): nearest point to (0, 0.2) via
    // brute force over a dense sample.
    auto g = build_grid(ManifoldKind::Interval01, 129);
    auto parab = Embedding::sample(
        g, 2,
        [](const Param& s, double* p) {
            double u = 2.0 * s[0] - 1.0;
            p[0] = u;
            p[1] = u * u;
        },
        [](const Param& s, double* J) {
            double u = 2.0 * s[0] - 1.0;
            J[0] = 2.0;
            J[1] = 4.0 * u;
        });
    auto pchart = build_tubular_chart(parab, 0.22, 0.1);
    double q[2] = {0.0, 0.2};
    auto pres = closest_point_project(q, pchart, false);
    double best_d = 1e300, best_s = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        double s = static_cast<double>(i) / 100000.0;
        double u = 2.0 * s - 1.0;
        double d = std::hypot(u - q[0], u * u - q[1]);
        if (d < best_d) {
            best_d = d;
            best_s = s;
        }
    }
    CHECK(pres.param[0] == doctest::Approx(best_s).epsilon(1e-5));
    CHECK(pres.distance == doctest::Approx(best_d).epsilon(1e-8));
    // The parabola's minimum over this tube is at the apex s = 1/2.
    CHECK(pres.param[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("projection left-inverse recovers (s, c)") {
    auto g = build_grid(ManifoldKind::Interval01, 64);
    auto f = Embedding::sample(g, 2, [](const Param& s, double* p) {
        p[0] = s[0];
        p[1] = 0.25 * std::sin(2.5 * s[0]);
    });
    auto chart = build_tubular_chart(f, 0.3, 0.2);
    for (double s : {0.07, 0.31, 0.55, 0.83, 0.99}) {
        for (double cc : {-0.13, 0.02, 0.14}) {
            double E[2], F[2], x[2];
            chart.frame_at({s, 0.0}, E);
            f.eval({s, 0.0}, F);
            x[0] = F[0] + cc * E[0];
            x[1] = F[1] + cc * E[1];
            auto res = closest_point_project(x, chart, true);
            CHECK(res.param[0] == doctest::Approx(s).epsilon(1e-8));
            CHECK(res.normal_coords[0] == doctest::Approx(cc).epsilon(1e-8));
        }
    }
}

TEST_CASE("ambiguous projection is detected when the tube is forced too wide") {
    // A proper tube (radius below half the reach) cannot contain a tie, so
    // widen delta past the estimate by hand to exercise the guard.
    auto g = build_grid(ManifoldKind::Interval01, 129);
    auto hairpin = Embedding::sample(g, 2, [](const Param& s, double* p) {
        double u = 2.0 * s[0] - 1.0;
        p[0] = u;
        p[1] = 1.4 * u * u;
    });
    auto hchart = build_tubular_chart(hairpin, 0.17, 0.1);
    hchart.delta = 0.7;
    // On the symmetry axis beyond the focal point both branches tie.
    double q[2] = {0.0, 0.62};
    CHECK_THROWS_AS((void)closest_point_project(q, hchart, false), Error);
    try {
        (void)closest_point_project(q, hchart, false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AmbiguousProjection);
    }
}

TEST_CASE("boundary shift: lambda values and endpoint images") {
    // lambda_a(0) = a, lambda_a(-eps) = -eps for eps = 0.2, a = 0.05.
    BumpFunction rho;
    double eps = 0.2, a = 0.05;
    auto lambda = [&](double t) { return t + a * rho.eval(t / eps); };
    CHECK(lambda(0.0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(lambda(-0.2) == doctest::Approx(-0.2).epsilon(1e-14));

    // Interval base, sigma-dagger = (0.1, -0.2), eps >= 0.4: endpoint images
    // at x = 0.1 and x = 0.8 (the flat closed-form endpoints).
    auto g = build_grid(ManifoldKind::Interval01, 65);
    auto seg = flat_interval(g);
    auto chart = build_tubular_chart(seg, 0.3, 0.45);
    std::vector<double> sig = {0.1, -0.2};
    auto shift = boundary_shift_map(sig, chart);
    CHECK(shift.min_lambda_slope > 0.0);
    CHECK(shift.target_params.front() == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(shift.target_params.back() == doctest::Approx(0.8).epsilon(1e-10));

    // sigma == 0 is the identity, bit-exact away from the collar.
    auto id_shift = boundary_shift_map(std::vector<double>{0.0, 0.0}, chart);
    for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(id_shift.target_params[i] == doctest::Approx(g->nodes[i]).epsilon(1e-12));
    }
    std::size_t mid = g->size() / 2;
    CHECK(shift.target_params[mid] == g->nodes[mid]);  // bit-exact outside collars

    // Range violation.
    CHECK_THROWS_AS((void)boundary_shift_map(std::vector<double>{0.3, 0.0}, chart), Error);
}

TEST_CASE("disk boundary shift matches the radial closed form on the flat disk") {
    auto d = build_grid(ManifoldKind::ClosedDisk, 16);
    auto flat = Embedding::sample(d, 3, [](const Param& s, double* p) {
        p[0] = s[0];
        p[1] = s[1];
        p[2] = 0.0;
    });
    auto chart = build_tubular_chart(flat, 0.3, 0.3);
    std::vector<double> sig(d->boundary_count());
    auto angles = d->boundary_angles();
    for (std::size_t b = 0; b < sig.size(); ++b) sig[b] = 0.1 * std::cos(angles[b]);
    auto shift = boundary_shift_map(sig, chart);
    // Collar coordinate on the flat disk is r - 1, so the shifted radius is
    // r + sigma(theta) * rho((r-1)/eps).
    BumpFunction rho;
    for (std::size_t i = 0; i < d->size(); ++i) {
        Param p = d->node(i);
        double r = std::hypot(p[0], p[1]);
        if (r < 1e-14) continue;
        double th = std::atan2(p[1], p[0]);
        double expect = r + 0.1 * std::cos(th) * rho.eval((r - 1.0) / 0.3);
        double got = std::hypot(shift.target_params[2 * i], shift.target_params[2 * i + 1]);
        CHECK(got == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("frame transport is orthogonal and flat-trivial") {
    // Flat interval in R^2: normal spaces coincide, H is the identity.
    auto g = build_grid(ManifoldKind::Interval01, 33);
    auto chart = build_tubular_chart(flat_interval(g), 0.3, 0.3);
    auto shift = boundary_shift_map(std::vector<double>{0.12, -0.05}, chart);
    auto tr = transport_normal_frames(shift, chart);
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(tr.rotations[i] == doctest::Approx(1.0));

    // Parabola base: transported normals stay unit and orthogonal to the
    // target tangent (polar-decomposition oracle on the 1x1 Gram data).
    auto parab = Embedding::sample(g, 2, [](const Param& s, double* p) {
        p[0] = s[0];
        p[1] = 0.4 * s[0] * s[0];
    });
    auto pchart = build_tubular_chart(parab, 0.2, 0.15);
    auto pshift = boundary_shift_map(std::vector<double>{0.05, 0.06}, pchart);
    auto ptr = transport_normal_frames(pshift, pchart);
    for (std::size_t i = 0; i < g->size(); ++i) {
        // Transported unit normal: rotation (+-1) applied to target frame.
        double e[2];
        double q = ptr.rotations[i];
        e[0] = q * ptr.target_frames[2 * i];
        e[1] = q * ptr.target_frames[2 * i + 1];
        CHECK(std::hypot(e[0], e[1]) == doctest::Approx(1.0).epsilon(1e-10));
        double J[2];
        parab.jacobian({ptr.target_params[i], 0.0}, J);
        double dt = (e[0] * J[0] + e[1] * J[1]) / std::hypot(J[0], J[1]);
        CHECK(std::fabs(dt) < 1e-8);
    }
}

TEST_CASE("chart JSON round trip") {
    auto g = build_grid(ManifoldKind::Interval01, 17);
    auto chart = build_tubular_chart(flat_interval(g), 0.25, 0.2);
    auto text = chart.to_json();
    auto back = TubularChart::from_json(text);
    CHECK(back.delta == chart.delta);
    CHECK(back.eps == chart.eps);
    REQUIRE(back.normal_frames.size() == chart.normal_frames.size());
    for (std::size_t i = 0; i < chart.normal_frames.size(); ++i) {
        CHECK(back.normal_frames[i] == doctest::Approx(chart.normal_frames[i]).epsilon(1e-12));
    }
}
