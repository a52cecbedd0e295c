#include "nlg/verify.hpp"

#include <cmath>
#include <numbers>

#include "nlg/bundle.hpp"
#include "nlg/kernels.hpp"
#include "nlg/random.hpp"

namespace nlg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Suite {
    const Scenario& sc;
    std::vector<CheckResult> out;

    void add(const std::string& name, double residual, double tol) {
        out.push_back({name, residual, tol, residual <= tol});
    }

    double spacing_scale(double base_pow) const {
        // 1-D tolerances are quoted at interval spacing 1/127; the circle's
        // reference spacing is 2 pi / n.
        double h = sc.grid()->spacing;
        double ref = 1.0 / 127.0;
        return std::max(1.0, std::pow(h / ref, base_pow));
    }
};

void check_quadrature(Suite& s) {
    const GridPtr& g = s.sc.grid();
    double total = kernels::sum(g->quad_weights);
    double expect = g->manifold.kind == ManifoldKind::Interval01
                        ? 1.0
                        : (g->manifold.kind == ManifoldKind::Circle ? kTwoPi : kPi);
    s.add("quadrature_total_volume", std::fabs(total - expect), 1e-12);

    // Exactness for degree <= 1 in the reference coordinates.
    std::vector<double> v(g->size());
    double exact = 0.0;
    switch (g->manifold.kind) {
        case ManifoldKind::Interval01:
            for (std::size_t i = 0; i < g->size(); ++i) v[i] = -0.7 + 2.0 * g->node(i)[0];
            exact = 0.3;
            break;
        case ManifoldKind::Circle:
            for (std::size_t i = 0; i < g->size(); ++i) {
                v[i] = 0.4 + 0.9 * std::cos(g->node(i)[0]) - 0.3 * std::sin(g->node(i)[0]);
            }
            exact = 0.4 * kTwoPi;
            break;
        case ManifoldKind::ClosedDisk:
            for (std::size_t i = 0; i < g->size(); ++i) {
                v[i] = 0.25 - 1.5 * g->node(i)[0] + 0.8 * g->node(i)[1];
            }
            exact = 0.25 * kPi;
            break;
    }
    s.add("quadrature_degree1_exact",
          std::fabs(integrate(g, DensityForm::top(g, v)) - exact), 1e-10);

    // Refinement decreases the error of a smooth non-polynomial integral.
    auto f1 = [&](const Param& p) {
        return g->manifold.kind == ManifoldKind::ClosedDisk
                   ? std::exp(p[0]) * std::sin(2.0 * p[1])
                   : std::exp(p[0]) * std::sin(3.0 * p[0]);
    };
    std::vector<double> vals;
    for (int r = std::max(5, s.sc.resolution / 4); vals.size() < 4; r *= 2) {
        auto gg = build_grid(g->manifold.kind, r);
        std::vector<double> vv(gg->size());
        for (std::size_t i = 0; i < gg->size(); ++i) vv[i] = f1(gg->node(i));
        vals.push_back(integrate(gg, DensityForm::top(gg, vv)));
    }
    bool mono = true;
    for (std::size_t i = 1; i + 1 < vals.size(); ++i) {
        if (std::fabs(vals[i + 1] - vals[i]) >= std::fabs(vals[i] - vals[i - 1])) mono = false;
    }
    s.add("quadrature_refinement_monotone", mono ? 0.0 : 1.0, 0.5);

    if (g->manifold.has_boundary()) {
        std::vector<double> field(g->size(), 0.0);
        std::vector<double> bv(g->boundary_count());
        for (std::size_t b = 0; b < bv.size(); ++b) {
            bv[b] = std::sin(0.3 + 0.7 * static_cast<double>(b));
            field[g->boundary_nodes[b]] = bv[b];
        }
        auto back = boundary_restrict(g, field);
        double worst = 0.0;
        for (std::size_t b = 0; b < bv.size(); ++b) {
            worst = std::max(worst, std::fabs(back[b] - bv[b]));
        }
        s.add("boundary_restrict_identity", worst, 0.0);
    }
}

void check_embedding_ops(Suite& s) {
    const GridPtr& g = s.sc.grid();
    RandomStream rng(s.sc.seed + 101);
    std::string fname = g->manifold.kind == ManifoldKind::Interval01  ? "sine_graph_0.15"
                        : g->manifold.kind == ManifoldKind::Circle    ? "wavy_circle_0.1"
                                                                      : "paraboloid";
    Embedding f = s.sc.embedding(fname);

    // Mass conservation of the pushforward in the discrete scheme.
    std::vector<double> rho(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) rho[i] = 1.0 + 0.4 * rng.uniform();
    auto rf = DensityForm::top(g, rho);
    auto nu = pushforward_density(f, rf);
    s.add("pushforward_mass_exact", std::fabs(nu.total_mass() - integrate(g, rf)), 1e-13);

    // Pullback through the representative recovers the density.
    auto back = pullback_density(nu);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        worst = std::max(worst, std::fabs(back.values[i] - rho[i]));
    }
    s.add("pushforward_pullback_roundtrip", worst, 1e-9);

    // Right-action contravariance on fit-exact data (dim S = dim M).
    if (g->manifold.kind == ManifoldKind::Interval01) {
        auto fid = s.sc.embedding("interval_r1");
        auto phi = s.sc.diffeo("quad");
        auto lhs = pullback_volume(compose_reparam(fid, phi), AmbientDensity::lebesgue());
        auto rhs = pullback_by_diffeo(pullback_volume(fid, AmbientDensity::lebesgue()), phi);
        double w2 = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            w2 = std::max(w2, std::fabs(lhs.values[i] - rhs.values[i]));
        }
        s.add("right_action_contravariance", w2, 1e-8);
    } else if (g->manifold.kind == ManifoldKind::ClosedDisk) {
        auto fid = s.sc.embedding("disk_plane");
        auto phi = s.sc.diffeo("rot_0.5");
        auto lhs = pullback_volume(compose_reparam(fid, phi), AmbientDensity::lebesgue());
        auto rhs = pullback_by_diffeo(pullback_volume(fid, AmbientDensity::lebesgue()), phi);
        double w2 = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            w2 = std::max(w2, std::fabs(lhs.values[i] - rhs.values[i]));
        }
        s.add("right_action_contravariance", w2, 1e-8);
    }

    // Composition of valid embedding and diffeo stays an embedding.
    std::string dname = g->manifold.kind == ManifoldKind::Interval01  ? "smooth_0.25_0.1"
                        : g->manifold.kind == ManifoldKind::Circle    ? "sine_0.25"
                                                                      : "swirl_0.3";
    auto phi = s.sc.diffeo(dname);
    bool ok = check_embedding(compose_reparam(f, phi)).ok();
    s.add("compose_preserves_embedding", ok ? 0.0 : 1.0, 0.5);
}

void check_chart_suite(Suite& s) {
    const GridPtr& g = s.sc.grid();
    RandomStream rng(s.sc.seed + 202);
    const auto kind = g->manifold.kind;
    std::string base_name = kind == ManifoldKind::Interval01 ? "interval"
                            : kind == ManifoldKind::Circle   ? "unit_circle"
                                                             : "flat_disk";
    Embedding f0 = s.sc.embedding(base_name);
    double delta = kind == ManifoldKind::Circle ? 0.35 : 0.3;
    double eps = kind == ManifoldKind::Interval01 ? 0.45 : 0.3;
    auto chart = build_tubular_chart(f0, delta, eps);
    const int m = f0.m(), k = f0.k(), c = m - k;
    std::size_t n = g->size();

    // Frame orthogonality.
    double worst = 0.0;
    std::vector<double> J(static_cast<std::size_t>(k) * m), E(static_cast<std::size_t>(c) * m);
    for (std::size_t i = 0; i < n; ++i) {
        if (c == 0) break;
        f0.node_jacobian(i, J.data());
        chart.node_frame(i, E.data());
        for (int cc = 0; cc < c; ++cc) {
            for (int a = 0; a < k; ++a) {
                double d = 0.0, nrm = 0.0;
                for (int r = 0; r < m; ++r) {
                    d += E[cc * m + r] * J[a * m + r];
                    nrm += J[a * m + r] * J[a * m + r];
                }
                worst = std::max(worst, std::fabs(d) / std::sqrt(nrm));
            }
        }
    }
    s.add("chart_frame_orthogonality", worst, 1e-8);

    // Projection left-inverse on random offsets below delta/2.
    if (c > 0) {
        worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            double sp = kind == ManifoldKind::Circle ? rng.uniform(0.0, kTwoPi)
                                                     : rng.uniform(0.05, 0.95);
            double cc = rng.uniform(-0.45, 0.45) * delta;
            double Ept[6], F[3], x[3];
            chart.frame_at({sp, 0.0}, Ept);
            f0.eval({sp, 0.0}, F);
            for (int r = 0; r < m; ++r) x[r] = F[r] + cc * Ept[r];
            auto res = closest_point_project(x, chart, true);
            double dp = std::fabs(res.param[0] - sp);
            if (kind == ManifoldKind::Circle) dp = std::min(dp, kTwoPi - dp);
            worst = std::max(worst, dp);
            worst = std::max(worst, std::fabs(res.normal_coords[0] - cc));
        }
        s.add("projection_left_inverse", worst, 1e-8);
    }

    // Step II localization and lambda monotonicity (boundary kinds).
    if (g->manifold.has_boundary()) {
        std::vector<double> sig(g->boundary_count());
        for (std::size_t b = 0; b < sig.size(); ++b) {
            sig[b] = 0.4 * chart.eps * std::cos(0.2 + 1.7 * static_cast<double>(b));
        }
        auto shift = boundary_shift_map(sig, chart);
        s.add("collar_shift_monotone", shift.min_lambda_slope > 0 ? 0.0 : 1.0, 0.5);
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            bool outside;
            if (kind == ManifoldKind::Interval01) {
                double t0 = chart.collar_coord_1d(g->nodes[i], 0);
                double t1 = chart.collar_coord_1d(g->nodes[i], 1);
                outside = t0 <= -chart.eps && t1 <= -chart.eps;
                if (outside && shift.target_params[i] != g->nodes[i]) moved = 1.0;
            } else {
                Param p = g->node(i);
                double r = std::hypot(p[0], p[1]);
                double th = std::atan2(p[1], p[0]);
                outside = r < 1e-14 ||
                          chart.collar_coord_disk(r, th < 0 ? th + kTwoPi : th) <= -chart.eps;
                if (outside && (shift.target_params[2 * i] != p[0] ||
                                shift.target_params[2 * i + 1] != p[1])) {
                    moved = 1.0;
                }
            }
        }
        s.add("collar_shift_localized", moved, 0.5);

        auto tr = transport_normal_frames(shift, chart);
        double nrm_worst = 0.0;
        for (std::size_t i = 0; i < n && c == 1; ++i) {
            double e0 = tr.rotations[i] * tr.target_frames[i * m];
            double e1 = tr.rotations[i] * tr.target_frames[i * m + 1];
            double e2 = m > 2 ? tr.rotations[i] * tr.target_frames[i * m + 2] : 0.0;
            nrm_worst = std::max(nrm_worst,
                                 std::fabs(std::sqrt(e0 * e0 + e1 * e1 + e2 * e2) - 1.0));
        }
        s.add("frame_transport_orthogonal", nrm_worst, 1e-10);
    }

    // Chart round trip on random admissible smooth sections.
    SectionPair sec = SectionPair::zero(chart);
    if (!sec.sigma_dagger.empty()) {
        if (kind == ManifoldKind::Interval01) {
            sec.sigma_dagger = {rng.uniform(-0.35, 0.35) * chart.eps,
                                rng.uniform(-0.35, 0.35) * chart.eps};
        } else {
            double a0 = rng.uniform(-0.2, 0.2) * chart.eps;
            double a1 = rng.uniform(-0.2, 0.2) * chart.eps;
            double ph = rng.uniform(0.0, kTwoPi);
            auto angles = g->boundary_angles();
            for (std::size_t b = 0; b < angles.size(); ++b) {
                sec.sigma_dagger[b] = a0 + a1 * std::cos(angles[b] + ph);
            }
        }
    }
    if (c > 0) {
        double c0 = rng.uniform(-0.25, 0.25) * delta, c1 = rng.uniform(-0.25, 0.25) * delta;
        for (std::size_t i = 0; i < n; ++i) {
            Param p = g->node(i);
            double x = kind == ManifoldKind::Circle ? std::cos(p[0]) : p[0];
            sec.sigma[i] = c0 + c1 * x * (kind == ManifoldKind::Interval01 ? (1.0 - x) : 0.5);
        }
    }
    auto N = chart_inverse(sec, chart);
    auto back = chart_forward(N, chart);
    worst = 0.0;
    for (std::size_t b = 0; b < sec.sigma_dagger.size(); ++b) {
        worst = std::max(worst, std::fabs(back.sigma_dagger[b] - sec.sigma_dagger[b]));
    }
    for (std::size_t i = 0; i < sec.sigma.size(); ++i) {
        worst = std::max(worst, std::fabs(back.sigma[i] - sec.sigma[i]));
    }
    s.add("chart_roundtrip", worst,
          kind == ManifoldKind::Interval01 ? 1e-8 : 1e-8 * s.spacing_scale(3.0));

    // Verticality of the canonical section data.
    if (c > 0) {
        const Embedding& fperp = N.representative;
        double vw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // Offset from the projection of the node onto the extended base.
            auto pr = closest_point_project(fperp.point(i), chart, true);
            double F0[3], JJ[6];
            f0.eval(pr.param, F0);
            f0.jacobian(pr.param, JJ);
            for (int a = 0; a < k; ++a) {
                double d = 0.0, nn = 0.0;
                for (int r = 0; r < m; ++r) {
                    d += (fperp.point(i)[r] - F0[r]) * JJ[a * m + r];
                    nn += JJ[a * m + r] * JJ[a * m + r];
                }
                vw = std::max(vw, std::fabs(d) / std::sqrt(nn));
            }
        }
        s.add("section_verticality", vw, 1e-8);
    }

    // Uniqueness under reparametrized representatives, and equivariance.
    if (kind != ManifoldKind::ClosedDisk) {
        std::string dn = kind == ManifoldKind::Interval01 ? "cubic_0.22" : "sine_0.25";
        auto phi = s.sc.diffeo(dn);
        GrassPoint N2{compose_reparam(N.representative, phi), {}};
        auto sec2 = chart_forward(N2, chart);
        worst = 0.0;
        for (std::size_t b = 0; b < sec.sigma_dagger.size(); ++b) {
            worst = std::max(worst, std::fabs(sec2.sigma_dagger[b] - back.sigma_dagger[b]));
        }
        for (std::size_t i = 0; i < sec.sigma.size(); ++i) {
            worst = std::max(worst, std::fabs(sec2.sigma[i] - back.sigma[i]));
        }
        s.add("chart_uniqueness", worst,
              kind == ManifoldKind::Interval01 ? 1e-8 : 1e-8 * s.spacing_scale(3.0));

        auto psi = reparam_to_normal(N2.representative, chart);
        auto psi_base = reparam_to_normal(N.representative, chart);
        auto comp = DiffeoS::compose(psi_base, phi);
        worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = psi.values[i] - comp.values[i];
            if (kind == ManifoldKind::Circle) d = std::remainder(d, kTwoPi);
            worst = std::max(worst, std::fabs(d));
        }
        s.add("reparam_equivariance", worst, 1e-8 * s.spacing_scale(3.0));

        // Factorization: decompose then rebuild reproduces the image.
        auto rebuilt = chart_inverse(sec2, chart);
        s.add("chart_factorization",
              image_hausdorff(rebuilt.representative, N2.representative),
              kind == ManifoldKind::Interval01 ? 1e-7 : 1e-6);
    }
}

void check_transport(Suite& s) {
    const GridPtr& g = s.sc.grid();
    RandomStream rng(s.sc.seed + 303);
    if (g->manifold.kind == ManifoldKind::ClosedDisk) {
        auto mu = s.sc.density("uniform");
        auto nu = s.sc.density("linear_x_0.5");
        double scale = integrate(g, mu) / integrate(g, nu);
        for (double& v : nu.values) v *= scale;
        auto res = moser_map_disk(mu, nu);
        s.add("moser_disk_l1_residual", res.l1_residual, 1e-3);
        double bworst = 0.0;
        for (std::size_t b : g->boundary_nodes) {
            bworst = std::max(bworst, std::fabs(std::hypot(res.map.values[2 * b],
                                                           res.map.values[2 * b + 1]) -
                                                1.0));
        }
        s.add("moser_disk_boundary_preserved", bworst, 1e-12);
        return;
    }

    // 1-D transport on random smooth positive densities.
    double worst = 0.0;
    bool circle = g->manifold.kind == ManifoldKind::Circle;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> mv(g->size()), nv(g->size());
        double a1 = rng.uniform(-0.3, 0.3), a2 = rng.uniform(-0.2, 0.2);
        double b1 = rng.uniform(-0.3, 0.3), b2 = rng.uniform(-0.2, 0.2);
        for (std::size_t i = 0; i < g->size(); ++i) {
            double t = circle ? g->nodes[i] : kTwoPi * g->nodes[i];
            mv[i] = 1.0 + a1 * std::sin(t) + a2 * std::cos(2.0 * t);
            nv[i] = 1.0 + b1 * std::cos(t) + b2 * std::sin(2.0 * t);
        }
        auto mu = DensityForm::top(g, mv);
        auto nu = DensityForm::top(g, nv);
        double scale = integrate(g, mu) / integrate(g, nu);
        for (double& v : nu.values) v *= scale;
        auto res = moser_map_1d(mu, nu);
        worst = std::max(worst, res.sup_residual);

        // Mass part of the transport identity, exact after scaling.
        s.add("moser_mass_exact_" + std::to_string(trial),
              std::fabs(integrate(g, mu) - integrate(g, nu)), 1e-12);
    }
    s.add("moser_sup_residual", worst, 1e-8 * s.spacing_scale(5.0));

    // Naturality of the cumulative-mass maps.
    {
        std::vector<double> av(g->size()), bv(g->size()), cv(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            double t = circle ? g->nodes[i] : kTwoPi * g->nodes[i];
            av[i] = 1.0;
            bv[i] = 1.0 + 0.25 * std::sin(t);
            cv[i] = 1.0 - 0.2 * std::cos(t);
        }
        auto A = DensityForm::top(g, av);
        auto B = DensityForm::top(g, bv);
        auto C = DensityForm::top(g, cv);
        double sb = integrate(g, A) / integrate(g, B);
        for (double& v : B.values) v *= sb;
        double scv = integrate(g, A) / integrate(g, C);
        for (double& v : C.values) v *= scv;
        auto ab = moser_map_1d(A, B);
        auto bc = moser_map_1d(B, C);
        auto ac = moser_map_1d(A, C);
        auto chain = DiffeoS::compose(bc.map, ab.map);
        double w2 = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            double d = chain.values[i] - ac.map.values[i];
            if (circle) d = std::remainder(d, kTwoPi);
            w2 = std::max(w2, std::fabs(d));
        }
        s.add("moser_naturality", w2, 1e-8 * s.spacing_scale(5.0));
    }

    // Splitting round trip and idempotence.
    {
        std::vector<double> mv(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            double t = circle ? g->nodes[i] : kTwoPi * g->nodes[i];
            mv[i] = 1.0 + 0.2 * std::cos(t);
        }
        auto mu = DensityForm::top(g, mv);
        double wr = 0.0, wp = 0.0, wi = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            double off = 0.3 * rng.uniform(-1.0, 1.0);
            DiffeoS phi = circle ? DiffeoS::sample(
                                       g,
                                       [off, trial](const Param& t) {
                                           return Param{t[0] + off + 0.3 * std::sin(t[0] + trial),
                                                        0.0};
                                       })
                                 : s.sc.diffeo("smooth_" + std::to_string(0.25 - 0.1 * trial) +
                                               "_0.1");
            auto split = decompose_diffeo(phi, mu);
            wr = std::max(wr, split.recomposition_residual);
            wp = std::max(wp, split.preservation_residual);
            auto again = decompose_diffeo(split.phi_vol, mu);
            for (std::size_t i = 0; i < g->size(); ++i) {
                double d = again.phi_vol.values[i] - split.phi_vol.values[i];
                if (circle) d = std::remainder(d, kTwoPi);
                wi = std::max(wi, std::fabs(d));
            }
        }
        s.add("splitting_recomposition", wr, 1e-7 * s.spacing_scale(4.0));
        s.add("splitting_preservation", wp, 1e-6 * s.spacing_scale(4.0));
        s.add("splitting_idempotent", wi, 1e-6 * s.spacing_scale(4.0));
    }
}

void check_tangent_level(Suite& s) {
    const GridPtr& g = s.sc.grid();
    const auto kind = g->manifold.kind;
    RandomStream rng(s.sc.seed + 404);

    Embedding f = kind == ManifoldKind::Interval01 ? s.sc.embedding("sine_graph_0.15")
                  : kind == ManifoldKind::Circle   ? s.sc.embedding("unit_circle")
                                                   : s.sc.embedding("disk_plane");
    auto mu = s.sc.density("uniform");

    // Vertical fields sit in the kernel of both tangent projections.
    TangentField vert = s.sc.field(kind == ManifoldKind::ClosedDisk ? "rotation" : "vertical_0.4",
                                   f);
    auto wg = tangent_project_gr(f, vert);
    double worst = 0.0;
    for (double x : wg.w_perp) worst = std::max(worst, std::fabs(x));
    for (double x : wg.w_dagger) worst = std::max(worst, std::fabs(x));
    s.add("tangent_gr_kernel_vertical", worst, 1e-7);

    auto mres = membership(f, &mu, vert,
                           kind == ManifoldKind::ClosedDisk ? MembershipKind::VerticalVol
                                                            : MembershipKind::VerticalGr,
                           AmbientDensity::lebesgue(), 1e-7);
    s.add("vertical_membership", mres.residual, 1e-7);

    // Non-vertical fields are seen by the projection.
    TangentField tilt = s.sc.field(kind == ManifoldKind::ClosedDisk ? "position"
                                                                    : "normal_sine_0.2",
                                   f);
    auto wt = tangent_project_gr(f, tilt);
    double wmax = 0.0;
    for (double x : wt.w_perp) wmax = std::max(wmax, std::fabs(x));
    for (double x : wt.w_dagger) wmax = std::max(wmax, std::fabs(x));
    s.add("tangent_gr_detects_nonvertical", wmax > 1e-3 ? 0.0 : 1.0, 0.5);

    // Compatibility of the volume tangent data at the boundary.
    if (g->manifold.has_boundary()) {
        double cw = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            double c0 = rng.uniform(-0.5, 0.5), c1 = rng.uniform(-0.5, 0.5);
            auto v = TangentField::sample(f, [&](const Param& p, const double* x, double* out) {
                const int m = f.m();
                for (int r = 0; r < m; ++r) {
                    out[r] = c0 * x[(r + 1) % m] + c1 * std::sin(p[0] + r);
                }
            });
            auto wv = tangent_project_vol(f, mu, v);
            cw = std::max(cw, vol_compat_residual(f, mu, wv));
        }
        s.add("vol_tangent_boundary_compat", cw, 1e-10);
    }

    // First-variation consistency against central differences.
    DvolCase which = f.k() == f.m() ? DvolCase::Codim0 : DvolCase::PositiveCodim;
    auto v = TangentField::sample(f, [&](const Param& p, const double*, double* out) {
        const int m = f.m();
        for (int r = 0; r < m; ++r) out[r] = 0.2 * std::sin(1.7 * p[0] + 0.9 * r) + 0.05 * r;
    });
    double dv = dvol_embedding(f, v, which);
    double h = 1e-4;
    double fd = (vol_functional(embedding_line(f, v, h), which) -
                 vol_functional(embedding_line(f, v, -h), which)) /
                (2.0 * h);
    s.add("dvol_fd_consistency", std::fabs(dv - fd) / std::max(1.0, std::fabs(fd)), 1e-4);

    // Curvature benchmarks.
    if (kind == ManifoldKind::Circle) {
        auto H = mean_curvature({f, {}});
        double wc = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            wc = std::max(wc, std::fabs(H.magnitude(i) - 1.0));
        }
        s.add("curvature_circle", wc, 0.02);
    } else if (kind == ManifoldKind::Interval01) {
        auto seg = s.sc.embedding("interval");
        auto H = mean_curvature({seg, {}});
        double wc = 0.0;
        for (double x : H.H) wc = std::max(wc, std::fabs(x));
        s.add("curvature_flat_segment", wc, 1e-10);
    } else {
        auto patch = s.sc.embedding("sphere_patch_1.3_0.5");
        auto H = mean_curvature({patch, {}});
        double wc = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            wc = std::max(wc, std::fabs(H.magnitude(i) - 2.0 / 1.3) / (2.0 / 1.3));
        }
        s.add("curvature_sphere_patch", wc, 0.05);
    }

    // Interval exactness of zero-integral densities.
    if (kind == ManifoldKind::Interval01) {
        std::vector<double> dv2(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            double t = g->nodes[i];
            dv2[i] = 1.2 * t * t - 0.7 * t;
        }
        auto sp0 = grid_interp(g, dv2);
        double total = sp0.integral_from_start(1.0);
        for (double& x : dv2) x -= total;
        auto sp = grid_interp(g, dv2);
        std::vector<double> alpha(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
            alpha[i] = sp.integral_from_start(g->nodes[i]);
        }
        auto asp = grid_interp(g, alpha);
        double w2 = std::fabs(alpha.front()) + std::fabs(alpha.back());
        for (std::size_t i = 0; i < g->size(); ++i) {
            w2 = std::max(w2, std::fabs(asp.deriv(g->nodes[i]) - dv2[i]));
        }
        s.add("omega0_exactness", w2, 1e-10);
    }

    // Fiber comparison and the structure-group reduction.
    if (kind != ManifoldKind::ClosedDisk) {
        std::string dn = kind == ManifoldKind::Interval01 ? "cubic_0.2" : "rot_0.9";
        auto phi = s.sc.diffeo(dn);
        auto f2 = compose_reparam(f, phi);
        auto cmp = fiber_compare(f, f2, FiberGroup::Diff);
        double w2 = 1.0;
        if (cmp) {
            w2 = 0.0;
            for (std::size_t i = 0; i < g->size(); ++i) {
                double d = cmp->values[i] - phi.values[i];
                if (kind == ManifoldKind::Circle) d = std::remainder(d, kTwoPi);
                w2 = std::max(w2, std::fabs(d));
            }
        }
        s.add("fiber_compare_recovers", w2, 1e-6);
        if (kind == ManifoldKind::Circle) {
            auto cmpv = fiber_compare(f, f2, FiberGroup::DiffVol, &mu);
            s.add("fiber_reduction_vol_in_diff", cmpv.has_value() ? 0.0 : 1.0, 0.5);
        }
    }

    // Kernel lane equivalence (bitwise).
    {
        RandomStream krng(s.sc.seed + 505);
        std::vector<double> a(257), b(257);
        for (auto& x : a) x = krng.uniform(-1.0, 1.0);
        for (auto& x : b) x = krng.uniform(-1.0, 1.0);
        kernels::select(kernels::Impl::Scalar);
        double dot_s = kernels::dot(a, b);
        double am_s = kernels::abs_max(a);
        double impl_gap = 0.0;
        if (kernels::avx2_available()) {
            kernels::select(kernels::Impl::Avx2);
            impl_gap = std::fabs(kernels::dot(a, b) - dot_s) +
                       std::fabs(kernels::abs_max(a) - am_s);
        }
        kernels::select(kernels::Impl::Auto);
        s.add("kernel_lane_equivalence", impl_gap, 0.0);
    }
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const Scenario& sc) {
    Suite s{sc, {}};
    check_quadrature(s);
    check_embedding_ops(s);
    check_chart_suite(s);
    check_transport(s);
    check_tangent_level(s);
    return std::move(s.out);
}

bool all_pass(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

}  // namespace nlg
