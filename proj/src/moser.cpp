#include "nlg/moser.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlg/kernels.hpp"

namespace nlg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Transport accepts densities that vanish somewhere (flagged later) but not
// ones that change sign.
void require_no_sign_change(const DensityForm& d, const char* what) {
    double lo = 1e300, hi = -1e300;
    for (double v : d.values) {
        require(std::isfinite(v), ErrorCode::NotAVolumeForm,
                std::string(what) + " has non-finite values");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    require(lo * hi >= 0.0 && (lo != 0.0 || hi != 0.0), ErrorCode::NotAVolumeForm,
            std::string(what) + " changes sign");
}

void require_transport_inputs(const DensityForm& mu, const DensityForm& nu) {
    require_no_sign_change(mu, "mu");
    require_no_sign_change(nu, "nu");
    require(same_grid(mu.grid, nu.grid), ErrorCode::GridMismatch,
            "mu and nu live on different grids");
    double a = integrate(mu.grid, mu), b = integrate(nu.grid, nu);
    require(std::fabs(std::fabs(a) - std::fabs(b)) <= 1e-8 * std::max(1.0, std::fabs(a)),
            ErrorCode::MassMismatch, "total masses differ");
}

// Reflected copy of a density under the fixed orientation-reversing
// reflection of the manifold; node layouts are symmetric so this is an exact
// index remap.
DensityForm reflect_density(const DensityForm& rho) {
    const GridPtr& g = rho.grid;
    std::vector<double> v(rho.values.size());
    std::size_t n = g->size();
    switch (g->manifold.kind) {
        case ManifoldKind::Interval01:
            for (std::size_t i = 0; i < n; ++i) v[i] = rho.values[n - 1 - i];
            break;
        case ManifoldKind::Circle:
            for (std::size_t i = 0; i < n; ++i) v[i] = rho.values[(n - i) % n];
            break;
        case ManifoldKind::ClosedDisk:
            v[0] = rho.values[0];
            for (std::size_t j = 1; j < g->ring_counts.size(); ++j) {
                int mj = g->ring_counts[j];
                std::size_t off = g->ring_offsets[j];
                for (int i = 0; i < mj; ++i) v[off + i] = rho.values[off + (mj - i) % mj];
            }
            break;
    }
    return DensityForm::top(g, std::move(v));
}

DiffeoS reflection_diffeo(const GridPtr& g) {
    switch (g->manifold.kind) {
        case ManifoldKind::Interval01:
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{1.0 - s[0], 0.0}; },
                [](const Param&, double* J) { J[0] = -1.0; });
        case ManifoldKind::Circle:
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{-s[0], 0.0}; },
                [](const Param&, double* J) { J[0] = -1.0; });
        case ManifoldKind::ClosedDisk:
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{s[0], -s[1]}; },
                [](const Param&, double* J) {
                    J[0] = 1.0;
                    J[1] = 0.0;
                    J[2] = 0.0;
                    J[3] = -1.0;
                });
    }
    fail(ErrorCode::Unsupported, "unknown manifold");
}

double measure_sup_residual_1d(const DiffeoS& B, const Interp1D& mu_sp, const Interp1D& nu_sp,
                               double nu_scale, const GridPtr& g) {
    // sup over dense samples of |mu(s)/B'(s) - nu~(B(s))|, the pullback form
    // of |B_* mu - nu~| evaluated at x = B(s).
    std::size_t n = g->size();
    double sup = 0.0;
    std::size_t dense = 4 * n;
    bool circle = g->manifold.kind == ManifoldKind::Circle;
    double span = circle ? kTwoPi : 1.0;
    for (std::size_t i = 0; i <= dense; ++i) {
        double s = span * static_cast<double>(i) / static_cast<double>(dense);
        if (circle && i == dense) break;
        double bp = B.deriv1(s);
        if (std::fabs(bp) < 1e-12) continue;
        double b = B.eval({s, 0.0})[0];
        double r = mu_sp.eval(s) / bp - nu_scale * nu_sp.eval(b);
        sup = std::max(sup, std::fabs(r));
    }
    return sup;
}

MoserResult transport_1d(const GridPtr& g, const Interp1D& mu_sp, const Interp1D& nu_sp) {
    std::size_t n = g->size();
    bool circle = g->manifold.kind == ManifoldKind::Circle;
    MoserResult out;

    double min_mu = 1e300, min_nu = 1e300;
    for (double v : mu_sp.values()) min_mu = std::min(min_mu, std::fabs(v));
    for (double v : nu_sp.values()) min_nu = std::min(min_nu, std::fabs(v));
    bool degenerate = min_nu < 1e-6 || min_mu < 1e-6;
    if (degenerate) {
        out.warnings.push_back(
            "density below 1e-6: transport derivative may blow up at the thin spots");
    }

    double span = circle ? kTwoPi : 1.0;
    double Mmu = mu_sp.integral_from_start(span);
    double Mnu = nu_sp.integral_from_start(span);
    double scale = Mmu / Mnu;  // nu~ = scale * nu has exactly mu's mass

    std::vector<double> vals(n), d1(n), d2(n);
    auto Fnu = [&](double x) { return scale * nu_sp.integral_from_start(x); };
    auto fnu = [&](double x) { return scale * nu_sp.eval(x); };
    for (std::size_t i = 0; i < n; ++i) {
        double s = g->nodes[i];
        double target = mu_sp.integral_from_start(s);
        double b = invert_monotone(Fnu, fnu, target, 0.0, circle ? kTwoPi : 1.0);
        double nb = fnu(b);
        double ms = mu_sp.eval(s);
        vals[i] = b;
        d1[i] = std::fabs(nb) > 1e-12 ? ms / nb : 0.0;
        double dms = mu_sp.deriv(s);
        double dnb = scale * nu_sp.deriv(b);
        d2[i] = std::fabs(nb) > 1e-12 ? (dms - dnb * d1[i] * d1[i]) / nb : 0.0;
    }
    if (!circle) {
        vals.front() = 0.0;
        vals.back() = 1.0;
    } else {
        vals.front() = 0.0;  // base-point convention: B fixes angle 0
    }
    out.map = degenerate ? DiffeoS::from_values(g, std::move(vals))
                         : DiffeoS::from_values(g, std::move(vals), std::move(d1), std::move(d2));
    out.sup_residual = measure_sup_residual_1d(out.map, mu_sp, nu_sp, scale, g);
    return out;
}

MoserResult moser_map_1d_positive(const DensityForm& mu, const DensityForm& nu) {
    return transport_1d(mu.grid, grid_interp(mu.grid, mu.values),
                        grid_interp(nu.grid, nu.values));
}

// 1-D nodal density with optional exact derivative data.
struct Density1D {
    std::vector<double> values;
    std::vector<double> derivs;

    void negate() {
        for (double& v : values) v = -v;
        for (double& v : derivs) v = -v;
    }
    void reflect(const GridPtr& g) {
        std::size_t n = values.size();
        std::vector<double> v(n), d;
        bool circle = g->manifold.kind == ManifoldKind::Circle;
        for (std::size_t i = 0; i < n; ++i) v[i] = circle ? values[(n - i) % n]
                                                          : values[n - 1 - i];
        if (!derivs.empty()) {
            d.resize(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = circle ? -derivs[(n - i) % n]
                                                              : -derivs[n - 1 - i];
        }
        values = std::move(v);
        derivs = std::move(d);
    }
    Interp1D interp(const GridPtr& g) const {
        auto closure = g->manifold.kind == ManifoldKind::Circle ? Interp1D::Closure::Periodic
                                                                : Interp1D::Closure::NotAKnot;
        if (derivs.empty()) return Interp1D::spline(0.0, g->spacing, values, closure);
        return Interp1D::hermite(0.0, g->spacing, values, derivs, closure);
    }
    int sign() const { return values.empty() || values[0] >= 0.0 ? 1 : -1; }
};

// Sign-aware 1-D transport on density data (the data carries exact nodal
// derivatives when the caller knows them).
MoserResult moser_1d_data(const GridPtr& g, Density1D mu, Density1D nu) {
    if (mu.sign() == nu.sign()) {
        if (mu.sign() < 0) {
            mu.negate();
            nu.negate();
        }
        return transport_1d(g, mu.interp(g), nu.interp(g));
    }
    DiffeoS R = reflection_diffeo(g);
    Density1D mu_ref = mu;
    mu_ref.reflect(g);  // equals -R_* mu
    Density1D nu_neg = nu;
    nu_neg.negate();
    if (mu_ref.sign() < 0) {
        mu_ref.negate();
        nu_neg.negate();
    }
    auto mu_sp = mu.interp(g);
    auto nu_sp = nu.interp(g);
    MoserResult plus = transport_1d(g, mu_ref.interp(g), nu_neg.interp(g));
    MoserResult out = plus;
    out.map = DiffeoS::compose(plus.map, R);
    double span = g->manifold.kind == ManifoldKind::Circle ? kTwoPi : 1.0;
    double scale = mu_sp.integral_from_start(span) / nu_sp.integral_from_start(span);
    out.sup_residual = measure_sup_residual_1d(out.map, mu_sp, nu_sp, scale, g);
    return out;
}

}  // namespace

MoserResult moser_map_1d(const DensityForm& mu, const DensityForm& nu) {
    require_transport_inputs(mu, nu);
    require(mu.grid->param_dim == 1, ErrorCode::Unsupported, "moser_map_1d needs a 1-D grid");
    return moser_1d_data(mu.grid, {mu.values, {}}, {nu.values, {}});
}

namespace {

// Fast field sampler for the disk flow: quartic local fits of the potential
// and the densities, precomputed per node, evaluated at the offset from the
// nearest node.
struct DiskFieldSampler {
    const SampleGrid& g;
    std::vector<Fit2D> u_fit, mu_fit, nu_fit;

    DiskFieldSampler(const SampleGrid& grid, std::span<const double> u,
                     std::span<const double> mu, std::span<const double> nu)
        : g(grid) {
        std::size_t n = g.size();
        u_fit.resize(n);
        mu_fit.resize(n);
        nu_fit.resize(n);
        const std::size_t terms = fit_term_count(4);
        std::vector<double> pts, op;
        for (std::size_t i = 0; i < n; ++i) {
            Param p = g.node(i);
            auto idx = g.k_nearest(p, 28);
            pts.resize(2 * idx.size());
            for (std::size_t t = 0; t < idx.size(); ++t) {
                pts[2 * t] = g.nodes[2 * idx[t]];
                pts[2 * t + 1] = g.nodes[2 * idx[t] + 1];
            }
            op.resize(terms * idx.size());
            fit_operator({p[0], p[1]}, pts, 4, op);
            u_fit[i].degree = mu_fit[i].degree = nu_fit[i].degree = 4;
            for (std::size_t t = 0; t < terms; ++t) {
                double au = 0.0, am = 0.0, an = 0.0;
                for (std::size_t sME = 0; sME < idx.size(); ++sME) {
                    double w = op[t * idx.size() + sME];
                    au += w * u[idx[sME]];
                    am += w * mu[idx[sME]];
                    an += w * nu[idx[sME]];
                }
                u_fit[i].c[t] = au;
                mu_fit[i].c[t] = am;
                nu_fit[i].c[t] = an;
            }
        }
    }

    void eval(double x, double y, double& ux, double& uy, double& muv, double& nuv) const {
        std::size_t i = g.nearest_node({x, y});
        Param p = g.node(i);
        auto gr = u_fit[i].eval_grad(x - p[0], y - p[1]);
        ux = gr[0];
        uy = gr[1];
        muv = mu_fit[i].eval(x - p[0], y - p[1]);
        nuv = nu_fit[i].eval(x - p[0], y - p[1]);
    }
};

MoserResult moser_map_disk_positive(const DensityForm& mu, const DensityForm& nu_in,
                                    int flow_steps) {
    const GridPtr& g = mu.grid;
    const std::size_t n = g->size();
    MoserResult out;

    // Scale nu to mu's exact quadrature mass.
    double Mmu = integrate(g, mu), Mnu = integrate(g, nu_in);
    DensityForm nu = nu_in;
    double scale = Mmu / Mnu;
    for (double& v : nu.values) v *= scale;

    // Neumann Poisson solve, bordered with the mean-zero constraint. The
    // collocation rows come from quartic fits so low-order polynomial
    // mismatches (whose potentials are quartic) solve exactly.
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    Eigen::VectorXd rhs(n + 1);
    rhs.setZero();
    const std::size_t terms4 = fit_term_count(4);
    std::vector<double> op;
    std::vector<double> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Param p = g->node(i);
        auto idx = g->k_nearest(p, 28);
        pts.resize(2 * idx.size());
        for (std::size_t t = 0; t < idx.size(); ++t) {
            pts[2 * t] = g->nodes[2 * idx[t]];
            pts[2 * t + 1] = g->nodes[2 * idx[t] + 1];
        }
        op.resize(terms4 * idx.size());
        fit_operator({p[0], p[1]}, pts, 4, op);
        std::size_t sn = idx.size();
        if (!g->is_boundary(i)) {
            for (std::size_t s = 0; s < sn; ++s) {
                double lap = 2.0 * op[3 * sn + s] + 2.0 * op[5 * sn + s];
                trips.emplace_back(i, idx[s], lap);
            }
            rhs(i) = nu.values[i] - mu.values[i];
        } else {
            for (std::size_t s = 0; s < sn; ++s) {
                double dn = op[1 * sn + s] * p[0] + op[2 * sn + s] * p[1];
                trips.emplace_back(i, idx[s], dn);
            }
            rhs(i) = 0.0;
        }
        trips.emplace_back(i, n, 1.0);
        trips.emplace_back(n, i, g->quad_weights[i]);
    }
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    require(lu.info() == Eigen::Success, ErrorCode::SolverDivergence,
            "Poisson factorization failed");
    Eigen::VectorXd sol = lu.solve(rhs);
    require(lu.info() == Eigen::Success, ErrorCode::SolverDivergence, "Poisson solve failed");
    std::vector<double> u(sol.data(), sol.data() + n);

    // Flow of v_t = -grad u / rho_t, RK4 with fixed steps; boundary
    // trajectories are kept on the circle (tangential velocity only).
    DiskFieldSampler fields{*g, u, mu.values, nu.values};
    double rho_ref = Mmu / std::numbers::pi;
    auto velocity = [&](double x, double y, double t, bool on_boundary, double& vx, double& vy) {
        double ux, uy, mv, nv;
        fields.eval(x, y, ux, uy, mv, nv);
        double rho_t = (1.0 - t) * mv + t * nv;
        double ratio = rho_t / rho_ref;
        require(std::fabs(ratio) > 1e-3 && std::fabs(ratio) < 1e3, ErrorCode::SolverDivergence,
                "interpolated density ratio leaves [1e-3, 1e3]");
        vx = -ux / rho_t;
        vy = -uy / rho_t;
        if (on_boundary) {
            double r2 = x * x + y * y;
            double rn = (vx * x + vy * y) / r2;  // radial leak, removed exactly
            vx -= rn * x;
            vy -= rn * y;
        }
    };

    std::vector<double> pos = g->nodes;
    double dt = 1.0 / flow_steps;
    for (int step = 0; step < flow_steps; ++step) {
        double t0 = step * dt;
        for (std::size_t i = 0; i < n; ++i) {
            bool onb = g->is_boundary(i);
            double x = pos[2 * i], y = pos[2 * i + 1];
            double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
            velocity(x, y, t0, onb, k1x, k1y);
            velocity(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, t0 + 0.5 * dt, onb, k2x, k2y);
            velocity(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, t0 + 0.5 * dt, onb, k3x, k3y);
            velocity(x + dt * k3x, y + dt * k3y, t0 + dt, onb, k4x, k4y);
            double nx = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
            double ny = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
            double r = std::hypot(nx, ny);
            if (onb) {
                nx /= r;
                ny /= r;
            } else if (r > 1.0) {
                nx /= r * (1.0 + 1e-14);
                ny /= r * (1.0 + 1e-14);
            }
            pos[2 * i] = nx;
            pos[2 * i + 1] = ny;
        }
    }
    out.map = DiffeoS::from_values(g, std::move(pos));

    // L1 residual in pullback form: integral of |mu - B^* nu~|.
    auto pb = pullback_by_diffeo(nu, out.map);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = mu.values[i] - pb.values[i];
    out.l1_residual = kernels::weighted_abs_sum(g->quad_weights, diff);
    return out;
}

}  // namespace

MoserResult moser_map_disk(const DensityForm& mu, const DensityForm& nu, int flow_steps) {
    require_transport_inputs(mu, nu);
    require(mu.grid->manifold.kind == ManifoldKind::ClosedDisk, ErrorCode::Unsupported,
            "moser_map_disk needs a disk grid");
    if (mu.sign() == nu.sign()) {
        if (mu.sign() > 0) return moser_map_disk_positive(mu, nu, flow_steps);
        DensityForm mu_pos = mu, nu_pos = nu;
        for (double& v : mu_pos.values) v = -v;
        for (double& v : nu_pos.values) v = -v;
        return moser_map_disk_positive(mu_pos, nu_pos, flow_steps);
    }
    DiffeoS R = reflection_diffeo(mu.grid);
    DensityForm mu_ref = reflect_density(mu);
    DensityForm nu_neg = nu;
    for (double& v : nu_neg.values) v = -v;
    if (mu_ref.sign() < 0) {
        for (double& v : mu_ref.values) v = -v;
        for (double& v : nu_neg.values) v = -v;
    }
    MoserResult plus = moser_map_disk_positive(mu_ref, nu_neg, flow_steps);
    MoserResult out = plus;
    out.map = DiffeoS::compose(plus.map, R);
    auto pb = pullback_by_diffeo(nu, out.map);
    std::vector<double> diff(mu.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = mu.values[i] - pb.values[i];
    out.l1_residual = kernels::weighted_abs_sum(mu.grid->quad_weights, diff);
    return out;
}

MoserResult moser_map(const DensityForm& mu, const DensityForm& nu) {
    if (mu.grid->manifold.kind == ManifoldKind::ClosedDisk) return moser_map_disk(mu, nu);
    return moser_map_1d(mu, nu);
}

DiffeoSplit decompose_diffeo(const DiffeoS& phi, const DensityForm& mu) {
    require_volume_form(mu, "mu");
    require(same_grid(phi.grid, mu.grid), ErrorCode::GridMismatch,
            "diffeo and density grids differ");
    phi.validate();
    DiffeoSplit out;
    DensityForm rho = pushforward_by_diffeo(mu, phi);
    // The discrete pushforward carries the quadrature error of two different
    // integrands; align its mass with mu so rho sits exactly on Vol_mu(S).
    double mass_scale = std::fabs(integrate(mu.grid, mu) / integrate(rho.grid, rho));
    for (double& v : rho.values) v *= mass_scale;
    out.rho = {rho, rho.sign() == mu.sign() ? 1 : -1};
    if (mu.grid->param_dim == 1) {
        // Exact nodal derivatives of rho = (mu / phi') o phi^{-1} by the
        // chain rule, so the transport sees a Hermite-quality density.
        auto mu_sp = grid_interp(mu.grid, mu.values);
        std::size_t n = mu.grid->size();
        std::vector<double> rd(n);
        for (std::size_t i = 0; i < n; ++i) {
            double y = phi.invert_point(mu.grid->node(i))[0];
            double dp = phi.deriv1(y), dpp = phi.second1(y);
            double m = mu_sp.eval(y), dm = mu_sp.deriv(y);
            rd[i] = mass_scale * (dm / dp - m * dpp / (dp * dp)) / dp;
        }
        out.transport = moser_1d_data(mu.grid, {mu.values, {}}, {rho.values, std::move(rd)});
    } else {
        out.transport = moser_map(mu, rho);
    }
    DiffeoS Binv = out.transport.map.inverse();
    out.phi_vol = DiffeoS::compose(Binv, phi);

    // B(rho) o phi_vol = phi nodewise.
    double rec = 0.0;
    std::size_t n = phi.size();
    auto recomposed = DiffeoS::compose(out.transport.map, out.phi_vol);
    for (std::size_t i = 0; i < n * static_cast<std::size_t>(phi.grid->param_dim); ++i) {
        double d = recomposed.values[i] - phi.values[i];
        if (phi.grid->manifold.kind == ManifoldKind::Circle) d = std::remainder(d, kTwoPi);
        rec = std::max(rec, std::fabs(d));
    }
    out.recomposition_residual = rec;

    // (phi_vol)_* mu = mu nodewise.
    auto preserved = pushforward_by_diffeo(mu, out.phi_vol);
    double prs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        prs = std::max(prs, std::fabs(preserved.values[i] - mu.values[i]));
    }
    out.preservation_residual = prs;
    return out;
}

}  // namespace nlg
