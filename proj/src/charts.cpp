#include "nlg/charts.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace nlg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodic scattered interpolation on the circle: weighted local cubic fit in
// the angle over the nearest samples.
double periodic_scattered_eval(const std::vector<double>& angles, const std::vector<double>& vals,
                               double query) {
    std::size_t n = angles.size();
    std::vector<std::pair<double, std::size_t>> byd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = std::remainder(angles[i] - query, kTwoPi);
        byd[i] = {std::fabs(d), i};
    }
    std::size_t use = std::min<std::size_t>(8, n);
    std::partial_sort(byd.begin(), byd.begin() + use, byd.end());
    if (byd[0].first < 1e-12) return vals[byd[0].second];
    Eigen::MatrixXd A(use, 4);
    Eigen::VectorXd b(use);
    double scale = std::max(byd[use - 1].first, 1e-12);
    for (std::size_t i = 0; i < use; ++i) {
        double d = std::remainder(angles[byd[i].second] - query, kTwoPi) / scale;
        double w = 1.0 / (1.0 + d * d);
        A(i, 0) = w;
        A(i, 1) = w * d;
        A(i, 2) = w * d * d;
        A(i, 3) = w * d * d * d;
        b(i) = w * vals[byd[i].second];
    }
    Eigen::Vector4d c = A.colPivHouseholderQr().solve(b);
    return c(0);
}

// Interior extension of the boundary shift used by the charts: affine in
// arclength on the interval (this is what makes the flat closed form hold
// pointwise), the radial collar bump on the disk, trivial when boundaryless.
struct InteriorShift {
    const TubularChart* chart = nullptr;
    bool trivial = true;
    // interval data
    double sig0 = 0.0, sig1 = 0.0, length = 1.0, slope = 1.0;
    // disk data
    BoundaryShift disk;
    Interp1D disk_section;  // collar-convention section over the boundary angle

    double eval1(double s) const {
        if (trivial) return s;
        double l = chart->arclength(s);
        return chart->param_at_arclength(sig0 + slope * l);
    }
    double deriv1(double s) const {
        if (trivial) return 1.0;
        double sp = eval1(s);
        return slope * chart->speed_.eval(s) / chart->speed_.eval(sp);
    }
    double inverse1(double sp) const {
        if (trivial) return sp;
        double l = (chart->arclength(sp) - sig0) / slope;
        return chart->param_at_arclength(l);
    }
    Param disk_target(std::size_t i) const {
        return {disk.target_params[2 * i], disk.target_params[2 * i + 1]};
    }
    Param disk_inverse(const Param& q) const {
        double r = std::hypot(q[0], q[1]);
        if (r < 1e-14) return q;
        double th = std::atan2(q[1], q[0]);
        if (th < 0) th += kTwoPi;
        double tp = chart->collar_coord_disk(r, th);
        if (tp <= -chart->eps) return q;
        double a = disk_section.eval(th);
        const BumpFunction& rho = chart->bump;
        double eps = chart->eps;
        auto lam = [&](double t) { return t + a * rho.eval(t / eps); };
        auto lamp = [&](double t) { return 1.0 + a / eps * rho.deriv(t / eps); };
        double t = invert_monotone(lam, lamp, tp, -eps, eps / 2.0 + 1e-12);
        double rr = chart->radius_from_collar_disk(t, th);
        return {q[0] * rr / r, q[1] * rr / r};
    }
};

InteriorShift make_interior_shift(const TubularChart& chart,
                                  const std::vector<double>& sigma_dagger) {
    InteriorShift sh;
    sh.chart = &chart;
    if (!chart.has_boundary()) return sh;
    sh.trivial = false;
    if (chart.f0.grid->manifold.kind == ManifoldKind::Interval01) {
        sh.sig0 = sigma_dagger[0];
        sh.sig1 = sigma_dagger[1];
        sh.length = chart.total_length();
        sh.slope = (sh.length + sh.sig1 - sh.sig0) / sh.length;
        require(sh.slope > 0.0, ErrorCode::SectionOutOfRange,
                "boundary sections collapse the interval");
        return sh;
    }
    sh.disk = boundary_shift_map(sigma_dagger, chart);
    sh.disk_section = boundary_interp(chart.f0.grid, sh.disk.section);
    return sh;
}

// The projection map psi-tilde: extended base parameters of every node image,
// with exact derivatives in the 1-D case.
struct ProjectedMap {
    std::vector<double> params;  // n * pd (extended)
    std::vector<double> derivs;  // n (1-D only)
    std::vector<double> sigma_dagger;
};

ProjectedMap project_embedding(const Embedding& f, const TubularChart& chart) {
    require(same_grid(f.grid, chart.f0.grid), ErrorCode::GridMismatch,
            "embedding and chart base live on different grids");
    require(f.m() == chart.f0.m(), ErrorCode::DimensionMismatch,
            "embedding and chart base ambient dimensions differ");
    const Embedding& f0 = chart.f0;
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    ProjectedMap out;
    out.params.resize(n * f.grid->param_dim);
    if (k == 1) out.derivs.resize(n);
    std::vector<double> J0(static_cast<std::size_t>(k) * m), Jf(static_cast<std::size_t>(k) * m),
        S0(static_cast<std::size_t>(3) * m);
    for (std::size_t i = 0; i < n; ++i) {
        auto res = closest_point_project(f.point(i), chart, true);
        if (f.grid->param_dim == 1) {
            out.params[i] = res.param[0];
            // Implicit derivative of the projection along the node image.
            f0.jacobian(res.param, J0.data());
            f0.second_derivs(res.param, S0.data());
            f.node_jacobian(i, Jf.data());
            double num = 0.0, jj = 0.0, rs = 0.0;
            double F0[3];
            f0.eval(res.param, F0);
            for (int r = 0; r < m; ++r) {
                num += J0[r] * Jf[r];
                jj += J0[r] * J0[r];
                rs += (f.point(i)[r] - F0[r]) * S0[r];
            }
            out.derivs[i] = num / (jj - rs);
        } else {
            out.params[2 * i] = res.param[0];
            out.params[2 * i + 1] = res.param[1];
        }
    }
    if (f.grid->manifold.kind == ManifoldKind::Circle) {
        for (std::size_t i = 1; i < n; ++i) {
            while (out.params[i] - out.params[i - 1] > std::numbers::pi)
                out.params[i] -= kTwoPi;
            while (out.params[i] - out.params[i - 1] < -std::numbers::pi)
                out.params[i] += kTwoPi;
        }
    }
    // Boundary trace -> sigma_dagger (public convention), and the collar
    // containment check.
    if (chart.has_boundary()) {
        if (f.grid->manifold.kind == ManifoldKind::Interval01) {
            out.sigma_dagger.resize(2);
            for (int e = 0; e < 2; ++e) {
                double p = e == 0 ? out.params.front() : out.params.back();
                double that = chart.collar_coord_1d(p, e);
                require(std::fabs(that) < chart.eps / 2.0, ErrorCode::NotInChartDomain,
                        "boundary trace escapes the collar");
                out.sigma_dagger[e] = chart.dagger_coordinate_sign[e] * that;
            }
        } else {
            std::size_t nb = f.grid->boundary_count();
            std::vector<double> ang(nb), tv(nb);
            for (std::size_t b = 0; b < nb; ++b) {
                std::size_t bi = f.grid->boundary_nodes[b];
                double px = out.params[2 * bi], py = out.params[2 * bi + 1];
                double r = std::hypot(px, py);
                double th = std::atan2(py, px);
                if (th < 0) th += kTwoPi;
                double that = chart.collar_coord_disk(r, th);
                require(std::fabs(that) < chart.eps / 2.0, ErrorCode::NotInChartDomain,
                        "boundary trace escapes the collar");
                ang[b] = th;
                tv[b] = that;
            }
            auto angles = chart.f0.grid->boundary_angles();
            out.sigma_dagger.resize(angles.size());
            for (std::size_t b = 0; b < angles.size(); ++b) {
                out.sigma_dagger[b] = periodic_scattered_eval(ang, tv, angles[b]);
                require(std::fabs(out.sigma_dagger[b]) < chart.eps / 2.0,
                        ErrorCode::NotInChartDomain, "interpolated boundary section too large");
            }
        }
    }
    return out;
}

void check_fold_1d(const ProjectedMap& pm) {
    int sgn = 0;
    for (double d : pm.derivs) {
        int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
        require(s != 0, ErrorCode::NotInChartDomain, "projection derivative vanishes (fold)");
        if (sgn == 0) sgn = s;
        require(s == sgn, ErrorCode::NotInChartDomain, "projection folds over the base");
    }
}

// Orthogonal alignment of the normal frame at s (base) with the frame at the
// shifted parameter sp; writes the target frame and the (m-k)^2 rotation.
void transport_frames_at(const TubularChart& chart, const Param& s, const Param& sp, double* Ep,
                         double* Q) {
    const int m = chart.f0.m(), c = chart.codim();
    if (c == 0) return;
    double E[6];
    chart.frame_at(s, E);
    chart.frame_at(sp, Ep);
    if (c == 1) {
        double d = 0.0;
        for (int r = 0; r < m; ++r) d += Ep[r] * E[r];
        require(std::fabs(d) > 0.2, ErrorCode::DegenerateNormalSpace,
                "normal spaces nearly orthogonal");
        Q[0] = d > 0 ? 1.0 : -1.0;
        return;
    }
    Eigen::Matrix2d M;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += Ep[a * m + r] * E[b * m + r];
            M(a, b) = acc;
        }
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    require(svd.singularValues()(1) > 0.2, ErrorCode::DegenerateNormalSpace,
            "normal spaces nearly orthogonal");
    Eigen::Matrix2d R = svd.matrixU() * svd.matrixV().transpose();
    Q[0] = R(0, 0);
    Q[1] = R(0, 1);
    Q[2] = R(1, 0);
    Q[3] = R(1, 1);
}

}  // namespace

SectionPair SectionPair::zero(const TubularChart& chart) {
    SectionPair s;
    s.sigma_dagger.assign(chart.f0.grid->boundary_count(), 0.0);
    s.sigma.assign(chart.f0.size() * static_cast<std::size_t>(chart.codim()), 0.0);
    return s;
}

void validate_sections(const SectionPair& s, const TubularChart& chart) {
    const std::size_t nb = chart.f0.grid->boundary_count();
    const std::size_t n = chart.f0.size();
    const int c = chart.codim();
    require(s.sigma_dagger.size() == nb, ErrorCode::GridMismatch,
            "sigma_dagger size does not match the boundary");
    require(s.sigma.size() == n * static_cast<std::size_t>(c), ErrorCode::GridMismatch,
            "sigma size does not match grid x codimension");
    for (double v : s.sigma_dagger) {
        require(std::fabs(v) < chart.eps / 2.0, ErrorCode::SectionOutOfRange,
                "|sigma_dagger| must stay below eps/2");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double nrm = 0.0;
        for (int d = 0; d < c; ++d) nrm += s.sigma[i * c + d] * s.sigma[i * c + d];
        require(std::sqrt(nrm) < chart.delta, ErrorCode::SectionOutOfRange,
                "|sigma| must stay below delta");
    }
}

DiffeoS reparam_to_normal(const Embedding& f, const TubularChart& chart) {
    auto pm = project_embedding(f, chart);
    const auto kind = f.grid->manifold.kind;
    std::size_t n = f.size();
    try {
        if (kind == ManifoldKind::Circle) {
            check_fold_1d(pm);
            return DiffeoS::from_values(f.grid, pm.params, pm.derivs);
        }
        if (kind == ManifoldKind::Interval01) {
            check_fold_1d(pm);
            auto sh = make_interior_shift(chart, pm.sigma_dagger);
            std::vector<double> vals(n), ders(n);
            for (std::size_t i = 0; i < n; ++i) {
                vals[i] = sh.inverse1(pm.params[i]);
                ders[i] = pm.derivs[i] / sh.deriv1(vals[i]);
            }
            vals.front() = 0.0;
            vals.back() = 1.0;
            return DiffeoS::from_values(f.grid, std::move(vals), std::move(ders));
        }
        // Disk.
        auto sh = make_interior_shift(chart, pm.sigma_dagger);
        std::vector<double> vals(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            Param q = sh.disk_inverse({pm.params[2 * i], pm.params[2 * i + 1]});
            vals[2 * i] = q[0];
            vals[2 * i + 1] = q[1];
        }
        return DiffeoS::from_values(f.grid, std::move(vals));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotADiffeo) {
            fail(ErrorCode::NotInChartDomain, "projection does not reparametrize to a diffeo");
        }
        throw;
    }
}

Embedding normal_embedding(const Embedding& f, const TubularChart& chart) {
    DiffeoS psi = reparam_to_normal(f, chart);
    return compose_reparam(f, psi.inverse());
}

Embedding normal_embedding_from_sections(const SectionPair& sections, const TubularChart& chart) {
    validate_sections(sections, chart);
    const Embedding& f0 = chart.f0;
    const int m = f0.m(), c = chart.codim();
    std::size_t n = f0.size();
    auto sh = make_interior_shift(chart, sections.sigma_dagger);
    std::vector<double> vals(n * m);
    double Ep[6], Q[4];
    for (std::size_t i = 0; i < n; ++i) {
        Param s = f0.grid->node(i);
        Param sp = s;
        if (!sh.trivial) {
            if (f0.grid->param_dim == 1) {
                sp[0] = sh.eval1(s[0]);
            } else {
                sp = sh.disk_target(i);
            }
        }
        double* out = vals.data() + i * m;
        f0.eval(sp, out);
        if (c > 0) {
            transport_frames_at(chart, s, sp, Ep, Q);
            // sigma coordinates transported by Q into the target frame.
            double tc[2] = {0.0, 0.0};
            for (int a = 0; a < c; ++a)
                for (int b = 0; b < c; ++b) tc[a] += Q[a * c + b] * sections.sigma[i * c + b];
            for (int a = 0; a < c; ++a)
                for (int r = 0; r < m; ++r) out[r] += tc[a] * Ep[a * m + r];
        }
    }
    return Embedding::from_nodes(f0.grid, m, std::move(vals));
}

SectionPair chart_forward(const GrassPoint& N, const TubularChart& chart) {
    const Embedding& f = N.representative;
    const Embedding& f0 = chart.f0;
    const int m = f0.m(), k = f0.k(), c = chart.codim();
    std::size_t n = f0.size();
    auto pm = project_embedding(f, chart);
    if (k == 1) check_fold_1d(pm);
    auto sh = make_interior_shift(chart, pm.sigma_dagger);

    SectionPair out;
    out.sigma_dagger = pm.sigma_dagger;
    out.sigma.assign(n * static_cast<std::size_t>(c), 0.0);

    // Invert psi-tilde at the shifted parameters: find the f-parameter whose
    // projection is exactly the shifted base point, then read the normal
    // offset through the inverse frame transport.
    Interp1D psi_interp;
    if (k == 1) {
        bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
        std::vector<double> pv = pm.params, pd = pm.derivs;
        if (circle) {
            for (std::size_t i = 0; i < n; ++i) pv[i] -= f.grid->nodes[i];
            for (std::size_t i = 0; i < n; ++i) pd[i] -= 1.0;
        }
        psi_interp = Interp1D::hermite(0.0, f.grid->spacing, std::move(pv), std::move(pd),
                                       circle ? Interp1D::Closure::Periodic
                                              : Interp1D::Closure::NotAKnot);
    }
    std::vector<double> J0(static_cast<std::size_t>(k) * m), Jf(static_cast<std::size_t>(k) * m);
    double Ep[6], Q[4];
    for (std::size_t i = 0; i < n; ++i) {
        Param s = f0.grid->node(i);
        Param sp = s;
        Param u = s;
        if (f0.grid->param_dim == 1) {
            bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
            if (!sh.trivial) sp[0] = sh.eval1(s[0]);
            if (circle) {
                auto fn = [&](double x) { return x + psi_interp.eval(x); };
                auto fp = [&](double x) { return 1.0 + psi_interp.deriv(x); };
                u[0] = invert_monotone(fn, fp, sp[0], s[0] - std::numbers::pi,
                                       s[0] + std::numbers::pi);
            } else {
                auto fn = [&](double x) { return psi_interp.eval(x); };
                auto fp = [&](double x) { return psi_interp.deriv(x); };
                u[0] = invert_monotone(fn, fp, sp[0], 0.0, 1.0);
            }
        } else {
            sp = sh.trivial ? s : sh.disk_target(i);
            // Seed: the f-node whose projection is nearest to sp.
            double best = 1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double dx = pm.params[2 * j] - sp[0], dy = pm.params[2 * j + 1] - sp[1];
                double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    u = f.grid->node(j);
                }
            }
        }
        // Newton polish on the fiber condition J0(sp)^T (f(u) - f0(sp)) = 0.
        f0.jacobian(sp, J0.data());
        double F0[3];
        f0.eval(sp, F0);
        for (int iter = 0; iter < 30; ++iter) {
            double Fu[3];
            f.eval(u, Fu);
            f.jacobian(u, Jf.data());
            if (k == 1) {
                double g = 0.0, H = 0.0;
                for (int r = 0; r < m; ++r) {
                    g += J0[r] * (Fu[r] - F0[r]);
                    H += J0[r] * Jf[r];
                }
                if (std::fabs(H) < 1e-300) break;
                double step = -g / H;
                u[0] += std::clamp(step, -2.0 * f.grid->spacing, 2.0 * f.grid->spacing);
                if (std::fabs(step) < 1e-14) break;
            } else {
                double g0 = 0.0, g1 = 0.0, a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;
                for (int r = 0; r < m; ++r) {
                    g0 += J0[r] * (Fu[r] - F0[r]);
                    g1 += J0[m + r] * (Fu[r] - F0[r]);
                    a00 += J0[r] * Jf[r];
                    a01 += J0[r] * Jf[m + r];
                    a10 += J0[m + r] * Jf[r];
                    a11 += J0[m + r] * Jf[m + r];
                }
                double det = a00 * a11 - a01 * a10;
                if (std::fabs(det) < 1e-300) break;
                double d0 = -(a11 * g0 - a01 * g1) / det;
                double d1 = -(-a10 * g0 + a00 * g1) / det;
                u[0] += d0;
                u[1] += d1;
                double rr = std::hypot(u[0], u[1]);
                if (rr > 1.0) {
                    u[0] /= rr;
                    u[1] /= rr;
                }
                if (std::hypot(d0, d1) < 1e-14) break;
            }
        }
        if (c > 0) {
            double Fu[3];
            f.eval(u, Fu);
            transport_frames_at(chart, s, sp, Ep, Q);
            double cp[2] = {0.0, 0.0};
            for (int a = 0; a < c; ++a) {
                for (int r = 0; r < m; ++r) cp[a] += Ep[a * m + r] * (Fu[r] - F0[r]);
            }
            // sigma = Q^T * offset coordinates.
            for (int b = 0; b < c; ++b) {
                double acc = 0.0;
                for (int a = 0; a < c; ++a) acc += Q[a * c + b] * cp[a];
                out.sigma[i * c + b] = acc;
            }
        }
    }
    validate_sections(out, chart);
    return out;
}

GrassPoint chart_inverse(const SectionPair& sections, const TubularChart& chart) {
    GrassPoint N;
    N.representative = normal_embedding_from_sections(sections, chart);
    N.canonical = sections;
    return N;
}

SectionPair chart_change(const SectionPair& sections_i, const TubularChart& chart_i,
                         const TubularChart& chart_j) {
    GrassPoint N = chart_inverse(sections_i, chart_i);
    return chart_forward(N, chart_j);
}

bool grass_points_equal(const GrassPoint& a, const GrassPoint& b, double tol) {
    const Embedding& fa = a.representative;
    const Embedding& fb = b.representative;
    if (fa.m() != fb.m()) return false;
    if (fa.grid->manifold.kind != fb.grid->manifold.kind) return false;
    if (image_hausdorff(fa, fb) > tol) return false;
    if (fa.grid->manifold.has_boundary() && fa.grid->param_dim == 1) {
        // Boundary points must match as sets.
        const int m = fa.m();
        auto d = [&](const double* x, const double* y) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += (x[r] - y[r]) * (x[r] - y[r]);
            return std::sqrt(acc);
        };
        const double* a0 = fa.point(0);
        const double* a1 = fa.point(fa.size() - 1);
        const double* b0 = fb.point(0);
        const double* b1 = fb.point(fb.size() - 1);
        double same = std::max(d(a0, b0), d(a1, b1));
        double swapped = std::max(d(a0, b1), d(a1, b0));
        if (std::min(same, swapped) > tol) return false;
    }
    return true;
}

}  // namespace nlg
