#include "nlg/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlg/kernels.hpp"

namespace nlg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Solve the k x k Gram system G u = J^T v for the tangential parameter
// components of v.
void tangential_components(const double* J, int m, int k, const double* v, double* u) {
    if (k == 1) {
        double jj = 0.0, jv = 0.0;
        for (int r = 0; r < m; ++r) {
            jj += J[r] * J[r];
            jv += J[r] * v[r];
        }
        u[0] = jv / jj;
        return;
    }
    double a = 0.0, b = 0.0, c = 0.0, p = 0.0, q = 0.0;
    for (int r = 0; r < m; ++r) {
        a += J[r] * J[r];
        b += J[r] * J[m + r];
        c += J[m + r] * J[m + r];
        p += J[r] * v[r];
        q += J[m + r] * v[r];
    }
    double det = a * c - b * b;
    u[0] = (c * p - b * q) / det;
    u[1] = (a * q - b * p) / det;
}

double gram_det(const double* J, int m, int k) {
    if (k == 1) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += J[r] * J[r];
        return s;
    }
    double a = 0.0, b = 0.0, c = 0.0;
    for (int r = 0; r < m; ++r) {
        a += J[r] * J[r];
        b += J[r] * J[m + r];
        c += J[m + r] * J[m + r];
    }
    return a * c - b * b;
}

// Nodal derivative arrays of a per-node scalar field (1-D spline derivative
// or disk fit gradient).
std::vector<double> field_derivative_1d(const GridPtr& g, std::span<const double> vals) {
    auto sp = grid_interp(g, vals);
    std::vector<double> out(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) out[i] = sp.deriv(g->nodes[i]);
    return out;
}

// Jacobian of a tangent field's nodal data through the grid basis,
// column-major by parameter like Embedding::node_jacobian.
std::vector<double> field_jacobians(const Embedding& f, const TangentField& v) {
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    std::vector<double> out(n * static_cast<std::size_t>(k) * m);
    if (f.grid->param_dim == 1) {
        bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
        auto closure = circle ? Interp1D::Closure::Periodic : Interp1D::Closure::NotAKnot;
        for (int r = 0; r < m; ++r) {
            std::vector<double> comp(n);
            for (std::size_t i = 0; i < n; ++i) comp[i] = v.vectors[i * m + r];
            auto sp = Interp1D::spline(0.0, f.grid->spacing, std::move(comp), closure);
            for (std::size_t i = 0; i < n; ++i) out[i * m + r] = sp.deriv(f.grid->nodes[i]);
        }
        return out;
    }
    std::vector<double> comp(n);
    for (int r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < n; ++i) comp[i] = v.vectors[i * m + r];
        for (std::size_t i = 0; i < n; ++i) {
            auto gr = f.grid->fit_at_node(i, comp).grad();
            out[i * k * m + 0 * m + r] = gr[0];
            out[i * k * m + 1 * m + r] = gr[1];
        }
    }
    return out;
}

}  // namespace

double MeanCurvature::magnitude(std::size_t i) const {
    const int m = static_cast<int>(H.size() / base.representative.size());
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += H[i * m + r] * H[i * m + r];
    return std::sqrt(s);
}

// ============================================================================
// Projections
// ============================================================================

GrassPoint project_gr(const Embedding& f) {
    require_embedding(f);
    return {f, {}};
}

VolGrassPoint project_vol(const Embedding& f, const DensityForm& mu) {
    require_volume_form(mu, "mu");
    return {project_gr(f), pushforward_density(f, mu)};
}

// ============================================================================
// Trivializations and transitions
// ============================================================================

Trivialization trivialize(const Embedding& f, const TubularChart& chart) {
    DiffeoS psi = reparam_to_normal(f, chart);
    GrassPoint N;
    N.representative = compose_reparam(f, psi.inverse());
    return {std::move(N), std::move(psi)};
}

Embedding trivialize_inv(const GrassPoint& N, const DiffeoS& psi, const TubularChart& chart) {
    Embedding fperp = N.canonical ? normal_embedding_from_sections(*N.canonical, chart)
                                  : normal_embedding(N.representative, chart);
    return compose_reparam(fperp, psi);
}

VolTrivialization trivialize_vol(const Embedding& f, const DensityForm& mu,
                                 const TubularChart& chart) {
    DiffeoS psi = reparam_to_normal(f, chart);
    auto split = decompose_diffeo(psi, mu);
    return {project_vol(f, mu), split.phi_vol};
}

Embedding trivialize_vol_inv(const VolGrassPoint& vol_point, const DiffeoS& phi,
                             const DensityForm& mu, const TubularChart& chart) {
    // f = f_perp o B((f_perp)^* nu) o phi.
    const Embedding& frep = vol_point.nu.rep;
    DiffeoS psi_rep = reparam_to_normal(frep, chart);
    Embedding fperp = compose_reparam(frep, psi_rep.inverse());
    DensityForm pulled = pullback_by_diffeo(pullback_density(vol_point.nu), psi_rep.inverse());
    // Align the pullback's quadrature mass with mu before transporting.
    double scale = std::fabs(integrate(mu.grid, mu) / integrate(pulled.grid, pulled));
    for (double& v : pulled.values) v *= scale;
    MoserResult B = moser_map(mu, pulled);
    return compose_reparam(fperp, DiffeoS::compose(B.map, phi));
}

DiffeoS transition(const GrassPoint& N, const TubularChart& chart_i,
                   const TubularChart& chart_j) {
    Embedding fperp_j = normal_embedding(N.representative, chart_j);
    return reparam_to_normal(fperp_j, chart_i);
}

// ============================================================================
// Tangent-level maps
// ============================================================================

std::vector<double> dagger_frame(const Embedding& f) {
    require(f.grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "dagger frame needs a boundary");
    const int m = f.m(), k = f.k();
    std::size_t nb = f.grid->boundary_count();
    std::vector<double> out(nb * m);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    if (f.grid->manifold.kind == ManifoldKind::Interval01) {
        for (int e = 0; e < 2; ++e) {
            std::size_t b = f.grid->boundary_nodes[e];
            f.node_jacobian(b, J.data());
            double nrm = 0.0;
            for (int r = 0; r < m; ++r) nrm += J[r] * J[r];
            nrm = std::sqrt(nrm);
            double sgn = e == 0 ? -1.0 : 1.0;
            for (int r = 0; r < m; ++r) out[e * m + r] = sgn * J[r] / nrm;
        }
        return out;
    }
    // Disk: outward part of the radial image direction, orthogonal to the
    // boundary tangent.
    auto angles = f.grid->boundary_angles();
    for (std::size_t bidx = 0; bidx < nb; ++bidx) {
        std::size_t b = f.grid->boundary_nodes[bidx];
        f.node_jacobian(b, J.data());
        double th = angles[bidx];
        double tang[3], rad[3];
        for (int r = 0; r < m; ++r) {
            tang[r] = -J[r] * std::sin(th) + J[m + r] * std::cos(th);
            rad[r] = J[r] * std::cos(th) + J[m + r] * std::sin(th);
        }
        double tn2 = 0.0, d = 0.0;
        for (int r = 0; r < m; ++r) tn2 += tang[r] * tang[r];
        for (int r = 0; r < m; ++r) d += rad[r] * tang[r];
        double nrm = 0.0;
        for (int r = 0; r < m; ++r) {
            rad[r] -= d / tn2 * tang[r];
            nrm += rad[r] * rad[r];
        }
        nrm = std::sqrt(nrm);
        for (int r = 0; r < m; ++r) out[bidx * m + r] = rad[r] / nrm;
    }
    return out;
}

TangentGrVector tangent_project_gr(const Embedding& f, const TangentField& v) {
    require(same_grid(f.grid, v.base.grid), ErrorCode::GridMismatch,
            "tangent field lives on a different grid");
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    TangentGrVector out;
    out.w_perp.assign(n * m, 0.0);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    if (m > k) {
        double u[2];
        for (std::size_t i = 0; i < n; ++i) {
            f.node_jacobian(i, J.data());
            tangential_components(J.data(), m, k, v.vectors.data() + i * m, u);
            for (int r = 0; r < m; ++r) {
                double t = 0.0;
                for (int a = 0; a < k; ++a) t += J[a * m + r] * u[a];
                out.w_perp[i * m + r] = v.vectors[i * m + r] - t;
            }
        }
    }
    if (f.grid->manifold.has_boundary()) {
        auto dag = dagger_frame(f);
        std::size_t nb = f.grid->boundary_count();
        out.w_dagger.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            std::size_t bi = f.grid->boundary_nodes[b];
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += v.vectors[bi * m + r] * dag[b * m + r];
            out.w_dagger[b] = acc;
        }
    }
    return out;
}

std::vector<double> nu_boundary(const Embedding& f, const DensityForm& mu) {
    require(f.grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "boundary density needs a boundary");
    const int m = f.m(), k = f.k();
    auto dag = dagger_frame(f);
    std::size_t nb = f.grid->boundary_count();
    std::vector<double> out(nb);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    double np[2];
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t bi = f.grid->boundary_nodes[b];
        f.node_jacobian(bi, J.data());
        tangential_components(J.data(), m, k, dag.data() + b * m, np);
        if (k == 1) {
            out[b] = mu.values[bi] * np[0];
        } else {
            // Pull i_n(mu dx dy) back to the boundary circle: the dtheta
            // coefficient is mu * (n_param . rhat).
            auto angles = f.grid->boundary_angles();
            double th = angles[b];
            out[b] = mu.values[bi] * (np[0] * std::cos(th) + np[1] * std::sin(th));
        }
    }
    return out;
}

std::vector<double> alpha_boundary_trace(const Embedding& f, const std::vector<double>& alpha) {
    require(f.grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "boundary trace needs a boundary");
    std::size_t nb = f.grid->boundary_count();
    std::vector<double> out(nb);
    if (f.k() == 1) {
        for (std::size_t b = 0; b < nb; ++b) out[b] = alpha[f.grid->boundary_nodes[b]];
        return out;
    }
    auto angles = f.grid->boundary_angles();
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t bi = f.grid->boundary_nodes[b];
        double th = angles[b];
        out[b] = -alpha[2 * bi] * std::sin(th) + alpha[2 * bi + 1] * std::cos(th);
    }
    return out;
}

TangentVolGrVector tangent_project_vol(const Embedding& f, const DensityForm& mu,
                                       const TangentField& v) {
    require_volume_form(mu, "mu");
    require(same_grid(f.grid, mu.grid), ErrorCode::GridMismatch, "mu lives on a different grid");
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    TangentVolGrVector out;
    auto gr = tangent_project_gr(f, v);
    out.w_dagger = std::move(gr.w_dagger);
    out.w_perp = std::move(gr.w_perp);

    // Tangential parameter components u with i_{v_top} nu pulled back to
    // alpha = mu * u contracted into the reference volume.
    std::vector<double> u(n * k);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        tangential_components(J.data(), m, k, v.vectors.data() + i * m, u.data() + i * k);
    }
    if (k == 1) {
        out.alpha.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.alpha[i] = mu.values[i] * u[i];
        out.d_alpha = DensityForm::top(f.grid, field_derivative_1d(f.grid, out.alpha));
    } else {
        out.alpha.resize(2 * n);
        std::vector<double> mx(n), my(n);
        for (std::size_t i = 0; i < n; ++i) {
            mx[i] = mu.values[i] * u[2 * i];      // mu u1
            my[i] = mu.values[i] * u[2 * i + 1];  // mu u2
            out.alpha[2 * i] = -my[i];            // alpha = -mu u2 dx + mu u1 dy
            out.alpha[2 * i + 1] = mx[i];
        }
        std::vector<double> div(n);
        for (std::size_t i = 0; i < n; ++i) {
            div[i] = f.grid->fit_at_node(i, mx).grad()[0] + f.grid->fit_at_node(i, my).grad()[1];
        }
        out.d_alpha = DensityForm::top(f.grid, std::move(div));
    }
    return out;
}

double vol_compat_residual(const Embedding& f, const DensityForm& mu,
                           const TangentVolGrVector& w) {
    if (!f.grid->manifold.has_boundary()) return 0.0;
    auto nb = nu_boundary(f, mu);
    auto tr = alpha_boundary_trace(f, w.alpha);
    double worst = 0.0;
    for (std::size_t b = 0; b < nb.size(); ++b) {
        worst = std::max(worst, std::fabs(w.w_dagger[b] * nb[b] - tr[b]));
    }
    return worst;
}

bool vol_tangent_equal(const TangentVolGrVector& a, const TangentVolGrVector& b, double tol) {
    if (a.w_dagger.size() != b.w_dagger.size() || a.w_perp.size() != b.w_perp.size() ||
        a.d_alpha.values.size() != b.d_alpha.values.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.w_dagger.size(); ++i) {
        if (std::fabs(a.w_dagger[i] - b.w_dagger[i]) > tol) return false;
    }
    for (std::size_t i = 0; i < a.d_alpha.values.size(); ++i) {
        if (std::fabs(a.d_alpha.values[i] - b.d_alpha.values[i]) > tol) return false;
    }
    for (std::size_t i = 0; i < a.w_perp.size(); ++i) {
        if (std::fabs(a.w_perp[i] - b.w_perp[i]) > tol) return false;
    }
    return true;
}

// ============================================================================
// Volume functional and its first variation
// ============================================================================

double vol_functional(const Embedding& f, DvolCase which, const AmbientDensity& mu_M) {
    const int m = f.m(), k = f.k();
    if (which == DvolCase::Codim0) {
        require(k == m, ErrorCode::DimensionMismatch, "codim-0 volume needs dim S = dim M");
        return integrate(f.grid, pullback_volume(f, mu_M));
    }
    require(k < m, ErrorCode::DimensionMismatch, "positive-codim volume needs dim S < dim M");
    return integrate(f.grid, induced_volume(f));
}

Embedding embedding_line(const Embedding& f, const TangentField& v, double t) {
    std::vector<double> vals = f.values;
    kernels::axpy(t, v.vectors, vals);
    if (f.basis == Basis::NodalHermite) {
        auto vder = field_jacobians(f, v);
        std::vector<double> ders = f.derivs;
        kernels::axpy(t, vder, ders);
        return Embedding::from_nodes(f.grid, f.ambient_dim, std::move(vals), std::move(ders));
    }
    return Embedding::from_nodes(f.grid, f.ambient_dim, std::move(vals));
}

double dvol_embedding(const Embedding& f, const TangentField& v, DvolCase which,
                      const AmbientDensity& mu_M) {
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    auto vjac = field_jacobians(f, v);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    double acc = 0.0;
    if (which == DvolCase::Codim0) {
        require(k == m, ErrorCode::DimensionMismatch, "codim-0 case needs dim S = dim M");
        std::vector<double> g(m);
        for (std::size_t i = 0; i < n; ++i) {
            f.node_jacobian(i, J.data());
            const double* B = vjac.data() + i * k * m;
            double det, trJinvB;
            if (m == 1) {
                det = J[0];
                trJinvB = B[0] / J[0];
            } else {
                det = J[0] * J[3] - J[1] * J[2];
                trJinvB = (J[3] * B[0] - J[1] * B[2] - J[2] * B[1] + J[0] * B[3]) / det;
            }
            std::span<const double> x(f.point(i), m);
            double mval = mu_M.eval(x);
            mu_M.grad(x, g);
            double gv = 0.0;
            for (int r = 0; r < m; ++r) gv += g[r] * v.vectors[i * m + r];
            acc += f.grid->quad_weights[i] * det * (mval * trJinvB + gv);
        }
        return acc;
    }
    require(k < m, ErrorCode::DimensionMismatch, "positive-codim case needs dim S < dim M");
    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        const double* B = vjac.data() + i * k * m;
        double root = std::sqrt(gram_det(J.data(), m, k));
        // d sqrt(det G) = sqrt(det G) tr(G^{-1} J^T B).
        double tr = 0.0;
        if (k == 1) {
            double jj = 0.0, jb = 0.0;
            for (int r = 0; r < m; ++r) {
                jj += J[r] * J[r];
                jb += J[r] * B[r];
            }
            tr = jb / jj;
        } else {
            double a = 0.0, b = 0.0, c = 0.0;
            double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
            for (int r = 0; r < m; ++r) {
                a += J[r] * J[r];
                b += J[r] * J[m + r];
                c += J[m + r] * J[m + r];
                p00 += J[r] * B[r];
                p01 += J[r] * B[m + r];
                p10 += J[m + r] * B[r];
                p11 += J[m + r] * B[m + r];
            }
            double det = a * c - b * b;
            // G^{-1} = [c, -b; -b, a] / det, tr(G^{-1} P).
            tr = (c * p00 - b * p10 - b * p01 + a * p11) / det;
        }
        acc += f.grid->quad_weights[i] * root * tr;
    }
    return acc;
}

// ============================================================================
// Mean curvature
// ============================================================================

MeanCurvature mean_curvature(const GrassPoint& N) {
    const Embedding& f = N.representative;
    const int m = f.m(), k = f.k();
    require(k < m, ErrorCode::DimensionMismatch, "mean curvature needs positive codimension");
    std::size_t n = f.size();
    MeanCurvature out{N, std::vector<double>(n * m, 0.0)};
    std::vector<double> J(static_cast<std::size_t>(k) * m);

    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        // Orthonormal tangent basis by Gram-Schmidt on the Jacobian columns.
        double T[6];
        double n1 = 0.0;
        for (int r = 0; r < m; ++r) n1 += J[r] * J[r];
        n1 = std::sqrt(n1);
        for (int r = 0; r < m; ++r) T[r] = J[r] / n1;
        if (k == 2) {
            double d = 0.0;
            for (int r = 0; r < m; ++r) d += J[m + r] * T[r];
            double n2 = 0.0;
            for (int r = 0; r < m; ++r) {
                T[m + r] = J[m + r] - d * T[r];
                n2 += T[m + r] * T[m + r];
            }
            n2 = std::sqrt(n2);
            for (int r = 0; r < m; ++r) T[m + r] /= n2;
        }
        // Local normal frame (orientation-free; H is frame-even).
        double E[6];
        {
            // Complete the tangent basis. For m-k==1 take the cross/rot90;
            // for m==3, k==1 build two vectors.
            if (m == 2 && k == 1) {
                E[0] = -T[1];
                E[1] = T[0];
            } else if (m == 3 && k == 2) {
                E[0] = T[1] * T[5] - T[2] * T[4];
                E[1] = T[2] * T[3] - T[0] * T[5];
                E[2] = T[0] * T[4] - T[1] * T[3];
            } else {
                int axis = 0;
                double best = std::fabs(T[0]);
                for (int r = 1; r < 3; ++r)
                    if (std::fabs(T[r]) < best) {
                        best = std::fabs(T[r]);
                        axis = r;
                    }
                double e1[3] = {0, 0, 0};
                e1[axis] = 1.0;
                double d = 0.0;
                for (int r = 0; r < 3; ++r) d += e1[r] * T[r];
                double nn = 0.0;
                for (int r = 0; r < 3; ++r) {
                    e1[r] -= d * T[r];
                    nn += e1[r] * e1[r];
                }
                nn = std::sqrt(nn);
                for (int r = 0; r < 3; ++r) E[r] = e1[r] / nn;
                E[3] = T[1] * E[2] - T[2] * E[1];
                E[4] = T[2] * E[0] - T[0] * E[2];
                E[5] = T[0] * E[1] - T[1] * E[0];
            }
        }
        const int c = m - k;

        // Stencil: two rings of grid neighbors.
        std::vector<std::size_t> sten;
        if (f.grid->param_dim == 2) {
            sten = f.grid->node_stencil(i).indices;
        } else {
            long nn = static_cast<long>(n);
            bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
            if (circle) {
                for (long dd = -2; dd <= 2; ++dd) {
                    sten.push_back(static_cast<std::size_t>(((static_cast<long>(i) + dd) % nn +
                                                             nn) % nn));
                }
            } else {
                // Shift the five-point window inward at the ends so the
                // stencil keeps five distinct nodes.
                long w = std::min<long>(5, nn);
                long base = std::clamp(static_cast<long>(i) - 2, 0l, nn - w);
                for (long j = base; j < base + w; ++j) {
                    sten.push_back(static_cast<std::size_t>(j));
                }
            }
            std::sort(sten.begin(), sten.end());
            sten.erase(std::unique(sten.begin(), sten.end()), sten.end());
        }
        require(sten.size() >= (k == 1 ? 4u : 7u), ErrorCode::FitFailure,
                "curvature stencil too small");

        // Fit each normal graph component as a quadratic over the tangent
        // coordinates and assemble trace(g^{-1} II).
        std::size_t sn = sten.size();
        if (k == 1) {
            // eta ~= c0 + b xi + a/2 xi^2 per normal direction.
            double S0 = 0, S1 = 0, S2 = 0, S3 = 0, S4 = 0;
            std::vector<double> xi(sn);
            for (std::size_t s = 0; s < sn; ++s) {
                double dx[3];
                for (int r = 0; r < m; ++r) dx[r] = f.point(sten[s])[r] - f.point(i)[r];
                double x = 0.0;
                for (int r = 0; r < m; ++r) x += T[r] * dx[r];
                xi[s] = x;
                double x2 = x * x;
                S0 += 1;
                S1 += x;
                S2 += x2;
                S3 += x2 * x;
                S4 += x2 * x2;
            }
            // Normal-direction fits share the 3x3 system.
            double M[9] = {S0, S1, S2 / 2, S1, S2, S3 / 2, S2, S3, S4 / 2};
            double det = M[0] * (M[4] * M[8] - M[5] * M[7]) - M[1] * (M[3] * M[8] - M[5] * M[6]) +
                         M[2] * (M[3] * M[7] - M[4] * M[6]);
            require(std::fabs(det) > 1e-18, ErrorCode::FitFailure, "degenerate curvature stencil");
            double bcoef[2] = {0, 0}, acoef[2] = {0, 0};
            for (int cc = 0; cc < c; ++cc) {
                double r0 = 0, r1 = 0, r2 = 0;
                for (std::size_t s = 0; s < sn; ++s) {
                    double dx[3], eta = 0.0;
                    for (int r = 0; r < m; ++r) dx[r] = f.point(sten[s])[r] - f.point(i)[r];
                    for (int r = 0; r < m; ++r) eta += E[cc * m + r] * dx[r];
                    r0 += eta;
                    r1 += eta * xi[s];
                    r2 += eta * xi[s] * xi[s];
                }
                // Cramer solve of M [c0 b a]^T = [r0 r1 r2]^T.
                auto det3 = [&](int col, double q0, double q1, double q2) {
                    double A[9];
                    std::copy_n(M, 9, A);
                    A[col] = q0;
                    A[col + 3] = q1;
                    A[col + 6] = q2;
                    return A[0] * (A[4] * A[8] - A[5] * A[7]) -
                           A[1] * (A[3] * A[8] - A[5] * A[6]) +
                           A[2] * (A[3] * A[7] - A[4] * A[6]);
                };
                bcoef[cc] = det3(1, r0, r1, r2) / det;
                acoef[cc] = det3(2, r0, r1, r2) / det;
            }
            // Curvature vector of the graph xi -> (xi, eta(xi)).
            double speed2 = 1.0;
            for (int cc = 0; cc < c; ++cc) speed2 += bcoef[cc] * bcoef[cc];
            // kappa = P_N r'' / |r'|^2 with r'' = (0, a).
            double rp[3] = {1.0, bcoef[0], c > 1 ? bcoef[1] : 0.0};
            double rpp[3] = {0.0, acoef[0], c > 1 ? acoef[1] : 0.0};
            double dotp = 0.0;
            for (int r = 0; r < 3; ++r) dotp += rp[r] * rpp[r];
            double kvec[3];
            for (int r = 0; r < 3; ++r) kvec[r] = (rpp[r] - dotp * rp[r] / speed2) / speed2;
            // Back to ambient coordinates: basis (T, E_0, E_1).
            for (int r = 0; r < m; ++r) {
                double h = kvec[0] * T[r] + kvec[1] * E[r];
                if (c > 1) h += kvec[2] * E[m + r];
                out.H[i * m + r] = h;
            }
        } else {
            // k == 2, c == 1: quadratic fit eta(xi1, xi2), six coefficients.
            std::vector<double> pts(2 * sn), vals(sn);
            for (std::size_t s = 0; s < sn; ++s) {
                double dx[3];
                for (int r = 0; r < m; ++r) dx[r] = f.point(sten[s])[r] - f.point(i)[r];
                double x1 = 0.0, x2 = 0.0, eta = 0.0;
                for (int r = 0; r < m; ++r) {
                    x1 += T[r] * dx[r];
                    x2 += T[m + r] * dx[r];
                    eta += E[r] * dx[r];
                }
                pts[2 * s] = x1;
                pts[2 * s + 1] = x2;
                vals[s] = eta;
            }
            Fit2D fit = fit_scattered({0.0, 0.0}, pts, vals, 2);
            auto gradb = fit.grad();
            auto A = fit.hess();
            // Graph second fundamental form: II = A / sqrt(1+|b|^2), metric
            // g = I + b b^T; mean curvature vector = tr(g^{-1} II) * unit
            // normal of the graph.
            double b1 = gradb[0], b2 = gradb[1];
            double w2 = 1.0 + b1 * b1 + b2 * b2;
            double g11 = 1 + b1 * b1, g12 = b1 * b2, g22 = 1 + b2 * b2;
            double detg = g11 * g22 - g12 * g12;
            double trace =
                (g22 * A[0] - 2.0 * g12 * A[1] + g11 * A[2]) / detg / std::sqrt(w2);
            // Unit normal of the graph in the (T1, T2, E) frame: (-b, 1)/w.
            double nf[3] = {-b1 / std::sqrt(w2), -b2 / std::sqrt(w2), 1.0 / std::sqrt(w2)};
            for (int r = 0; r < m; ++r) {
                out.H[i * m + r] =
                    trace * (nf[0] * T[r] + nf[1] * T[m + r] + nf[2] * E[r]);
            }
        }
    }
    return out;
}

// ============================================================================
// Membership predicates
// ============================================================================

namespace {

// Boundary flux of v through the ambient density (codim 0) or through the
// induced boundary volume (positive codim).
double boundary_flux(const Embedding& f, const TangentField& v, bool codim0,
                     const AmbientDensity& mu_M) {
    if (!f.grid->manifold.has_boundary()) return 0.0;
    const int m = f.m(), k = f.k();
    auto dag = dagger_frame(f);
    std::size_t nb = f.grid->boundary_count();
    double acc = 0.0;
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t bi = f.grid->boundary_nodes[b];
        double gvn = 0.0;
        for (int r = 0; r < m; ++r) gvn += v.vectors[bi * m + r] * dag[b * m + r];
        double area = 1.0;  // counting measure on interval endpoints
        if (f.grid->manifold.kind == ManifoldKind::ClosedDisk) {
            // Boundary line element: |d f / d theta|.
            f.node_jacobian(bi, J.data());
            auto angles = f.grid->boundary_angles();
            double th = angles[b];
            double tang[3];
            double nr = 0.0;
            for (int r = 0; r < m; ++r) {
                tang[r] = -J[r] * std::sin(th) + J[m + r] * std::cos(th);
                nr += tang[r] * tang[r];
            }
            area = std::sqrt(nr) * f.grid->boundary_quad_weights[b];
        }
        double mval = codim0 ? mu_M.eval(std::span<const double>(f.point(bi), m)) : 1.0;
        acc += gvn * mval * area;
    }
    return acc;
}

}  // namespace

MembershipResult membership(const Embedding& f, const DensityForm* mu, const TangentField& v,
                            MembershipKind which, const AmbientDensity& mu_M, double tolerance) {
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    MembershipResult res;
    res.tolerance = tolerance;
    switch (which) {
        case MembershipKind::Emb0: {
            if (k == m) {
                res.residual = std::fabs(boundary_flux(f, v, true, mu_M));
            } else {
                auto H = mean_curvature({f, {}});
                double pair = 0.0;
                auto ind = induced_volume(f);
                for (std::size_t i = 0; i < n; ++i) {
                    double gHv = 0.0;
                    for (int r = 0; r < m; ++r) gHv += H.H[i * m + r] * v.vectors[i * m + r];
                    pair += f.grid->quad_weights[i] * ind.values[i] * gHv;
                }
                res.residual = std::fabs(boundary_flux(f, v, false, mu_M) - pair);
            }
            break;
        }
        case MembershipKind::EmbVol: {
            auto vjac = field_jacobians(f, v);
            std::vector<double> J(static_cast<std::size_t>(k) * m);
            double worst = 0.0;
            if (k == m) {
                // div_{mu_M}(v o f^{-1}) = tr(Jv J^{-1}) + grad(m) . v / m.
                std::vector<double> g(m);
                for (std::size_t i = 0; i < n; ++i) {
                    f.node_jacobian(i, J.data());
                    const double* B = vjac.data() + i * k * m;
                    double div;
                    if (m == 1) {
                        div = B[0] / J[0];
                    } else {
                        double det = J[0] * J[3] - J[1] * J[2];
                        div = (J[3] * B[0] - J[1] * B[2] - J[2] * B[1] + J[0] * B[3]) / det;
                    }
                    std::span<const double> x(f.point(i), m);
                    double mval = mu_M.eval(x);
                    mu_M.grad(x, g);
                    double gv = 0.0;
                    for (int r = 0; r < m; ++r) gv += g[r] * v.vectors[i * m + r];
                    worst = std::max(worst, std::fabs(div + gv / mval));
                }
            } else {
                // div_{mu(g_N)}(v_top) = g(H, v), pulled back as
                // (1/rho) d_a(rho u_a) with rho = sqrt(det G).
                auto ind = induced_volume(f);
                auto H = mean_curvature({f, {}});
                std::vector<double> u(n * k);
                for (std::size_t i = 0; i < n; ++i) {
                    f.node_jacobian(i, J.data());
                    tangential_components(J.data(), m, k, v.vectors.data() + i * m,
                                          u.data() + i * k);
                }
                std::vector<double> div(n, 0.0);
                if (k == 1) {
                    std::vector<double> prod(n);
                    for (std::size_t i = 0; i < n; ++i) prod[i] = ind.values[i] * u[i];
                    auto d = field_derivative_1d(f.grid, prod);
                    for (std::size_t i = 0; i < n; ++i) div[i] = d[i] / ind.values[i];
                } else {
                    std::vector<double> p1(n), p2(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        p1[i] = ind.values[i] * u[2 * i];
                        p2[i] = ind.values[i] * u[2 * i + 1];
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        div[i] = (f.grid->fit_at_node(i, p1).grad()[0] +
                                  f.grid->fit_at_node(i, p2).grad()[1]) /
                                 ind.values[i];
                    }
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double gHv = 0.0;
                    for (int r = 0; r < m; ++r) gHv += H.H[i * m + r] * v.vectors[i * m + r];
                    worst = std::max(worst, std::fabs(div[i] - gHv));
                }
            }
            res.residual = worst;
            break;
        }
        case MembershipKind::VerticalGr:
        case MembershipKind::VerticalVol: {
            // Tangential to N everywhere and parallel to the boundary.
            std::vector<double> J(static_cast<std::size_t>(k) * m);
            double worst = 0.0;
            std::vector<double> u(n * k);
            for (std::size_t i = 0; i < n; ++i) {
                f.node_jacobian(i, J.data());
                tangential_components(J.data(), m, k, v.vectors.data() + i * m, u.data() + i * k);
                for (int r = 0; r < m; ++r) {
                    double t = 0.0;
                    for (int a = 0; a < k; ++a) t += J[a * m + r] * u[i * k + a];
                    worst = std::max(worst, std::fabs(v.vectors[i * m + r] - t));
                }
            }
            if (f.grid->manifold.has_boundary()) {
                auto dag = dagger_frame(f);
                for (std::size_t b = 0; b < f.grid->boundary_count(); ++b) {
                    std::size_t bi = f.grid->boundary_nodes[b];
                    double gvn = 0.0;
                    for (int r = 0; r < m; ++r) gvn += v.vectors[bi * m + r] * dag[b * m + r];
                    worst = std::max(worst, std::fabs(gvn));
                }
            }
            if (which == MembershipKind::VerticalVol) {
                require(mu != nullptr, ErrorCode::DimensionMismatch,
                        "VerticalVol needs the reference volume form");
                // Divergence-free with respect to f_* mu, pulled back to S:
                // (1/mu) d_a(mu u_a) = 0.
                if (k == 1) {
                    std::vector<double> prod(n);
                    for (std::size_t i = 0; i < n; ++i) prod[i] = mu->values[i] * u[i];
                    auto d = field_derivative_1d(f.grid, prod);
                    for (std::size_t i = 0; i < n; ++i) {
                        worst = std::max(worst, std::fabs(d[i] / mu->values[i]));
                    }
                } else {
                    std::vector<double> p1(n), p2(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        p1[i] = mu->values[i] * u[2 * i];
                        p2[i] = mu->values[i] * u[2 * i + 1];
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        double d = f.grid->fit_at_node(i, p1).grad()[0] +
                                   f.grid->fit_at_node(i, p2).grad()[1];
                        worst = std::max(worst, std::fabs(d / mu->values[i]));
                    }
                }
            }
            res.residual = worst;
            break;
        }
    }
    res.member = res.residual < tolerance;
    return res;
}

// ============================================================================
// Associated bundle and fiber comparison
// ============================================================================

AssocToken assoc_iso(const VolGrassPoint& p) {
    return {p.nu.rep, DensityForm::top(p.nu.rep.grid, p.nu.pullback)};
}

VolGrassPoint assoc_iso_inv(const AssocToken& token) {
    VolGrassPoint p;
    p.point = project_gr(token.rep);
    p.nu = pushforward_density(token.rep, token.class_density);
    return p;
}

bool vol_points_equal(const VolGrassPoint& a, const VolGrassPoint& b, double tol) {
    if (!grass_points_equal(a.point, b.point, tol)) return false;
    auto phi = fiber_compare(a.nu.rep, b.nu.rep, FiberGroup::Diff, nullptr, tol);
    if (!phi) return false;
    // b.rep = a.rep o phi, so the stored pullbacks must satisfy
    // b.pullback = phi^* (a.pullback).
    auto pulled = pullback_by_diffeo(DensityForm::top(a.nu.rep.grid, a.nu.pullback), *phi);
    for (std::size_t i = 0; i < pulled.values.size(); ++i) {
        if (std::fabs(pulled.values[i] - b.nu.pullback[i]) > tol * 10.0) return false;
    }
    return true;
}

bool assoc_tokens_equal(const AssocToken& a, const AssocToken& b, double tol) {
    return vol_points_equal(assoc_iso_inv(a), assoc_iso_inv(b), tol);
}

std::optional<DiffeoS> fiber_compare(const Embedding& f1, const Embedding& f2, FiberGroup group,
                                     const DensityForm* mu, double tol) {
    if (f1.m() != f2.m() || !same_grid(f1.grid, f2.grid)) return std::nullopt;
    try {
        double reach = estimate_reach(f1);
        // Cap by the parametric speed so the collar stays inside the base
        // (the reach estimate of a flat base is unbounded).
        std::vector<double> J(static_cast<std::size_t>(f1.k()) * f1.m());
        f1.node_jacobian(f1.size() / 2, J.data());
        double speed = 0.0;
        for (int r = 0; r < f1.m(); ++r) speed += J[r] * J[r];
        double radius = std::min(0.45 * reach, 0.35 * std::sqrt(speed));
        auto chart = build_tubular_chart(f1, radius, radius);
        DiffeoS psi1 = reparam_to_normal(f1, chart);
        DiffeoS psi2 = reparam_to_normal(f2, chart);
        DiffeoS phi = DiffeoS::compose(psi1.inverse(), psi2);
        // Validate f2 = f1 o phi pointwise.
        const int m = f1.m();
        double worst = 0.0;
        std::vector<double> p(m);
        for (std::size_t i = 0; i < f1.size(); ++i) {
            f1.eval(phi.node_target(i), p.data());
            for (int r = 0; r < m; ++r) {
                worst = std::max(worst, std::fabs(p[r] - f2.point(i)[r]));
            }
        }
        if (worst > tol) return std::nullopt;
        if (group == FiberGroup::DiffVol) {
            require(mu != nullptr, ErrorCode::DimensionMismatch,
                    "DiffVol comparison needs the reference volume form");
            auto pushed = pushforward_by_diffeo(*mu, phi);
            for (std::size_t i = 0; i < mu->values.size(); ++i) {
                if (std::fabs(pushed.values[i] - mu->values[i]) > 1e-6) return std::nullopt;
            }
        }
        return phi;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace nlg
