#include "nlg/tubular.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace nlg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBig = 1e30;

// Project v onto the orthogonal complement of the k Jacobian columns.
void project_normal(const double* J, int m, int k, double* v) {
    if (k == 1) {
        double jj = 0.0, jv = 0.0;
        for (int r = 0; r < m; ++r) {
            jj += J[r] * J[r];
            jv += J[r] * v[r];
        }
        for (int r = 0; r < m; ++r) v[r] -= jv / jj * J[r];
        return;
    }
    // k == 2: solve the 2x2 Gram system.
    double a = 0.0, b = 0.0, c = 0.0, p = 0.0, q = 0.0;
    for (int r = 0; r < m; ++r) {
        a += J[r] * J[r];
        b += J[r] * J[m + r];
        c += J[m + r] * J[m + r];
        p += J[r] * v[r];
        q += J[m + r] * v[r];
    }
    double det = a * c - b * b;
    double u0 = (c * p - b * q) / det, u1 = (a * q - b * p) / det;
    for (int r = 0; r < m; ++r) v[r] -= u0 * J[r] + u1 * J[m + r];
}

double norm_m(const double* v, int m) {
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += v[r] * v[r];
    return std::sqrt(s);
}

// Continue a reference orthonormal normal frame to the normal space at the
// given Jacobian: project each vector, Gram-Schmidt, normalize.
bool continue_frame(const double* J, int m, int k, const double* ref, double* out) {
    int c = m - k;
    for (int i = 0; i < c; ++i) {
        double v[3];
        for (int r = 0; r < m; ++r) v[r] = ref[i * m + r];
        project_normal(J, m, k, v);
        for (int p = 0; p < i; ++p) {
            double d = 0.0;
            for (int r = 0; r < m; ++r) d += v[r] * out[p * m + r];
            for (int r = 0; r < m; ++r) v[r] -= d * out[p * m + r];
        }
        double n = norm_m(v, m);
        if (n < 1e-8) return false;
        for (int r = 0; r < m; ++r) out[i * m + r] = v[r] / n;
    }
    return true;
}

// Fresh orthonormal basis of the normal space (deterministic, no continuity).
void raw_frame(const double* J, int m, int k, double* out) {
    int c = m - k;
    if (c == 0) return;
    if (m == 2 && k == 1) {
        double n = std::hypot(J[0], J[1]);
        out[0] = -J[1] / n;
        out[1] = J[0] / n;
        return;
    }
    if (m == 3 && k == 2) {
        double n0 = J[1] * J[5] - J[2] * J[4];
        double n1 = J[2] * J[3] - J[0] * J[5];
        double n2 = J[0] * J[4] - J[1] * J[3];
        double n = std::sqrt(n0 * n0 + n1 * n1 + n2 * n2);
        out[0] = n0 / n;
        out[1] = n1 / n;
        out[2] = n2 / n;
        return;
    }
    // m == 3, k == 1: axis least aligned with the tangent, then complete.
    double t[3] = {J[0], J[1], J[2]};
    double tn = norm_m(t, 3);
    for (double& x : t) x /= tn;
    int axis = 0;
    double best = std::fabs(t[0]);
    for (int r = 1; r < 3; ++r) {
        if (std::fabs(t[r]) < best) {
            best = std::fabs(t[r]);
            axis = r;
        }
    }
    double e1[3] = {0, 0, 0};
    e1[axis] = 1.0;
    double d = e1[0] * t[0] + e1[1] * t[1] + e1[2] * t[2];
    for (int r = 0; r < 3; ++r) e1[r] -= d * t[r];
    double n1 = norm_m(e1, 3);
    for (int r = 0; r < 3; ++r) out[r] = e1[r] / n1;
    out[3] = t[1] * out[2] - t[2] * out[1];
    out[4] = t[2] * out[0] - t[0] * out[2];
    out[5] = t[0] * out[1] - t[1] * out[0];
}

}  // namespace

// ============================================================================
// BumpFunction
// ============================================================================

double BumpFunction::eval(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 0.0) return 1.0;
    double u = t + 1.0;
    if (kind == Kind::LinearRamp) return u;
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double BumpFunction::deriv(double t) const {
    if (t <= -1.0 || t >= 0.0) return 0.0;
    double u = t + 1.0;
    if (kind == Kind::LinearRamp) return 1.0;
    double w = u * (1.0 - u);
    return 30.0 * w * w;
}

BumpFunction::Report BumpFunction::validate() const {
    Report rep;
    rep.value_at_zero = eval(0.0);
    rep.min_slope = kBig;
    rep.max_slope = -kBig;
    for (int i = 0; i <= 2000; ++i) {
        double t = -1.5 + i * 1e-3;
        double d = deriv(t);
        rep.min_slope = std::min(rep.min_slope, d);
        rep.max_slope = std::max(rep.max_slope, d);
        if (t <= -1.0) rep.max_left_tail = std::max(rep.max_left_tail, std::fabs(eval(t)));
    }
    rep.ok = std::fabs(rep.value_at_zero - 1.0) < 1e-12 && rep.max_left_tail < 1e-12 &&
             rep.min_slope >= -1e-12 && rep.max_slope <= 2.0 + 1e-12;
    return rep;
}

std::string BumpFunction::name() const {
    return kind == Kind::LinearRamp ? "linear_ramp" : "quintic_smoothstep";
}

// ============================================================================
// Reach estimate
// ============================================================================

bool collar_is_proper(const TubularChart& ch);

double estimate_reach(const Embedding& f0) {
    const int m = f0.m(), k = f0.k();
    const std::size_t n = f0.size();
    double pair_bound = kBig;
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    std::size_t stride = n > 2000 ? n / 1024 : 1;
    for (std::size_t i = 0; i < n; ++i) {
        f0.node_jacobian(i, J.data());
        for (std::size_t j = stride == 1 ? i + 1 : i % stride; j < n; j += stride) {
            if (j == i) continue;
            double r[3] = {0.0, 0.0, 0.0}, rn2 = 0.0;
            for (int c = 0; c < m; ++c) {
                r[c] = f0.point(j)[c] - f0.point(i)[c];
                rn2 += r[c] * r[c];
            }
            double perp[3] = {r[0], m > 1 ? r[1] : 0.0, m > 2 ? r[2] : 0.0};
            if (m > k) project_normal(J.data(), m, k, perp);
            double dp = norm_m(perp, m);
            if (m == k || dp < 1e-9 * std::sqrt(rn2)) continue;
            pair_bound = std::min(pair_bound, rn2 / (2.0 * dp));
        }
    }
    // Curvature bound from second derivatives.
    double kappa = 0.0;
    std::vector<double> S(static_cast<std::size_t>(3) * m);
    for (std::size_t i = 0; i < n; ++i) {
        f0.node_jacobian(i, J.data());
        f0.second_derivs(f0.grid->node(i), S.data());
        if (k == 1) {
            double nrm2 = 0.0;
            for (int r = 0; r < m; ++r) nrm2 += J[r] * J[r];
            double acc[3];
            for (int r = 0; r < m; ++r) acc[r] = S[r];
            if (m > k) project_normal(J.data(), m, k, acc);
            kappa = std::max(kappa, norm_m(acc, m) / nrm2);
        } else if (m > k) {
            double a = 0.0, b = 0.0, c = 0.0;
            for (int r = 0; r < m; ++r) {
                a += J[r] * J[r];
                b += J[r] * J[m + r];
                c += J[m + r] * J[m + r];
            }
            double tr = a + c, disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4 * b * b));
            double lam_min = (tr - disc) / 2.0;
            double e[3];
            raw_frame(J.data(), m, k, e);
            double ii = 0.0;
            for (int comp = 0; comp < 3; ++comp) {
                double v = 0.0;
                for (int r = 0; r < m; ++r) v += e[r] * S[comp * m + r];
                ii += v * v * (comp == 1 ? 2.0 : 1.0);
            }
            kappa = std::max(kappa, std::sqrt(ii) / std::max(lam_min, 1e-12));
        }
    }
    double curv_bound = kappa > 1e-12 ? 1.0 / kappa : kBig;
    return std::min(pair_bound, curv_bound);
}

// ============================================================================
// TubularChart accessors
// ============================================================================

double TubularChart::arclength(double s) const {
    return speed_.integral_from_start(s) - arc_origin_;
}

double TubularChart::param_at_arclength(double l) const {
    auto f = [this](double s) { return arclength(s); };
    auto fp = [this](double s) { return speed_.eval(s); };
    return invert_monotone(f, fp, l, ext_lo_, ext_hi_);
}

double TubularChart::total_length() const { return arclength(1.0); }

double TubularChart::collar_coord_1d(double s, int end) const {
    return end == 0 ? -arclength(s) : arclength(s) - total_length();
}

double TubularChart::param_from_collar_1d(double that, int end) const {
    return end == 0 ? param_at_arclength(-that) : param_at_arclength(total_length() + that);
}

double TubularChart::collar_coord_disk(double r, double theta) const {
    if (theta < 0) theta += kTwoPi;
    std::size_t nr = disk_collar_radii_.size();
    std::vector<double> vals(nr);
    for (std::size_t j = 0; j < nr; ++j) vals[j] = disk_collar_cols_[j].eval(theta);
    double h = disk_collar_radii_[1] - disk_collar_radii_[0];
    auto sp = Interp1D::spline(disk_collar_radii_[0], h, std::move(vals),
                               Interp1D::Closure::NotAKnot);
    return sp.eval(r);
}

double TubularChart::radius_from_collar_disk(double that, double theta) const {
    if (theta < 0) theta += kTwoPi;
    std::size_t nr = disk_collar_radii_.size();
    std::vector<double> vals(nr);
    for (std::size_t j = 0; j < nr; ++j) vals[j] = disk_collar_cols_[j].eval(theta);
    double h = disk_collar_radii_[1] - disk_collar_radii_[0];
    auto sp = Interp1D::spline(disk_collar_radii_[0], h, std::move(vals),
                               Interp1D::Closure::NotAKnot);
    auto f = [&sp](double r) { return sp.eval(r); };
    auto fp = [&sp](double r) { return sp.deriv(r); };
    return invert_monotone(f, fp, that, disk_collar_radii_.front(), disk_collar_radii_.back());
}

void TubularChart::node_frame(std::size_t i, double* E) const {
    int c = codim();
    std::copy_n(normal_frames.data() + i * c * f0.m(), c * f0.m(), E);
}

void TubularChart::frame_at(const Param& s, double* E) const {
    const int m = f0.m(), k = f0.k(), c = m - k;
    if (c == 0) return;
    // Nearest precomputed sample.
    std::size_t best = 0;
    double bd = kBig;
    if (f0.grid->param_dim == 1) {
        double h = (frame_sample_params_.size() > 1)
                       ? frame_sample_params_[1] - frame_sample_params_[0]
                       : 1.0;
        double t = (s[0] - frame_sample_params_.front()) / h;
        long long i = std::llround(t);
        i = std::clamp<long long>(i, 0, static_cast<long long>(frame_sample_params_.size()) - 1);
        best = static_cast<std::size_t>(i);
    } else {
        for (std::size_t i = 0; i < frame_sample_params_.size() / 2; ++i) {
            double dx = frame_sample_params_[2 * i] - s[0];
            double dy = frame_sample_params_[2 * i + 1] - s[1];
            double d = dx * dx + dy * dy;
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
    }
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    f0.jacobian(s, J.data());
    const double* ref = frame_sample_data_.data() + best * c * m;
    require(continue_frame(J.data(), m, k, ref, E), ErrorCode::DegenerateNormalSpace,
            "frame continuation failed");
}

// ============================================================================
// build_tubular_chart
// ============================================================================

TubularChart build_tubular_chart(const Embedding& f0, double delta, double eps,
                                 const BumpFunction& bump) {
    require_embedding(f0);
    auto bump_report = bump.validate();
    require(bump_report.ok, ErrorCode::Unsupported, "bump profile violates its constraints");
    require(delta > 0.0 && eps > 0.0, ErrorCode::RadiusExceedsReach,
            "tube and collar radii must be positive");

    TubularChart ch;
    ch.f0 = f0;
    ch.delta = delta;
    ch.eps = eps;
    ch.bump = bump;
    ch.reach_estimate = estimate_reach(f0);
    require(delta <= 0.5 * ch.reach_estimate && eps <= 0.5 * ch.reach_estimate,
            ErrorCode::RadiusExceedsReach,
            "requested radii exceed half the reach estimate " +
                std::to_string(ch.reach_estimate));

    const int m = f0.m(), k = f0.k(), c = m - k;
    const std::size_t n = f0.size();
    const auto kind = f0.grid->manifold.kind;

    if (f0.grid->param_dim == 1) {
        double h = f0.grid->spacing;
        double hf = h / 8.0;
        double lo = 0.0, hi = kind == ManifoldKind::Circle ? kTwoPi : 1.0;
        if (kind == ManifoldKind::Interval01) {
            double J[3];
            f0.jacobian({0.0, 0.0}, J);
            double c0 = 1.7 * eps / norm_m(J, m);
            f0.jacobian({1.0, 0.0}, J);
            double c1 = 1.7 * eps / norm_m(J, m);
            lo = -hf * std::ceil(c0 / hf);
            hi = 1.0 + hf * std::ceil(c1 / hf);
        }
        ch.ext_lo_ = lo;
        ch.ext_hi_ = hi;
        // Speed samples over the extended domain (periodic for the circle).
        std::size_t ns = static_cast<std::size_t>(std::llround((hi - lo) / hf)) +
                         (kind == ManifoldKind::Circle ? 0 : 1);
        std::vector<double> speed(ns);
        std::vector<double> J(static_cast<std::size_t>(k) * m);
        for (std::size_t i = 0; i < ns; ++i) {
            f0.jacobian({lo + hf * static_cast<double>(i), 0.0}, J.data());
            speed[i] = norm_m(J.data(), m);
        }
        ch.speed_ = Interp1D::spline(lo, hf, std::move(speed),
                                     kind == ManifoldKind::Circle
                                         ? Interp1D::Closure::Periodic
                                         : Interp1D::Closure::NotAKnot);
        ch.arc_origin_ = ch.speed_.integral_from_start(0.0);

        if (kind == ManifoldKind::Interval01) {
            require(2.0 * eps <= ch.total_length() + 1e-12, ErrorCode::Unsupported,
                    "collar radius exceeds half the base length");
        }

        // Frame sweep on the sample grid.
        if (c > 0) {
            std::size_t nsamp = ns;
            ch.frame_sample_params_.resize(nsamp);
            ch.frame_sample_data_.resize(nsamp * c * m);
            std::vector<double> prev(c * m);
            for (std::size_t i = 0; i < nsamp; ++i) {
                double s = lo + hf * static_cast<double>(i);
                ch.frame_sample_params_[i] = s;
                f0.jacobian({s, 0.0}, J.data());
                double* out = ch.frame_sample_data_.data() + i * c * m;
                if (i == 0) {
                    raw_frame(J.data(), m, k, out);
                } else {
                    require(continue_frame(J.data(), m, k, prev.data(), out),
                            ErrorCode::DegenerateNormalSpace, "frame sweep failed");
                }
                std::copy_n(out, c * m, prev.data());
            }
            if (kind == ManifoldKind::Circle) {
                // Holonomy of the sweep around the loop.
                double wrapJ[3 * 2];
                f0.jacobian({0.0, 0.0}, wrapJ);
                std::vector<double> closed(c * m);
                require(continue_frame(wrapJ, m, k, prev.data(), closed.data()),
                        ErrorCode::DegenerateNormalSpace, "frame sweep failed at wrap");
                const double* first = ch.frame_sample_data_.data();
                if (c == 1) {
                    double d = 0.0;
                    for (int r = 0; r < m; ++r) d += closed[r] * first[r];
                    require(d > 0.0, ErrorCode::Unsupported,
                            "normal bundle orientation does not close up");
                } else {
                    // Distribute the holonomy rotation so the frame closes.
                    double ca = 0.0, sa = 0.0;
                    for (int r = 0; r < m; ++r) {
                        ca += closed[r] * first[r];
                        sa += closed[r] * first[m + r];
                    }
                    double alpha = std::atan2(sa, ca);
                    for (std::size_t i = 0; i < nsamp; ++i) {
                        double a = -alpha * static_cast<double>(i) / static_cast<double>(nsamp);
                        double* e = ch.frame_sample_data_.data() + i * c * m;
                        for (int r = 0; r < m; ++r) {
                            double e1 = e[r], e2 = e[m + r];
                            e[r] = std::cos(a) * e1 - std::sin(a) * e2;
                            e[m + r] = std::sin(a) * e1 + std::cos(a) * e2;
                        }
                    }
                }
            }
        }

        // Node frames and dagger data.
        ch.normal_frames.resize(n * c * m);
        for (std::size_t i = 0; i < n; ++i) {
            if (c > 0) ch.frame_at(f0.grid->node(i), ch.normal_frames.data() + i * c * m);
        }
        if (kind == ManifoldKind::Interval01) {
            ch.dagger.resize(2 * m);
            ch.dagger_coordinate_sign = {-1.0, 1.0};
            f0.jacobian({0.0, 0.0}, J.data());
            double nl = norm_m(J.data(), m);
            for (int r = 0; r < m; ++r) ch.dagger[r] = -J[r] / nl;
            f0.jacobian({1.0, 0.0}, J.data());
            double nr_ = norm_m(J.data(), m);
            for (int r = 0; r < m; ++r) ch.dagger[m + r] = J[r] / nr_;
        }
        return ch;
    }

    // ---- Disk base ----
    // Extension margin in radius so the collar fits with headroom.
    double min_speed = kBig;
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    for (std::size_t b : f0.grid->boundary_nodes) {
        f0.node_jacobian(b, J.data());
        Param p = f0.grid->node(b);
        double rad[3];
        for (int r = 0; r < m; ++r) rad[r] = J[r] * p[0] + J[m + r] * p[1];
        min_speed = std::min(min_speed, norm_m(rad, m));
    }
    double rmax = 1.0 + 1.7 * eps / min_speed;
    ch.disk_ext_rmax_ = rmax;

    // Collar coordinate table: radial arclength along parameter rays, sampled
    // at the boundary angles and a uniform radius grid.
    int mb = f0.grid->ring_counts.back();
    double rmin = std::max(0.05, 1.0 - 2.2 * eps / min_speed);
    int nrs = 65;
    double hr = (rmax - rmin) / (nrs - 1);
    std::vector<std::vector<double>> that(nrs, std::vector<double>(mb));
    int fine = 8;
    for (int bidx = 0; bidx < mb; ++bidx) {
        double th = kTwoPi * bidx / mb;
        double cth = std::cos(th), sth = std::sin(th);
        // Radial speeds on a fine grid, then cumulative arclength.
        int nf = (nrs - 1) * fine + 1;
        std::vector<double> sp(nf);
        for (int q = 0; q < nf; ++q) {
            double r = rmin + hr / fine * q;
            f0.jacobian({r * cth, r * sth}, J.data());
            double rad[3];
            for (int rr = 0; rr < m; ++rr) rad[rr] = J[rr] * cth + J[m + rr] * sth;
            sp[q] = norm_m(rad, m);
        }
        auto spline = Interp1D::spline(rmin, hr / fine, std::move(sp),
                                       Interp1D::Closure::NotAKnot);
        double at_one = spline.integral_from_start(1.0);
        for (int j = 0; j < nrs; ++j) {
            that[j][bidx] = spline.integral_from_start(rmin + hr * j) - at_one;
        }
    }
    ch.disk_collar_radii_.resize(nrs);
    ch.disk_collar_cols_.reserve(nrs);
    for (int j = 0; j < nrs; ++j) {
        ch.disk_collar_radii_[j] = rmin + hr * j;
        ch.disk_collar_cols_.push_back(
            Interp1D::spline(0.0, kTwoPi / mb, that[j], Interp1D::Closure::Periodic));
    }

    // Frames at nodes (swept outward) plus ghost samples beyond the boundary.
    int ghost_levels = 6;
    std::size_t nsamp = n + static_cast<std::size_t>(ghost_levels) * mb;
    if (c > 0) {
        ch.frame_sample_params_.resize(2 * nsamp);
        ch.frame_sample_data_.resize(nsamp * c * m);
        for (std::size_t i = 0; i < n; ++i) {
            Param p = f0.grid->node(i);
            ch.frame_sample_params_[2 * i] = p[0];
            ch.frame_sample_params_[2 * i + 1] = p[1];
            f0.node_jacobian(i, J.data());
            double* out = ch.frame_sample_data_.data() + i * c * m;
            if (i == 0) {
                raw_frame(J.data(), m, k, out);
            } else {
                std::size_t refid = i;
                for (std::size_t nb : f0.grid->neighbors(i)) {
                    if (nb < i) {
                        refid = nb;
                        break;
                    }
                }
                require(refid < i, ErrorCode::DegenerateNormalSpace,
                        "disk frame sweep lacks a processed neighbor");
                require(continue_frame(J.data(), m, k,
                                       ch.frame_sample_data_.data() + refid * c * m, out),
                        ErrorCode::DegenerateNormalSpace, "disk frame sweep failed");
            }
        }
        for (int l = 1; l <= ghost_levels; ++l) {
            double r = 1.0 + (rmax - 1.0) * l / ghost_levels;
            for (int bidx = 0; bidx < mb; ++bidx) {
                std::size_t gi = n + static_cast<std::size_t>(l - 1) * mb + bidx;
                double th = kTwoPi * bidx / mb;
                Param p{r * std::cos(th), r * std::sin(th)};
                ch.frame_sample_params_[2 * gi] = p[0];
                ch.frame_sample_params_[2 * gi + 1] = p[1];
                f0.jacobian(p, J.data());
                std::size_t below = (l == 1) ? f0.grid->boundary_nodes[bidx]
                                             : gi - static_cast<std::size_t>(mb);
                require(continue_frame(J.data(), m, k,
                                       ch.frame_sample_data_.data() + below * c * m,
                                       ch.frame_sample_data_.data() + gi * c * m),
                        ErrorCode::DegenerateNormalSpace, "ghost frame sweep failed");
            }
        }
        ch.normal_frames.assign(ch.frame_sample_data_.begin(),
                                ch.frame_sample_data_.begin() + n * c * m);
    }

    // Dagger frames: outward unit conormal at the boundary nodes.
    ch.dagger.resize(static_cast<std::size_t>(mb) * m);
    ch.dagger_coordinate_sign.assign(mb, 1.0);
    for (int bidx = 0; bidx < mb; ++bidx) {
        std::size_t b = f0.grid->boundary_nodes[bidx];
        f0.node_jacobian(b, J.data());
        double th = kTwoPi * bidx / mb;
        double tang[3], rad[3];
        for (int r = 0; r < m; ++r) {
            tang[r] = -J[r] * std::sin(th) + J[m + r] * std::cos(th);
            rad[r] = J[r] * std::cos(th) + J[m + r] * std::sin(th);
        }
        double tn = norm_m(tang, m);
        double d = 0.0;
        for (int r = 0; r < m; ++r) d += rad[r] * tang[r] / (tn * tn);
        for (int r = 0; r < m; ++r) rad[r] -= d * tang[r];
        double rn = norm_m(rad, m);
        for (int r = 0; r < m; ++r) ch.dagger[bidx * m + r] = rad[r] / rn;
    }
    // The collar must not reach the center.
    require(collar_is_proper(ch), ErrorCode::Unsupported,
            "collar radius too wide for the disk base");
    return ch;
}

bool collar_is_proper(const TubularChart& ch) {
    if (ch.f0.grid->manifold.kind != ManifoldKind::ClosedDisk) return true;
    int mb = ch.f0.grid->ring_counts.back();
    double rmin = ch.disk_collar_radii_.front();
    for (int b = 0; b < mb; ++b) {
        double th = kTwoPi * b / mb;
        if (ch.collar_coord_disk(rmin, th) > -1.05 * ch.eps) return false;
    }
    return true;
}

// ============================================================================
// Projection
// ============================================================================

namespace {

struct Seed {
    Param param;
    double dist2;
};

std::vector<Seed> projection_seeds(const double* x, const TubularChart& ch, bool extended) {
    const Embedding& f0 = ch.f0;
    const int m = f0.m();
    std::vector<Seed> seeds;
    auto consider = [&](const Param& p) {
        double d2 = 0.0;
        double v[3];
        f0.eval(p, v);
        for (int r = 0; r < m; ++r) d2 += (v[r] - x[r]) * (v[r] - x[r]);
        seeds.push_back({p, d2});
    };
    for (std::size_t i = 0; i < f0.size(); ++i) consider(f0.grid->node(i));
    if (extended && f0.grid->manifold.kind == ManifoldKind::Interval01) {
        double h = f0.grid->spacing;
        for (double s = -h; s > ch.ext_param_min() - h / 2; s -= h) consider({s, 0.0});
        for (double s = 1.0 + h; s < ch.ext_param_max() + h / 2; s += h) consider({s, 0.0});
    }
    if (extended && f0.grid->manifold.kind == ManifoldKind::ClosedDisk) {
        int mb = f0.grid->ring_counts.back();
        for (int l = 1; l <= 4; ++l) {
            double r = 1.0 + (ch.disk_ext_rmax_ - 1.0) * l / 4.0;
            for (int b = 0; b < mb; ++b) {
                double th = kTwoPi * b / mb;
                consider({r * std::cos(th), r * std::sin(th)});
            }
        }
    }
    std::sort(seeds.begin(), seeds.end(),
              [](const Seed& a, const Seed& b) { return a.dist2 < b.dist2; });
    return seeds;
}

// Gauss-Newton refinement of the closest point on the (extended) base.
bool refine_projection(const double* x, const TubularChart& ch, bool extended, Param& s,
                       double& dist) {
    const Embedding& f0 = ch.f0;
    const int m = f0.m(), k = f0.k();
    double lo = extended ? ch.ext_param_min() : 0.0;
    double hi = extended ? ch.ext_param_max() : 1.0;
    bool circle = f0.grid->manifold.kind == ManifoldKind::Circle;
    double rcap = extended ? ch.disk_ext_rmax_ : 1.0;
    double F[3], J[6], S2[9];
    for (int iter = 0; iter < 80; ++iter) {
        f0.eval(s, F);
        f0.jacobian(s, J);
        f0.second_derivs(s, S2);
        double r[3];
        for (int c = 0; c < m; ++c) r[c] = F[c] - x[c];
        if (k == 1) {
            double g = 0.0, H = 0.0;
            for (int c = 0; c < m; ++c) {
                g += r[c] * J[c];
                H += J[c] * J[c] + r[c] * S2[c];
            }
            if (std::fabs(H) < 1e-300) return false;
            double step = -g / H;
            double cap = 2.0 * f0.grid->spacing;
            step = std::clamp(step, -cap, cap);
            s[0] += step;
            if (!circle) s[0] = std::clamp(s[0], lo, hi);
            if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(s[0]))) break;
        } else {
            double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
            for (int c = 0; c < m; ++c) {
                g0 += r[c] * J[c];
                g1 += r[c] * J[m + c];
                h00 += J[c] * J[c] + r[c] * S2[c];
                h01 += J[c] * J[m + c] + r[c] * S2[m + c];
                h11 += J[m + c] * J[m + c] + r[c] * S2[2 * m + c];
            }
            double det = h00 * h11 - h01 * h01;
            if (std::fabs(det) < 1e-300) return false;
            double d0 = -(h11 * g0 - h01 * g1) / det;
            double d1 = -(-h01 * g0 + h00 * g1) / det;
            double cap = 2.0 * f0.grid->spacing;
            double nn = std::hypot(d0, d1);
            if (nn > cap) {
                d0 *= cap / nn;
                d1 *= cap / nn;
            }
            s[0] += d0;
            s[1] += d1;
            double rr = std::hypot(s[0], s[1]);
            if (rr > rcap) {
                s[0] *= rcap / rr;
                s[1] *= rcap / rr;
            }
            if (std::hypot(d0, d1) < 1e-14 * (1.0 + std::hypot(s[0], s[1]))) break;
        }
    }
    f0.eval(s, F);
    double d2 = 0.0;
    for (int c = 0; c < m; ++c) d2 += (F[c] - x[c]) * (F[c] - x[c]);
    dist = std::sqrt(d2);
    return true;
}

}  // namespace

ProjectionResult TubularChart::project(const double* x, bool extended) const {
    return closest_point_project(x, *this, extended);
}

ProjectionResult closest_point_project(const double* x, const TubularChart& ch, bool extended) {
    const Embedding& f0 = ch.f0;
    const int m = f0.m(), k = f0.k();
    auto seeds = projection_seeds(x, ch, extended);
    require(!seeds.empty(), ErrorCode::OutsideTube, "no projection seed");

    Param s1 = seeds[0].param;
    double d1 = 0.0;
    require(refine_projection(x, ch, extended, s1, d1), ErrorCode::OutsideTube,
            "projection iteration failed");

    // Run a second refinement from the best seed that is well separated in
    // parameter space; report ambiguity when a distinct minimum ties.
    double sep = 4.0 * f0.grid->spacing;
    for (std::size_t i = 1; i < seeds.size(); ++i) {
        double pd = k == 1 ? std::fabs(seeds[i].param[0] - seeds[0].param[0])
                           : std::hypot(seeds[i].param[0] - seeds[0].param[0],
                                        seeds[i].param[1] - seeds[0].param[1]);
        if (f0.grid->manifold.kind == ManifoldKind::Circle) {
            pd = std::min(pd, kTwoPi - pd);
        }
        if (pd < sep) continue;
        if (seeds[i].dist2 > 4.0 * (seeds[0].dist2 + 1e-12)) break;
        Param s2 = seeds[i].param;
        double d2 = 0.0;
        if (!refine_projection(x, ch, extended, s2, d2)) break;
        double pdist = k == 1 ? std::fabs(s2[0] - s1[0])
                              : std::hypot(s2[0] - s1[0], s2[1] - s1[1]);
        if (f0.grid->manifold.kind == ManifoldKind::Circle) {
            pdist = std::min(pdist, kTwoPi - pdist);
        }
        if (pdist > sep && std::fabs(d2 - d1) < 1e-6 * (1.0 + d1)) {
            fail(ErrorCode::AmbiguousProjection, "two projection minima tie");
        }
        if (d2 < d1) {
            s1 = s2;
            d1 = d2;
        }
        break;
    }

    require(d1 < ch.delta, ErrorCode::OutsideTube,
            "point lies outside the tube (distance " + std::to_string(d1) + ")");

    ProjectionResult res;
    res.param = s1;
    res.distance = d1;
    if (f0.grid->param_dim == 1) {
        res.inside_S = f0.grid->manifold.kind == ManifoldKind::Circle ||
                       (s1[0] >= 0.0 && s1[0] <= 1.0);
    } else {
        res.inside_S = std::hypot(s1[0], s1[1]) <= 1.0 + 1e-12;
    }
    int c = m - k;
    if (c > 0) {
        double E[6], F[3];
        ch.frame_at(s1, E);
        f0.eval(s1, F);
        for (int d = 0; d < c; ++d) {
            double acc = 0.0;
            for (int r = 0; r < m; ++r) acc += E[d * m + r] * (x[r] - F[r]);
            res.normal_coords[d] = acc;
        }
    }
    return res;
}

// ============================================================================
// Step II / Step III
// ============================================================================

BoundaryShift boundary_shift_map(std::span<const double> sigma_dagger, const TubularChart& ch) {
    const Embedding& f0 = ch.f0;
    require(ch.has_boundary(), ErrorCode::NoBoundary, "boundary shift needs a boundary");
    std::size_t nb = f0.grid->boundary_count();
    require(sigma_dagger.size() == nb, ErrorCode::GridMismatch,
            "section size does not match boundary node count");
    BoundaryShift out;
    out.section.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        require(std::fabs(sigma_dagger[b]) < ch.eps / 2.0, ErrorCode::SectionOutOfRange,
                "|sigma_dagger| must stay below eps/2");
        out.section[b] = ch.dagger_coordinate_sign[b] * sigma_dagger[b];
    }
    // lambda_a monotonicity on a fine grid, for every boundary value.
    out.min_lambda_slope = kBig;
    for (std::size_t b = 0; b < nb; ++b) {
        double a = out.section[b];
        for (int i = 0; i <= 2000; ++i) {
            double t = -ch.eps + ch.eps * i / 2000.0;
            double slope = 1.0 + a / ch.eps * ch.bump.deriv(t / ch.eps);
            out.min_lambda_slope = std::min(out.min_lambda_slope, slope);
        }
    }
    require(out.min_lambda_slope > 0.0, ErrorCode::SectionOutOfRange,
            "collar shift is not monotone");

    std::size_t n = f0.size();
    const auto kind = f0.grid->manifold.kind;
    if (kind == ManifoldKind::Interval01) {
        out.target_params.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = f0.grid->nodes[i];
            double t0 = ch.collar_coord_1d(s, 0);
            double t1 = ch.collar_coord_1d(s, 1);
            if (t0 > -ch.eps && t0 >= t1) {
                double tp = t0 + out.section[0] * ch.bump.eval(t0 / ch.eps);
                out.target_params[i] = ch.param_from_collar_1d(tp, 0);
            } else if (t1 > -ch.eps) {
                double tp = t1 + out.section[1] * ch.bump.eval(t1 / ch.eps);
                out.target_params[i] = ch.param_from_collar_1d(tp, 1);
            } else {
                out.target_params[i] = s;  // bit-exact identity outside the collar
            }
        }
        // Boundary nodes land exactly on the shifted collar coordinate.
        out.target_params.front() = ch.param_from_collar_1d(out.section[0], 0);
        out.target_params.back() = ch.param_from_collar_1d(out.section[1], 1);
        return out;
    }
    // Disk.
    auto sec_interp = boundary_interp(f0.grid, out.section);
    out.target_params.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        Param p = f0.grid->node(i);
        double r = std::hypot(p[0], p[1]);
        if (r < 1e-14) {
            out.target_params[2 * i] = p[0];
            out.target_params[2 * i + 1] = p[1];
            continue;
        }
        double th = std::atan2(p[1], p[0]);
        if (th < 0) th += kTwoPi;
        double t = ch.collar_coord_disk(r, th);
        if (t <= -ch.eps) {
            out.target_params[2 * i] = p[0];
            out.target_params[2 * i + 1] = p[1];
            continue;
        }
        double a = sec_interp.eval(th);
        double tp = t + a * ch.bump.eval(t / ch.eps);
        double rp = ch.radius_from_collar_disk(tp, th);
        out.target_params[2 * i] = p[0] * rp / r;
        out.target_params[2 * i + 1] = p[1] * rp / r;
    }
    return out;
}

FrameTransport transport_normal_frames(const BoundaryShift& shift, const TubularChart& ch) {
    const Embedding& f0 = ch.f0;
    const int m = f0.m(), k = f0.k(), c = m - k;
    std::size_t n = f0.size();
    FrameTransport out;
    out.target_params = shift.target_params;
    out.rotations.assign(n * c * c, 0.0);
    out.target_frames.assign(n * c * m, 0.0);
    if (c == 0) return out;
    std::vector<double> E(c * m), Ep(c * m);
    for (std::size_t i = 0; i < n; ++i) {
        ch.node_frame(i, E.data());
        Param t = f0.grid->param_dim == 1
                      ? Param{shift.target_params[i], 0.0}
                      : Param{shift.target_params[2 * i], shift.target_params[2 * i + 1]};
        ch.frame_at(t, Ep.data());
        std::copy_n(Ep.data(), c * m, out.target_frames.data() + i * c * m);
        // Gram matrix M = Ep^T E, polar factor is the transport in frame
        // coordinates.
        if (c == 1) {
            double d = 0.0;
            for (int r = 0; r < m; ++r) d += Ep[r] * E[r];
            require(std::fabs(d) > 0.2, ErrorCode::DegenerateNormalSpace,
                    "normal spaces nearly orthogonal along the shift");
            out.rotations[i] = d > 0 ? 1.0 : -1.0;
        } else {
            Eigen::Matrix2d M;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double acc = 0.0;
                    for (int r = 0; r < m; ++r) acc += Ep[a * m + r] * E[b * m + r];
                    M(a, b) = acc;
                }
            Eigen::JacobiSVD<Eigen::Matrix2d> svd(M,
                                                  Eigen::ComputeFullU | Eigen::ComputeFullV);
            require(svd.singularValues()(1) > 0.2, ErrorCode::DegenerateNormalSpace,
                    "normal spaces nearly orthogonal along the shift");
            Eigen::Matrix2d Q = svd.matrixU() * svd.matrixV().transpose();
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) out.rotations[i * 4 + 2 * a + b] = Q(a, b);
        }
    }
    return out;
}

// ============================================================================
// Serialization
// ============================================================================

std::string TubularChart::to_json() const {
    nlohmann::json j;
    j["kind"] = manifold_kind_name(f0.grid->manifold.kind);
    j["resolution"] = f0.grid->resolution;
    j["ambient_dim"] = f0.ambient_dim;
    j["values"] = f0.values;
    if (!f0.derivs.empty()) j["derivs"] = f0.derivs;
    j["delta"] = delta;
    j["eps"] = eps;
    j["bump"] = bump.name();
    j["normal_frames"] = normal_frames;
    j["dagger"] = dagger;
    return j.dump(2);
}

TubularChart TubularChart::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ManifoldKind kind = ManifoldKind::Interval01;
    std::string ks = j.at("kind").get<std::string>();
    if (ks == "circle") kind = ManifoldKind::Circle;
    if (ks == "closed_disk") kind = ManifoldKind::ClosedDisk;
    auto grid = build_grid(kind, j.at("resolution").get<int>());
    Embedding f0;
    if (j.contains("derivs")) {
        f0 = Embedding::from_nodes(grid, j.at("ambient_dim").get<int>(),
                                   j.at("values").get<std::vector<double>>(),
                                   j.at("derivs").get<std::vector<double>>());
    } else {
        f0 = Embedding::from_nodes(grid, j.at("ambient_dim").get<int>(),
                                   j.at("values").get<std::vector<double>>());
    }
    BumpFunction b = j.at("bump").get<std::string>() == "linear_ramp"
                         ? BumpFunction::linear_ramp()
                         : BumpFunction::quintic();
    return build_tubular_chart(f0, j.at("delta").get<double>(), j.at("eps").get<double>(), b);
}

}  // namespace nlg
