#include "nlg/embedding.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace nlg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double det2(const double* J, int m) {
    // J is m x 2 column-major by parameter; for m == 2 this is the plain det.
    assert(m == 2);
    return J[0] * J[m + 1] - J[1] * J[m + 0];
}

double min_singular(const double* J, int m, int k) {
    if (k == 1) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += J[r] * J[r];
        return std::sqrt(s);
    }
    // k == 2: eigenvalues of the 2x2 Gram matrix.
    double a = 0.0, b = 0.0, c = 0.0;
    for (int r = 0; r < m; ++r) {
        a += J[r] * J[r];
        b += J[r] * J[m + r];
        c += J[m + r] * J[m + r];
    }
    double tr = a + c, d = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    double lam = (tr - d) / 2.0;
    return std::sqrt(std::max(0.0, lam));
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

}  // namespace

// ============================================================================
// Embedding
// ============================================================================

struct Embedding::Cache {
    std::vector<Interp1D> comp;          // 1-D: per ambient component
    std::vector<double> node_jacobians;  // disk without Hermite data: n*k*m
};

Embedding Embedding::from_nodes(GridPtr grid, int ambient_dim, std::vector<double> values) {
    Embedding f;
    f.grid = std::move(grid);
    f.ambient_dim = ambient_dim;
    f.basis = Basis::NodalSpline;
    f.values = std::move(values);
    require(f.values.size() == f.size() * static_cast<std::size_t>(ambient_dim),
            ErrorCode::GridMismatch, "embedding values size mismatch");
    require(ambient_dim >= f.k(), ErrorCode::DimensionMismatch,
            "ambient dimension below intrinsic dimension");
    f.ensure_cache();
    return f;
}

Embedding Embedding::from_nodes(GridPtr grid, int ambient_dim, std::vector<double> values,
                                std::vector<double> derivs) {
    Embedding f;
    f.grid = std::move(grid);
    f.ambient_dim = ambient_dim;
    f.basis = Basis::NodalHermite;
    f.values = std::move(values);
    f.derivs = std::move(derivs);
    require(f.values.size() == f.size() * static_cast<std::size_t>(ambient_dim),
            ErrorCode::GridMismatch, "embedding values size mismatch");
    require(f.derivs.size() == f.size() * static_cast<std::size_t>(f.k() * ambient_dim),
            ErrorCode::GridMismatch, "embedding derivative data size mismatch");
    f.ensure_cache();
    return f;
}

Embedding Embedding::sample(GridPtr grid, int ambient_dim,
                            const std::function<void(const Param&, double*)>& fn,
                            const std::function<void(const Param&, double*)>& jac) {
    std::size_t n = grid->size();
    int k = grid->manifold.intrinsic_dim;
    std::vector<double> vals(n * ambient_dim);
    for (std::size_t i = 0; i < n; ++i) fn(grid->node(i), vals.data() + i * ambient_dim);
    if (!jac) return from_nodes(std::move(grid), ambient_dim, std::move(vals));
    std::vector<double> der(n * k * ambient_dim);
    for (std::size_t i = 0; i < n; ++i) jac(grid->node(i), der.data() + i * k * ambient_dim);
    return from_nodes(std::move(grid), ambient_dim, std::move(vals), std::move(der));
}

void Embedding::ensure_cache() const {
    if (cache_) return;
    auto c = std::make_shared<Cache>();
    const int m = ambient_dim, k = grid->manifold.intrinsic_dim;
    const std::size_t n = size();
    if (grid->param_dim == 1) {
        bool circle = grid->manifold.kind == ManifoldKind::Circle;
        auto closure = circle ? Interp1D::Closure::Periodic : Interp1D::Closure::NotAKnot;
        c->comp.reserve(m);
        for (int r = 0; r < m; ++r) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = values[i * m + r];
            if (basis == Basis::NodalHermite) {
                std::vector<double> d(n);
                for (std::size_t i = 0; i < n; ++i) d[i] = derivs[i * m + r];
                c->comp.push_back(Interp1D::hermite(0.0, grid->spacing, std::move(v), std::move(d),
                                                    closure));
            } else {
                c->comp.push_back(Interp1D::spline(0.0, grid->spacing, std::move(v), closure));
            }
        }
    } else if (basis == Basis::NodalSpline) {
        // Nodal Jacobians from the cached cubic stencils.
        c->node_jacobians.resize(n * k * m);
        std::vector<double> compvals(n);
        for (int r = 0; r < m; ++r) {
            for (std::size_t i = 0; i < n; ++i) compvals[i] = values[i * m + r];
            for (std::size_t i = 0; i < n; ++i) {
                auto fit = grid->fit_at_node(i, compvals);
                auto g = fit.grad();
                c->node_jacobians[i * k * m + 0 * m + r] = g[0];
                c->node_jacobians[i * k * m + 1 * m + r] = g[1];
            }
        }
    }
    cache_ = std::move(c);
}

const Interp1D& Embedding::component_interp(int r) const {
    ensure_cache();
    require(grid->param_dim == 1, ErrorCode::Unsupported, "component_interp is 1-D only");
    return cache_->comp[r];
}

void Embedding::eval(const Param& s, double* out) const {
    ensure_cache();
    const int m = ambient_dim;
    if (grid->param_dim == 1) {
        for (int r = 0; r < m; ++r) out[r] = cache_->comp[r].eval(s[0]);
        return;
    }
    // Snap to a node when the query sits on one; the moving fit is only
    // near-interpolating.
    std::size_t nearest = grid->nearest_node(s);
    Param p = grid->node(nearest);
    if (std::hypot(p[0] - s[0], p[1] - s[1]) < 1e-12) {
        for (int r = 0; r < m; ++r) out[r] = values[nearest * m + r];
        return;
    }
    auto idx = grid->k_nearest(s, 22);
    std::vector<double> pts(2 * idx.size()), vals(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        pts[2 * t] = grid->nodes[2 * idx[t]];
        pts[2 * t + 1] = grid->nodes[2 * idx[t] + 1];
    }
    for (int r = 0; r < m; ++r) {
        for (std::size_t t = 0; t < idx.size(); ++t) vals[t] = values[idx[t] * m + r];
        out[r] = fit_scattered({s[0], s[1]}, pts, vals, 3).value();
    }
}

void Embedding::jacobian(const Param& s, double* J) const {
    ensure_cache();
    const int m = ambient_dim;
    if (grid->param_dim == 1) {
        for (int r = 0; r < m; ++r) J[r] = cache_->comp[r].deriv(s[0]);
        return;
    }
    std::size_t nearest = grid->nearest_node(s);
    Param p = grid->node(nearest);
    if (std::hypot(p[0] - s[0], p[1] - s[1]) < 1e-12) {
        node_jacobian(nearest, J);
        return;
    }
    auto idx = grid->k_nearest(s, 22);
    std::vector<double> pts(2 * idx.size()), vals(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        pts[2 * t] = grid->nodes[2 * idx[t]];
        pts[2 * t + 1] = grid->nodes[2 * idx[t] + 1];
    }
    for (int r = 0; r < m; ++r) {
        for (std::size_t t = 0; t < idx.size(); ++t) vals[t] = values[idx[t] * m + r];
        auto fit = fit_scattered({s[0], s[1]}, pts, vals, 3);
        auto g = fit.grad();
        J[0 * m + r] = g[0];
        J[1 * m + r] = g[1];
    }
}

void Embedding::node_jacobian(std::size_t i, double* J) const {
    ensure_cache();
    const int m = ambient_dim, k = grid->manifold.intrinsic_dim;
    if (basis == Basis::NodalHermite) {
        std::copy_n(derivs.data() + i * k * m, k * m, J);
        return;
    }
    if (grid->param_dim == 1) {
        double s = grid->nodes[i];
        for (int r = 0; r < m; ++r) J[r] = cache_->comp[r].deriv(s);
        return;
    }
    std::copy_n(cache_->node_jacobians.data() + i * k * m, k * m, J);
}

void Embedding::second_derivs(const Param& s, double* out) const {
    ensure_cache();
    const int m = ambient_dim;
    if (grid->param_dim == 1) {
        for (int r = 0; r < m; ++r) out[r] = cache_->comp[r].deriv2(s[0]);
        return;
    }
    auto idx = grid->k_nearest(s, 22);
    std::vector<double> pts(2 * idx.size()), vals(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        pts[2 * t] = grid->nodes[2 * idx[t]];
        pts[2 * t + 1] = grid->nodes[2 * idx[t] + 1];
    }
    for (int r = 0; r < m; ++r) {
        for (std::size_t t = 0; t < idx.size(); ++t) vals[t] = values[idx[t] * m + r];
        auto h = fit_scattered({s[0], s[1]}, pts, vals, 3).hess();
        out[0 * m + r] = h[0];
        out[1 * m + r] = h[1];
        out[2 * m + r] = h[2];
    }
}

// ============================================================================
// DiffeoS
// ============================================================================

struct DiffeoS::Cache {
    // 1-D: interpolant of the target values (interval) or of the deviation
    // from the rigid winding (circle).
    Interp1D map;
    std::vector<double> node_jacobians;  // disk: n*4
};

DiffeoS DiffeoS::identity(GridPtr grid) {
    DiffeoS phi;
    phi.grid = grid;
    phi.orientation_sign = 1;
    std::size_t n = grid->size();
    if (grid->param_dim == 1) {
        phi.values.resize(n);
        phi.derivs.assign(n, 1.0);
        phi.second.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) phi.values[i] = grid->nodes[i];
    } else {
        phi.values = grid->nodes;
        phi.derivs.assign(n * 4, 0.0);
        for (std::size_t i = 0; i < n; ++i) phi.derivs[i * 4] = phi.derivs[i * 4 + 3] = 1.0;
    }
    phi.ensure_cache();
    return phi;
}

DiffeoS DiffeoS::from_values(GridPtr grid, std::vector<double> values) {
    return from_values(std::move(grid), std::move(values), {}, {});
}

DiffeoS DiffeoS::from_values(GridPtr grid, std::vector<double> values, std::vector<double> derivs,
                             std::vector<double> second) {
    DiffeoS phi;
    phi.grid = std::move(grid);
    phi.values = std::move(values);
    phi.derivs = std::move(derivs);
    phi.second = std::move(second);
    std::size_t n = phi.size();
    require(phi.values.size() == n * static_cast<std::size_t>(phi.grid->param_dim),
            ErrorCode::GridMismatch, "diffeo values size mismatch");

    if (phi.grid->manifold.kind == ManifoldKind::Interval01) {
        for (double& v : phi.values) {
            if (std::fabs(v) < 1e-12) v = 0.0;
            if (std::fabs(v - 1.0) < 1e-12) v = 1.0;
        }
        phi.orientation_sign = phi.values.front() <= phi.values.back() ? 1 : -1;
    } else if (phi.grid->manifold.kind == ManifoldKind::Circle) {
        // Normalize the lift so the first value sits in [0, 2pi).
        double shift = kTwoPi * std::floor(phi.values[0] / kTwoPi);
        for (double& v : phi.values) v -= shift;
        phi.orientation_sign =
            phi.values[1 % n] - phi.values[0] > 0.0 ? 1 : -1;
    } else {
        // Disk: orientation from the median Jacobian determinant sign.
        phi.orientation_sign = 1;
    }
    phi.ensure_cache();
    if (phi.grid->param_dim == 2) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* J = phi.cache_->node_jacobians.data() + i * 4;
            d += (J[0] * J[3] - J[1] * J[2]) > 0 ? 1.0 : -1.0;
        }
        phi.orientation_sign = d >= 0 ? 1 : -1;
    }
    phi.validate();
    return phi;
}

DiffeoS DiffeoS::sample(GridPtr grid, const std::function<Param(const Param&)>& fn,
                        const std::function<void(const Param&, double*)>& jac) {
    std::size_t n = grid->size();
    int pd = grid->param_dim;
    std::vector<double> vals(n * pd);
    for (std::size_t i = 0; i < n; ++i) {
        Param t = fn(grid->node(i));
        if (pd == 1) {
            vals[i] = t[0];
        } else {
            vals[2 * i] = t[0];
            vals[2 * i + 1] = t[1];
        }
    }
    if (grid->manifold.kind == ManifoldKind::Circle) {
        // Lift to a monotone sequence.
        for (std::size_t i = 1; i < n; ++i) {
            while (vals[i] - vals[i - 1] > std::numbers::pi) vals[i] -= kTwoPi;
            while (vals[i] - vals[i - 1] < -std::numbers::pi) vals[i] += kTwoPi;
        }
    }
    std::vector<double> der;
    if (jac) {
        der.resize(n * (pd == 1 ? 1 : 4));
        for (std::size_t i = 0; i < n; ++i) jac(grid->node(i), der.data() + i * (pd == 1 ? 1 : 4));
    }
    return from_values(std::move(grid), std::move(vals), std::move(der));
}

void DiffeoS::ensure_cache() const {
    if (cache_) return;
    auto c = std::make_shared<Cache>();
    std::size_t n = size();
    if (grid->param_dim == 1) {
        bool circle = grid->manifold.kind == ManifoldKind::Circle;
        std::vector<double> v(n);
        double sign = orientation_sign;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = circle ? values[i] - sign * grid->nodes[i] : values[i];
        }
        auto closure = circle ? Interp1D::Closure::Periodic : Interp1D::Closure::NotAKnot;
        if (!derivs.empty() && !second.empty()) {
            std::vector<double> d(n), s2(second.begin(), second.end());
            for (std::size_t i = 0; i < n; ++i) d[i] = circle ? derivs[i] - sign : derivs[i];
            c->map = Interp1D::hermite(0.0, grid->spacing, std::move(v), std::move(d),
                                       std::move(s2), closure);
        } else if (!derivs.empty()) {
            std::vector<double> d(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = circle ? derivs[i] - sign : derivs[i];
            c->map = Interp1D::hermite(0.0, grid->spacing, std::move(v), std::move(d), closure);
        } else {
            c->map = Interp1D::spline(0.0, grid->spacing, std::move(v), closure);
        }
    } else {
        if (!derivs.empty()) {
            c->node_jacobians = derivs;
        } else {
            c->node_jacobians.resize(n * 4);
            std::vector<double> comp(n);
            for (int r = 0; r < 2; ++r) {
                for (std::size_t i = 0; i < n; ++i) comp[i] = values[2 * i + r];
                for (std::size_t i = 0; i < n; ++i) {
                    auto g = grid->fit_at_node(i, comp).grad();
                    c->node_jacobians[i * 4 + 2 * r + 0] = g[0];
                    c->node_jacobians[i * 4 + 2 * r + 1] = g[1];
                }
            }
        }
    }
    cache_ = std::move(c);
}

Param DiffeoS::eval(const Param& s) const {
    ensure_cache();
    if (grid->param_dim == 1) {
        if (grid->manifold.kind == ManifoldKind::Circle) {
            return {orientation_sign * s[0] + cache_->map.eval(s[0]), 0.0};
        }
        return {cache_->map.eval(s[0]), 0.0};
    }
    std::size_t nearest = grid->nearest_node(s);
    Param p = grid->node(nearest);
    if (std::hypot(p[0] - s[0], p[1] - s[1]) < 1e-12) {
        return {values[2 * nearest], values[2 * nearest + 1]};
    }
    auto idx = grid->k_nearest(s, 22);
    std::vector<double> pts(2 * idx.size()), vx(idx.size()), vy(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        pts[2 * t] = grid->nodes[2 * idx[t]];
        pts[2 * t + 1] = grid->nodes[2 * idx[t] + 1];
        vx[t] = values[2 * idx[t]];
        vy[t] = values[2 * idx[t] + 1];
    }
    return {fit_scattered({s[0], s[1]}, pts, vx, 3).value(),
            fit_scattered({s[0], s[1]}, pts, vy, 3).value()};
}

double DiffeoS::deriv1(double s) const {
    ensure_cache();
    double base = grid->manifold.kind == ManifoldKind::Circle ? orientation_sign : 0.0;
    return base + cache_->map.deriv(s);
}

double DiffeoS::second1(double s) const {
    ensure_cache();
    return cache_->map.deriv2(s);
}

void DiffeoS::jacobian(const Param& s, double* J) const {
    ensure_cache();
    std::size_t nearest = grid->nearest_node(s);
    Param p = grid->node(nearest);
    if (std::hypot(p[0] - s[0], p[1] - s[1]) < 1e-12) {
        std::copy_n(cache_->node_jacobians.data() + nearest * 4, 4, J);
        return;
    }
    auto idx = grid->k_nearest(s, 22);
    std::vector<double> pts(2 * idx.size()), v(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        pts[2 * t] = grid->nodes[2 * idx[t]];
        pts[2 * t + 1] = grid->nodes[2 * idx[t] + 1];
    }
    for (int r = 0; r < 2; ++r) {
        for (std::size_t t = 0; t < idx.size(); ++t) v[t] = values[2 * idx[t] + r];
        auto g = fit_scattered({s[0], s[1]}, pts, v, 3).grad();
        J[2 * r + 0] = g[0];
        J[2 * r + 1] = g[1];
    }
}

double DiffeoS::jacobian_det(const Param& s) const {
    if (grid->param_dim == 1) return deriv1(s[0]);
    double J[4];
    jacobian(s, J);
    return J[0] * J[3] - J[1] * J[2];
}

void DiffeoS::validate() const {
    std::size_t n = size();
    if (grid->manifold.kind == ManifoldKind::Interval01) {
        double a = values.front(), b = values.back();
        bool fwd = orientation_sign > 0;
        require((fwd && a == 0.0 && b == 1.0) || (!fwd && a == 1.0 && b == 0.0),
                ErrorCode::NotADiffeo, "interval diffeo must map boundary to boundary");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double d = values[i + 1] - values[i];
            require(fwd ? d > 0.0 : d < 0.0, ErrorCode::NotADiffeo,
                    "interval diffeo values are not strictly monotone");
        }
        for (double v : values) {
            require(v >= 0.0 && v <= 1.0, ErrorCode::NotADiffeo, "interval diffeo leaves [0,1]");
        }
        return;
    }
    if (grid->manifold.kind == ManifoldKind::Circle) {
        bool fwd = orientation_sign > 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double d = values[i + 1] - values[i];
            require(fwd ? d > 0.0 : d < 0.0, ErrorCode::NotADiffeo,
                    "circle diffeo lift is not strictly monotone");
        }
        double wind = values.back() - values.front();
        double expect = orientation_sign * (kTwoPi - grid->spacing);
        require(std::fabs(wind - expect) < kTwoPi / 2.0, ErrorCode::NotADiffeo,
                "circle diffeo winding is not +-1");
        return;
    }
    // Disk.
    ensure_cache();
    int sgn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* J = cache_->node_jacobians.data() + i * 4;
        double d = J[0] * J[3] - J[1] * J[2];
        int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
        require(s != 0, ErrorCode::NotADiffeo, "disk diffeo has a singular Jacobian node");
        if (sgn == 0) sgn = s;
        require(s == sgn, ErrorCode::NotADiffeo, "disk diffeo Jacobian changes sign");
    }
    // Boundary into boundary, with a monotone degree +-1 angular trace.
    std::vector<double> angles;
    angles.reserve(grid->boundary_count());
    for (std::size_t b : grid->boundary_nodes) {
        double x = values[2 * b], y = values[2 * b + 1];
        require(std::fabs(std::hypot(x, y) - 1.0) < 1e-7, ErrorCode::NotADiffeo,
                "disk diffeo does not preserve the boundary circle");
        angles.push_back(std::atan2(y, x));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        double d = angles[(i + 1) % angles.size()] - angles[i];
        while (d > std::numbers::pi) d -= kTwoPi;
        while (d < -std::numbers::pi) d += kTwoPi;
        require(sgn * d > 0.0, ErrorCode::NotADiffeo,
                "disk diffeo boundary trace is not monotone");
        total += d;
    }
    require(std::fabs(std::fabs(total) - kTwoPi) < 1e-6, ErrorCode::NotADiffeo,
            "disk diffeo boundary degree is not +-1");
}

bool DiffeoS::is_valid() const noexcept {
    try {
        validate();
        return true;
    } catch (...) {
        return false;
    }
}

Param DiffeoS::invert_point(const Param& target) const {
    ensure_cache();
    if (grid->manifold.kind == ManifoldKind::Interval01) {
        auto f = [this](double s) { return cache_->map.eval(s); };
        auto fp = [this](double s) { return cache_->map.deriv(s); };
        return {invert_monotone(f, fp, target[0], 0.0, 1.0), 0.0};
    }
    if (grid->manifold.kind == ManifoldKind::Circle) {
        double sign = orientation_sign;
        auto f = [this, sign](double s) { return sign * s + cache_->map.eval(s); };
        auto fp = [this, sign](double s) { return sign + cache_->map.deriv(s); };
        // phi(s) - sign*s is bounded by the deviation; bracket around the
        // rigid guess.
        double guess = sign * target[0];
        double lo = guess - std::numbers::pi, hi = guess + std::numbers::pi;
        double span = 0.0;
        for (double v : cache_->map.values()) span = std::max(span, std::fabs(v));
        lo -= span;
        hi += span;
        return {invert_monotone(f, fp, target[0], lo, hi), 0.0};
    }
    // Disk: Newton iteration on local fits, seeded at the node whose image is
    // nearest to the target.
    std::size_t n = size();
    std::size_t seed = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = values[2 * i] - target[0], dy = values[2 * i + 1] - target[1];
        double d = dx * dx + dy * dy;
        if (d < best) {
            best = d;
            seed = i;
        }
    }
    Param q = grid->node(seed);
    for (int iter = 0; iter < 40; ++iter) {
        Param fq = eval(q);
        double rx = fq[0] - target[0], ry = fq[1] - target[1];
        if (std::hypot(rx, ry) < 1e-13) break;
        double J[4];
        jacobian(q, J);
        double det = J[0] * J[3] - J[1] * J[2];
        if (std::fabs(det) < 1e-14) break;
        double dx = (J[3] * rx - J[1] * ry) / det;
        double dy = (-J[2] * rx + J[0] * ry) / det;
        q[0] -= dx;
        q[1] -= dy;
        double r = std::hypot(q[0], q[1]);
        if (r > 1.0) {
            q[0] /= r;
            q[1] /= r;
        }
        if (std::hypot(dx, dy) < 1e-14) break;
    }
    return q;
}

DiffeoS DiffeoS::inverse() const {
    std::size_t n = size();
    if (grid->param_dim == 1) {
        bool circle = grid->manifold.kind == ManifoldKind::Circle;
        std::vector<double> vals(n), d1(n), d2v(n);
        for (std::size_t i = 0; i < n; ++i) {
            Param s = invert_point(grid->node(i));
            vals[i] = s[0];
            double dp = deriv1(s[0]);
            double ddp = second1(s[0]);
            d1[i] = 1.0 / dp;
            d2v[i] = -ddp / (dp * dp * dp);
        }
        if (!circle) {
            // Endpoints are exact by the boundary-preservation invariant.
            if (orientation_sign > 0) {
                vals.front() = 0.0;
                vals.back() = 1.0;
            } else {
                vals.front() = 1.0;
                vals.back() = 0.0;
            }
        } else {
            for (std::size_t i = 1; i < n; ++i) {
                while (vals[i] - vals[i - 1] > std::numbers::pi) vals[i] -= kTwoPi;
                while (vals[i] - vals[i - 1] < -std::numbers::pi) vals[i] += kTwoPi;
            }
        }
        return from_values(grid, std::move(vals), std::move(d1), std::move(d2v));
    }
    std::vector<double> vals(2 * n), jac(4 * n);
    for (std::size_t i = 0; i < n; ++i) {
        Param s = invert_point(grid->node(i));
        vals[2 * i] = s[0];
        vals[2 * i + 1] = s[1];
        double J[4];
        jacobian(s, J);
        double det = J[0] * J[3] - J[1] * J[2];
        jac[4 * i + 0] = J[3] / det;
        jac[4 * i + 1] = -J[1] / det;
        jac[4 * i + 2] = -J[2] / det;
        jac[4 * i + 3] = J[0] / det;
    }
    return from_values(grid, std::move(vals), std::move(jac));
}

DiffeoS DiffeoS::compose(const DiffeoS& outer, const DiffeoS& inner) {
    require(same_grid(outer.grid, inner.grid), ErrorCode::GridMismatch,
            "composing diffeos on different grids");
    std::size_t n = inner.size();
    if (inner.grid->param_dim == 1) {
        std::vector<double> vals(n), d1(n), d2v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double t = inner.values[i];
            vals[i] = outer.eval({t, 0.0})[0];
            double ot = outer.deriv1(t), ott = outer.second1(t);
            double it = inner.deriv1(inner.grid->nodes[i]);
            double itt = inner.second1(inner.grid->nodes[i]);
            d1[i] = ot * it;
            d2v[i] = ott * it * it + ot * itt;
        }
        return from_values(inner.grid, std::move(vals), std::move(d1), std::move(d2v));
    }
    std::vector<double> vals(2 * n), jac(4 * n);
    for (std::size_t i = 0; i < n; ++i) {
        Param t = inner.node_target(i);
        Param o = outer.eval(t);
        vals[2 * i] = o[0];
        vals[2 * i + 1] = o[1];
        double Jo[4], Ji[4];
        outer.jacobian(t, Jo);
        inner.jacobian(inner.grid->node(i), Ji);
        jac[4 * i + 0] = Jo[0] * Ji[0] + Jo[1] * Ji[2];
        jac[4 * i + 1] = Jo[0] * Ji[1] + Jo[1] * Ji[3];
        jac[4 * i + 2] = Jo[2] * Ji[0] + Jo[3] * Ji[2];
        jac[4 * i + 3] = Jo[2] * Ji[1] + Jo[3] * Ji[3];
    }
    return from_values(inner.grid, std::move(vals), std::move(jac));
}

// ============================================================================
// Tangent fields, ambient densities
// ============================================================================

TangentField TangentField::zero(const Embedding& f) {
    return {f, std::vector<double>(f.size() * f.m(), 0.0)};
}

TangentField TangentField::sample(
    const Embedding& f, const std::function<void(const Param&, const double*, double*)>& v) {
    TangentField out{f, std::vector<double>(f.size() * f.m())};
    for (std::size_t i = 0; i < f.size(); ++i) {
        v(f.grid->node(i), f.point(i), out.vectors.data() + i * f.m());
    }
    return out;
}

AmbientDensity AmbientDensity::lebesgue() {
    AmbientDensity d;
    d.name = "lebesgue";
    d.value = [](std::span<const double>) { return 1.0; };
    d.gradient = [](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
    };
    return d;
}

AmbientDensity AmbientDensity::linear(double c0, std::vector<double> slope) {
    AmbientDensity d;
    d.name = "linear";
    d.value = [c0, slope](std::span<const double> x) {
        double acc = c0;
        for (std::size_t i = 0; i < x.size() && i < slope.size(); ++i) acc += slope[i] * x[i];
        return acc;
    };
    d.gradient = [slope](std::span<const double>, std::span<double> g) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = i < slope.size() ? slope[i] : 0.0;
    };
    return d;
}

void AmbientDensity::grad(std::span<const double> x, std::span<double> g) const {
    if (gradient) {
        gradient(x, g);
        return;
    }
    std::vector<double> xp(x.begin(), x.end());
    const double h = 1e-6;
    for (std::size_t i = 0; i < g.size(); ++i) {
        xp[i] = x[i] + h;
        double fp = value(xp);
        xp[i] = x[i] - h;
        double fm = value(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
}

// ============================================================================
// Operations
// ============================================================================

Embedding compose_reparam(const Embedding& f, const DiffeoS& phi) {
    require(same_grid(f.grid, phi.grid), ErrorCode::GridMismatch,
            "embedding and diffeo live on different grids");
    phi.validate();
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    std::vector<double> vals(n * m), ders(n * k * m);
    std::vector<double> J(k > 1 ? 3 * static_cast<std::size_t>(m) : static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < n; ++i) {
        Param t = phi.node_target(i);
        f.eval(t, vals.data() + i * m);
        if (k == 1) {
            f.jacobian(t, J.data());
            double dp = phi.deriv1(phi.grid->nodes[i]);
            for (int r = 0; r < m; ++r) ders[i * m + r] = J[r] * dp;
        } else {
            double Jf[6];
            f.jacobian(t, Jf);
            double Jp[4];
            phi.jacobian(phi.grid->node(i), Jp);
            // d(f o phi)/ds_a = sum_b df/dt_b * dphi_b/ds_a
            for (int r = 0; r < m; ++r) {
                ders[i * k * m + 0 * m + r] = Jf[0 * m + r] * Jp[0] + Jf[1 * m + r] * Jp[2];
                ders[i * k * m + 1 * m + r] = Jf[0 * m + r] * Jp[1] + Jf[1 * m + r] * Jp[3];
            }
        }
    }
    return Embedding::from_nodes(f.grid, m, std::move(vals), std::move(ders));
}

EmbeddingDiagnosis check_embedding(const Embedding& f, const EmbeddingTolerances& tol) {
    EmbeddingDiagnosis diag;
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    double tol_rank = tol.rank.value_or(1e-6 * f.grid->spacing);

    std::vector<double> J(static_cast<std::size_t>(k) * m);
    diag.min_singular_value = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        double s = min_singular(J.data(), m, k);
        diag.min_singular_value = std::min(diag.min_singular_value, s);
        if (s <= tol_rank) diag.immersion_nodes.push_back(i);
    }

    // Non-neighbor separation via a uniform spatial hash at the separation
    // scale.
    double min_nb = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : f.grid->neighbors(i)) {
            if (j <= i) continue;
            double d2 = 0.0;
            for (int r = 0; r < m; ++r) {
                double d = f.point(i)[r] - f.point(j)[r];
                d2 += d * d;
            }
            min_nb = std::min(min_nb, std::sqrt(d2));
        }
    }
    double tol_sep = tol.separation.value_or(0.5 * min_nb);
    double cell = std::max(tol_sep, 1e-12);
    auto key_of = [&](const double* p) {
        long long kx = static_cast<long long>(std::floor(p[0] / cell));
        long long ky = m > 1 ? static_cast<long long>(std::floor(p[1] / cell)) : 0;
        long long kz = m > 2 ? static_cast<long long>(std::floor(p[2] / cell)) : 0;
        return (kx * 73856093LL) ^ (ky * 19349663LL) ^ (kz * 83492791LL);
    };
    std::unordered_multimap<long long, std::size_t> hash;
    hash.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) hash.emplace(key_of(f.point(i)), i);
    diag.min_nonneighbor_separation = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        const double* pi = f.point(i);
        long long kx = static_cast<long long>(std::floor(pi[0] / cell));
        long long ky = m > 1 ? static_cast<long long>(std::floor(pi[1] / cell)) : 0;
        long long kz = m > 2 ? static_cast<long long>(std::floor(pi[2] / cell)) : 0;
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = (m > 1 ? -1 : 0); dy <= (m > 1 ? 1 : 0); ++dy)
                for (long long dz = (m > 2 ? -1 : 0); dz <= (m > 2 ? 1 : 0); ++dz) {
                    long long key = ((kx + dx) * 73856093LL) ^ ((ky + dy) * 19349663LL) ^
                                    ((kz + dz) * 83492791LL);
                    auto range = hash.equal_range(key);
                    for (auto it = range.first; it != range.second; ++it) {
                        std::size_t j = it->second;
                        if (j <= i || f.grid->are_neighbors(i, j)) continue;
                        double d2 = 0.0;
                        for (int r = 0; r < m; ++r) {
                            double d = pi[r] - f.point(j)[r];
                            d2 += d * d;
                        }
                        double d = std::sqrt(d2);
                        diag.min_nonneighbor_separation =
                            std::min(diag.min_nonneighbor_separation, d);
                        if (d <= tol_sep) diag.injectivity_pairs.emplace_back(i, j);
                    }
                }
    }
    if (!diag.immersion_nodes.empty()) {
        diag.status = EmbeddingDiagnosis::Status::ImmersionFailure;
    } else if (!diag.injectivity_pairs.empty()) {
        diag.status = EmbeddingDiagnosis::Status::InjectivityFailure;
    }
    return diag;
}

void require_embedding(const Embedding& f) {
    auto diag = check_embedding(f);
    require(diag.status != EmbeddingDiagnosis::Status::ImmersionFailure,
            ErrorCode::NotAnImmersion, "Jacobian loses rank at a node");
    require(diag.ok(), ErrorCode::NotAnEmbedding, "discrete injectivity fails");
}

DensityForm induced_volume(const Embedding& f) {
    auto diag = check_embedding(f);
    require(diag.status != EmbeddingDiagnosis::Status::ImmersionFailure,
            ErrorCode::NotAnImmersion, "induced volume needs an immersion");
    const int m = f.m(), k = f.k();
    std::size_t n = f.size();
    std::vector<double> vals(n);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        vals[i] = std::sqrt(gram_det(J.data(), m, k));
    }
    return DensityForm::top(f.grid, std::move(vals));
}

DensityForm pullback_volume(const Embedding& f, const AmbientDensity& mu_M) {
    const int m = f.m(), k = f.k();
    require(k == m, ErrorCode::DimensionMismatch,
            "pullback of an ambient volume needs dim S = dim M");
    std::size_t n = f.size();
    std::vector<double> vals(n);
    std::vector<double> J(static_cast<std::size_t>(k) * m);
    for (std::size_t i = 0; i < n; ++i) {
        f.node_jacobian(i, J.data());
        double det = (m == 1) ? J[0] : det2(J.data(), m);
        vals[i] = det * mu_M.eval(std::span<const double>(f.point(i), m));
    }
    return DensityForm::top(f.grid, std::move(vals));
}

double ImageDensity::total_mass() const {
    return integrate(rep.grid, DensityForm::top(rep.grid, pullback));
}

std::vector<double> ImageDensity::per_induced_volume() const {
    auto vol = induced_volume(rep);
    std::vector<double> out(pullback.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pullback[i] / vol.values[i];
    return out;
}

ImageDensity pushforward_density(const Embedding& f, const DensityForm& rho) {
    require(same_grid(f.grid, rho.grid), ErrorCode::GridMismatch,
            "density and embedding grids differ");
    require(rho.degree == FormDegree::Top, ErrorCode::DimensionMismatch,
            "pushforward needs a top-degree density");
    auto diag = check_embedding(f);
    require(diag.status != EmbeddingDiagnosis::Status::ImmersionFailure,
            ErrorCode::NotAnImmersion, "pushforward needs an immersion");
    return {f, rho.values};
}

DensityForm pullback_density(const ImageDensity& nu) {
    return DensityForm::top(nu.rep.grid, nu.pullback);
}

ImageDensity reparam_image_density(const ImageDensity& nu, const DiffeoS& phi) {
    Embedding rep2 = compose_reparam(nu.rep, phi);
    DensityForm pb = pullback_by_diffeo(pullback_density(nu), phi);
    return {std::move(rep2), std::move(pb.values)};
}

DensityForm pushforward_by_diffeo(const DensityForm& rho, const DiffeoS& phi) {
    require(same_grid(rho.grid, phi.grid), ErrorCode::GridMismatch,
            "density and diffeo grids differ");
    require(rho.degree == FormDegree::Top, ErrorCode::DimensionMismatch,
            "diffeo pushforward needs a top-degree density");
    const GridPtr& g = rho.grid;
    std::size_t n = g->size();
    std::vector<double> vals(n);
    if (g->param_dim == 1) {
        auto interp = grid_interp(g, rho.values);
        for (std::size_t i = 0; i < n; ++i) {
            Param s = phi.invert_point(g->node(i));
            vals[i] = interp.eval(s[0]) / phi.deriv1(s[0]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            Param s = phi.invert_point(g->node(i));
            double v = g->fit_at_point(s, rho.values).value();
            vals[i] = v / phi.jacobian_det(s);
        }
    }
    return DensityForm::top(g, std::move(vals));
}

DensityForm pullback_by_diffeo(const DensityForm& rho, const DiffeoS& phi) {
    require(same_grid(rho.grid, phi.grid), ErrorCode::GridMismatch,
            "density and diffeo grids differ");
    require(rho.degree == FormDegree::Top, ErrorCode::DimensionMismatch,
            "diffeo pullback needs a top-degree density");
    const GridPtr& g = rho.grid;
    std::size_t n = g->size();
    std::vector<double> vals(n);
    if (g->param_dim == 1) {
        auto interp = grid_interp(g, rho.values);
        for (std::size_t i = 0; i < n; ++i) {
            double t = phi.values[i];
            vals[i] = interp.eval(t) * phi.deriv1(g->nodes[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            Param t = phi.node_target(i);
            double v = g->fit_at_point(t, rho.values).value();
            vals[i] = v * phi.jacobian_det(g->node(i));
        }
    }
    return DensityForm::top(g, std::move(vals));
}

double image_hausdorff(const Embedding& a, const Embedding& b, int dense) {
    auto samples = [&](const Embedding& f) {
        std::vector<double> pts;
        const int m = f.m();
        if (f.grid->param_dim == 1) {
            bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
            double span = circle ? kTwoPi : 1.0;
            int cnt = dense;
            pts.resize(static_cast<std::size_t>(cnt) * m);
            std::vector<double> p(m);
            for (int i = 0; i < cnt; ++i) {
                double s = circle ? span * i / cnt : span * i / (cnt - 1);
                f.eval({s, 0.0}, p.data());
                std::copy(p.begin(), p.end(), pts.begin() + static_cast<std::size_t>(i) * m);
            }
        } else {
            pts.assign(f.values.begin(), f.values.end());
        }
        return pts;
    };
    const int m = a.m();
    if (a.grid->param_dim == 1) {
        // Distance from dense samples of one curve to the other curve's
        // interpolant, refined by Gauss-Newton from the best node seed; this
        // avoids the chord-sag floor of a polyline comparison.
        auto one_sided = [&](const Embedding& p, const Embedding& q) {
            bool circle = p.grid->manifold.kind == ManifoldKind::Circle;
            double span = circle ? kTwoPi : 1.0;
            std::size_t nq = q.size();
            double lo = 0.0, hi = circle ? kTwoPi : 1.0;
            double worst = 0.0;
            std::vector<double> x(m), F(m), J(m), S(m);
            for (int i = 0; i < dense; ++i) {
                double sp = circle ? span * i / dense : span * i / (dense - 1);
                p.eval({sp, 0.0}, x.data());
                double best = 1e300, seed = 0.0;
                for (std::size_t j = 0; j < nq; ++j) {
                    double d2 = 0.0;
                    for (int r = 0; r < m; ++r) {
                        double d = q.point(j)[r] - x[r];
                        d2 += d * d;
                    }
                    if (d2 < best) {
                        best = d2;
                        seed = q.grid->nodes[j];
                    }
                }
                double t = seed;
                for (int it = 0; it < 25; ++it) {
                    q.eval({t, 0.0}, F.data());
                    q.jacobian({t, 0.0}, J.data());
                    q.second_derivs({t, 0.0}, S.data());
                    double g = 0.0, H = 0.0;
                    for (int r = 0; r < m; ++r) {
                        g += (F[r] - x[r]) * J[r];
                        H += J[r] * J[r] + (F[r] - x[r]) * S[r];
                    }
                    if (std::fabs(H) < 1e-300) break;
                    double step = std::clamp(-g / H, -2.0 * q.grid->spacing,
                                             2.0 * q.grid->spacing);
                    t += step;
                    if (!circle) t = std::clamp(t, lo, hi);
                    if (std::fabs(step) < 1e-15) break;
                }
                q.eval({t, 0.0}, F.data());
                double d2 = 0.0;
                for (int r = 0; r < m; ++r) d2 += (F[r] - x[r]) * (F[r] - x[r]);
                worst = std::max(worst, d2);
            }
            return std::sqrt(worst);
        };
        return std::max(one_sided(a, b), one_sided(b, a));
    }
    std::vector<double> pa = samples(a), pb = samples(b);
    auto one_sided_cloud = [&](const std::vector<double>& p, const std::vector<double>& q) {
        double worst = 0.0;
        std::size_t np = p.size() / m, nq = q.size() / m;
        for (std::size_t i = 0; i < np; ++i) {
            double best = 1e300;
            for (std::size_t j = 0; j < nq; ++j) {
                double d2 = 0.0;
                for (int r = 0; r < m; ++r) {
                    double d = p[i * m + r] - q[j * m + r];
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(one_sided_cloud(pa, pb), one_sided_cloud(pb, pa));
}

}  // namespace nlg
