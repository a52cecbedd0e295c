#include "nlg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "nlg/kernels.hpp"

namespace nlg {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

const char* manifold_kind_name(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::Interval01: return "interval01";
        case ManifoldKind::Circle: return "circle";
        case ManifoldKind::ClosedDisk: return "closed_disk";
    }
    return "?";
}

bool SampleGrid::is_boundary(std::size_t i) const {
    switch (manifold.kind) {
        case ManifoldKind::Interval01: return i == 0 || i + 1 == size();
        case ManifoldKind::Circle: return false;
        case ManifoldKind::ClosedDisk: return i >= ring_offsets.back();
    }
    return false;
}

bool SampleGrid::are_neighbors(std::size_t i, std::size_t j) const {
    if (i == j) return true;
    const auto& nb = neighbors_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t SampleGrid::nearest_node(const Param& q) const {
    if (manifold.kind == ManifoldKind::Interval01) {
        double t = std::clamp(q[0], 0.0, 1.0) / spacing;
        return static_cast<std::size_t>(std::llround(t));
    }
    if (manifold.kind == ManifoldKind::Circle) {
        double t = std::fmod(q[0], kTwoPi);
        if (t < 0) t += kTwoPi;
        auto i = static_cast<std::size_t>(std::llround(t / spacing));
        return i % size();
    }
    auto cand = k_nearest(q, 1);
    return cand[0];
}

std::vector<std::size_t> SampleGrid::k_nearest(const Param& q, std::size_t k) const {
    // Disk: scan rings around the query radius, widening until enough
    // candidates were seen.
    const int nr = static_cast<int>(ring_radii.size()) - 1;
    double r = std::hypot(q[0], q[1]);
    double th = std::atan2(q[1], q[0]);
    if (th < 0) th += kTwoPi;
    int jq = std::clamp(static_cast<int>(std::llround(r / spacing)), 0, nr);

    std::vector<std::pair<double, std::size_t>> cand;
    int width = 2;
    while (true) {
        cand.clear();
        for (int j = std::max(0, jq - width); j <= std::min(nr, jq + width); ++j) {
            int mj = ring_counts[j];
            std::size_t off = ring_offsets[j];
            if (j == 0) {
                cand.emplace_back(std::hypot(q[0], q[1]), off);
                continue;
            }
            // Angular window proportional to the needed count.
            int ic = static_cast<int>(std::llround(th * mj / kTwoPi));
            int halfwin = std::min(mj / 2, std::max(3, static_cast<int>(k) + 2));
            for (int di = -halfwin; di <= halfwin; ++di) {
                int ii = ((ic + di) % mj + mj) % mj;
                std::size_t idx = off + static_cast<std::size_t>(ii);
                double dx = nodes[2 * idx] - q[0], dy = nodes[2 * idx + 1] - q[1];
                cand.emplace_back(std::hypot(dx, dy), idx);
            }
        }
        if (cand.size() >= k || width >= nr + 1) break;
        ++width;
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(),
                           [](const auto& a, const auto& b) { return a.second == b.second; }),
               cand.end());
    std::vector<std::size_t> out;
    out.reserve(std::min(k, cand.size()));
    for (std::size_t i = 0; i < cand.size() && out.size() < k; ++i) out.push_back(cand[i].second);
    return out;
}

Fit2D SampleGrid::fit_at_node(std::size_t i, std::span<const double> values) const {
    const NodeStencil& st = stencils_[i];
    const std::size_t n = st.indices.size();
    const std::size_t terms = fit_term_count(3);
    Fit2D fit;
    fit.degree = 3;
    for (std::size_t t = 0; t < terms; ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n; ++s) acc += st.op[t * n + s] * values[st.indices[s]];
        fit.c[t] = acc;
    }
    return fit;
}

Fit2D SampleGrid::fit_at_point(const Param& q, std::span<const double> values, int degree) const {
    std::size_t want = degree >= 3 ? 22 : 13;
    auto idx = k_nearest(q, want);
    std::vector<double> pts(2 * idx.size()), vals(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s) {
        pts[2 * s] = nodes[2 * idx[s]];
        pts[2 * s + 1] = nodes[2 * idx[s] + 1];
        vals[s] = values[idx[s]];
    }
    return fit_scattered({q[0], q[1]}, pts, vals, degree);
}

std::vector<double> SampleGrid::boundary_angles() const {
    std::vector<double> out(boundary_nodes.size());
    int m = ring_counts.back();
    for (int i = 0; i < m; ++i) out[i] = kTwoPi * i / m;
    return out;
}

namespace {

void build_interval(SampleGrid& g, int n) {
    g.param_dim = 1;
    g.spacing = 1.0 / (n - 1);
    g.nodes.resize(n);
    for (int i = 0; i < n; ++i) g.nodes[i] = static_cast<double>(i) / (n - 1);
    g.nodes[n - 1] = 1.0;
    g.boundary_nodes = {0, static_cast<std::size_t>(n - 1)};
    g.quad_weights.assign(n, g.spacing);
    g.quad_weights.front() = g.quad_weights.back() = g.spacing / 2.0;
    g.boundary_quad_weights = {1.0, 1.0};
    g.neighbors_.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0) g.neighbors_[i].push_back(i - 1);
        if (i + 1 < n) g.neighbors_[i].push_back(i + 1);
    }
}

void build_circle(SampleGrid& g, int n) {
    g.param_dim = 1;
    g.spacing = kTwoPi / n;
    g.nodes.resize(n);
    for (int i = 0; i < n; ++i) g.nodes[i] = kTwoPi * i / n;
    g.quad_weights.assign(n, g.spacing);
    g.neighbors_.resize(n);
    for (int i = 0; i < n; ++i) {
        g.neighbors_[i].push_back((i + n - 1) % n);
        g.neighbors_[i].push_back((i + 1) % n);
    }
}

void build_disk(SampleGrid& g, int rings) {
    g.param_dim = 2;
    const int R = rings;
    const double h = 1.0 / R;
    g.spacing = h;
    g.ring_counts.resize(R + 1);
    g.ring_offsets.resize(R + 1);
    g.ring_radii.resize(R + 1);
    g.ring_counts[0] = 1;
    g.ring_offsets[0] = 0;
    g.ring_radii[0] = 0.0;
    std::size_t total = 1;
    for (int j = 1; j <= R; ++j) {
        g.ring_counts[j] = std::max(6, static_cast<int>(std::llround(kTwoPi * j)));
        g.ring_offsets[j] = total;
        g.ring_radii[j] = (j == R) ? 1.0 : h * j;
        total += g.ring_counts[j];
    }
    g.nodes.resize(2 * total);
    g.quad_weights.resize(total);
    // Cell radial edges: center cell [0, h/2], ring j cell
    // [(j-1/2)h, (j+1/2)h], boundary cell [(R-1/2)h, 1]. Weights are exact
    // annular-sector areas so they sum to pi.
    g.nodes[0] = g.nodes[1] = 0.0;
    g.quad_weights[0] = kPi * (h / 2) * (h / 2);
    for (int j = 1; j <= R; ++j) {
        double inner = h * (j - 0.5);
        double outer = (j == R) ? 1.0 : h * (j + 0.5);
        int mj = g.ring_counts[j];
        double w = kPi * (outer * outer - inner * inner) / mj;
        double rj = g.ring_radii[j];
        for (int i = 0; i < mj; ++i) {
            std::size_t idx = g.ring_offsets[j] + i;
            double th = kTwoPi * i / mj;
            g.nodes[2 * idx] = rj * std::cos(th);
            g.nodes[2 * idx + 1] = rj * std::sin(th);
            g.quad_weights[idx] = w;
        }
    }
    int mb = g.ring_counts[R];
    g.boundary_nodes.resize(mb);
    for (int i = 0; i < mb; ++i) g.boundary_nodes[i] = g.ring_offsets[R] + i;
    g.boundary_quad_weights.assign(mb, kTwoPi / mb);

    // Adjacency: angular neighbors within a ring plus the two angularly
    // nearest nodes on each adjacent ring.
    g.neighbors_.resize(total);
    auto add_adjacent_ring = [&](std::size_t idx, double th, int j) {
        if (j < 0 || j > R) return;
        if (j == 0) {
            g.neighbors_[idx].push_back(0);
            return;
        }
        int mj = g.ring_counts[j];
        double t = th * mj / kTwoPi;
        int lo = static_cast<int>(std::floor(t));
        for (int di = 0; di <= 1; ++di) {
            int ii = ((lo + di) % mj + mj) % mj;
            g.neighbors_[idx].push_back(g.ring_offsets[j] + static_cast<std::size_t>(ii));
        }
    };
    for (int i = 0; i < g.ring_counts[1]; ++i) g.neighbors_[0].push_back(g.ring_offsets[1] + i);
    for (int j = 1; j <= R; ++j) {
        int mj = g.ring_counts[j];
        for (int i = 0; i < mj; ++i) {
            std::size_t idx = g.ring_offsets[j] + i;
            double th = kTwoPi * i / mj;
            g.neighbors_[idx].push_back(g.ring_offsets[j] + (i + 1) % mj);
            g.neighbors_[idx].push_back(g.ring_offsets[j] + (i + mj - 1) % mj);
            add_adjacent_ring(idx, th, j - 1);
            add_adjacent_ring(idx, th, j + 1);
        }
    }
    for (auto& nb : g.neighbors_) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }

    // Cubic fit stencils at every node: two graph hops, topped up with
    // nearest nodes when thin.
    g.stencils_.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::set<std::size_t> sel(g.neighbors_[i].begin(), g.neighbors_[i].end());
        sel.insert(i);
        for (std::size_t nb : g.neighbors_[i])
            for (std::size_t nb2 : g.neighbors_[nb]) sel.insert(nb2);
        if (sel.size() < 22) {
            for (std::size_t extra : g.k_nearest(g.node(i), 26)) sel.insert(extra);
        }
        SampleGrid::NodeStencil st;
        st.indices.assign(sel.begin(), sel.end());
        std::vector<double> pts(2 * st.indices.size());
        for (std::size_t s = 0; s < st.indices.size(); ++s) {
            pts[2 * s] = g.nodes[2 * st.indices[s]];
            pts[2 * s + 1] = g.nodes[2 * st.indices[s] + 1];
        }
        st.op.resize(fit_term_count(3) * st.indices.size());
        fit_operator({g.nodes[2 * i], g.nodes[2 * i + 1]}, pts, 3, st.op);
        g.stencils_[i] = std::move(st);
    }
}

}  // namespace

GridPtr build_grid(ManifoldKind kind, int resolution) {
    require(resolution >= 4, ErrorCode::InvalidResolution,
            "resolution must be at least 4, got " + std::to_string(resolution));
    auto g = std::make_shared<SampleGrid>();
    g->manifold = ParamManifold::of(kind);
    g->resolution = resolution;
    switch (kind) {
        case ManifoldKind::Interval01: build_interval(*g, resolution); break;
        case ManifoldKind::Circle: build_circle(*g, resolution); break;
        case ManifoldKind::ClosedDisk: build_disk(*g, resolution); break;
    }
    return g;
}

bool same_grid(const GridPtr& a, const GridPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return a->manifold.kind == b->manifold.kind && a->resolution == b->resolution;
}

DensityForm DensityForm::top(GridPtr grid, std::vector<double> values) {
    require(values.size() == grid->size(), ErrorCode::GridMismatch,
            "density values do not match grid size");
    return {std::move(grid), FormDegree::Top, std::move(values)};
}

DensityForm DensityForm::boundary(GridPtr grid, std::vector<double> values) {
    require(grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "boundary density on a boundaryless manifold");
    require(values.size() == grid->boundary_count(), ErrorCode::GridMismatch,
            "boundary density values do not match boundary node count");
    return {std::move(grid), FormDegree::Boundary, std::move(values)};
}

DensityForm DensityForm::uniform(GridPtr grid, double value) {
    std::vector<double> v(grid->size(), value);
    return {std::move(grid), FormDegree::Top, std::move(v)};
}

bool DensityForm::is_volume_form() const {
    if (values.empty()) return false;
    bool pos = values[0] > 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) return false;
        if (pos ? (v <= 0.0) : (v >= 0.0)) return false;
    }
    return true;
}

int DensityForm::sign() const { return values.empty() || values[0] >= 0.0 ? 1 : -1; }

void require_volume_form(const DensityForm& d, const char* what) {
    require(d.is_volume_form(), ErrorCode::NotAVolumeForm,
            std::string(what) + " must have finite values of one strict sign");
}

double integrate(const GridPtr& grid, const DensityForm& density) {
    require(same_grid(grid, density.grid), ErrorCode::GridMismatch,
            "density lives on a different grid");
    if (density.degree == FormDegree::Top) {
        return kernels::dot(grid->quad_weights, density.values);
    }
    require(grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "boundary integral on a boundaryless manifold");
    return kernels::dot(grid->boundary_quad_weights, density.values);
}

std::vector<double> boundary_restrict(const GridPtr& grid, std::span<const double> field) {
    require(grid->manifold.has_boundary(), ErrorCode::NoBoundary,
            "boundary restriction on a boundaryless manifold");
    require(field.size() == grid->size(), ErrorCode::GridMismatch,
            "field does not match grid size");
    std::vector<double> out(grid->boundary_count());
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = field[grid->boundary_nodes[b]];
    return out;
}

Interp1D grid_interp(const GridPtr& grid, std::span<const double> values) {
    require(grid->param_dim == 1, ErrorCode::Unsupported, "grid_interp needs a 1-D grid");
    require(values.size() == grid->size(), ErrorCode::GridMismatch, "values/grid size mismatch");
    std::vector<double> v(values.begin(), values.end());
    if (grid->manifold.kind == ManifoldKind::Circle) {
        return Interp1D::spline(0.0, grid->spacing, std::move(v), Interp1D::Closure::Periodic);
    }
    return Interp1D::spline(0.0, grid->spacing, std::move(v), Interp1D::Closure::NotAKnot);
}

Interp1D boundary_interp(const GridPtr& grid, std::span<const double> boundary_values) {
    require(grid->manifold.kind == ManifoldKind::ClosedDisk, ErrorCode::Unsupported,
            "boundary_interp is a disk operation");
    require(boundary_values.size() == grid->boundary_count(), ErrorCode::GridMismatch,
            "boundary values size mismatch");
    std::vector<double> v(boundary_values.begin(), boundary_values.end());
    int m = grid->ring_counts.back();
    return Interp1D::spline(0.0, kTwoPi / m, std::move(v), Interp1D::Closure::Periodic);
}

}  // namespace nlg
