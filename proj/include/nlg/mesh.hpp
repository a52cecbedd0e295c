#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "nlg/errors.hpp"
#include "nlg/fit2d.hpp"
#include "nlg/interp.hpp"

namespace nlg {

enum class ManifoldKind { Interval01, Circle, ClosedDisk };

const char* manifold_kind_name(ManifoldKind kind);

/// Parameter manifold S: interval, circle, or closed unit disk.
struct ParamManifold {
    ManifoldKind kind;
    int intrinsic_dim;

    bool has_boundary() const { return kind != ManifoldKind::Circle; }

    static ParamManifold of(ManifoldKind kind) {
        return {kind, kind == ManifoldKind::ClosedDisk ? 2 : 1};
    }
};

/// Parameter point: s for the interval, angle for the circle, (x, y) for the
/// disk. Unused slots are zero.
using Param = std::array<double, 2>;

/// Discretization of a parameter manifold with positive quadrature weights.
///
/// Node layouts: equispaced on the interval (resolution = node count),
/// uniform angles on the circle (resolution = node count), and polar rings on
/// the disk (resolution = ring count, ring j carrying about 2*pi*j nodes so
/// cells have comparable area; quadrature weights are exact cell areas).
/// Immutable after construction; share via GridPtr.
class SampleGrid {
  public:
    ParamManifold manifold;
    int resolution = 0;
    int param_dim = 1;
    std::vector<double> nodes;  // size() * param_dim, flat
    std::vector<std::size_t> boundary_nodes;
    std::vector<double> quad_weights;
    std::vector<double> boundary_quad_weights;
    double spacing = 0.0;  // radial/param spacing h

    // Disk ring structure (empty for 1-D kinds). Ring 0 is the center node.
    std::vector<int> ring_counts;
    std::vector<std::size_t> ring_offsets;
    std::vector<double> ring_radii;

    std::size_t size() const { return nodes.size() / static_cast<std::size_t>(param_dim); }
    Param node(std::size_t i) const {
        return param_dim == 1 ? Param{nodes[i], 0.0} : Param{nodes[2 * i], nodes[2 * i + 1]};
    }
    bool is_boundary(std::size_t i) const;
    std::size_t boundary_count() const { return boundary_nodes.size(); }

    /// Grid adjacency (ring and angular neighbors on the disk; index
    /// neighbors on 1-D kinds). Used by separation checks and stencils.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
    bool are_neighbors(std::size_t i, std::size_t j) const;

    /// k nearest nodes to a parameter-space point (disk only).
    std::vector<std::size_t> k_nearest(const Param& q, std::size_t k) const;
    std::size_t nearest_node(const Param& q) const;

    /// Cached least-squares stencil at a node (disk only): indices plus the
    /// operator mapping stencil values to cubic fit coefficients at the node.
    struct NodeStencil {
        std::vector<std::size_t> indices;
        std::vector<double> op;  // fit_term_count(3) x indices.size(), row-major
    };
    const NodeStencil& node_stencil(std::size_t i) const { return stencils_[i]; }
    Fit2D fit_at_node(std::size_t i, std::span<const double> values) const;
    Fit2D fit_at_point(const Param& q, std::span<const double> values, int degree = 3) const;

    /// Angles of the disk boundary nodes, increasing in [0, 2*pi).
    std::vector<double> boundary_angles() const;

    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<NodeStencil> stencils_;
};

using GridPtr = std::shared_ptr<const SampleGrid>;

GridPtr build_grid(ManifoldKind kind, int resolution);

bool same_grid(const GridPtr& a, const GridPtr& b);

enum class FormDegree { Top, Boundary };

/// Discrete density on S (degree k, values per node against the reference
/// coordinates) or on the boundary (degree k-1, values per boundary node
/// against the reference boundary measure).
struct DensityForm {
    GridPtr grid;
    FormDegree degree = FormDegree::Top;
    std::vector<double> values;

    static DensityForm top(GridPtr grid, std::vector<double> values);
    static DensityForm boundary(GridPtr grid, std::vector<double> values);
    static DensityForm uniform(GridPtr grid, double value = 1.0);

    bool is_volume_form() const;  // finite values of one strict sign
    int sign() const;             // sign of the values (volume forms)
};

void require_volume_form(const DensityForm& d, const char* what);

double integrate(const GridPtr& grid, const DensityForm& density);

std::vector<double> boundary_restrict(const GridPtr& grid, std::span<const double> field);

/// Cubic-spline interpolant of nodal values on a 1-D grid (periodic closure
/// on the circle). For the disk use SampleGrid::fit_at_point.
Interp1D grid_interp(const GridPtr& grid, std::span<const double> values);

/// Interpolant of boundary values on the disk boundary circle (angle ->
/// value, periodic).
Interp1D boundary_interp(const GridPtr& grid, std::span<const double> boundary_values);

}  // namespace nlg
