#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nlg/embedding.hpp"
#include "nlg/interp.hpp"
#include "nlg/mesh.hpp"

namespace nlg {

/// Collar bump profile: rho(0) = 1, rho == 0 on (-inf, -1], 0 <= rho' <= 2.
/// The default is a C^2 quintic smoothstep on [-1, 0], constant 1 to the
/// right (max slope 15/8). The constraints are validated numerically rather
/// than assumed.
class BumpFunction {
  public:
    enum class Kind { QuinticSmoothstep, LinearRamp };
    Kind kind = Kind::QuinticSmoothstep;

    static BumpFunction quintic() { return {}; }
    static BumpFunction linear_ramp() { return {Kind::LinearRamp}; }

    double eval(double t) const;
    double deriv(double t) const;

    struct Report {
        bool ok = false;
        double value_at_zero = 0.0;
        double max_left_tail = 0.0;  // sup |rho| on [-1.5, -1]
        double min_slope = 0.0;
        double max_slope = 0.0;
    };
    /// Samples rho' on a 1e-3 grid over [-1.5, 0.5] and checks the stated
    /// constraints.
    Report validate() const;

    std::string name() const;
};

/// Result of projecting an ambient point into the tube: base parameter (in
/// extended coordinates, possibly outside S), frame coordinates of the normal
/// offset, and the distance to the base.
struct ProjectionResult {
    Param param{};
    std::array<double, 2> normal_coords{};  // m-k entries used
    double distance = 0.0;
    bool inside_S = true;
};

/// Step II output: per-node targets in extended parameters, identity outside
/// the collar (bit-exact), plus the monotonicity report for every lambda_a.
struct BoundaryShift {
    std::vector<double> target_params;  // n * param_dim, extended coordinates
    std::vector<double> section;        // collar-convention values a(b) per boundary node
    double min_lambda_slope = 0.0;
    bool localized = true;
};

/// Step III output: per-node orthogonal maps between normal spaces along the
/// shift, plus the frames at the shifted base points.
struct FrameTransport {
    std::vector<double> rotations;      // n * (m-k)^2, row-major
    std::vector<double> target_frames;  // n * (m-k) * m
    std::vector<double> target_params;  // copy of the shift targets
};

/// Tubular-neighborhood data around a base embedding: orthonormal normal
/// frames with a continuous orientation (also on the extension through the
/// boundary), outward conormal frames on the boundary, collar coordinates,
/// and the radii delta (tube) / eps (collar).
///
/// The ambient exponential is the Euclidean straight line, and the extension
/// of the base through its boundary extrapolates the interpolation basis of
/// f0; both recover the flat constructions exactly on affine bases.
class TubularChart {
  public:
    Embedding f0;
    double delta = 0.0;
    double eps = 0.0;
    BumpFunction bump;
    double reach_estimate = 0.0;

    std::vector<double> normal_frames;  // n * (m-k) * m
    std::vector<double> dagger;         // boundary_count * m, outward unit conormal
    // Sign relating the public sigma-dagger coordinate to the outward collar
    // coordinate. The interval chart follows the flat closed-form convention
    // (components measured along the oriented tangent), so the left end
    // carries -1; disks carry +1 everywhere.
    std::vector<double> dagger_coordinate_sign;

    int codim() const { return f0.m() - f0.k(); }
    bool has_boundary() const { return f0.grid->manifold.has_boundary(); }

    // -- extension / arclength (1-D bases) --
    double arclength(double s) const;         // signed from s = 0, extended domain
    double param_at_arclength(double l) const;
    double total_length() const;
    double ext_param_min() const { return ext_lo_; }
    double ext_param_max() const { return ext_hi_; }

    // -- collar coordinates (outward-positive, 0 on the boundary) --
    // 1-D: end 0 is s=0, end 1 is s=1. Values <= 0 inside S.
    double collar_coord_1d(double s, int end) const;
    double param_from_collar_1d(double that, int end) const;
    /// Disk: outward arclength coordinate along the parameter ray at angle
    /// theta, and its inverse to a radius.
    double collar_coord_disk(double r, double theta) const;
    double radius_from_collar_disk(double that, double theta) const;

    /// Which boundary end a 1-D extended parameter is nearest to.
    int nearest_end_1d(double s) const { return s < 0.5 * (ext_lo_ + ext_hi_) ? 0 : 1; }

    // -- frames --
    /// Orthonormal normal frame at an extended parameter, aligned with the
    /// precomputed continuation samples; E is (m-k) stacked m-vectors.
    void frame_at(const Param& s, double* E) const;
    void node_frame(std::size_t i, double* E) const;

    // -- queries --
    ProjectionResult project(const double* x, bool extended) const;

    // serialization (frames, radii, bump parameters)
    std::string to_json() const;
    static TubularChart from_json(const std::string& text);

    // internal sampled data, public for the implementation files
    std::vector<double> frame_sample_params_;  // flat pd
    std::vector<double> frame_sample_data_;    // per sample (m-k)*m
    Interp1D speed_;                            // 1-D: |f0'| on the extended domain
    double arc_origin_ = 0.0;                   // arclength integral offset at s=0
    double ext_lo_ = 0.0, ext_hi_ = 1.0;
    std::vector<Interp1D> disk_collar_cols_;    // per radius sample: theta -> t-hat
    std::vector<double> disk_collar_radii_;
    double disk_ext_rmax_ = 1.0;
};

TubularChart build_tubular_chart(const Embedding& f0, double delta, double eps,
                                 const BumpFunction& bump = BumpFunction::quintic());

ProjectionResult closest_point_project(const double* x, const TubularChart& chart, bool extended);

/// Step II: the collar shift determined by a boundary section. sigma_dagger
/// is in the public coordinate convention; |sigma| < eps/2 is enforced.
BoundaryShift boundary_shift_map(std::span<const double> sigma_dagger, const TubularChart& chart);

/// Step III: minimal orthogonal alignment of normal spaces along the shift
/// (polar decomposition of the frame Gram matrix); norm-preserving by
/// construction and the identity wherever the shift is.
FrameTransport transport_normal_frames(const BoundaryShift& shift, const TubularChart& chart);

/// Conservative reach estimate from node pairs and a curvature bound.
double estimate_reach(const Embedding& f0);

}  // namespace nlg
