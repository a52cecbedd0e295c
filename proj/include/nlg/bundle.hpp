#pragma once

#include <optional>
#include <vector>

#include "nlg/charts.hpp"
#include "nlg/embedding.hpp"
#include "nlg/moser.hpp"

namespace nlg {

/// Point of the volume Grassmannian: an unparametrized submanifold together
/// with a top-degree density of prescribed total mass, stored through a
/// representative.
struct VolGrassPoint {
    GrassPoint point;
    ImageDensity nu;
};

/// Tangent vector to the Grassmannian at N: boundary-stretch component (real
/// per boundary node, via the outward conormal) and normal component.
struct TangentGrVector {
    std::vector<double> w_dagger;
    std::vector<double> w_perp;  // n * m, pointwise orthogonal to TN
};

/// Tangent vector to the volume Grassmannian: adds the generator alpha of the
/// density variation (pullback proxy: nodal scalars for curves, covector
/// components (a1, a2) per node on the disk) and its exterior derivative.
/// Equality of two vectors is decided on (w_dagger, d_alpha, w_perp).
struct TangentVolGrVector {
    std::vector<double> w_dagger;
    std::vector<double> alpha;
    DensityForm d_alpha;
    std::vector<double> w_perp;
};

struct MeanCurvature {
    GrassPoint base;
    std::vector<double> H;  // n * m, pointwise orthogonal to TN

    double magnitude(std::size_t i) const;
};

// -- bundle projections -------------------------------------------------------

GrassPoint project_gr(const Embedding& f);
VolGrassPoint project_vol(const Embedding& f, const DensityForm& mu);

// -- trivializations ----------------------------------------------------------

struct Trivialization {
    GrassPoint point;
    DiffeoS psi;
};

Trivialization trivialize(const Embedding& f, const TubularChart& chart);
Embedding trivialize_inv(const GrassPoint& N, const DiffeoS& psi, const TubularChart& chart);

struct VolTrivialization {
    VolGrassPoint point;
    DiffeoS psi_vol;  // mu-preserving reparametrization part
};

VolTrivialization trivialize_vol(const Embedding& f, const DensityForm& mu,
                                 const TubularChart& chart);
Embedding trivialize_vol_inv(const VolGrassPoint& vol_point, const DiffeoS& phi,
                             const DensityForm& mu, const TubularChart& chart);

/// Transition between overlapping charts: (f_perp_i)^{-1} o f_perp_j.
DiffeoS transition(const GrassPoint& N, const TubularChart& chart_i,
                   const TubularChart& chart_j);

// -- tangent-level maps -------------------------------------------------------

/// Outward unit conormal of the image boundary, per boundary node.
std::vector<double> dagger_frame(const Embedding& f);

TangentGrVector tangent_project_gr(const Embedding& f, const TangentField& v);
TangentVolGrVector tangent_project_vol(const Embedding& f, const DensityForm& mu,
                                       const TangentField& v);

/// Boundary density nu_boundary induced by contracting f_* mu with the
/// outward conormal (signed, against the reference boundary measure).
std::vector<double> nu_boundary(const Embedding& f, const DensityForm& mu);

/// Trace of the alpha proxy on the boundary (against the reference boundary
/// measure); the compatibility identity is w_dagger * nu_boundary = trace.
std::vector<double> alpha_boundary_trace(const Embedding& f, const std::vector<double>& alpha);

double vol_compat_residual(const Embedding& f, const DensityForm& mu,
                           const TangentVolGrVector& w);

/// Equality of volume-Grassmannian tangent vectors, decided on
/// (w_dagger, d_alpha, w_perp); the generator alpha is not canonical.
bool vol_tangent_equal(const TangentVolGrVector& a, const TangentVolGrVector& b, double tol);

// -- first variation of volume -------------------------------------------------

enum class DvolCase { Codim0, PositiveCodim };

/// The volume functional whose derivative dvol_embedding computes: enclosed
/// ambient volume (codim 0) or induced Riemannian volume (positive codim).
double vol_functional(const Embedding& f, DvolCase which,
                      const AmbientDensity& mu_M = AmbientDensity::lebesgue());

/// Nodal line f + t v as an embedding (Hermite data moved along when f has
/// it), the path the finite-difference oracle differentiates.
Embedding embedding_line(const Embedding& f, const TangentField& v, double t);

/// Exact derivative of the discrete volume functional along v.
double dvol_embedding(const Embedding& f, const TangentField& v, DvolCase which,
                      const AmbientDensity& mu_M = AmbientDensity::lebesgue());

// -- curvature ------------------------------------------------------------------

/// Per-node mean curvature vector by a local quadric fit in the normal frame.
MeanCurvature mean_curvature(const GrassPoint& N);

// -- membership predicates -------------------------------------------------------

enum class MembershipKind { Emb0, EmbVol, VerticalGr, VerticalVol };

struct MembershipResult {
    bool member = false;
    double residual = 0.0;
    double tolerance = 0.0;
};

MembershipResult membership(const Embedding& f, const DensityForm* mu, const TangentField& v,
                            MembershipKind which,
                            const AmbientDensity& mu_M = AmbientDensity::lebesgue(),
                            double tolerance = 1e-8);

// -- associated bundle ------------------------------------------------------------

/// Equivalence-class token [f, rho] of the associated-bundle picture.
struct AssocToken {
    Embedding rep;
    DensityForm class_density;
};

AssocToken assoc_iso(const VolGrassPoint& p);
VolGrassPoint assoc_iso_inv(const AssocToken& token);
bool assoc_tokens_equal(const AssocToken& a, const AssocToken& b, double tol);

bool vol_points_equal(const VolGrassPoint& a, const VolGrassPoint& b, double tol);

// -- fiber comparison --------------------------------------------------------------

enum class FiberGroup { Diff, DiffVol };

/// The diffeomorphism with f2 = f1 o phi when the images match (through a
/// chart around f1); for DiffVol the result must additionally preserve mu.
std::optional<DiffeoS> fiber_compare(const Embedding& f1, const Embedding& f2, FiberGroup group,
                                     const DensityForm* mu = nullptr, double tol = 1e-6);

}  // namespace nlg
