#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlg/interp.hpp"
#include "nlg/mesh.hpp"

namespace nlg {

/// How node data extends off-node: spline through node values only, or
/// Hermite data (values plus exact nodal derivatives) when the construction
/// that produced the object knows its derivatives.
enum class Basis { NodalSpline, NodalHermite };

/// Discrete embedding f: S -> R^m. Values are flat (node-major, m entries per
/// node). Off-node evaluation uses cubic splines (1-D), Hermite data when
/// present, and moving least-squares fits on the disk.
class Embedding {
  public:
    GridPtr grid;
    int ambient_dim = 0;
    Basis basis = Basis::NodalSpline;
    std::vector<double> values;  // n * m
    std::vector<double> derivs;  // optional, n * k * m: d f_r / d s_a at a*m + r per node

    static Embedding from_nodes(GridPtr grid, int ambient_dim, std::vector<double> values);
    static Embedding from_nodes(GridPtr grid, int ambient_dim, std::vector<double> values,
                                std::vector<double> derivs);
    /// Sample an analytic map (and optionally its Jacobian) on the grid.
    static Embedding sample(GridPtr grid, int ambient_dim,
                            const std::function<void(const Param&, double*)>& f,
                            const std::function<void(const Param&, double*)>& jac = nullptr);

    std::size_t size() const { return grid->size(); }
    int k() const { return grid->manifold.intrinsic_dim; }
    int m() const { return ambient_dim; }

    const double* point(std::size_t i) const { return values.data() + i * ambient_dim; }

    void eval(const Param& s, double* out) const;
    /// Jacobian, column-major by parameter: J[a*m + r] = d f_r / d s_a.
    void jacobian(const Param& s, double* J) const;
    void node_jacobian(std::size_t i, double* J) const;
    /// Second derivatives at a parameter point; layout: 1-D grids m entries
    /// (f''), disk 3*m entries (xx, xy, yy per component).
    void second_derivs(const Param& s, double* out) const;

    /// Arclength interpolants etc. need the 1-D component splines.
    const Interp1D& component_interp(int r) const;

  private:
    void ensure_cache() const;
    struct Cache;
    mutable std::shared_ptr<const Cache> cache_;
};

/// Discrete diffeomorphism of S. Values are parameter targets (lifted angles
/// on the circle: value[0] in [0, 2pi), monotone lift across nodes).
class DiffeoS {
  public:
    GridPtr grid;
    int orientation_sign = 1;
    std::vector<double> values;  // n * param_dim
    std::vector<double> derivs;  // optional: 1-D n entries; disk n*4 (row-major d(out)/d(in))
    std::vector<double> second;  // optional, 1-D only

    static DiffeoS identity(GridPtr grid);
    static DiffeoS from_values(GridPtr grid, std::vector<double> values);
    static DiffeoS from_values(GridPtr grid, std::vector<double> values,
                               std::vector<double> derivs, std::vector<double> second = {});
    static DiffeoS sample(GridPtr grid, const std::function<Param(const Param&)>& phi,
                          const std::function<void(const Param&, double*)>& jac = nullptr);

    std::size_t size() const { return grid->size(); }
    Param node_target(std::size_t i) const {
        return grid->param_dim == 1 ? Param{values[i], 0.0}
                                    : Param{values[2 * i], values[2 * i + 1]};
    }

    /// Throws NotADiffeo when the invariants fail (monotonicity / one-signed
    /// Jacobian, boundary preservation, discrete bijectivity).
    void validate() const;
    bool is_valid() const noexcept;

    Param eval(const Param& s) const;
    double deriv1(double s) const;          // 1-D
    double second1(double s) const;         // 1-D
    void jacobian(const Param& s, double* J2x2) const;  // disk
    double jacobian_det(const Param& s) const;

    Param invert_point(const Param& target) const;
    DiffeoS inverse() const;
    /// outer(inner(s)) with derivative data propagated by the chain rule.
    static DiffeoS compose(const DiffeoS& outer, const DiffeoS& inner);

  private:
    void ensure_cache() const;
    struct Cache;
    mutable std::shared_ptr<const Cache> cache_;
};

/// Tangent vector at an embedding: a vector field along f.
struct TangentField {
    Embedding base;
    std::vector<double> vectors;  // n * m

    static TangentField zero(const Embedding& f);
    static TangentField sample(const Embedding& f,
                               const std::function<void(const Param&, const double*, double*)>& v);
};

/// Ambient top-degree density on R^m (codimension-zero operations).
struct AmbientDensity {
    std::string name = "lebesgue";
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;  // optional

    static AmbientDensity lebesgue();
    static AmbientDensity linear(double c0, std::vector<double> slope);
    double eval(std::span<const double> x) const { return value(x); }
    void grad(std::span<const double> x, std::span<double> g) const;
};

// -- Diagnostics --------------------------------------------------------------

struct EmbeddingDiagnosis {
    enum class Status { Ok, ImmersionFailure, InjectivityFailure };
    Status status = Status::Ok;
    std::vector<std::size_t> immersion_nodes;
    std::vector<std::pair<std::size_t, std::size_t>> injectivity_pairs;
    double min_singular_value = 0.0;
    double min_nonneighbor_separation = 0.0;

    bool ok() const { return status == Status::Ok; }
};

struct EmbeddingTolerances {
    std::optional<double> rank;        // default 1e-6 * grid spacing
    std::optional<double> separation;  // default half the min neighbor image distance
};

// -- Operations ---------------------------------------------------------------

Embedding compose_reparam(const Embedding& f, const DiffeoS& phi);

EmbeddingDiagnosis check_embedding(const Embedding& f, const EmbeddingTolerances& tol = {});
void require_embedding(const Embedding& f);

DensityForm induced_volume(const Embedding& f);

DensityForm pullback_volume(const Embedding& f, const AmbientDensity& mu_M);

/// Density on the image N = f(S), stored through the representative f as the
/// pullback values f^* nu (relative to the reference coordinates of S), so
/// total mass is grid quadrature of `pullback`.
struct ImageDensity {
    Embedding rep;
    std::vector<double> pullback;

    double total_mass() const;
    /// Pointwise value with respect to the induced Riemannian volume of N.
    std::vector<double> per_induced_volume() const;
};

ImageDensity pushforward_density(const Embedding& f, const DensityForm& rho);

/// Pullback of an image density through its own representative; with a
/// reparametrizing diffeo the representative changes to rep o phi.
DensityForm pullback_density(const ImageDensity& nu);
ImageDensity reparam_image_density(const ImageDensity& nu, const DiffeoS& phi);

// Densities under diffeomorphisms of S itself (signed, orientation-aware).
DensityForm pushforward_by_diffeo(const DensityForm& rho, const DiffeoS& phi);
DensityForm pullback_by_diffeo(const DensityForm& rho, const DiffeoS& phi);

/// Symmetric Hausdorff distance between images on dense samples.
double image_hausdorff(const Embedding& a, const Embedding& b, int dense = 512);

}  // namespace nlg
