#pragma once

#include <string>
#include <vector>

#include "nlg/embedding.hpp"
#include "nlg/mesh.hpp"

namespace nlg {

/// Element of the space of volume forms with total mass +-(integral of mu).
struct VolSpaceElement {
    DensityForm density;
    int mass_sign = 1;
};

struct MoserResult {
    DiffeoS map;  // B with B_* mu = nu
    std::vector<std::string> warnings;
    double sup_residual = 0.0;  // 1-D: dense sup of |B_* mu - nu|
    double l1_residual = 0.0;   // disk: integral of |B_* mu - nu|
};

/// Monotone-rearrangement transport on the interval or circle: B is the
/// composition of cumulative-mass maps, exact up to quadrature, with exact
/// nodal derivative data. The circle map fixes the node at angle zero.
/// Opposite-sign masses are handled by composing with the fixed reflection
/// (s -> 1-s, theta -> -theta).
MoserResult moser_map_1d(const DensityForm& mu, const DensityForm& nu);

/// Disk transport by the flow of v_t = -grad u / rho_t where u solves the
/// Neumann Poisson problem grad^2 u = nu - mu on the polar grid and
/// rho_t = (1-t) mu + t nu; fixed-step RK4 integration.
MoserResult moser_map_disk(const DensityForm& mu, const DensityForm& nu, int flow_steps = 64);

/// Dispatch on the grid's manifold kind.
MoserResult moser_map(const DensityForm& mu, const DensityForm& nu);

/// The splitting Diff(S) = Diff_vol(S) x Vol_mu(S):
/// phi = B(phi_* mu) o phi_vol with phi_vol volume preserving.
struct DiffeoSplit {
    DiffeoS phi_vol;
    VolSpaceElement rho;  // phi_* mu
    MoserResult transport;
    double recomposition_residual = 0.0;
    double preservation_residual = 0.0;
};

DiffeoSplit decompose_diffeo(const DiffeoS& phi, const DensityForm& mu);

}  // namespace nlg
