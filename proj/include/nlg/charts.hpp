#pragma once

#include <optional>
#include <vector>

#include "nlg/embedding.hpp"
#include "nlg/tubular.hpp"

namespace nlg {

/// Chart coordinates of a submanifold near a base: boundary shift section
/// (one real per boundary node, flat closed-form sign convention) and normal
/// section (frame coordinates per node).
struct SectionPair {
    std::vector<double> sigma_dagger;  // boundary_count entries
    std::vector<double> sigma;         // n * (m-k)

    static SectionPair zero(const TubularChart& chart);
};

/// An unparametrized submanifold: any representative embedding, plus the
/// canonical chart coordinates when they were computed.
struct GrassPoint {
    Embedding representative;
    std::optional<SectionPair> canonical;
};

void validate_sections(const SectionPair& s, const TubularChart& chart);

/// The reparametrization part of f relative to the chart: the unique diffeo
/// with f = f_perp o psi_f. Boundaryless case: psi_f = f0^{-1} o p o tau^{-1} o f.
DiffeoS reparam_to_normal(const Embedding& f, const TubularChart& chart);

/// The normal embedding with the same image as f: f_perp = f o psi_f^{-1}.
Embedding normal_embedding(const Embedding& f, const TubularChart& chart);

/// Steps II-IV from sections: collar shift of the base, frame transport, and
/// the straight-line ambient map. Interval charts use the affine-in-arclength
/// interior extension of the flat closed form; disk charts use the radial
/// collar bump.
Embedding normal_embedding_from_sections(const SectionPair& sections, const TubularChart& chart);

SectionPair chart_forward(const GrassPoint& N, const TubularChart& chart);

GrassPoint chart_inverse(const SectionPair& sections, const TubularChart& chart);

SectionPair chart_change(const SectionPair& sections_i, const TubularChart& chart_i,
                         const TubularChart& chart_j);

/// Unparametrized equality: symmetric Hausdorff distance on dense samples
/// plus boundary endpoint matching.
bool grass_points_equal(const GrassPoint& a, const GrassPoint& b, double tol);

}  // namespace nlg
