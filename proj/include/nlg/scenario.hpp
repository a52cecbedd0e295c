#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "nlg/bundle.hpp"
#include "nlg/charts.hpp"
#include "nlg/embedding.hpp"
#include "nlg/mesh.hpp"
#include "nlg/moser.hpp"
#include "nlg/tubular.hpp"

namespace nlg {

/// A named problem setup: manifold, resolution, seed, tolerances, and named
/// embeddings / densities / diffeos / charts. Names not present in the
/// scenario resolve against the builtin catalog (e.g. "segment_0.1_0.8",
/// "uniform", "linear_halfplus", "rot_0.5").
///
/// Schema "nlgrass-scenario/1". Everything is deterministic given the file
/// and the seed.
class Scenario {
  public:
    std::string version = "nlgrass-scenario/1";
    ManifoldKind kind = ManifoldKind::Interval01;
    int resolution = 64;
    std::uint64_t seed = 1;
    std::map<std::string, double> tolerances;

    static Scenario defaults(ManifoldKind kind, int resolution, std::uint64_t seed = 1);
    static Scenario load(const std::string& path);
    static Scenario parse(const std::string& text);
    std::string dump() const;
    void save(const std::string& path) const;

    const GridPtr& grid() const;
    double tolerance(const std::string& op, double fallback) const;

    Embedding embedding(const std::string& name) const;
    DensityForm density(const std::string& name) const;
    DiffeoS diffeo(const std::string& name) const;
    TubularChart chart(const std::string& name) const;
    TangentField field(const std::string& name, const Embedding& base) const;
    SectionPair sections(const std::string& name, const TubularChart& chart) const;

    /// Stable digest of the scenario content plus an operation tag.
    std::string digest(const std::string& op_tag) const;

    /// Raw JSON for entity blocks (kept for digesting and saving).
    std::string raw_json;

  private:
    mutable GridPtr grid_;
    struct Entities;
    std::shared_ptr<Entities> entities_;
    friend struct ScenarioAccess;
};

/// Sample scenario files covering the builtin examples; returns the file
/// names written into `dir`.
std::vector<std::string> write_sample_scenarios(const std::string& dir);

std::uint64_t fnv1a(const std::string& text);

}  // namespace nlg
