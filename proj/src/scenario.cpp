#include "nlg/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

namespace nlg {

namespace {

constexpr double kPi = std::numbers::pi;

using json = nlohmann::json;

ManifoldKind kind_from_string(const std::string& s) {
    if (s == "interval01" || s == "interval") return ManifoldKind::Interval01;
    if (s == "circle") return ManifoldKind::Circle;
    if (s == "closed_disk" || s == "disk") return ManifoldKind::ClosedDisk;
    fail(ErrorCode::ScenarioParse, "unknown manifold kind '" + s + "'");
}

// "name_0.1_-0.2" -> {"name", {0.1, -0.2}} (longest numeric tail).
std::pair<std::string, std::vector<double>> split_params(const std::string& name) {
    std::vector<std::string> parts;
    std::stringstream ss(name);
    std::string tok;
    while (std::getline(ss, tok, '_')) parts.push_back(tok);
    std::vector<double> params;
    std::size_t head = parts.size();
    while (head > 1) {
        try {
            std::size_t used = 0;
            double v = std::stod(parts[head - 1], &used);
            if (used != parts[head - 1].size()) break;
            params.insert(params.begin(), v);
            --head;
        } catch (...) {
            break;
        }
    }
    std::string base = parts.empty() ? name : parts[0];
    for (std::size_t i = 1; i < head; ++i) base += "_" + parts[i];
    return {base, params};
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

struct Scenario::Entities {
    json embeddings = json::object();
    json densities = json::object();
    json diffeos = json::object();
    json charts = json::object();
    json sections = json::object();
};

struct ScenarioAccess {
    static std::shared_ptr<Scenario::Entities>& entities(Scenario& sc) { return sc.entities_; }
    static const std::shared_ptr<Scenario::Entities>& entities(const Scenario& sc) {
        return sc.entities_;
    }
};

Scenario Scenario::defaults(ManifoldKind kind, int resolution, std::uint64_t seed) {
    Scenario sc;
    sc.kind = kind;
    sc.resolution = resolution;
    sc.seed = seed;
    ScenarioAccess::entities(sc) = std::make_shared<Entities>();
    sc.raw_json = sc.dump();
    return sc;
}

Scenario Scenario::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::ScenarioParse, std::string("invalid JSON: ") + e.what());
    }
    Scenario sc;
    try {
        sc.version = j.at("version").get<std::string>();
        require(sc.version == "nlgrass-scenario/1", ErrorCode::ScenarioParse,
                "unsupported scenario version " + sc.version);
        sc.kind = kind_from_string(j.at("manifold").at("kind").get<std::string>());
        sc.resolution = j.at("manifold").at("resolution").get<int>();
        sc.seed = j.value("seed", std::uint64_t{1});
        auto ents = std::make_shared<Entities>();
        if (j.contains("tolerances")) {
            for (auto& [k, v] : j.at("tolerances").items()) sc.tolerances[k] = v.get<double>();
        }
        if (j.contains("embeddings")) ents->embeddings = j.at("embeddings");
        if (j.contains("densities")) ents->densities = j.at("densities");
        if (j.contains("diffeos")) ents->diffeos = j.at("diffeos");
        if (j.contains("charts")) ents->charts = j.at("charts");
        if (j.contains("sections")) ents->sections = j.at("sections");
        ScenarioAccess::entities(sc) = std::move(ents);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrorCode::ScenarioParse, std::string("scenario structure: ") + e.what());
    }
    sc.raw_json = sc.dump();
    return sc;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::ScenarioParse, "cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Scenario::dump() const {
    json j;
    j["version"] = version;
    j["manifold"] = {{"kind", manifold_kind_name(kind)}, {"resolution", resolution}};
    j["seed"] = seed;
    if (!tolerances.empty()) j["tolerances"] = tolerances;
    const auto& e = ScenarioAccess::entities(*this);
    if (e) {
        if (!e->embeddings.empty()) j["embeddings"] = e->embeddings;
        if (!e->densities.empty()) j["densities"] = e->densities;
        if (!e->diffeos.empty()) j["diffeos"] = e->diffeos;
        if (!e->charts.empty()) j["charts"] = e->charts;
        if (!e->sections.empty()) j["sections"] = e->sections;
    }
    return j.dump(2);
}

void Scenario::save(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorCode::ScenarioParse, "cannot write scenario file " + path);
    out << dump() << "\n";
}

const GridPtr& Scenario::grid() const {
    if (!grid_) grid_ = build_grid(kind, resolution);
    return grid_;
}

double Scenario::tolerance(const std::string& op, double fallback) const {
    auto it = tolerances.find(op);
    if (it != tolerances.end()) return it->second;
    it = tolerances.find("default");
    if (it != tolerances.end()) return it->second;
    return fallback;
}

std::string Scenario::digest(const std::string& op_tag) const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(raw_json + "|" + op_tag)));
    return buf;
}

// ============================================================================
// Builtin catalog
// ============================================================================

namespace {

Embedding builtin_embedding(const GridPtr& g, const std::string& name) {
    auto [base, p] = split_params(name);
    auto pv = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
    ManifoldKind kind = g->manifold.kind;
    if (kind == ManifoldKind::Interval01) {
        if (base == "interval" || base == "flat_interval") {
            return Embedding::sample(
                g, 2, [](const Param& s, double* q) { q[0] = s[0], q[1] = 0.0; },
                [](const Param&, double* J) { J[0] = 1.0, J[1] = 0.0; });
        }
        if (base == "interval_r1") {
            return Embedding::sample(
                g, 1, [](const Param& s, double* q) { q[0] = s[0]; },
                [](const Param&, double* J) { J[0] = 1.0; });
        }
        if (base == "segment") {
            double a = pv(0, 0.0), b = pv(1, 1.0);
            return Embedding::sample(
                g, 2, [=](const Param& s, double* q) { q[0] = a + (b - a) * s[0], q[1] = 0.0; },
                [=](const Param&, double* J) { J[0] = b - a, J[1] = 0.0; });
        }
        if (base == "rotated_interval") {
            double th = pv(0, 10.0) * kPi / 180.0;
            return Embedding::sample(
                g, 2,
                [=](const Param& s, double* q) {
                    double u = s[0] - 0.5;
                    q[0] = 0.5 + std::cos(th) * u;
                    q[1] = std::sin(th) * u;
                },
                [=](const Param&, double* J) {
                    J[0] = std::cos(th);
                    J[1] = std::sin(th);
                });
        }
        if (base == "sine_graph") {
            double amp = pv(0, 0.05);
            return Embedding::sample(g, 2, [=](const Param& s, double* q) {
                q[0] = s[0];
                q[1] = amp * std::sin(kPi * s[0]);
            });
        }
        if (base == "parabola") {
            double c = pv(0, 0.4);
            return Embedding::sample(g, 2, [=](const Param& s, double* q) {
                q[0] = s[0];
                q[1] = c * s[0] * s[0];
            });
        }
        if (base == "curve3d") {
            double amp = pv(0, 0.2);
            return Embedding::sample(g, 3, [=](const Param& s, double* q) {
                q[0] = s[0];
                q[1] = amp * std::sin(2.0 * s[0]);
                q[2] = 0.5 * amp * s[0] * s[0];
            });
        }
    }
    if (kind == ManifoldKind::Circle) {
        if (base == "unit_circle" || base == "circle") {
            double r = pv(0, 1.0);
            return Embedding::sample(
                g, 2,
                [=](const Param& t, double* q) {
                    q[0] = r * std::cos(t[0]);
                    q[1] = r * std::sin(t[0]);
                },
                [=](const Param& t, double* J) {
                    J[0] = -r * std::sin(t[0]);
                    J[1] = r * std::cos(t[0]);
                });
        }
        if (base == "wavy_circle") {
            double amp = pv(0, 0.1);
            return Embedding::sample(g, 2, [=](const Param& t, double* q) {
                double r = 1.0 + amp * std::sin(2.0 * t[0]);
                q[0] = r * std::cos(t[0]);
                q[1] = r * std::sin(t[0]);
            });
        }
        if (base == "circle3d") {
            double amp = pv(0, 0.2);
            return Embedding::sample(g, 3, [=](const Param& t, double* q) {
                q[0] = std::cos(t[0]);
                q[1] = std::sin(t[0]);
                q[2] = amp * std::sin(2.0 * t[0]);
            });
        }
    }
    if (kind == ManifoldKind::ClosedDisk) {
        if (base == "flat_disk") {
            return Embedding::sample(
                g, 3,
                [](const Param& s, double* q) {
                    q[0] = s[0];
                    q[1] = s[1];
                    q[2] = 0.0;
                },
                [](const Param&, double* J) {
                    J[0] = 1.0, J[1] = 0.0, J[2] = 0.0;
                    J[3] = 0.0, J[4] = 1.0, J[5] = 0.0;
                });
        }
        if (base == "disk_plane") {
            return Embedding::sample(
                g, 2, [](const Param& s, double* q) { q[0] = s[0], q[1] = s[1]; },
                [](const Param&, double* J) { J[0] = 1.0, J[1] = 0.0, J[2] = 0.0, J[3] = 1.0; });
        }
        if (base == "sphere_patch") {
            double r = pv(0, 1.3), a = pv(1, 0.5);
            return Embedding::sample(
                g, 3,
                [=](const Param& s, double* q) {
                    q[0] = a * s[0];
                    q[1] = a * s[1];
                    q[2] = std::sqrt(r * r - a * a * (s[0] * s[0] + s[1] * s[1]));
                },
                [=](const Param& s, double* J) {
                    double z = std::sqrt(r * r - a * a * (s[0] * s[0] + s[1] * s[1]));
                    J[0] = a, J[1] = 0.0, J[2] = -a * a * s[0] / z;
                    J[3] = 0.0, J[4] = a, J[5] = -a * a * s[1] / z;
                });
        }
        if (base == "paraboloid") {
            return Embedding::sample(g, 3, [](const Param& s, double* q) {
                q[0] = s[0];
                q[1] = s[1];
                q[2] = s[0] * s[0] + s[1] * s[1];
            });
        }
    }
    fail(ErrorCode::ScenarioParse,
         "unknown builtin embedding '" + name + "' for " + manifold_kind_name(kind));
}

DensityForm builtin_density(const GridPtr& g, const std::string& name) {
    auto [base, p] = split_params(name);
    auto pv = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
    std::vector<double> v(g->size());
    ManifoldKind kind = g->manifold.kind;
    auto fill = [&](auto&& fn) {
        for (std::size_t i = 0; i < g->size(); ++i) v[i] = fn(g->node(i));
    };
    if (base == "uniform") {
        fill([&](const Param&) { return pv(0, 1.0); });
    } else if (base == "neg_uniform") {
        fill([&](const Param&) { return -pv(0, 1.0); });
    } else if (base == "linear_halfplus" && kind == ManifoldKind::Interval01) {
        fill([](const Param& s) { return 0.5 + s[0]; });
    } else if (base == "linear2s" && kind == ManifoldKind::Interval01) {
        fill([](const Param& s) { return 2.0 * s[0]; });
    } else if (base == "linear_x") {
        double c = pv(0, 0.5);
        if (kind == ManifoldKind::Interval01) {
            fill([=](const Param& s) { return 1.0 + c * s[0]; });
        } else if (kind == ManifoldKind::Circle) {
            fill([=](const Param& t) { return 1.0 + c * std::cos(t[0]); });
        } else {
            fill([=](const Param& s) { return 1.0 + c * s[0]; });
        }
    } else if (base == "trig") {
        double a = pv(0, 0.3);
        if (kind == ManifoldKind::Interval01) {
            fill([=](const Param& s) { return 1.0 + a * std::sin(2.0 * kPi * s[0]); });
        } else if (kind == ManifoldKind::Circle) {
            fill([=](const Param& t) { return 1.0 + a * std::sin(t[0]); });
        } else {
            fill([=](const Param& s) { return 1.0 + a * s[0] * s[1]; });
        }
    } else {
        fail(ErrorCode::ScenarioParse, "unknown builtin density '" + name + "'");
    }
    return DensityForm::top(g, std::move(v));
}

DiffeoS builtin_diffeo(const GridPtr& g, const std::string& name) {
    auto [base, p] = split_params(name);
    auto pv = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
    ManifoldKind kind = g->manifold.kind;
    if (base == "identity") return DiffeoS::identity(g);
    if (kind == ManifoldKind::Interval01) {
        if (base == "quad") {
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{s[0] * (3.0 - s[0]) / 2.0, 0.0}; },
                [](const Param& s, double* J) { J[0] = (3.0 - 2.0 * s[0]) / 2.0; });
        }
        if (base == "cubic") {
            double a = pv(0, 0.25);
            return DiffeoS::sample(
                g,
                [=](const Param& s) {
                    double u = s[0];
                    return Param{u + a * u * (1.0 - u) * (2.0 - u), 0.0};
                },
                [=](const Param& s, double* J) {
                    double u = s[0];
                    J[0] = 1.0 + a * ((1.0 - u) * (2.0 - u) - u * (2.0 - u) - u * (1.0 - u));
                });
        }
        if (base == "smooth") {
            double a = pv(0, 0.2), b = pv(1, 0.1);
            return DiffeoS::sample(
                g,
                [=](const Param& s) {
                    double u = s[0];
                    return Param{u + a * u * (1.0 - u) + b * u * u * (1.0 - u), 0.0};
                },
                [=](const Param& s, double* J) {
                    double u = s[0];
                    J[0] = 1.0 + a * (1.0 - 2.0 * u) + b * (2.0 * u - 3.0 * u * u);
                });
        }
        if (base == "reflect") {
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{1.0 - s[0], 0.0}; },
                [](const Param&, double* J) { J[0] = -1.0; });
        }
    }
    if (kind == ManifoldKind::Circle) {
        if (base == "rot") {
            double c = pv(0, 0.5);
            return DiffeoS::sample(
                g, [=](const Param& t) { return Param{t[0] + c, 0.0}; },
                [](const Param&, double* J) { J[0] = 1.0; });
        }
        if (base == "sine") {
            double a = pv(0, 0.3);
            return DiffeoS::sample(
                g, [=](const Param& t) { return Param{t[0] + a * std::sin(t[0]), 0.0}; },
                [=](const Param& t, double* J) { J[0] = 1.0 + a * std::cos(t[0]); });
        }
        if (base == "reflect") {
            return DiffeoS::sample(
                g, [](const Param& t) { return Param{-t[0], 0.0}; },
                [](const Param&, double* J) { J[0] = -1.0; });
        }
    }
    if (kind == ManifoldKind::ClosedDisk) {
        if (base == "rot") {
            double c = pv(0, 0.5);
            return DiffeoS::sample(
                g,
                [=](const Param& s) {
                    return Param{std::cos(c) * s[0] - std::sin(c) * s[1],
                                 std::sin(c) * s[0] + std::cos(c) * s[1]};
                },
                [=](const Param&, double* J) {
                    J[0] = std::cos(c), J[1] = -std::sin(c);
                    J[2] = std::sin(c), J[3] = std::cos(c);
                });
        }
        if (base == "reflect") {
            return DiffeoS::sample(
                g, [](const Param& s) { return Param{s[0], -s[1]}; },
                [](const Param&, double* J) { J[0] = 1.0, J[1] = 0.0, J[2] = 0.0, J[3] = -1.0; });
        }
        if (base == "swirl") {
            double a = pv(0, 0.3);
            return DiffeoS::sample(g, [=](const Param& s) {
                double r2 = s[0] * s[0] + s[1] * s[1];
                double c = a * (1.0 - r2);
                return Param{std::cos(c) * s[0] - std::sin(c) * s[1],
                             std::sin(c) * s[0] + std::cos(c) * s[1]};
            });
        }
    }
    fail(ErrorCode::ScenarioParse,
         "unknown builtin diffeo '" + name + "' for " + manifold_kind_name(kind));
}

TangentField builtin_field(const std::string& name, const Embedding& f) {
    auto [base, p] = split_params(name);
    auto pv = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
    const int m = f.m();
    if (base == "zero") return TangentField::zero(f);
    if (base == "position") {
        return TangentField::sample(f, [m](const Param&, const double* x, double* out) {
            for (int r = 0; r < m; ++r) out[r] = x[r];
        });
    }
    if (base == "rotation" && m == 2) {
        return TangentField::sample(f, [](const Param&, const double* x, double* out) {
            out[0] = -x[1];
            out[1] = x[0];
        });
    }
    if (base == "constant") {
        double c0 = pv(0, 0.0), c1 = pv(1, 0.0), c2 = pv(2, 0.0);
        return TangentField::sample(f, [=](const Param&, const double*, double* out) {
            out[0] = c0;
            if (m > 1) out[1] = c1;
            if (m > 2) out[2] = c2;
        });
    }
    if (base == "normal_sine" && f.k() == 1 && m == 2) {
        double amp = pv(0, 0.1);
        bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
        return TangentField::sample(f, [&f, amp, circle](const Param& s, const double*,
                                                         double* out) {
            double J[2];
            f.jacobian(s, J);
            double nrm = std::hypot(J[0], J[1]);
            double a = amp * (circle ? std::sin(2.0 * s[0]) : std::sin(kPi * s[0]));
            out[0] = -J[1] / nrm * a;
            out[1] = J[0] / nrm * a;
        });
    }
    if (base == "vertical") {
        double amp = pv(0, 0.3);
        bool circle = f.grid->manifold.kind == ManifoldKind::Circle;
        return TangentField::sample(f, [&f, amp, circle](const Param& s, const double*,
                                                         double* out) {
            const int mm = f.m();
            double u = circle ? amp * (1.0 + 0.5 * std::sin(s[0]))
                              : amp * s[0] * (1.0 - s[0]);
            double J[6];
            f.jacobian(s, J);
            for (int r = 0; r < mm; ++r) out[r] = J[r] * u;
        });
    }
    fail(ErrorCode::ScenarioParse, "unknown builtin field '" + name + "'");
}

}  // namespace

Embedding Scenario::embedding(const std::string& name) const {
    const auto& e = ScenarioAccess::entities(*this);
    if (e && e->embeddings.contains(name)) {
        const json& spec = e->embeddings.at(name);
        if (spec.contains("builtin")) {
            return builtin_embedding(grid(), spec.at("builtin").get<std::string>());
        }
        int m = spec.at("ambient_dim").get<int>();
        auto vals = spec.at("values").get<std::vector<double>>();
        if (spec.contains("derivs")) {
            return Embedding::from_nodes(grid(), m, std::move(vals),
                                         spec.at("derivs").get<std::vector<double>>());
        }
        return Embedding::from_nodes(grid(), m, std::move(vals));
    }
    return builtin_embedding(grid(), name);
}

DensityForm Scenario::density(const std::string& name) const {
    const auto& e = ScenarioAccess::entities(*this);
    if (e && e->densities.contains(name)) {
        const json& spec = e->densities.at(name);
        if (spec.contains("builtin")) {
            return builtin_density(grid(), spec.at("builtin").get<std::string>());
        }
        return DensityForm::top(grid(), spec.at("values").get<std::vector<double>>());
    }
    return builtin_density(grid(), name);
}

DiffeoS Scenario::diffeo(const std::string& name) const {
    const auto& e = ScenarioAccess::entities(*this);
    if (e && e->diffeos.contains(name)) {
        const json& spec = e->diffeos.at(name);
        if (spec.contains("builtin")) {
            return builtin_diffeo(grid(), spec.at("builtin").get<std::string>());
        }
        return DiffeoS::from_values(grid(), spec.at("values").get<std::vector<double>>());
    }
    return builtin_diffeo(grid(), name);
}

TubularChart Scenario::chart(const std::string& name) const {
    const auto& e = ScenarioAccess::entities(*this);
    if (e && e->charts.contains(name)) {
        const json& spec = e->charts.at(name);
        Embedding base = embedding(spec.at("base").get<std::string>());
        BumpFunction bump = spec.value("bump", std::string("quintic_smoothstep")) == "linear_ramp"
                                ? BumpFunction::linear_ramp()
                                : BumpFunction::quintic();
        return build_tubular_chart(base, spec.at("delta").get<double>(),
                                   spec.at("eps").get<double>(), bump);
    }
    // Default chart on a named base embedding with radii from the reach.
    Embedding base = embedding(name);
    double reach = estimate_reach(base);
    double radius = std::min(0.45 * reach, 0.45);
    return build_tubular_chart(base, radius, radius);
}

TangentField Scenario::field(const std::string& name, const Embedding& base) const {
    return builtin_field(name, base);
}

SectionPair Scenario::sections(const std::string& name, const TubularChart& chart) const {
    const auto& e = ScenarioAccess::entities(*this);
    if (e && e->sections.contains(name)) {
        const json& spec = e->sections.at(name);
        SectionPair sp = SectionPair::zero(chart);
        if (spec.contains("sigma_dagger")) {
            sp.sigma_dagger = spec.at("sigma_dagger").get<std::vector<double>>();
        }
        if (spec.contains("sigma")) sp.sigma = spec.at("sigma").get<std::vector<double>>();
        validate_sections(sp, chart);
        return sp;
    }
    fail(ErrorCode::ScenarioParse, "unknown sections entry '" + name + "'");
}

std::vector<std::string> write_sample_scenarios(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto put = [&](const std::string& fname, const json& j) {
        std::ofstream out(fs::path(dir) / fname);
        require(out.good(), ErrorCode::ScenarioParse, "cannot write " + fname);
        out << j.dump(2) << "\n";
        written.push_back(fname);
    };

    json interval = {
        {"version", "nlgrass-scenario/1"},
        {"manifold", {{"kind", "interval01"}, {"resolution", 64}}},
        {"seed", 11},
        {"embeddings",
         {{"f0", {{"builtin", "interval"}}},
          {"segment", {{"builtin", "segment_0.1_0.8"}}},
          {"graph", {{"builtin", "sine_graph_0.05"}}}}},
        {"densities", {{"mu", {{"builtin", "uniform"}}}, {"nu", {{"builtin", "linear_halfplus"}}}}},
        {"diffeos", {{"phi", {{"builtin", "quad"}}}}},
        {"charts",
         {{"c0", {{"base", "f0"}, {"delta", 0.3}, {"eps", 0.45}, {"bump", "quintic_smoothstep"}}},
          {"c1", {{"base", "tilted"}, {"delta", 0.3}, {"eps", 0.45}}}}}};
    interval["embeddings"]["tilted"] = {{"builtin", "rotated_interval_10"}};
    put("interval_basic.json", interval);

    json circle = {
        {"version", "nlgrass-scenario/1"},
        {"manifold", {{"kind", "circle"}, {"resolution", 96}}},
        {"seed", 12},
        {"embeddings", {{"f0", {{"builtin", "unit_circle"}}}}},
        {"densities", {{"mu", {{"builtin", "uniform"}}}, {"nu", {{"builtin", "trig"}}}}},
        {"diffeos", {{"phi", {{"builtin", "sine_0.3"}}}}},
        {"charts", {{"c0", {{"base", "f0"}, {"delta", 0.35}, {"eps", 0.3}}}}}};
    put("circle_basic.json", circle);

    json disk = {
        {"version", "nlgrass-scenario/1"},
        {"manifold", {{"kind", "closed_disk"}, {"resolution", 16}}},
        {"seed", 13},
        {"embeddings",
         {{"f0", {{"builtin", "flat_disk"}}}, {"plane", {{"builtin", "disk_plane"}}}}},
        {"densities", {{"mu", {{"builtin", "uniform"}}}, {"nu", {{"builtin", "linear_x_0.5"}}}}},
        {"diffeos", {{"phi", {{"builtin", "rot_0.5"}}}}},
        {"charts", {{"c0", {{"base", "f0"}, {"delta", 0.3}, {"eps", 0.3}}}}}};
    put("disk_basic.json", disk);

    json moser = {
        {"version", "nlgrass-scenario/1"},
        {"manifold", {{"kind", "interval01"}, {"resolution", 128}}},
        {"seed", 14},
        {"densities",
         {{"mu", {{"builtin", "uniform"}}},
          {"nu", {{"builtin", "linear_halfplus"}}},
          {"thin", {{"builtin", "linear2s"}}}}}};
    put("moser_interval.json", moser);

    json pair = {
        {"version", "nlgrass-scenario/1"},
        {"manifold", {{"kind", "interval01"}, {"resolution", 64}}},
        {"seed", 15},
        {"embeddings",
         {{"base_i", {{"builtin", "interval"}}},
          {"base_j", {{"builtin", "rotated_interval_10"}}},
          {"base_k", {{"builtin", "rotated_interval_-5"}}},
          {"target", {{"builtin", "segment_0.07_0.93"}}}}},
        {"charts",
         {{"ci", {{"base", "base_i"}, {"delta", 0.3}, {"eps", 0.45}}},
          {"cj", {{"base", "base_j"}, {"delta", 0.3}, {"eps", 0.45}}},
          {"ck", {{"base", "base_k"}, {"delta", 0.3}, {"eps", 0.45}}}}}};
    {
        json sig = json::array({0.08, -0.1});
        json sigma = json::array();
        for (int i = 0; i < 64; ++i) {
            double t = static_cast<double>(i) / 63.0;
            sigma.push_back(0.05 * t * (1.0 - t) * (2.0 - t));
        }
        pair["sections"] = {{"s0", {{"sigma_dagger", sig}, {"sigma", sigma}}}};
    }
    put("chart_change_pair.json", pair);

    return written;
}

}  // namespace nlg
