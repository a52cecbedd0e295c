// nlgrass: scenario-driven driver for the shape-space library. Subcommands
// cover chart coordinates, chart round trips and changes, volume transport,
// diffeomorphism splitting, bundle projections and trivializations, tangent
// maps, first variation, curvature, membership predicates, the invariant
// suite, and sample-scenario generation.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "nlg/bundle.hpp"
#include "nlg/scenario.hpp"
#include "nlg/verify.hpp"

using namespace nlg;
using json = nlohmann::json;

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string manifold = "interval01";
    int resolution = 0;
    std::uint64_t seed = 1;
    double tolerance = 0.0;  // 0 = per-op default
    std::string output;
    bool svg = false;
    bool csv = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, int default_res = 128) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file");
    cmd->add_option("--manifold", args.manifold,
                    "manifold kind when no scenario is given "
                    "(interval01|circle|closed_disk)");
    cmd->add_option("--resolution", args.resolution, "grid resolution override");
    cmd->add_option("--seed", args.seed, "random seed override");
    cmd->add_option("--tolerance", args.tolerance, "tolerance override");
    cmd->add_option("--output", args.output, "write the report JSON here (default stdout)");
    cmd->add_flag("--svg", args.svg, "emit polyline plot data next to the output");
    cmd->add_flag("--csv", args.csv, "emit node arrays as CSV next to the output");
    (void)default_res;
}

Scenario load_scenario(const CommonArgs& args, int default_res) {
    Scenario sc;
    if (!args.scenario_path.empty()) {
        sc = Scenario::load(args.scenario_path);
    } else {
        ManifoldKind kind = ManifoldKind::Interval01;
        if (args.manifold == "circle") kind = ManifoldKind::Circle;
        else if (args.manifold == "closed_disk" || args.manifold == "disk")
            kind = ManifoldKind::ClosedDisk;
        else if (args.manifold != "interval01" && args.manifold != "interval")
            fail(ErrorCode::ScenarioParse, "unknown manifold " + args.manifold);
        sc = Scenario::defaults(kind, default_res, args.seed);
    }
    if (args.resolution > 0) {
        sc.resolution = args.resolution;
        sc.raw_json = sc.dump();
    }
    return sc;
}

json residual_entry(const std::string& name, double value, double tol) {
    return json{{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", value <= tol}};
}

void write_csv(const std::string& path, const std::vector<double>& data, int stride) {
    std::ofstream out(path);
    for (std::size_t i = 0; i * stride < data.size(); ++i) {
        for (int r = 0; r < stride; ++r) {
            out << data[i * stride + r] << (r + 1 == stride ? '\n' : ',');
        }
    }
}

void write_svg_polyline(const std::string& path, const Embedding& f) {
    // Display-only polyline of a curve embedding (or the disk boundary).
    std::ofstream out(path);
    double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
    std::vector<std::pair<double, double>> pts;
    if (f.grid->param_dim == 1) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            pts.emplace_back(f.point(i)[0], f.m() > 1 ? f.point(i)[1] : 0.0);
        }
    } else {
        for (std::size_t b : f.grid->boundary_nodes) {
            pts.emplace_back(f.point(b)[0], f.point(b)[1]);
        }
    }
    for (auto& [x, y] : pts) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
    }
    double w = std::max(1e-9, maxx - minx), h = std::max(1e-9, maxy - miny);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << minx - 0.05 * w << " "
        << -(maxy + 0.05 * h) << " " << 1.1 * w << " " << 1.1 * h << "\">\n<polyline fill=\"none\" "
        << "stroke=\"black\" stroke-width=\"" << 0.005 * std::max(w, h) << "\" points=\"";
    for (auto& [x, y] : pts) out << x << "," << -y << " ";
    out << "\"/>\n</svg>\n";
}

int emit(const CommonArgs& args, json doc, const Embedding* plot = nullptr,
         const std::vector<double>* csv_data = nullptr, int csv_stride = 1) {
    bool ok = true;
    if (doc.contains("residuals")) {
        for (const auto& r : doc.at("residuals")) {
            if (!r.at("pass").get<bool>()) ok = false;
        }
    }
    doc["status"] = ok ? "ok" : "failed";
    std::string text = doc.dump(2) + "\n";
    if (args.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(args.output);
        out << text;
        if (args.svg && plot) {
            write_svg_polyline(args.output + ".svg", *plot);
        }
        if (args.csv && csv_data) {
            write_csv(args.output + ".csv", *csv_data, csv_stride);
        }
    }
    return ok ? 0 : 1;
}

double resolve_tol(const CommonArgs& args, const Scenario& sc, const std::string& op,
                   double fallback) {
    if (args.tolerance > 0.0) return args.tolerance;
    return sc.tolerance(op, fallback);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shape-space charts, transport, and bundle operations"};
    app.require_subcommand(1);

    CommonArgs args;

    // ---- chart ----
    std::string base_name = "interval", target_name = "segment_0.1_0.8", chart_name;
    auto* chart_cmd = app.add_subcommand("chart", "chart coordinates of a target submanifold");
    add_common(chart_cmd, args, 64);
    chart_cmd->add_option("--base", base_name, "base embedding (or chart) name");
    chart_cmd->add_option("--target", target_name, "target embedding name");
    chart_cmd->add_option("--chart", chart_name, "named chart from the scenario");

    // ---- chart-roundtrip ----
    std::string sections_name;
    auto* roundtrip_cmd =
        app.add_subcommand("chart-roundtrip", "forward/inverse chart consistency");
    add_common(roundtrip_cmd, args, 64);
    roundtrip_cmd->add_option("--base", base_name, "base embedding (or chart) name");
    roundtrip_cmd->add_option("--target", target_name, "target embedding name");
    roundtrip_cmd->add_option("--chart", chart_name, "named chart from the scenario");
    roundtrip_cmd->add_option("--sections", sections_name,
                              "start from named sections instead of a target");

    // ---- chart-change ----
    std::string chart_i = "ci", chart_j = "cj";
    auto* change_cmd = app.add_subcommand("chart-change", "transport sections between charts");
    add_common(change_cmd, args, 64);
    change_cmd->add_option("--chart-i", chart_i, "source chart name");
    change_cmd->add_option("--chart-j", chart_j, "destination chart name");
    change_cmd->add_option("--target", target_name, "target embedding name");

    // ---- moser ----
    std::string mu_name = "uniform", nu_name = "linear_halfplus";
    auto* moser_cmd = app.add_subcommand("moser", "volume transport B with B_* mu = nu");
    add_common(moser_cmd, args, 128);
    moser_cmd->add_option("--mu", mu_name, "reference density name");
    moser_cmd->add_option("--nu", nu_name, "target density name");

    // ---- decompose ----
    std::string phi_name = "quad";
    auto* dec_cmd = app.add_subcommand("decompose", "split a diffeomorphism");
    add_common(dec_cmd, args, 128);
    dec_cmd->add_option("--phi", phi_name, "diffeomorphism name");
    dec_cmd->add_option("--mu", mu_name, "volume form name");

    // ---- project ----
    std::string f_name = "interval";
    bool vol_flag = false;
    double tol_rank = 0.0, tol_sep = 0.0;
    auto* proj_cmd = app.add_subcommand("project", "bundle projections pi / pi_vol");
    add_common(proj_cmd, args, 64);
    proj_cmd->add_option("--embedding", f_name, "embedding name");
    proj_cmd->add_option("--mu", mu_name, "volume form name (for --vol)");
    proj_cmd->add_flag("--vol", vol_flag, "project to the volume Grassmannian");
    proj_cmd->add_option("--tol-rank", tol_rank, "immersion rank tolerance override");
    proj_cmd->add_option("--tol-sep", tol_sep, "injectivity separation tolerance override");

    // ---- trivialize ----
    auto* triv_cmd = app.add_subcommand("trivialize", "bundle trivializations");
    add_common(triv_cmd, args, 64);
    triv_cmd->add_option("--embedding", f_name, "embedding name");
    triv_cmd->add_option("--base", base_name, "chart base (or chart) name");
    triv_cmd->add_option("--mu", mu_name, "volume form name (for --vol)");
    triv_cmd->add_flag("--vol", vol_flag, "use the volume-preserving structure group");

    // ---- tangent ----
    std::string field_name = "normal_sine_0.2";
    auto* tan_cmd = app.add_subcommand("tangent", "tangent projections of a field");
    add_common(tan_cmd, args, 64);
    tan_cmd->add_option("--embedding", f_name, "embedding name");
    tan_cmd->add_option("--field", field_name, "tangent field name");
    tan_cmd->add_option("--mu", mu_name, "volume form name (for --vol)");
    tan_cmd->add_flag("--vol", vol_flag, "project to the volume Grassmannian tangent space");

    // ---- dvol ----
    std::string case_name = "auto";
    auto* dvol_cmd = app.add_subcommand("dvol", "first variation of volume");
    add_common(dvol_cmd, args, 64);
    dvol_cmd->add_option("--embedding", f_name, "embedding name");
    dvol_cmd->add_option("--field", field_name, "variation field name");
    dvol_cmd->add_option("--case", case_name, "codim0 | positive | auto");

    // ---- curvature ----
    auto* curv_cmd = app.add_subcommand("curvature", "mean curvature of an embedding");
    add_common(curv_cmd, args, 128);
    curv_cmd->add_option("--embedding", f_name, "embedding name");

    // ---- membership ----
    std::string which_name = "EmbVol";
    auto* mem_cmd = app.add_subcommand("membership", "tangent-space membership predicates");
    add_common(mem_cmd, args, 64);
    mem_cmd->add_option("--embedding", f_name, "embedding name");
    mem_cmd->add_option("--field", field_name, "tangent field name");
    mem_cmd->add_option("--mu", mu_name, "volume form name");
    mem_cmd->add_option("--which", which_name, "Emb0 | EmbVol | VerticalGr | VerticalVol");

    // ---- verify ----
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
    add_common(verify_cmd, args, 64);

    // ---- gen ----
    std::string gen_dir = "gen";
    auto* gen_cmd = app.add_subcommand("gen", "write sample scenarios");
    gen_cmd->add_option("--output", gen_dir, "directory for the scenario files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            auto files = write_sample_scenarios(gen_dir);
            json doc;
            doc["operation"] = "gen";
            doc["outputs"] = {{"directory", gen_dir}, {"files", files}};
            std::cout << doc.dump(2) << "\n";
            return 0;
        }

        if (chart_cmd->parsed() || roundtrip_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            TubularChart chart = sc.chart(chart_name.empty() ? base_name : chart_name);
            Embedding target =
                sections_name.empty()
                    ? sc.embedding(target_name)
                    : chart_inverse(sc.sections(sections_name, chart), chart).representative;
            double tol = resolve_tol(args, sc, "chart", 1e-8);
            auto sec = chart_forward({target, {}}, chart);
            json doc;
            doc["inputs_digest"] = sc.digest("chart|" + base_name + "|" + target_name);
            doc["outputs"] = {{"sigma_dagger", sec.sigma_dagger}, {"sigma", sec.sigma}};
            json residuals = json::array();
            auto rebuilt = chart_inverse(sec, chart);
            double dh = image_hausdorff(rebuilt.representative, target);
            residuals.push_back(residual_entry("inverse_reproduces_image", dh, 100.0 * tol));
            if (roundtrip_cmd->parsed()) {
                auto back = chart_forward(rebuilt, chart);
                double worst = 0.0;
                for (std::size_t b = 0; b < sec.sigma_dagger.size(); ++b) {
                    worst = std::max(worst,
                                     std::fabs(back.sigma_dagger[b] - sec.sigma_dagger[b]));
                }
                for (std::size_t i = 0; i < sec.sigma.size(); ++i) {
                    worst = std::max(worst, std::fabs(back.sigma[i] - sec.sigma[i]));
                }
                residuals.push_back(residual_entry("section_roundtrip", worst, tol));
                doc["operation"] = "chart-roundtrip";
            } else {
                doc["operation"] = "chart";
            }
            doc["residuals"] = residuals;
            return emit(args, doc, &rebuilt.representative, &rebuilt.representative.values,
                        rebuilt.representative.m());
        }

        if (change_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto ci = sc.chart(chart_i);
            auto cj = sc.chart(chart_j);
            Embedding target = sc.embedding(target_name);
            double tol = resolve_tol(args, sc, "chart-change", 1e-7);
            auto sec_i = chart_forward({target, {}}, ci);
            auto sec_j = chart_change(sec_i, ci, cj);
            auto back = chart_change(sec_j, cj, ci);
            double worst = 0.0;
            for (std::size_t b = 0; b < sec_i.sigma_dagger.size(); ++b) {
                worst = std::max(worst, std::fabs(back.sigma_dagger[b] - sec_i.sigma_dagger[b]));
            }
            for (std::size_t i = 0; i < sec_i.sigma.size(); ++i) {
                worst = std::max(worst, std::fabs(back.sigma[i] - sec_i.sigma[i]));
            }
            double dh = image_hausdorff(chart_inverse(sec_i, ci).representative,
                                        chart_inverse(sec_j, cj).representative);
            json doc;
            doc["operation"] = "chart-change";
            doc["inputs_digest"] = sc.digest("chart-change|" + chart_i + "|" + chart_j);
            doc["outputs"] = {{"sigma_dagger_i", sec_i.sigma_dagger},
                              {"sigma_dagger_j", sec_j.sigma_dagger},
                              {"sigma_j", sec_j.sigma}};
            doc["residuals"] = json::array({residual_entry("images_agree", dh, 1e-6),
                                            residual_entry("roundtrip_sections", worst, tol)});
            return emit(args, doc);
        }

        if (moser_cmd->parsed()) {
            Scenario sc = load_scenario(args, 128);
            auto mu = sc.density(mu_name);
            auto nu = sc.density(nu_name);
            double scale = integrate(sc.grid(), mu) / integrate(sc.grid(), nu);
            for (double& v : nu.values) v *= scale;
            auto res = moser_map(mu, nu);
            double tol = resolve_tol(args, sc, "moser",
                                     sc.kind == ManifoldKind::ClosedDisk ? 1e-3 : 1e-7);
            json doc;
            doc["operation"] = "moser";
            doc["inputs_digest"] = sc.digest("moser|" + mu_name + "|" + nu_name);
            json outputs;
            outputs["map_values"] = res.map.values;
            outputs["warnings"] = res.warnings;
            if (sc.grid()->param_dim == 1) {
                json probes = json::array();
                for (int i = 1; i < 8; ++i) {
                    double t = (sc.kind == ManifoldKind::Circle ? 2.0 * std::numbers::pi : 1.0) *
                               i / 8.0;
                    probes.push_back({{"s", t}, {"B", res.map.eval({t, 0.0})[0]}});
                }
                outputs["samples"] = probes;
            }
            doc["outputs"] = outputs;
            double resid = sc.kind == ManifoldKind::ClosedDisk ? res.l1_residual
                                                               : res.sup_residual;
            doc["residuals"] = json::array({residual_entry("transport_residual", resid, tol)});
            return emit(args, doc, nullptr, &res.map.values, sc.grid()->param_dim);
        }

        if (dec_cmd->parsed()) {
            Scenario sc = load_scenario(args, 128);
            auto mu = sc.density(mu_name);
            auto phi = sc.diffeo(phi_name);
            auto split = decompose_diffeo(phi, mu);
            double tol = resolve_tol(args, sc, "decompose", 1e-7);
            json doc;
            doc["operation"] = "decompose";
            doc["inputs_digest"] = sc.digest("decompose|" + phi_name + "|" + mu_name);
            doc["outputs"] = {{"phi_vol_values", split.phi_vol.values},
                              {"rho_values", split.rho.density.values},
                              {"rho_mass_sign", split.rho.mass_sign}};
            doc["residuals"] = json::array(
                {residual_entry("recomposition", split.recomposition_residual, tol),
                 residual_entry("volume_preservation", split.preservation_residual, 10.0 * tol)});
            return emit(args, doc, nullptr, &split.phi_vol.values, sc.grid()->param_dim);
        }

        if (proj_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto f = sc.embedding(f_name);
            json doc;
            doc["operation"] = "project";
            doc["inputs_digest"] = sc.digest("project|" + f_name);
            if (vol_flag) {
                auto mu = sc.density(mu_name);
                auto vp = project_vol(f, mu);
                doc["outputs"] = {{"total_mass", vp.nu.total_mass()},
                                  {"nu_pullback", vp.nu.pullback}};
                doc["residuals"] = json::array({residual_entry(
                    "mass_conservation",
                    std::fabs(vp.nu.total_mass() - integrate(sc.grid(), mu)), 1e-12)});
            } else {
                auto N = project_gr(f);
                EmbeddingTolerances tols;
                if (tol_rank > 0.0) tols.rank = tol_rank;
                if (tol_sep > 0.0) tols.separation = tol_sep;
                auto diag = check_embedding(f, tols);
                doc["outputs"] = {{"nodes", N.representative.values},
                                  {"min_singular_value", diag.min_singular_value},
                                  {"min_separation", diag.min_nonneighbor_separation}};
                doc["residuals"] = json::array();
            }
            return emit(args, doc, &f, &f.values, f.m());
        }

        if (triv_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto f = sc.embedding(f_name);
            auto chart = sc.chart(base_name);
            double tol = resolve_tol(args, sc, "trivialize", 1e-6);
            json doc;
            doc["inputs_digest"] = sc.digest("trivialize|" + f_name + "|" + base_name);
            if (vol_flag) {
                auto mu = sc.density(mu_name);
                auto tv = trivialize_vol(f, mu, chart);
                auto back = trivialize_vol_inv(tv.point, tv.psi_vol, mu, chart);
                double worst = 0.0;
                for (std::size_t i = 0; i < f.values.size(); ++i) {
                    worst = std::max(worst, std::fabs(back.values[i] - f.values[i]));
                }
                auto pushed = pushforward_by_diffeo(mu, tv.psi_vol);
                double pw = 0.0;
                for (std::size_t i = 0; i < mu.values.size(); ++i) {
                    pw = std::max(pw, std::fabs(pushed.values[i] - mu.values[i]));
                }
                doc["operation"] = "trivialize-vol";
                doc["outputs"] = {{"psi_vol_values", tv.psi_vol.values}};
                doc["residuals"] =
                    json::array({residual_entry("roundtrip", worst, tol),
                                 residual_entry("psi_vol_preserves_mu", pw, tol)});
            } else {
                auto tv = trivialize(f, chart);
                auto back = trivialize_inv(tv.point, tv.psi, chart);
                double worst = 0.0;
                for (std::size_t i = 0; i < f.values.size(); ++i) {
                    worst = std::max(worst, std::fabs(back.values[i] - f.values[i]));
                }
                doc["operation"] = "trivialize";
                doc["outputs"] = {{"psi_values", tv.psi.values}};
                doc["residuals"] = json::array({residual_entry("roundtrip", worst, tol)});
            }
            return emit(args, doc);
        }

        if (tan_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto f = sc.embedding(f_name);
            auto v = sc.field(field_name, f);
            json doc;
            doc["inputs_digest"] = sc.digest("tangent|" + f_name + "|" + field_name);
            if (vol_flag) {
                auto mu = sc.density(mu_name);
                auto w = tangent_project_vol(f, mu, v);
                doc["operation"] = "tangent-vol";
                doc["outputs"] = {{"w_dagger", w.w_dagger},
                                  {"alpha", w.alpha},
                                  {"d_alpha", w.d_alpha.values},
                                  {"w_perp", w.w_perp}};
                doc["residuals"] = json::array({residual_entry(
                    "boundary_compatibility", vol_compat_residual(f, mu, w), 1e-10)});
            } else {
                auto w = tangent_project_gr(f, v);
                doc["operation"] = "tangent";
                doc["outputs"] = {{"w_dagger", w.w_dagger}, {"w_perp", w.w_perp}};
                doc["residuals"] = json::array();
            }
            return emit(args, doc);
        }

        if (dvol_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto f = sc.embedding(f_name);
            auto v = sc.field(field_name, f);
            DvolCase which = case_name == "codim0" ? DvolCase::Codim0
                             : case_name == "positive" ? DvolCase::PositiveCodim
                                                       : (f.k() == f.m() ? DvolCase::Codim0
                                                                         : DvolCase::PositiveCodim);
            double dv = dvol_embedding(f, v, which);
            double h = 1e-4;
            double fd = (vol_functional(embedding_line(f, v, h), which) -
                         vol_functional(embedding_line(f, v, -h), which)) /
                        (2.0 * h);
            double tol = resolve_tol(args, sc, "dvol", 1e-4);
            json doc;
            doc["operation"] = "dvol";
            doc["inputs_digest"] = sc.digest("dvol|" + f_name + "|" + field_name);
            doc["outputs"] = {{"dvol", dv},
                              {"finite_difference", fd},
                              {"volume", vol_functional(f, which)}};
            doc["residuals"] = json::array({residual_entry(
                "fd_consistency", std::fabs(dv - fd) / std::max(1.0, std::fabs(fd)), tol)});
            return emit(args, doc);
        }

        if (curv_cmd->parsed()) {
            Scenario sc = load_scenario(args, 128);
            auto f = sc.embedding(f_name);
            auto H = mean_curvature({f, {}});
            double mn = 1e300, mx = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) {
                double m = H.magnitude(i);
                mn = std::min(mn, m);
                mx = std::max(mx, m);
                mean += m;
            }
            mean /= static_cast<double>(f.size());
            json doc;
            doc["operation"] = "curvature";
            doc["inputs_digest"] = sc.digest("curvature|" + f_name);
            doc["outputs"] = {{"H", H.H},
                              {"magnitude_min", mn},
                              {"magnitude_max", mx},
                              {"magnitude_mean", mean}};
            doc["residuals"] = json::array();
            return emit(args, doc, &f, &H.H, f.m());
        }

        if (mem_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto f = sc.embedding(f_name);
            auto v = sc.field(field_name, f);
            auto mu = sc.density(mu_name);
            MembershipKind which = MembershipKind::EmbVol;
            if (which_name == "Emb0") which = MembershipKind::Emb0;
            else if (which_name == "EmbVol") which = MembershipKind::EmbVol;
            else if (which_name == "VerticalGr") which = MembershipKind::VerticalGr;
            else if (which_name == "VerticalVol") which = MembershipKind::VerticalVol;
            else fail(ErrorCode::ScenarioParse, "unknown membership predicate " + which_name);
            double tol = resolve_tol(args, sc, "membership", 1e-8);
            auto res = membership(f, &mu, v, which, AmbientDensity::lebesgue(), tol);
            json doc;
            doc["operation"] = "membership";
            doc["inputs_digest"] =
                sc.digest("membership|" + f_name + "|" + field_name + "|" + which_name);
            doc["outputs"] = {{"member", res.member},
                              {"residual", res.residual},
                              {"tolerance", res.tolerance}};
            doc["residuals"] = json::array();
            return emit(args, doc);
        }

        if (verify_cmd->parsed()) {
            Scenario sc = load_scenario(args, 64);
            auto results = run_verify_suite(sc);
            json doc;
            doc["operation"] = "verify";
            doc["inputs_digest"] = sc.digest("verify");
            json residuals = json::array();
            for (const auto& r : results) {
                residuals.push_back(residual_entry(r.name, r.residual, r.tolerance));
            }
            doc["residuals"] = residuals;
            doc["outputs"] = {{"checks", results.size()}};
            return emit(args, doc);
        }
    } catch (const Error& e) {
        json doc;
        doc["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
        std::cerr << doc.dump(2) << "\n";
        return e.code() == ErrorCode::ScenarioParse ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
