#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "nlg/scenario.hpp"
#include "nlg/verify.hpp"

using namespace nlg;

TEST_CASE("scenario parse, dump, and builtin resolution") {
    const char* text = R"({
      "version": "nlgrass-scenario/1",
      "manifold": {"kind": "interval01", "resolution": 32},
      "seed": 7,
      "tolerances": {"default": 1e-8, "moser": 1e-7},
      "embeddings": {"f0": {"builtin": "interval"}},
      "densities": {"mu": {"builtin": "uniform"}}
    })";
    auto sc = Scenario::parse(text);
    CHECK(sc.kind == ManifoldKind::Interval01);
    CHECK(sc.resolution == 32);
    CHECK(sc.seed == 7);
    CHECK(sc.tolerance("moser", 1e-3) == 1e-7);
    CHECK(sc.tolerance("chart", 1e-3) == 1e-8);

    auto f0 = sc.embedding("f0");
    CHECK(f0.m() == 2);
    CHECK(f0.size() == 32);
    // Builtin fallbacks with parameter tails.
    auto seg = sc.embedding("segment_0.1_0.8");
    CHECK(seg.point(0)[0] == doctest::Approx(0.1));
    CHECK(seg.point(seg.size() - 1)[0] == doctest::Approx(0.8));
    auto mu = sc.density("mu");
    CHECK(integrate(sc.grid(), mu) == doctest::Approx(1.0));
    auto nu = sc.density("linear_halfplus");
    CHECK(integrate(sc.grid(), nu) == doctest::Approx(1.0).epsilon(1e-12));
    auto phi = sc.diffeo("quad");
    CHECK(phi.eval({0.5, 0.0})[0] == doctest::Approx(0.625));

    // Digest is stable under re-parsing.
    auto sc2 = Scenario::parse(sc.dump());
    CHECK(sc.digest("op") == sc2.digest("op"));

    // Parse failures raise the parse error code.
    try {
        (void)Scenario::parse("{not json");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ScenarioParse);
    }
}

TEST_CASE("sample scenarios load and verify on the interval") {
    auto dir = std::filesystem::temp_directory_path() / "nlg_gen_test";
    auto files = write_sample_scenarios(dir.string());
    CHECK(files.size() >= 4);
    for (const auto& f : files) {
        auto sc = Scenario::load((dir / f).string());
        CHECK(sc.version == "nlgrass-scenario/1");
    }
    // The interval suite passes end to end.
    auto sc = Scenario::load((dir / "interval_basic.json").string());
    auto results = run_verify_suite(sc);
    for (const auto& r : results) {
        INFO(r.name, " residual ", r.residual, " tol ", r.tolerance);
        CHECK(r.pass);
    }
    std::filesystem::remove_all(dir);
}
