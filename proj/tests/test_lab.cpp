#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "superdiff/lab.hpp"
#include "superdiff/rng.hpp"

using namespace superdiff;
using nlohmann::json;

TEST_SUITE_BEGIN("lab");

namespace {

json base_semigroup_config() {
    return json{{"kind", "semigroup"},
                {"seed", 1234},
                {"replicas", 200},
                {"model", json{{"catalog", "bm_plain"},
                               {"params", json{{"d", 1}, {"beta", 0.0}, {"k", 0.0}}}}},
                {"params", json{{"f", json{{"kind", "constant"}, {"params", json{{"value", 1.0}}}}},
                                {"x", json::array({0.0})},
                                {"t", 1.0},
                                {"dt", 0.01}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("growth_fit exact and noisy series") {
    SUBCASE("pure exponential is recovered exactly") {
        std::vector<std::pair<double, double>> series;
        for (double t : {1.0, 2.0, 3.0, 4.0}) series.emplace_back(t, std::exp(2.0 * t));
        const auto g = lab::growth_fit(series, 1.0, 4.0);
        CHECK(g.rate == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(g.r_squared == doctest::Approx(1.0));
        CHECK(g.half_width < 1e-10);
    }
    SUBCASE("the intercept absorbs a prefactor") {
        std::vector<std::pair<double, double>> series;
        for (double t : {1.0, 2.0, 3.0, 4.0, 5.0}) series.emplace_back(t, 5.0 * std::exp(0.5 * t));
        CHECK(lab::growth_fit(series, 1.0, 5.0).rate == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("non-positive values are rejected") {
        std::vector<std::pair<double, double>> series{{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}, {4.0, 1.0}};
        CHECK_THROWS(lab::growth_fit(series, 1.0, 4.0));
    }
    SUBCASE("CI coverage on a known generator") {
        Rng rng(2024);
        int covered = 0;
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<std::pair<double, double>> series;
            for (double t = 1.0; t <= 8.0; t += 1.0) {
                const double noise = 1.0 + 0.02 * (2.0 * rng.uniform() - 1.0);
                series.emplace_back(t, std::exp(0.7 * t) * noise);
            }
            const auto g = lab::growth_fit(series, 1.0, 8.0);
            covered += g.contains(0.7) ? 1 : 0;
        }
        CHECK(covered >= 90);
    }
}

TEST_CASE("schema validation names the offending field") {
    SUBCASE("missing seed") {
        json c = base_semigroup_config();
        c.erase("seed");
        try {
            lab::validate_config(c);
            FAIL("should have thrown");
        } catch (const lab::SchemaError& e) {
            CHECK(e.field == "seed");
        }
    }
    SUBCASE("unknown kind") {
        json c = base_semigroup_config();
        c["kind"] = "banana";
        try {
            lab::validate_config(c);
            FAIL("should have thrown");
        } catch (const lab::SchemaError& e) {
            CHECK(e.field == "kind");
        }
    }
    SUBCASE("wrong replica type") {
        json c = base_semigroup_config();
        c["replicas"] = "many";
        CHECK_THROWS_AS(lab::validate_config(c), lab::SchemaError);
    }
    SUBCASE("missing kind-specific parameter") {
        json c = base_semigroup_config();
        c["params"].erase("t");
        try {
            lab::validate_config(c);
            FAIL("should have thrown");
        } catch (const lab::SchemaError& e) {
            CHECK(e.field == "params.t");
        }
    }
    SUBCASE("model without catalog or inline spec") {
        json c = base_semigroup_config();
        c["model"] = json{{"nothing", 1}};
        try {
            lab::validate_config(c);
            FAIL("should have thrown");
        } catch (const lab::SchemaError& e) {
            CHECK(e.field == "model");
        }
    }
}

TEST_CASE("semigroup experiment end to end") {
    const auto result = lab::run_experiment(base_semigroup_config());
    CHECK(result.exit_code == 0);
    bool found = false;
    for (const auto& [name, value] : result.report.scalars) {
        if (name == "mean") {
            CHECK(value == 1.0);
            found = true;
        }
        if (name == "std_error") CHECK(value == 0.0);
    }
    CHECK(found);
    CHECK(result.report.experiment.at("kind") == "semigroup");
}

TEST_CASE("expect blocks drive the exit code") {
    json c = base_semigroup_config();
    c["expect"] = json::array({json{{"quantity", "mean"}, {"target", 1.0}, {"abs_tol", 1e-9}}});
    CHECK(lab::run_experiment(c).exit_code == 0);
    c["expect"] = json::array({json{{"quantity", "mean"}, {"target", 2.0}, {"abs_tol", 1e-9}}});
    CHECK(lab::run_experiment(c).exit_code == 2);
    c["expect"] = json::array({json{{"quantity", "nope"}, {"target", 1.0}, {"abs_tol", 1.0}}});
    CHECK(lab::run_experiment(c).exit_code == 2);
}

TEST_CASE("extinction probability experiment") {
    const json c{{"kind", "extinction_prob"},
                 {"seed", 7},
                 {"model", json{{"catalog", "bm_plain"},
                                {"params", json{{"d", 1}, {"beta", 0.0}, {"k", 1.0}}}}},
                 {"params", json{{"mu", json::array({json{{"x", {0.0}}, {"mass", 1.0}}})},
                                 {"t", 1.0},
                                 {"thetas", {10.0, 100.0, 1000.0}},
                                 {"grid", json{{"r_box", 8.0}, {"nodes", 257}}},
                                 {"dt_pde", 1e-3}}},
                 {"expect", json::array({json{{"quantity", "p_extinct"},
                                              {"target", 0.36788},
                                              {"abs_tol", 0.01}}})}};
    const auto result = lab::run_experiment(c);
    CHECK(result.exit_code == 0);
}

TEST_CASE("determinism: identical configs give byte-identical CSVs") {
    namespace fs = std::filesystem;
    const std::string dir1 = "lab_test_out1", dir2 = "lab_test_out2";
    json c{{"kind", "martingale"},
           {"seed", 12},
           {"replicas", 60},
           {"model", json{{"catalog", "drift_bm"},
                          {"params", json{{"b0", 1.0}, {"beta", 0.5}, {"k", 1.0}}}}},
           {"params", json{{"mu", json::array({json{{"x", {0.0}}, {"mass", 1.0}}})},
                           {"h", json{{"kind", "constant"}, {"params", json{{"value", 1.0}}}}},
                           {"lambda", 0.5},
                           {"t_grid", {0.5, 1.0}},
                           {"N", 20},
                           {"dt", 1e-3}}}};

    c["output_dir"] = dir1;
    lab::run_experiment(c);
    c["output_dir"] = dir2;
    setenv("SUPERDIFF_THREADS", "1", 1);
    lab::run_experiment(c);
    unsetenv("SUPERDIFF_THREADS");

    const std::string a = slurp(dir1 + "/tables/martingale.csv");
    const std::string b = slurp(dir2 + "/tables/martingale.csv");
    REQUIRE(!a.empty());
    CHECK(a == b);  // same bytes even across different worker counts
    CHECK(fs::exists(dir1 + "/report.json"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("list of reproducible examples") {
    const auto names = lab::list_examples();
    CHECK(names.size() == 6);
    CHECK(names.front() == "drift_bm");
}

TEST_CASE("defaults are echoed into reports") {
    const auto result = lab::run_experiment(base_semigroup_config());
    const json j = result.report.to_json();
    CHECK(j.contains("defaults"));
    CHECK(j.at("defaults").at("se_multiplier") == 3.0);
    CHECK(j.at("defaults").contains("version"));
    // every scalar the report names traces to a table or scalar entry
    CHECK(j.at("tables").contains("semigroup"));
}

TEST_SUITE_END();
