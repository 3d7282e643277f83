#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "superdiff/catalog.hpp"
#include "superdiff/cumulant.hpp"
#include "superdiff/particle.hpp"

using namespace superdiff;
using namespace superdiff::particle;
using nlohmann::json;

TEST_SUITE_BEGIN("particle");

namespace {
SimConfig make_config(std::size_t n, double dt, double horizon, std::uint64_t seed) {
    SimConfig c;
    c.particles_per_unit_mass = n;
    c.dt = dt;
    c.horizon = horizon;
    c.seed = seed;
    return c;
}
}  // namespace

TEST_CASE("cloud initialization") {
    const auto one = init_cloud(InitialMeasure::point({0.0}, 1.0), 100, 1, 1);
    CHECK(one.count() == 100);
    CHECK(one.mass() == doctest::Approx(1.0));
    CHECK_FALSE(one.rounded);

    const auto two = init_cloud(InitialMeasure({{{0.0}, 0.5}, {{1.0}, 0.5}}), 10, 1, 1);
    CHECK(two.count() == 10);

    const auto third = init_cloud(InitialMeasure::point({0.0}, 1.0 / 3.0), 100, 1, 1);
    CHECK(third.count() == 33);
    CHECK(third.rounded);

    CHECK_THROWS(init_cloud(InitialMeasure::point({0.0}, 1e-3), 100, 1, 1));
}

TEST_CASE("config validation and the stability bound") {
    SimConfig bad = make_config(5, 1e-3, 1.0, 1);
    CHECK_THROWS(bad.validate());
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.0}, {"k", 1.0}});
    const SimConfig cfg = make_config(100, 1e-3, 1.0, 1);
    CHECK(max_stable_dt(model, cfg) == doctest::Approx(0.1 / 200.0));
    // exponential intensity has no finite global bound; runtime substepping
    // carries the entire load
    const auto entry = catalog_build("htransform_survival", json{{"B", 0.5}, {"epsilon", 0.5}});
    CHECK(max_stable_dt(entry, cfg) == 0.0);
}

TEST_CASE("no branching: motion only, mass conserved") {
    const auto model = catalog_build("bm_plain", json{{"d", 2}, {"beta", 0.0}, {"k", 0.0}});
    const auto cfg = make_config(50, 1e-2, 1.0, 5);
    const auto rec = run_trajectory(model, InitialMeasure::point({0.0, 0.0}), cfg, {}, 0.1);
    for (double m : rec.total_mass) CHECK(m == doctest::Approx(1.0));
    for (std::size_t c : rec.particle_count) CHECK(c == 50);
}

TEST_CASE("determinism of trajectory records") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.3}, {"k", 1.0}});
    const auto cfg = make_config(50, 5e-4, 1.0, 99);
    Observables obs;
    obs.balls.push_back({"ball", Point{0.0}, 1.0});
    const auto a = run_trajectory(model, InitialMeasure::point({0.0}), cfg, obs, 0.1);
    const auto b = run_trajectory(model, InitialMeasure::point({0.0}), cfg, obs, 0.1);
    CHECK(a.total_mass == b.total_mass);
    CHECK(a.particle_count == b.particle_count);
    CHECK(a.observables.at("ball") == b.observables.at("ball"));
}

TEST_CASE("expectation formula with constant mass creation") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.5}, {"k", 0.0}});
    const auto cfg = make_config(100, 1e-3, 1.0, 7);
    const auto series = martingale_series(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(1.0), 0.0, {0.5, 1.0}, 400, cfg);
    CHECK(std::abs(series[0].mean.mean - std::exp(0.25)) < 3.0 * series[0].mean.std_error + 1e-6);
    CHECK(std::abs(series[1].mean.mean - std::exp(0.5)) < 3.0 * series[1].mean.std_error + 1e-6);
}

TEST_CASE("variance formula at critical branching") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.0}, {"k", 1.0}});
    const auto cfg = make_config(100, 5e-4, 0.5, 11);
    const auto series = martingale_series(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(1.0), 0.0, {0.5}, 600, cfg);
    const double target = 2.0 * 1.0 * 0.5;  // 2 k t ||mu||
    CHECK(std::abs(series[0].var.variance - target) < 3.0 * series[0].var.std_error);
}

TEST_CASE("laplace functional") {
    SUBCASE("f == 0 gives exactly one") {
        const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.2}, {"k", 1.0}});
        const auto e = laplace_functional(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(0.0), 0.5, 150,
                                          make_config(20, 1e-3, 0.5, 13));
        CHECK(e.mean == 1.0);
        CHECK(e.std_error == 0.0);
    }
    SUBCASE("deterministic-mass limit for k = 0") {
        const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.4}, {"k", 0.0}});
        const auto e = laplace_functional(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(0.7), 1.0, 800,
                                          make_config(200, 1e-3, 1.0, 17));
        const double target = std::exp(-0.7 * std::exp(0.4));
        CHECK(std::abs(e.mean - target) < 3.0 * e.std_error + 2.0 / 200.0);
    }
    SUBCASE("cross-module agreement with the cumulant solver") {
        const auto model = catalog_build("drift_bm", json{{"b0", 1.0}, {"beta", 1.0}, {"k", 1.0}});
        const auto e = laplace_functional(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(1.0), 1.0, 400,
                                          make_config(100, 4e-4, 1.0, 19));
        const auto grid = cumulant::SpaceGrid::line(10.0, 401);
        const auto sol = cumulant::solve_cumulant(model, ScalarField::constant(1.0), 1.0, grid, 1e-3);
        const double target = std::exp(-sol.at(1.0, 0.0));
        CHECK(std::abs(e.mean - target) < 3.0 * e.std_error + 0.02 * target);
    }
}

TEST_CASE("branching property over independent half measures") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.2}, {"k", 1.0}});
    const auto f = ScalarField::constant(0.7);
    const auto cfg_full = make_config(100, 5e-4, 1.0, 23);
    const auto cfg_half1 = make_config(100, 5e-4, 1.0, 29);
    const auto cfg_half2 = make_config(100, 5e-4, 1.0, 31);
    const auto full =
        laplace_functional(model, InitialMeasure::point({0.0}, 1.0), f, 1.0, 700, cfg_full);
    const auto h1 =
        laplace_functional(model, InitialMeasure::point({0.0}, 0.5), f, 1.0, 700, cfg_half1);
    const auto h2 =
        laplace_functional(model, InitialMeasure::point({0.0}, 0.5), f, 1.0, 700, cfg_half2);
    const double product = h1.mean * h2.mean;
    const double prod_se = std::sqrt(std::pow(h1.std_error * h2.mean, 2) +
                                     std::pow(h2.std_error * h1.mean, 2));
    CHECK(std::abs(full.mean - product) < 3.0 * (full.std_error + prod_se) + 0.01);
}

TEST_CASE("martingale with constant potential stays flat") {
    const auto model = catalog_build("drift_bm", json{{"b0", 1.0}, {"beta", 0.5}, {"k", 1.0}});
    const auto cfg = make_config(50, 1e-3, 2.0, 37);
    const auto series = martingale_series(model, InitialMeasure::point({0.0}),
                                          ScalarField::constant(1.0), 0.5, {0.5, 1.0, 1.5, 2.0},
                                          1000, cfg);
    for (const auto& pt : series)
        CHECK(std::abs(pt.mean.mean - 1.0) < 3.0 * pt.mean.std_error + 0.02);
}

TEST_CASE("total mass is a supermartingale when beta <= 0") {
    const auto model = catalog_build("htransform_survival", json{{"B", 0.5}, {"epsilon", 0.5},
                                                                 {"sign", -1.0}});
    const ModelSpec flat = model.with_k(ScalarField::constant(1.0));
    const auto cfg = make_config(50, 1e-3, 2.0, 41);
    const auto series = martingale_series(flat, InitialMeasure::point({0.0}),
                                          ScalarField::constant(1.0), 0.0, {0.5, 1.0, 1.5, 2.0},
                                          800, cfg);
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double se = series[i].mean.std_error + series[i - 1].mean.std_error;
        CHECK(series[i].mean.mean <= series[i - 1].mean.mean + 3.0 * se);
    }
}

TEST_CASE("extinction statistics") {
    SUBCASE("conserved mass: nothing goes extinct") {
        const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.0}, {"k", 0.0}});
        const auto records = run_replicas(model, InitialMeasure::point({0.0}),
                                          make_config(20, 1e-2, 1.0, 43), {}, 0.25, 120);
        const auto st = extinction_stats(records, 0.01, true);
        CHECK(st.weak_extinction_freq == 0.0);
        CHECK(st.extinction_freq == 0.0);
    }
    SUBCASE("critical branching extinction frequency matches the Riccati law") {
        const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.0}, {"k", 1.0}});
        const auto records = run_replicas(model, InitialMeasure::point({0.0}),
                                          make_config(200, 2.5e-4, 1.0, 47), {}, 0.25, 600);
        const auto st = extinction_stats(records, 0.01, true);
        const double target = std::exp(-oracles::riccati_flat_limit(0.0, 1.0, 1.0));
        const double se = stats::binomial_se(st.extinction_freq, records.size());
        CHECK(std::abs(st.extinction_freq - target) < 3.0 * se + 0.01);
    }
    SUBCASE("batch floor") {
        std::vector<TrajectoryRecord> few(10);
        CHECK_THROWS(extinction_stats(few, 0.01, true));
    }
}

TEST_CASE("overscaling trend on a doubling horizon schedule") {
    // lambda above the global growth bound crushes the normalized mass
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.4}, {"k", 1.0}});
    const double lambda = 0.9;
    std::vector<double> percentiles;
    for (double horizon : {1.0, 2.0, 4.0}) {
        const auto cfg = make_config(50, 1e-3, horizon, 53);
        const auto samples = martingale_samples(model, InitialMeasure::point({0.0}),
                                                ScalarField::constant(1.0), lambda, {horizon},
                                                400, cfg);
        percentiles.push_back(stats::percentile(samples[0], 0.95));
    }
    CHECK(percentiles[1] < percentiles[0]);
    CHECK(percentiles[2] < percentiles[1]);
}

TEST_CASE("refinement in N tightens the Laplace-functional gap") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.5}, {"k", 1.0}});
    const auto f = ScalarField::constant(1.0);
    const auto grid = cumulant::SpaceGrid::line(8.0, 257);
    const auto sol = cumulant::solve_cumulant(model, f, 1.0, grid, 1e-3);
    const double target = std::exp(-sol.at(1.0, 0.0));
    double gap50 = 0.0, gap200 = 0.0, se50 = 0.0, se200 = 0.0;
    {
        const auto e = laplace_functional(model, InitialMeasure::point({0.0}), f, 1.0, 1500,
                                          make_config(50, 9e-4, 1.0, 59));
        gap50 = std::abs(e.mean - target);
        se50 = e.std_error;
    }
    {
        const auto e = laplace_functional(model, InitialMeasure::point({0.0}), f, 1.0, 1500,
                                          make_config(200, 2.4e-4, 1.0, 61));
        gap200 = std::abs(e.mean - target);
        se200 = e.std_error;
    }
    CHECK(gap200 <= gap50 + 3.0 * (se50 + se200));
}

TEST_CASE("constant-coefficient total-mass law") {
    const ConstantMassLaw law{0.5, 1.0};
    SUBCASE("moments and extinction match the closed forms") {
        CHECK(law.mean(1.0, 1.0) == doctest::Approx(std::exp(0.5)));
        CHECK(law.variance(1.0, 1.0) ==
              doctest::Approx(2.0 * std::exp(0.5) * (std::exp(0.5) - 1.0) / 0.5));
        const ConstantMassLaw critical{0.0, 1.0};
        CHECK(critical.extinction_probability(1.0, 1.0) == doctest::Approx(std::exp(-1.0)));
    }
    SUBCASE("sampler reproduces mean, variance and atom at zero") {
        Rng rng(67);
        const std::size_t n = 200000;
        std::vector<double> draws(n);
        std::size_t zeros = 0;
        for (auto& d : draws) {
            d = law.sample(1.0, 1.0, rng);
            zeros += d == 0.0 ? 1 : 0;
        }
        const auto mean = stats::summarize(draws);
        CHECK(std::abs(mean.mean - law.mean(1.0, 1.0)) < 3.0 * mean.std_error);
        const auto var = stats::variance_with_se(draws);
        CHECK(std::abs(var.variance - law.variance(1.0, 1.0)) < 4.0 * var.std_error);
        const double p0 = static_cast<double>(zeros) / n;
        CHECK(std::abs(p0 - law.extinction_probability(1.0, 1.0)) <
              3.0 * stats::binomial_se(p0, n) + 1e-3);
    }
    SUBCASE("particle total mass agrees with the law in distribution") {
        const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.5}, {"k", 1.0}});
        const auto samples = martingale_samples(model, InitialMeasure::point({0.0}),
                                                ScalarField::constant(1.0), 0.0, {1.0}, 1200,
                                                make_config(100, 4e-4, 1.0, 71));
        const auto mc = stats::summarize(samples[0]);
        CHECK(std::abs(mc.mean - law.mean(1.0, 1.0)) < 3.0 * mc.std_error + 0.02);
        const auto var = stats::variance_with_se(samples[0]);
        CHECK(std::abs(var.variance - law.variance(1.0, 1.0)) < 3.0 * var.std_error + 0.05);
    }
}

TEST_CASE("escape accounting guards total-mass statistics") {
    const auto model = catalog_build("ou_outward", json{{"gamma", 1.0}, {"d", 2}, {"beta", 0.0}});
    SimConfig cfg = make_config(20, 1e-3, 6.0, 73);
    cfg.escape_radius = 4.0;
    Observables obs;
    obs.balls.push_back({"unit", Point{0.0, 0.0}, 1.0});
    const auto records = run_replicas(model, InitialMeasure::point({0.0, 0.0}), cfg, obs, 0.5, 120);
    bool any_escape = false;
    for (const auto& r : records) any_escape |= r.escaped_mass > 0.0;
    CHECK(any_escape);
    CHECK_THROWS(extinction_stats(records, 0.01, true));
}

TEST_CASE("population cap raises and truncates") {
    const auto model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 2.0}, {"k", 1.0}});
    SimConfig cfg = make_config(100, 4e-4, 4.0, 79);
    cfg.max_particles = 300;
    const auto rec = run_trajectory(model, InitialMeasure::point({0.0}), cfg, {}, 0.25);
    CHECK(rec.truncated);
    CHECK(rec.times.back() < 4.0);
}

TEST_SUITE_END();
