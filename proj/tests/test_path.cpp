#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "superdiff/catalog.hpp"
#include "superdiff/parallel.hpp"
#include "superdiff/path.hpp"
#include "superdiff/stats.hpp"

using namespace superdiff;
using nlohmann::json;

TEST_SUITE_BEGIN("path");

namespace {
const DiffusionSpec& standard_bm() {
    static const DiffusionSpec d(1, DriftSpec::zero(), DiffusionMatrix::identity());
    return d;
}
}  // namespace

TEST_CASE("determinism: same seed, same bytes") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 2.0;
    Rng r1(42), r2(42);
    const Path a = simulate_path(standard_bm(), Point{0.3}, cfg, r1);
    const Path b = simulate_path(standard_bm(), Point{0.3}, cfg, r2);
    CHECK(a.positions == b.positions);
    CHECK(a.times == b.times);
}

TEST_CASE("Brownian terminal moments") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    const std::size_t n = 100000;
    std::vector<double> terminal(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng = Rng::stream(7, i);
        const Path p = simulate_path(standard_bm(), Point{0.0}, cfg, rng);
        terminal[i] = p.at(p.steps())[0];
    });
    const MCEstimate mean = stats::summarize(terminal);
    CHECK(std::abs(mean.mean - 0.0) < 3.0 * mean.std_error);
    const auto var = stats::variance_with_se(terminal);
    CHECK(std::abs(var.variance - 1.0) < 3.0 * var.std_error);
}

TEST_CASE("drifted mean") {
    const auto model = catalog_build("drift_bm", json{{"b0", 1.0}});
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 2.0;
    const std::size_t n = 20000;
    std::vector<double> terminal(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng = Rng::stream(11, i);
        const Path p = simulate_path(model.diffusion(), Point{0.5}, cfg, rng);
        terminal[i] = p.at(p.steps())[0];
    });
    const MCEstimate mean = stats::summarize(terminal);
    CHECK(std::abs(mean.mean - (0.5 - 2.0)) < 3.0 * mean.std_error);
}

TEST_CASE("Feynman-Kac weights by left-endpoint sums") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.5;
    Rng rng(3);
    Path p = simulate_path(standard_bm(), Point{0.0}, cfg, rng);

    accumulate_fk(p, ScalarField::constant(0.0));
    for (double lw : p.log_weight) CHECK(lw == 0.0);  // weight identically one

    accumulate_fk(p, ScalarField::constant(0.7));
    CHECK(p.log_weight[0] == 0.0);
    for (std::size_t i = 0; i <= p.steps(); ++i)
        CHECK(p.log_weight[i] == doctest::Approx(0.7 * p.times[i]).epsilon(1e-12));

    // weight positivity
    accumulate_fk(p, ScalarField::ball_indicator(1.0, -3.0));
    for (std::size_t i = 0; i <= p.steps(); ++i) CHECK(std::exp(p.log_weight[i]) > 0.0);
}

TEST_CASE("weight ordering under a shared path") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 2.0;
    Rng rng(5);
    Path p = simulate_path(standard_bm(), Point{0.0}, cfg, rng);
    Path q = p;
    accumulate_fk(p, ScalarField::ball_indicator(1.0, -1.0));   // beta1 <= beta2
    accumulate_fk(q, ScalarField::ball_indicator(1.0, -0.25));
    for (std::size_t i = 0; i <= p.steps(); ++i) CHECK(p.log_weight[i] <= q.log_weight[i] + 1e-15);
}

TEST_CASE("aux accumulators are monotone for nonnegative integrands") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    Rng rng(9);
    Path p = simulate_path(standard_bm(), Point{0.0}, cfg, rng);
    accumulate_fk(p, ScalarField::constant(-0.3));
    accumulate_aux(p, "occupation", ScalarField::two_sided_exponential(1.0), true);
    const auto& acc = p.aux.at("occupation");
    CHECK(acc[0] == 0.0);
    for (std::size_t i = 1; i < acc.size(); ++i) CHECK(acc[i] >= acc[i - 1]);
}

TEST_CASE("killed paths") {
    PathConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;

    SUBCASE("huge ball never exits at desk scale") {
        Rng rng(1);
        const Path p = simulate_killed(standard_bm(), Point{0.0}, 1e6, cfg, rng);
        CHECK_FALSE(p.exit_time.has_value());
    }

    SUBCASE("exit time is monotone in the radius under shared noise") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            Rng r1 = Rng::stream(31, seed), r2 = Rng::stream(31, seed);
            const Path small = simulate_killed(standard_bm(), Point{0.0}, 0.5, cfg, r1);
            const Path big = simulate_killed(standard_bm(), Point{0.0}, 1.0, cfg, r2);
            const double t1 = small.exit_time.value_or(2.0);
            const double t2 = big.exit_time.value_or(2.0);
            CHECK(t1 <= t2);
        }
    }

    SUBCASE("x0 outside the ball is rejected") {
        Rng rng(1);
        CHECK_THROWS(simulate_killed(standard_bm(), Point{2.0}, 1.0, cfg, rng));
    }
}

TEST_CASE("interval survival probability against the reflection series") {
    // grid-exit detection biases survival upward by O(sqrt(dt)); the
    // dt-halving check bounds it and the sqrt(dt)-extrapolated value must
    // sit on the series inside the Monte Carlo band
    auto estimate = [&](double dt) {
        PathConfig cfg;
        cfg.dt = dt;
        cfg.horizon = 1.0;
        const std::size_t n = 60000;
        std::vector<double> survived(n);
        parallel_for(n, [&](std::size_t i) {
            Rng rng = Rng::stream(23, i);
            const Path p = simulate_killed(standard_bm(), Point{0.0}, 1.0, cfg, rng);
            survived[i] = p.exit_time ? 0.0 : 1.0;
        });
        return stats::summarize(survived);
    };
    const double target = oracles::interval_survival(1.0, 1.0);
    const MCEstimate coarse = estimate(1e-3);
    const MCEstimate fine = estimate(2.5e-4);  // halves the sqrt(dt) bias
    CHECK(std::abs(fine.mean - target) < std::abs(coarse.mean - target) + 3.0 * fine.std_error);
    const double extrapolated = 2.0 * fine.mean - coarse.mean;
    const double se = std::sqrt(4.0 * fine.std_error * fine.std_error +
                                coarse.std_error * coarse.std_error);
    CHECK(std::abs(extrapolated - target) < 3.0 * se);
}

TEST_CASE("conservativity proxy: free paths are never lost") {
    PathConfig cfg;
    cfg.dt = 0.02;
    cfg.horizon = 1.0;
    std::size_t finished = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        Rng rng = Rng::stream(77, i);
        const Path p = simulate_path(standard_bm(), Point{0.0}, cfg, rng);
        finished += p.times.back() == cfg.horizon ? 1 : 0;
    }
    CHECK(finished == 500);
}

TEST_CASE("config validation") {
    PathConfig bad;
    bad.dt = 0.0;
    CHECK_THROWS(bad.validate());
    bad.dt = 2.0;
    bad.horizon = 1.0;
    CHECK_THROWS(bad.validate());
}

TEST_SUITE_END();
