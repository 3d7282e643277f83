#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "superdiff/fields.hpp"

using namespace superdiff;

TEST_SUITE_BEGIN("fields");

TEST_CASE("analytic family evaluation") {
    const Point x{3.0, -1.0};
    CHECK(ScalarField::constant(2.0)(x) == 2.0);

    const auto ball = ScalarField::ball_indicator(1.0, -0.5);
    CHECK(ball(Point{0.5, 0.0}) == -0.5);
    CHECK(ball(Point{1.5, 0.0}) == 0.0);

    const auto power = ScalarField::power_tail(5.0);
    CHECK(power(Point{2.0}) == doctest::Approx(0.03125).epsilon(1e-14));
    CHECK(power(Point{0.3}) == 1.0);

    const auto exp1 = ScalarField::exponential(0.5, 2.0);
    CHECK(exp1(Point{1.0, 7.0}) == doctest::Approx(2.0 * std::exp(0.5)));

    const auto ts = ScalarField::two_sided_exponential(2.0);
    CHECK(ts(Point{-1.5}) == doctest::Approx(std::exp(-3.0)));

    const auto gs = ScalarField::gaussian(0.5, 3.0);
    CHECK(gs(Point{1.0, 1.0}) == doctest::Approx(3.0 * std::exp(-1.0)));
}

TEST_CASE("radial table interpolates and clamps") {
    const auto table = ScalarField::radial_table({0.0, 1.0, 2.0}, {1.0, 3.0, 0.0});
    CHECK(table(Point{0.5}) == doctest::Approx(2.0));
    CHECK(table(Point{1.5}) == doctest::Approx(1.5));
    CHECK(table(Point{10.0}) == 0.0);   // clamped beyond the last radius
    CHECK(table(Point{0.0, 0.0}) == 1.0);
    CHECK_THROWS(ScalarField::radial_table({1.0, 0.5}, {1.0, 1.0}));
}

TEST_CASE("finite evaluation on a wide probe") {
    const ScalarField fields[] = {ScalarField::constant(-3.0),
                                  ScalarField::ball_indicator(2.0, 1.0),
                                  ScalarField::exponential(1.0),
                                  ScalarField::two_sided_exponential(0.7),
                                  ScalarField::gaussian(2.0),
                                  ScalarField::power_tail(3.0)};
    for (const auto& f : fields)
        for (double x = -50.0; x <= 50.0; x += 7.3) CHECK(std::isfinite(f(Point{x})));
}

TEST_CASE("sign analysis and bounds") {
    CHECK(ScalarField::two_sided_exponential(2.0).nonnegative());
    CHECK_FALSE(ScalarField::ball_indicator(1.0, -0.5).nonnegative());
    CHECK(ScalarField::constant(0.0).nonnegative());

    CHECK(ScalarField::constant(3.0).upper_bound() == 3.0);
    CHECK(ScalarField::ball_indicator(1.0, -0.5).upper_bound() == 0.0);
    CHECK(std::isinf(ScalarField::exponential(1.0).upper_bound()));
    CHECK(ScalarField::gaussian(1.0, 2.0).upper_bound() == 2.0);

    CHECK(nonnegative_on_probe_grid(ScalarField::two_sided_exponential(2.0), 1));
    CHECK(nonnegative_on_probe_grid(ScalarField::constant(1.0), 2));
    CHECK_FALSE(nonnegative_on_probe_grid(ScalarField::constant(-1.0), 1));
}

TEST_CASE("closed-form products and scaling") {
    const auto a = ScalarField::exponential(1.4);
    const auto b = ScalarField::exponential(-1.4, 2.0);
    const auto prod = a.times(b);
    REQUIRE(prod.has_value());
    CHECK(prod->kind() == FieldKind::constant);  // rates cancel
    CHECK(prod->param_a() == doctest::Approx(2.0));

    const auto g = ScalarField::gaussian(1.0).times(ScalarField::gaussian(2.0, 0.5));
    REQUIRE(g.has_value());
    CHECK(g->kind() == FieldKind::gaussian);
    CHECK((*g)(Point{1.0}) == doctest::Approx(0.5 * std::exp(-3.0)));

    // mixed families have no closed-form product
    CHECK_FALSE(ScalarField::exponential(1.0).times(ScalarField::gaussian(1.0)).has_value());

    const auto scaled = ScalarField::ball_indicator(1.0, -2.0).scaled(1.5);
    CHECK(scaled(Point{0.0}) == doctest::Approx(-3.0));
}

TEST_CASE("json round trip") {
    const ScalarField fields[] = {ScalarField::constant(2.5),
                                  ScalarField::ball_indicator(1.0, -0.5),
                                  ScalarField::exponential(1.2, 0.7),
                                  ScalarField::two_sided_exponential(2.0),
                                  ScalarField::gaussian(0.3, 1.1),
                                  ScalarField::power_tail(5.0, 2.0),
                                  ScalarField::radial_table({0.0, 1.0}, {2.0, 0.0})};
    for (const auto& f : fields) {
        const auto back = ScalarField::from_json(f.to_json());
        CHECK(back.same_family_as(f));
        CHECK(back.to_json() == f.to_json());
    }
}

TEST_CASE("drift families") {
    const auto affine = DriftSpec::affine({1.0, -2.0}, 0.5);
    Point x{2.0, 4.0};
    std::vector<double> out(2);
    affine.eval(x, out);
    CHECK(out[0] == doctest::Approx(2.0));
    CHECK(out[1] == doctest::Approx(0.0));
    const auto back = DriftSpec::from_json(affine.to_json());
    CHECK(back.gamma == affine.gamma);
    CHECK(back.shift == affine.shift);
}

TEST_CASE("constant SPD matrix square root") {
    // a = [[2, 0.5], [0.5, 1]]
    const auto a = DiffusionMatrix::constant_spd(2, {2.0, 0.5, 0.5, 1.0});
    std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0}, c1(2), c2(2);
    const Point x{0.0, 0.0};
    a.sigma_times(x, e1, c1);
    a.sigma_times(x, e2, c2);
    // sigma sigma^T must reproduce a
    CHECK(c1[0] * c1[0] + c1[1] * c1[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(c1[0] * c2[0] + c1[1] * c2[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(c2[0] * c2[0] + c2[1] * c2[1] == doctest::Approx(1.0).epsilon(1e-10));
    double lo = 0.0, hi = 0.0;
    a.eigen_range(2, lo, hi);
    CHECK(lo > 0.0);
    CHECK_THROWS(DiffusionMatrix::constant_spd(2, {1.0, 2.0, 2.0, 1.0}));  // not PD
}

TEST_SUITE_END();
