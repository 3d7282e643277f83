#include <chrono>
#include <cmath>

#include "superdiff/catalog.hpp"
#include "superdiff/cumulant.hpp"
#include "superdiff/estimators.hpp"
#include "superdiff/htransform.hpp"
#include "superdiff/lab.hpp"
#include "superdiff/particle.hpp"

// Check bundles reproducing the catalog entries end to end with pinned
// seeds and budgets. Every check records the claim it exercises, the
// target, the obtained value and a verdict.

namespace superdiff::lab {

using nlohmann::json;

namespace {

CheckResult ci_contains(const std::string& name, const std::string& anchor,
                        const GrowthEstimate& fit, double target, double max_half_width) {
    CheckResult c;
    c.name = name;
    c.anchor = anchor;
    c.target = target;
    c.obtained = fit.rate;
    c.pass = fit.contains(target) && fit.half_width <= max_half_width;
    c.detail = "ci_half_width " + Table::cell(fit.half_width) + " (cap " +
               Table::cell(max_half_width) + ")";
    return c;
}

CheckResult freq_at_least(const std::string& name, const std::string& anchor, double freq,
                          double threshold, std::size_t n) {
    CheckResult c;
    c.name = name;
    c.anchor = anchor;
    c.target = threshold;
    c.obtained = freq;
    c.pass = freq >= threshold;
    c.detail = "replicas " + Table::cell(n);
    return c;
}

CheckResult value_within(const std::string& name, const std::string& anchor, double obtained,
                         double target, double tol) {
    CheckResult c;
    c.name = name;
    c.anchor = anchor;
    c.target = target;
    c.obtained = obtained;
    c.pass = std::abs(obtained - target) <= tol;
    c.detail = "abs_tol " + Table::cell(tol);
    return c;
}

double survival_freq(const std::vector<particle::TrajectoryRecord>& records) {
    std::size_t alive = 0;
    for (const auto& r : records) alive += r.particle_count.back() > 0 ? 1 : 0;
    return static_cast<double>(alive) / static_cast<double>(records.size());
}

std::vector<double> linspace_times(double from, double to, std::size_t count) {
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

void reproduce_drift_bm(Report& report, std::uint64_t seed) {
    const ModelSpec model = catalog_build("drift_bm", json{{"b0", 1.0}, {"beta", 1.0}});
    const double target_l2 = model.reference()->lambda2;
    const double target_linf = model.reference()->lambda_inf;

    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 20.0;
        cfg.seed = seed;
        const auto r = fk::estimate_lambda2(model, {5.0, 10.0}, linspace_times(2.0, 20.0, 10),
                                            50000, cfg);
        report.checks.push_back(ci_contains("lambda2", "closed-form local growth bound",
                                            r.fit, target_l2, 0.15));
        report.scalars.emplace_back("lambda2_rate", r.fit.rate);
    }
    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 12.0;
        cfg.seed = seed + 1;
        const auto fit = fk::estimate_lambda_inf(model, {Point{0.0}},
                                                 linspace_times(2.0, 12.0, 6), 300, cfg);
        report.checks.push_back(ci_contains("lambda_inf", "closed-form global growth bound",
                                            fit, target_linf, 0.1));
        report.scalars.emplace_back("lambda_inf_rate", fit.rate);
    }
    {
        // critical branching with constant intensity: total mass dies out
        const ModelSpec crit = catalog_build("drift_bm", json{{"b0", 1.0}, {"beta", 0.0}});
        particle::SimConfig cfg;
        cfg.particles_per_unit_mass = 50;
        cfg.dt = 1e-3;
        cfg.horizon = 50.0;
        cfg.seed = seed + 2;
        const auto records = particle::run_replicas(crit, InitialMeasure::point({0.0}), cfg, {},
                                                    0.5, 300);
        const auto st = particle::extinction_stats(records, 0.01, true);
        report.checks.push_back(freq_at_least("weak_extinction_constant_k",
                                              "constant intensity divergent-potential regime",
                                              st.weak_extinction_freq, 0.95, records.size()));
        report.scalars.emplace_back("weak_extinction_freq", st.weak_extinction_freq);
    }
    {
        // intensity integrable along the drift direction: survival
        const ModelSpec surv = catalog_build(
            "drift_bm", json{{"b0", 1.0},
                             {"beta", 0.0},
                             {"k", ScalarField::two_sided_exponential(2.0).to_json()}});
        particle::SimConfig cfg;
        cfg.particles_per_unit_mass = 50;
        cfg.dt = 5e-3;
        cfg.horizon = 30.0;
        cfg.seed = seed + 3;
        const auto records = particle::run_replicas(surv, InitialMeasure::point({0.0}), cfg, {},
                                                    0.5, 300);
        const double s = survival_freq(records);
        const double se = stats::binomial_se(s, records.size());
        CheckResult c;
        c.name = "survival_decaying_k";
        c.anchor = "integrable intensity along the escape route keeps mass alive";
        c.target = 0.0;
        c.obtained = s;
        c.pass = s - 3.0 * se > 0.0;
        c.detail = "3se " + Table::cell(3.0 * se);
        report.checks.push_back(std::move(c));
        report.scalars.emplace_back("survival_freq", s);
    }
    {
        const ModelSpec base = catalog_build("drift_bm", json{{"b0", 1.0}, {"beta", 0.0}});
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 20.0;
        cfg.seed = seed + 4;
        const auto verdict = fk::green_potential(base, ScalarField::two_sided_exponential(2.0),
                                                 Point{0.0}, {5.0, 10.0, 20.0}, 20000, cfg);
        CheckResult c;
        c.name = "green_potential_finite";
        c.anchor = "finite expected occupation integral of the intensity";
        c.target = 1.0;
        c.obtained = verdict.verdict == Divergence::finite ? 1.0 : 0.0;
        c.pass = verdict.verdict == Divergence::finite;
        c.detail = "trace end " + Table::cell(verdict.trace.back().second.mean);
        report.checks.push_back(std::move(c));
    }
}

void reproduce_ou_outward(Report& report, std::uint64_t seed) {
    const ModelSpec model =
        catalog_build("ou_outward", json{{"gamma", 1.0}, {"d", 2}, {"beta", 1.0}});
    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 8.0;
        cfg.seed = seed;
        const auto fit = fk::estimate_lambda_inf(model, {Point{0.0, 0.0}},
                                                 linspace_times(1.0, 8.0, 8), 300, cfg);
        report.checks.push_back(ci_contains("lambda_inf", "closed-form global growth bound",
                                            fit, model.reference()->lambda_inf, 0.1));
    }
    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 4.0;
        cfg.seed = seed + 1;
        const auto r =
            fk::estimate_lambda2(model, {3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}, 200000, cfg);
        report.checks.push_back(ci_contains("lambda2", "closed-form local growth bound",
                                            r.fit, model.reference()->lambda2, 0.6));
    }
    {
        particle::SimConfig cfg;
        cfg.particles_per_unit_mass = 50;
        cfg.dt = 1e-3;
        cfg.horizon = 20.0;
        cfg.seed = seed + 2;
        cfg.escape_radius = 8.0;
        particle::Observables obs;
        obs.balls.push_back({"unit_ball", Point{0.0, 0.0}, 1.0});
        const auto records = particle::run_replicas(model, InitialMeasure::point({0.0, 0.0}), cfg,
                                                    obs, 0.25, 300);
        std::size_t gone = 0;
        for (const auto& r : records)
            if (!r.truncated && r.observables.at("unit_ball").back() == 0.0) ++gone;
        const double freq = static_cast<double>(gone) / static_cast<double>(records.size());
        report.checks.push_back(freq_at_least("local_extinction",
                                              "negative local growth bound empties compacts",
                                              freq, 0.95, records.size()));
        report.scalars.emplace_back("local_extinction_freq", freq);
    }
}

void reproduce_bm_plain(Report& report, std::uint64_t seed) {
    const ModelSpec model = catalog_build("bm_plain", json{{"d", 1}, {"beta", 0.0}});
    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 1.0;
        cfg.seed = seed;
        const auto e = fk::estimate_semigroup(model, ScalarField::constant(1.0), Point{0.0}, 1.0,
                                              200, cfg);
        report.checks.push_back(value_within("semigroup_identity",
                                             "zero potential leaves constants invariant", e.mean,
                                             1.0, 1e-12));
    }
    {
        PathConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 8.0;
        cfg.seed = seed + 1;
        const auto fit = fk::estimate_lambda_inf(model, {Point{0.0}},
                                                 linspace_times(2.0, 8.0, 4), 200, cfg);
        report.checks.push_back(
            value_within("lambda_inf_zero", "zero potential has zero growth bound", fit.rate,
                         0.0, 1e-12));
    }
    {
        PathConfig cfg;
        cfg.dt = 2e-3;
        cfg.horizon = 6.0;
        cfg.seed = seed + 2;
        const auto r = fk::estimate_lambda2(model, {0.5, 1.0}, linspace_times(1.0, 6.0, 6),
                                            150000, cfg);
        const double target = -9.8696044010893586 / 8.0;  // principal Dirichlet rate on (-1, 1)
        report.checks.push_back(value_within("lambda2_unit_interval",
                                             "principal Dirichlet eigenvalue of the unit interval",
                                             r.fit.rate, target, 0.1 + r.fit.half_width));
    }
}

void reproduce_planar(Report& report, std::uint64_t seed) {
    const ModelSpec model = catalog_build("planar_annihilation", json{{"alpha", 1.0}});
    {
        PathConfig cfg;
        cfg.dt = 0.1;
        cfg.horizon = 1000.0;
        cfg.seed = seed;
        const auto gauge =
            fk::estimate_gauge(model, Point{0.0, 0.0}, {10.0, 100.0, 1000.0}, 100000, cfg);
        double lo = 1e300, hi = 0.0;
        for (std::size_t i = 0; i < gauge.per_horizon.size(); ++i) {
            const double v = gauge.per_horizon[i].mean * std::log(gauge.verdict.trace[i].first);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CheckResult c;
        c.name = "gauge_log_band";
        c.anchor = "expected weight times log t stays in a 2x band";
        c.target = 2.0;
        c.obtained = hi / lo;
        c.pass = hi / lo <= 2.0;
        c.detail = "band [" + Table::cell(lo) + ", " + Table::cell(hi) + "]";
        report.checks.push_back(std::move(c));
        report.scalars.emplace_back("gauge_band_ratio", hi / lo);
    }
    {
        fk::CriticalityBudget budget;
        budget.x_grid = {Point{0.0, 0.0}, Point{1.5, 0.0}};
        budget.t_grid = {10.0, 20.0, 30.0, 40.0};
        budget.horizons = {10.0, 25.0, 40.0};
        budget.replicas = 20000;
        budget.config.dt = 0.05;
        budget.config.horizon = 40.0;
        budget.config.seed = seed + 1;
        const auto r = fk::classify_criticality(model, 0.5, budget);
        CheckResult c;
        c.name = "criticality_subcritical";
        c.anchor = "compact annihilation is a subcritical potential";
        c.target = 1.0;
        c.obtained = r.verdict == fk::Criticality::subcritical ? 1.0 : 0.0;
        c.pass = r.verdict == fk::Criticality::subcritical;
        c.detail = fk::to_string(r.verdict);
        report.checks.push_back(std::move(c));
    }
}

void reproduce_compact_1d(Report& report, std::uint64_t seed) {
    const ModelSpec model = catalog_build("compact_annihilation_1d", json{{"alpha", 1.0}});
    {
        PathConfig cfg;
        cfg.dt = 0.05;
        cfg.horizon = 160.0;
        cfg.seed = seed;
        const auto gauge = fk::estimate_gauge(model, Point{0.0}, {10.0, 40.0, 160.0}, 40000, cfg);
        double lo = 1e300, hi = 0.0;
        for (std::size_t i = 0; i < gauge.per_horizon.size(); ++i) {
            const double v =
                gauge.per_horizon[i].mean * std::sqrt(gauge.verdict.trace[i].first);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CheckResult c;
        c.name = "gauge_sqrt_band";
        c.anchor = "expected weight times sqrt(t) stays in a 2x band";
        c.target = 2.0;
        c.obtained = hi / lo;
        c.pass = hi / lo <= 2.0;
        c.detail = "band [" + Table::cell(lo) + ", " + Table::cell(hi) + "]";
        report.checks.push_back(std::move(c));
    }
    {
        fk::CriticalityBudget budget;
        budget.x_grid = {Point{0.0}, Point{2.0}};
        budget.t_grid = {10.0, 20.0, 30.0, 40.0};
        budget.horizons = {10.0, 25.0, 40.0};
        budget.replicas = 30000;
        budget.config.dt = 0.02;
        budget.config.horizon = 40.0;
        budget.config.seed = seed + 1;
        const auto r = fk::classify_criticality(model, 0.5, budget);
        CheckResult c;
        c.name = "criticality_subcritical";
        c.anchor = "compact annihilation is a subcritical potential";
        c.target = 1.0;
        c.obtained = r.verdict == fk::Criticality::subcritical ? 1.0 : 0.0;
        c.pass = r.verdict == fk::Criticality::subcritical;
        c.detail = fk::to_string(r.verdict);
        report.checks.push_back(std::move(c));
    }
}

void reproduce_htransform(Report& report, std::uint64_t seed) {
    const json params = json{{"B", 0.5}, {"epsilon", 0.5}};
    const CatalogEntry entry = catalog_entry("htransform_survival", params);
    const ModelSpec& model = entry.model;
    const double c_rate = std::sqrt(2.0 * (0.5 + 0.5));

    {
        // declared-harmonic and symbolic routes must agree on the displayed operator
        const ModelSpec exact = h_transform(model, entry.harmonic->h, entry.harmonic->lambda);
        const ModelSpec symbolic = h_transform(model, entry.harmonic->h);
        const bool drift_ok =
            std::abs(exact.diffusion().drift().shift[0] - c_rate) < 1e-12 &&
            exact.diffusion().drift().gamma == 0.0;
        const bool beta_ok = exact.beta().is_constant() &&
                             std::abs(exact.beta().param_a() - 0.5) < 1e-12 &&
                             symbolic.beta().is_constant() &&
                             std::abs(symbolic.beta().param_a() - 0.5) < 1e-12;
        const bool k_ok = exact.k().is_constant() && std::abs(exact.k().param_a() - 1.0) < 1e-12;
        CheckResult c;
        c.name = "transformed_operator";
        c.anchor = "transformed drift/potential/intensity in closed form";
        c.target = 1.0;
        c.obtained = drift_ok && beta_ok && k_ok ? 1.0 : 0.0;
        c.pass = drift_ok && beta_ok && k_ok;
        report.checks.push_back(std::move(c));
    }
    {
        const ModelSpec transformed = h_transform(model, entry.harmonic->h, entry.harmonic->lambda);
        particle::SimConfig cfg;
        cfg.particles_per_unit_mass = 50;
        cfg.dt = 1e-3;
        cfg.horizon = 5.0;
        cfg.seed = seed;
        const auto orig = particle::run_replicas(model, InitialMeasure::point({0.0}), cfg, {},
                                                 0.25, 1200);
        particle::SimConfig cfg2 = cfg;
        cfg2.seed = seed + 1;
        const auto trans = particle::run_replicas(transformed, InitialMeasure::point({0.0}), cfg2,
                                                  {}, 0.25, 1200);
        const double s1 = survival_freq(orig);
        const double s2 = survival_freq(trans);
        const double se =
            std::sqrt(std::pow(stats::binomial_se(s1, orig.size()), 2) +
                      std::pow(stats::binomial_se(s2, trans.size()), 2));
        CheckResult c;
        c.name = "survival_invariance";
        c.anchor = "survival probability is invariant under the weighting";
        c.target = s2;
        c.obtained = s1;
        c.pass = std::abs(s1 - s2) <= 3.0 * se;
        c.detail = "3se " + Table::cell(3.0 * se);
        report.checks.push_back(std::move(c));
        report.scalars.emplace_back("survival_original", s1);
        report.scalars.emplace_back("survival_transformed", s2);
    }
    {
        particle::SimConfig cfg;
        cfg.particles_per_unit_mass = 50;
        cfg.dt = 1e-3;
        cfg.horizon = 12.0;
        cfg.seed = seed + 2;
        const auto records = particle::run_replicas(model, InitialMeasure::point({0.0}), cfg, {},
                                                    0.25, 400);
        const auto st = particle::extinction_stats(records, 0.01, true);
        const double s = survival_freq(records);
        const double se = stats::binomial_se(s, records.size());
        CheckResult c;
        c.name = "weak_extinction_with_survival";
        c.anchor = "total mass decays yet the population persists";
        c.target = 0.8;
        c.obtained = st.weak_extinction_freq;
        c.pass = st.weak_extinction_freq >= 0.8 && s - 3.0 * se > 0.0;
        c.detail = "survival_freq " + Table::cell(s);
        report.checks.push_back(std::move(c));
        report.scalars.emplace_back("weak_extinction_freq", st.weak_extinction_freq);
        report.scalars.emplace_back("survival_freq", s);
    }
}

}  // namespace

RunResult reproduce(const std::string& example_name, const Overrides& overrides) {
    const auto t0 = std::chrono::steady_clock::now();
    Report report;
    report.seed = overrides.seed.value_or(0xD81FB000ULL);
    report.experiment = json{{"kind", "reproduce"},
                             {"seed", report.seed},
                             {"params", json{{"name", example_name}}}};

    if (example_name == "drift_bm")
        reproduce_drift_bm(report, report.seed);
    else if (example_name == "ou_outward")
        reproduce_ou_outward(report, report.seed);
    else if (example_name == "bm_plain")
        reproduce_bm_plain(report, report.seed);
    else if (example_name == "planar_annihilation")
        reproduce_planar(report, report.seed);
    else if (example_name == "compact_annihilation_1d")
        reproduce_compact_1d(report, report.seed);
    else if (example_name == "htransform_survival")
        reproduce_htransform(report, report.seed);
    else
        throw std::invalid_argument("reproduce: unknown example '" + example_name + "'");

    Table table;
    table.name = "reproduce_checks";
    table.columns = {"check", "anchor", "target", "obtained", "verdict", "detail"};
    for (const auto& c : report.checks)
        table.add_row({c.name, c.anchor, Table::cell(c.target), Table::cell(c.obtained),
                       c.pass ? "pass" : "fail", c.detail});
    report.tables.push_back(std::move(table));
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (overrides.output_dir) write_report_outputs(report, *overrides.output_dir);

    RunResult result;
    result.exit_code = report.all_checks_pass() ? 0 : 2;
    result.report = std::move(report);
    return result;
}

}  // namespace superdiff::lab
