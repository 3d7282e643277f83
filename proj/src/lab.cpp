#include "superdiff/lab.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "superdiff/catalog.hpp"
#include "superdiff/cumulant.hpp"
#include "superdiff/estimators.hpp"
#include "superdiff/htransform.hpp"
#include "superdiff/model.hpp"
#include "superdiff/particle.hpp"

namespace superdiff::lab {

using nlohmann::json;

const json& defaults() {
    static const json d = {
        {"version", "1.0"},
        {"se_multiplier", 3.0},
        {"ci_level", 0.95},
        {"eta_fraction", 0.01},
        {"gauge_stabilize_rel_change", 0.05},
        {"gauge_growth_factor", 2.0},
        {"lambda_fit_burn_in_fraction", 0.2},
        {"lambda_zero_band", 0.05},
        {"lambda2_min_survivors", 50},
        {"r_squared_flag_threshold", 0.8},
        {"pde_rel_tolerance", 0.02},
        {"reaction_step_cap", 1e-3},
        {"event_prob_cap", 0.1},
        {"clip_fraction_fail", 1e-3},
    };
    return d;
}

// ---------------- schema validation ----------------

namespace {

const std::set<std::string>& experiment_kinds() {
    static const std::set<std::string> kinds = {
        "semigroup",  "lambda2",   "lambda_inf",      "gauge",      "green",
        "kato",       "criticality", "cumulant",      "extinction_prob",
        "trajectory", "laplace_cross", "martingale",  "reproduce"};
    return kinds;
}

void require(const json& j, const std::string& path, const std::string& key,
             json::value_t type) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!j.contains(key)) throw SchemaError(full, "missing required field");
    const json& v = j.at(key);
    const bool ok = [&] {
        switch (type) {
            case json::value_t::number_float: return v.is_number();
            case json::value_t::number_unsigned:
            case json::value_t::number_integer: return v.is_number_integer();
            case json::value_t::string: return v.is_string();
            case json::value_t::object: return v.is_object();
            case json::value_t::array: return v.is_array();
            default: return false;
        }
    }();
    if (!ok) throw SchemaError(full, "wrong type");
}

}  // namespace

void validate_config(const json& config) {
    if (!config.is_object()) throw SchemaError("", "config must be a JSON object");
    require(config, "", "kind", json::value_t::string);
    const std::string kind = config.at("kind").get<std::string>();
    if (!experiment_kinds().count(kind)) throw SchemaError("kind", "unknown experiment kind");
    require(config, "", "seed", json::value_t::number_integer);
    require(config, "", "params", json::value_t::object);
    const json& params = config.at("params");

    if (kind == "reproduce") {
        require(params, "params", "name", json::value_t::string);
        return;
    }
    require(config, "", "model", json::value_t::object);
    const json& model = config.at("model");
    if (!model.contains("catalog") && !model.contains("diffusion"))
        throw SchemaError("model", "need either a catalog reference or an inline model");
    if (model.contains("catalog") && !model.at("catalog").is_string())
        throw SchemaError("model.catalog", "wrong type");

    const bool needs_replicas = kind != "cumulant" && kind != "extinction_prob";
    if (needs_replicas) require(config, "", "replicas", json::value_t::number_integer);

    if (kind == "semigroup") {
        require(params, "params", "f", json::value_t::object);
        require(params, "params", "x", json::value_t::array);
        require(params, "params", "t", json::value_t::number_float);
    } else if (kind == "lambda2") {
        require(params, "params", "radii", json::value_t::array);
        require(params, "params", "t_grid", json::value_t::array);
    } else if (kind == "lambda_inf") {
        require(params, "params", "x_grid", json::value_t::array);
        require(params, "params", "t_grid", json::value_t::array);
    } else if (kind == "gauge") {
        require(params, "params", "x", json::value_t::array);
        require(params, "params", "horizons", json::value_t::array);
    } else if (kind == "green") {
        require(params, "params", "g", json::value_t::object);
        require(params, "params", "x", json::value_t::array);
        require(params, "params", "horizons", json::value_t::array);
    } else if (kind == "kato") {
        require(params, "params", "small_ts", json::value_t::array);
        require(params, "params", "x_grid", json::value_t::array);
    } else if (kind == "criticality") {
        require(params, "params", "epsilon", json::value_t::number_float);
        require(params, "params", "x_grid", json::value_t::array);
        require(params, "params", "t_grid", json::value_t::array);
        require(params, "params", "horizons", json::value_t::array);
    } else if (kind == "cumulant") {
        require(params, "params", "f", json::value_t::object);
        require(params, "params", "T", json::value_t::number_float);
        require(params, "params", "grid", json::value_t::object);
    } else if (kind == "extinction_prob") {
        require(params, "params", "mu", json::value_t::array);
        require(params, "params", "t", json::value_t::number_float);
        require(params, "params", "thetas", json::value_t::array);
        require(params, "params", "grid", json::value_t::object);
    } else if (kind == "trajectory") {
        require(params, "params", "mu", json::value_t::array);
        require(params, "params", "N", json::value_t::number_integer);
        require(params, "params", "T", json::value_t::number_float);
    } else if (kind == "laplace_cross") {
        require(params, "params", "mu", json::value_t::array);
        require(params, "params", "f", json::value_t::object);
        require(params, "params", "t", json::value_t::number_float);
        require(params, "params", "N", json::value_t::number_integer);
        require(params, "params", "grid", json::value_t::object);
    } else if (kind == "martingale") {
        require(params, "params", "mu", json::value_t::array);
        require(params, "params", "h", json::value_t::object);
        require(params, "params", "lambda", json::value_t::number_float);
        require(params, "params", "t_grid", json::value_t::array);
        require(params, "params", "N", json::value_t::number_integer);
    }
    if (config.contains("expect")) {
        if (!config.at("expect").is_array()) throw SchemaError("expect", "wrong type");
        std::size_t i = 0;
        for (const auto& e : config.at("expect")) {
            const std::string path = "expect[" + std::to_string(i++) + "]";
            if (!e.is_object()) throw SchemaError(path, "wrong type");
            if (!e.contains("quantity") || !e.at("quantity").is_string())
                throw SchemaError(path + ".quantity", "missing or wrong type");
            if (!e.contains("target") || !e.at("target").is_number())
                throw SchemaError(path + ".target", "missing or wrong type");
            if (!e.contains("abs_tol") || !e.at("abs_tol").is_number())
                throw SchemaError(path + ".abs_tol", "missing or wrong type");
        }
    }
}

// ---------------- report plumbing ----------------

json Report::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["defaults"] = defaults();
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    json tabs = json::object();
    for (const auto& t : tables) {
        json rows = json::array();
        for (const auto& r : t.rows) rows.push_back(r);
        tabs[t.name] = json{{"columns", t.columns}, {"rows", rows}};
    }
    j["tables"] = tabs;
    json checks_json = json::array();
    for (const auto& c : checks)
        checks_json.push_back(json{{"name", c.name},
                                   {"anchor", c.anchor},
                                   {"target", c.target},
                                   {"obtained", c.obtained},
                                   {"pass", c.pass},
                                   {"detail", c.detail}});
    j["checks"] = checks_json;
    json scalars_json = json::object();
    for (const auto& [k, v] : scalars) scalars_json[k] = v;
    j["scalars"] = scalars_json;
    return j;
}

bool Report::all_checks_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

GrowthEstimate growth_fit(const std::vector<std::pair<double, double>>& series, double window_lo,
                          double window_hi) {
    if (series.size() < 4) throw std::invalid_argument("growth_fit: need >= 4 points");
    return stats::fit_exponential(series, window_lo, window_hi);
}

namespace {

// ---------------- config parsing helpers ----------------

ModelSpec model_from_config(const json& config) {
    const json& m = config.at("model");
    if (m.contains("catalog"))
        return catalog_build(m.at("catalog").get<std::string>(), m.value("params", json::object()));
    return ModelSpec::from_json(m);
}

std::vector<Point> points_from(const json& arr) {
    std::vector<Point> out;
    for (const auto& p : arr) out.push_back(p.get<Point>());
    return out;
}

InitialMeasure measure_from(const json& arr) {
    std::vector<InitialMeasure::Atom> atoms;
    for (const auto& a : arr)
        atoms.push_back({a.at("x").get<Point>(), a.at("mass").get<double>()});
    return InitialMeasure(std::move(atoms));
}

cumulant::SpaceGrid grid_from(const json& g, const ModelSpec& model) {
    const std::string kind = g.value("kind", model.dim() == 1 ? "line" : "radial");
    const double r_box = g.at("r_box").get<double>();
    const std::size_t nodes = g.value("nodes", std::size_t{513});
    const auto bc = g.value("bc", std::string{"dirichlet_zero"}) == "neumann_zero"
                        ? cumulant::BoundaryCondition::neumann_zero
                        : cumulant::BoundaryCondition::dirichlet_zero;
    return kind == "radial" ? cumulant::SpaceGrid::radial(model.dim(), r_box, nodes, bc)
                            : cumulant::SpaceGrid::line(r_box, nodes, bc);
}

Table fk_table(const std::string& name) {
    Table t;
    t.name = name;
    t.columns = {"quantity", "t_or_horizon", "mean", "std_error", "samples", "flags"};
    return t;
}

void add_estimate_row(Table& t, const std::string& quantity, double horizon,
                      const MCEstimate& e) {
    t.add_row({quantity, Table::cell(horizon), Table::cell(e.mean), Table::cell(e.std_error),
               Table::cell(e.samples), e.flags()});
}

void add_fit_rows(Table& t, const std::string& prefix, const GrowthEstimate& g) {
    t.add_row({prefix + "_rate", Table::cell(g.window_hi), Table::cell(g.rate),
               Table::cell(g.half_width / 1.96), Table::cell(std::size_t{0}), ""});
    t.add_row({prefix + "_r_squared", Table::cell(g.window_hi), Table::cell(g.r_squared),
               Table::cell(0.0), Table::cell(std::size_t{0}), ""});
}

void put_fit_scalars(Report& report, const std::string& prefix, const GrowthEstimate& g) {
    report.scalars.emplace_back(prefix + "_rate", g.rate);
    report.scalars.emplace_back(prefix + "_half_width", g.half_width);
    report.scalars.emplace_back(prefix + "_r_squared", g.r_squared);
}

// ---------------- experiment runners ----------------

void run_semigroup(Report& report, const ModelSpec& model, const json& params,
                   std::size_t replicas, std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-2);
    const double t = params.at("t").get<double>();
    cfg.horizon = t;
    cfg.seed = seed;
    const ScalarField f = ScalarField::from_json(params.at("f"));
    const Point x = params.at("x").get<Point>();
    const MCEstimate e = fk::estimate_semigroup(model, f, x, t, replicas, cfg);
    Table table = fk_table("semigroup");
    add_estimate_row(table, "semigroup", t, e);
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("mean", e.mean);
    report.scalars.emplace_back("std_error", e.std_error);
}

void run_lambda_inf(Report& report, const ModelSpec& model, const json& params,
                    std::size_t replicas, std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-2);
    cfg.seed = seed;
    const auto x_grid = points_from(params.at("x_grid"));
    const auto t_grid = params.at("t_grid").get<std::vector<double>>();
    cfg.horizon = t_grid.back();
    std::vector<std::pair<double, double>> trace;
    const GrowthEstimate g = fk::estimate_lambda_inf(model, x_grid, t_grid, replicas, cfg, &trace);
    Table table = fk_table("lambda_inf");
    for (const auto& [t, v] : trace) {
        MCEstimate e;
        e.mean = v;
        e.samples = replicas;
        add_estimate_row(table, "sup_semigroup", t, e);
    }
    add_fit_rows(table, "lambda_inf", g);
    report.tables.push_back(std::move(table));
    put_fit_scalars(report, "lambda_inf", g);
}

void run_lambda2(Report& report, const ModelSpec& model, const json& params,
                 std::size_t replicas, std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-2);
    cfg.seed = seed;
    const auto radii = params.at("radii").get<std::vector<double>>();
    const auto t_grid = params.at("t_grid").get<std::vector<double>>();
    cfg.horizon = t_grid.back();
    const fk::Lambda2Result r = fk::estimate_lambda2(model, radii, t_grid, replicas, cfg);
    Table table = fk_table("lambda2");
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        for (const auto& [t, e] : r.traces[ri])
            add_estimate_row(table, "killed_sup_radius_" + Table::cell(radii[ri]), t, e);
        add_fit_rows(table, "lambda2_radius_" + Table::cell(radii[ri]), r.per_radius[ri].second);
    }
    report.tables.push_back(std::move(table));
    put_fit_scalars(report, "lambda2", r.fit);
    report.scalars.emplace_back("survivors_at_end", static_cast<double>(r.survivors_at_end));
    report.scalars.emplace_back("inconclusive", r.inconclusive ? 1.0 : 0.0);
}

void run_gauge(Report& report, const ModelSpec& model, const json& params, std::size_t replicas,
               std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-2);
    cfg.seed = seed;
    const Point x = params.at("x").get<Point>();
    const auto horizons = params.at("horizons").get<std::vector<double>>();
    cfg.horizon = horizons.back();
    const fk::GaugeResult g = fk::estimate_gauge(model, x, horizons, replicas, cfg);
    Table table = fk_table("gauge");
    for (std::size_t i = 0; i < horizons.size(); ++i)
        add_estimate_row(table, "gauge", horizons[i], g.per_horizon[i]);
    table.add_row({"verdict", "", to_string(g.verdict.verdict), "", "", ""});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("final_gauge", g.per_horizon.back().mean);
    report.scalars.emplace_back(
        "verdict_finite", g.verdict.verdict == Divergence::finite ? 1.0 : 0.0);
}

void run_green(Report& report, const ModelSpec& model, const json& params, std::size_t replicas,
               std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-2);
    cfg.seed = seed;
    const ScalarField g = ScalarField::from_json(params.at("g"));
    const Point x = params.at("x").get<Point>();
    const auto horizons = params.at("horizons").get<std::vector<double>>();
    cfg.horizon = horizons.back();
    const DivergenceVerdict v = fk::green_potential(model, g, x, horizons, replicas, cfg);
    Table table = fk_table("green");
    for (const auto& [h, e] : v.trace) add_estimate_row(table, "green", h, e);
    table.add_row({"verdict", "", to_string(v.verdict), "", "", ""});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("final_green", v.trace.back().second.mean);
    report.scalars.emplace_back("verdict_finite", v.verdict == Divergence::finite ? 1.0 : 0.0);
    report.scalars.emplace_back("verdict_divergent",
                                v.verdict == Divergence::divergent ? 1.0 : 0.0);
}

void run_kato(Report& report, const ModelSpec& model, const json& params, std::size_t replicas,
              std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = params.value("dt", 1e-3);
    cfg.seed = seed;
    const auto small_ts = params.at("small_ts").get<std::vector<double>>();
    const auto x_grid = points_from(params.at("x_grid"));
    const auto profile = fk::kato_profile(model, small_ts, x_grid, replicas, cfg);
    Table table = fk_table("kato");
    for (const auto& [t, e] : profile) add_estimate_row(table, "abs_beta_integral", t, e);
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("profile_at_smallest", profile.back().second.mean);
}

void run_criticality(Report& report, const ModelSpec& model, const json& params,
                     std::size_t replicas, std::uint64_t seed) {
    fk::CriticalityBudget budget;
    budget.x_grid = points_from(params.at("x_grid"));
    budget.t_grid = params.at("t_grid").get<std::vector<double>>();
    budget.horizons = params.at("horizons").get<std::vector<double>>();
    budget.replicas = replicas;
    budget.config.dt = params.value("dt", 1e-2);
    budget.config.seed = seed;
    budget.config.horizon = std::max(budget.t_grid.back(), budget.horizons.back());
    const auto r = fk::classify_criticality(model, params.at("epsilon").get<double>(), budget);
    Table table;
    table.name = "criticality";
    table.columns = {"quantity", "value"};
    table.add_row({"class", fk::to_string(r.verdict)});
    table.add_row({"lambda_inf_base", Table::cell(r.lambda_inf_base.rate)});
    table.add_row({"lambda_inf_scaled", Table::cell(r.lambda_inf_scaled.rate)});
    table.add_row({"gauge", r.gauge_consulted ? to_string(r.gauge) : "not consulted"});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("is_supercritical",
                                r.verdict == fk::Criticality::supercritical ? 1.0 : 0.0);
    report.scalars.emplace_back("is_subcritical",
                                r.verdict == fk::Criticality::subcritical ? 1.0 : 0.0);
    report.scalars.emplace_back("is_critical", r.verdict == fk::Criticality::critical ? 1.0 : 0.0);
}

void run_cumulant(Report& report, const ModelSpec& model, const json& params, std::uint64_t,
                  const std::string& out_dir) {
    const ScalarField f = ScalarField::from_json(params.at("f"));
    const double horizon = params.at("T").get<double>();
    const double dt = params.value("dt_pde", 1e-3);
    const cumulant::SpaceGrid grid = grid_from(params.at("grid"), model);
    const cumulant::CumulantSolution sol = cumulant::solve_cumulant(model, f, horizon, grid, dt);
    Table table;
    table.name = "cumulant_summary";
    table.columns = {"quantity", "value"};
    table.add_row({"sup_u_final", Table::cell(sol.sup_at_time(sol.times.size() - 1))});
    table.add_row({"u_at_origin_final", Table::cell(sol.at(horizon, 0.0))});
    table.add_row({"clip_count", Table::cell(sol.clip_count)});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("u_at_origin_final", sol.at(horizon, 0.0));
    report.scalars.emplace_back("clip_count", static_cast<double>(sol.clip_count));
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        cumulant::write_cum1_file(out_dir + "/solution.cum1", sol);
        std::ofstream os(out_dir + "/solution.csv");
        cumulant::write_csv(os, sol);
    }
}

void run_extinction_prob(Report& report, const ModelSpec& model, const json& params,
                         std::uint64_t) {
    const InitialMeasure mu = measure_from(params.at("mu"));
    const double t = params.at("t").get<double>();
    const auto thetas = params.at("thetas").get<std::vector<double>>();
    const double dt = params.value("dt_pde", 1e-3);
    const cumulant::SpaceGrid grid = grid_from(params.at("grid"), model);
    const auto r = cumulant::extinction_probability(model, mu, t, thetas, grid, dt);
    Table table;
    table.name = "extinction_prob";
    table.columns = {"theta", "mu_integral"};
    for (std::size_t i = 0; i < r.thetas.size(); ++i)
        table.add_row({Table::cell(r.thetas[i]), Table::cell(r.mu_integrals[i])});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("p_extinct", r.probability);
    report.scalars.emplace_back("p_extinct_raw", r.probability_raw);
    report.scalars.emplace_back("monotone_in_theta", r.monotone_in_theta ? 1.0 : 0.0);
}

particle::Observables observables_from(const json& params) {
    particle::Observables obs;
    if (params.contains("balls")) {
        for (const auto& b : params.at("balls"))
            obs.balls.push_back({b.at("name").get<std::string>(), b.at("center").get<Point>(),
                                 b.at("radius").get<double>()});
    }
    if (params.contains("fields")) {
        for (const auto& f : params.at("fields"))
            obs.fields.push_back(
                {f.at("name").get<std::string>(), ScalarField::from_json(f.at("field"))});
    }
    return obs;
}

particle::SimConfig sim_config_from(const json& params, std::uint64_t seed) {
    particle::SimConfig cfg;
    cfg.particles_per_unit_mass = params.at("N").get<std::size_t>();
    cfg.dt = params.value("dt", 1e-3);
    cfg.horizon = params.at("T").get<double>();
    cfg.seed = seed;
    cfg.max_particles = params.value("max_particles", std::size_t{1'000'000});
    cfg.escape_radius = params.value("escape_radius", 0.0);
    return cfg;
}

void run_trajectory_kind(Report& report, const ModelSpec& model, const json& params,
                         std::size_t replicas, std::uint64_t seed) {
    const InitialMeasure mu = measure_from(params.at("mu"));
    const particle::SimConfig cfg = sim_config_from(params, seed);
    const particle::Observables obs = observables_from(params);
    const double sample_dt = params.value("sample_dt", cfg.horizon / 100.0);
    const auto records = particle::run_replicas(model, mu, cfg, obs, sample_dt, replicas);

    Table table;
    table.name = "trajectories";
    table.columns = {"replica", "t", "total_mass", "particle_count", "obs_name", "obs_value"};
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            table.add_row({Table::cell(r), Table::cell(rec.times[i]),
                           Table::cell(rec.total_mass[i]), Table::cell(rec.particle_count[i]), "",
                           ""});
            for (const auto& [name, values] : rec.observables)
                table.add_row({Table::cell(r), Table::cell(rec.times[i]), "", "", name,
                               Table::cell(values[i])});
        }
    }
    report.tables.push_back(std::move(table));

    const double eta = params.value("eta", 0.01 * mu.total_mass());
    if (cfg.escape_radius > 0.0) {
        // escaped mass invalidates total-mass statistics; report local-ball
        // extinction frequencies instead
        for (const auto& ball : obs.balls) {
            std::size_t gone = 0;
            for (const auto& rec : records)
                if (!rec.truncated && rec.observables.at(ball.name).back() == 0.0) ++gone;
            const double freq = static_cast<double>(gone) / static_cast<double>(records.size());
            report.scalars.emplace_back("local_extinction_freq_" + ball.name, freq);
        }
    } else {
        const auto st = particle::extinction_stats(records, eta, true);
        Table stats_table;
        stats_table.name = "extinction_stats";
        stats_table.columns = {"quantity", "value"};
        stats_table.add_row({"weak_extinction_freq", Table::cell(st.weak_extinction_freq)});
        stats_table.add_row({"extinction_freq", Table::cell(st.extinction_freq)});
        stats_table.add_row({"survivors_fitted", Table::cell(st.survivor_growth_rates.size())});
        report.tables.push_back(std::move(stats_table));
        report.scalars.emplace_back("weak_extinction_freq", st.weak_extinction_freq);
        report.scalars.emplace_back("extinction_freq", st.extinction_freq);
        report.scalars.emplace_back("survival_freq", 1.0 - st.weak_extinction_freq);
    }
    std::size_t truncated = 0;
    for (const auto& rec : records) truncated += rec.truncated ? 1 : 0;
    report.scalars.emplace_back("truncated_replicas", static_cast<double>(truncated));
}

void run_laplace_cross(Report& report, const ModelSpec& model, const json& params,
                       std::size_t replicas, std::uint64_t seed) {
    const InitialMeasure mu = measure_from(params.at("mu"));
    const ScalarField f = ScalarField::from_json(params.at("f"));
    const double t = params.at("t").get<double>();
    json pp = params;
    pp["T"] = t;
    const particle::SimConfig cfg = sim_config_from(pp, seed);
    const MCEstimate mc = particle::laplace_functional(model, mu, f, t, replicas, cfg);

    const double dt_pde = params.value("dt_pde", 1e-3);
    const cumulant::SpaceGrid grid = grid_from(params.at("grid"), model);
    const auto sol = cumulant::solve_cumulant(model, f, t, grid, dt_pde);
    double integral = 0.0;
    for (const auto& atom : mu.atoms()) {
        const double x = grid.kind == cumulant::GridKind::radial ? norm(atom.position)
                                                                 : atom.position[0];
        integral += atom.mass * sol.at(t, x);
    }
    const double pde_value = std::exp(-integral);
    const double tol = 3.0 * mc.std_error + defaults().at("pde_rel_tolerance").get<double>() *
                                                std::abs(pde_value);
    Table table;
    table.name = "laplace_cross";
    table.columns = {"quantity", "value"};
    table.add_row({"particle_estimate", Table::cell(mc.mean)});
    table.add_row({"particle_se", Table::cell(mc.std_error)});
    table.add_row({"pde_value", Table::cell(pde_value)});
    table.add_row({"abs_difference", Table::cell(std::abs(mc.mean - pde_value))});
    table.add_row({"tolerance", Table::cell(tol)});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("particle_estimate", mc.mean);
    report.scalars.emplace_back("pde_value", pde_value);
    report.scalars.emplace_back("abs_difference", std::abs(mc.mean - pde_value));

    CheckResult check;
    check.name = "laplace_functional_agreement";
    check.anchor = "particle Laplace functional vs cumulant solver";
    check.target = pde_value;
    check.obtained = mc.mean;
    check.pass = std::abs(mc.mean - pde_value) <= tol;
    check.detail = "tolerance " + Table::cell(tol);
    report.checks.push_back(std::move(check));
}

void run_martingale(Report& report, const ModelSpec& model, const json& params,
                    std::size_t replicas, std::uint64_t seed) {
    const InitialMeasure mu = measure_from(params.at("mu"));
    const ScalarField h = ScalarField::from_json(params.at("h"));
    const double lambda = params.at("lambda").get<double>();
    const auto t_grid = params.at("t_grid").get<std::vector<double>>();
    json pp = params;
    pp["T"] = t_grid.back();
    const particle::SimConfig cfg = sim_config_from(pp, seed);
    const auto series = particle::martingale_series(model, mu, h, lambda, t_grid, replicas, cfg);
    Table table;
    table.name = "martingale";
    table.columns = {"t", "mean", "std_error", "variance", "variance_se", "samples"};
    for (const auto& pt : series)
        table.add_row({Table::cell(pt.t), Table::cell(pt.mean.mean),
                       Table::cell(pt.mean.std_error), Table::cell(pt.var.variance),
                       Table::cell(pt.var.std_error), Table::cell(pt.mean.samples)});
    report.tables.push_back(std::move(table));
    report.scalars.emplace_back("final_mean", series.back().mean.mean);
    report.scalars.emplace_back("final_variance", series.back().var.variance);
}

void write_outputs(const Report& report, const std::string& out_dir) {
    if (out_dir.empty()) return;
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/tables");
    for (const auto& t : report.tables) {
        std::ofstream os(out_dir + "/tables/" + t.name + ".csv", std::ios::binary);
        write_csv(os, t);
    }
    std::ofstream os(out_dir + "/report.json");
    os << report.to_json().dump(2) << "\n";
}

}  // namespace

RunResult run_experiment(const json& config_in, const Overrides& overrides) {
    json config = config_in;
    if (overrides.seed) config["seed"] = *overrides.seed;
    if (overrides.replicas) config["replicas"] = *overrides.replicas;
    if (overrides.output_dir) config["output_dir"] = *overrides.output_dir;
    validate_config(config);

    const std::string kind = config.at("kind").get<std::string>();
    if (kind == "reproduce")
        return reproduce(config.at("params").at("name").get<std::string>(), overrides);

    const auto t0 = std::chrono::steady_clock::now();
    Report report;
    report.experiment = config;
    report.seed = config.at("seed").get<std::uint64_t>();
    const std::size_t replicas = config.value("replicas", std::size_t{0});
    const json& params = config.at("params");
    const std::string out_dir = config.value("output_dir", std::string{});
    const ModelSpec model = model_from_config(config);

    if (kind == "semigroup")
        run_semigroup(report, model, params, replicas, report.seed);
    else if (kind == "lambda_inf")
        run_lambda_inf(report, model, params, replicas, report.seed);
    else if (kind == "lambda2")
        run_lambda2(report, model, params, replicas, report.seed);
    else if (kind == "gauge")
        run_gauge(report, model, params, replicas, report.seed);
    else if (kind == "green")
        run_green(report, model, params, replicas, report.seed);
    else if (kind == "kato")
        run_kato(report, model, params, replicas, report.seed);
    else if (kind == "criticality")
        run_criticality(report, model, params, replicas, report.seed);
    else if (kind == "cumulant")
        run_cumulant(report, model, params, report.seed, out_dir);
    else if (kind == "extinction_prob")
        run_extinction_prob(report, model, params, report.seed);
    else if (kind == "trajectory")
        run_trajectory_kind(report, model, params, replicas, report.seed);
    else if (kind == "laplace_cross")
        run_laplace_cross(report, model, params, replicas, report.seed);
    else if (kind == "martingale")
        run_martingale(report, model, params, replicas, report.seed);

    // declared tolerance checks against the named scalars
    if (config.contains("expect")) {
        for (const auto& e : config.at("expect")) {
            CheckResult check;
            check.name = e.at("quantity").get<std::string>();
            check.anchor = e.value("anchor", std::string{"declared tolerance"});
            check.target = e.at("target").get<double>();
            const double tol = e.at("abs_tol").get<double>();
            bool found = false;
            for (const auto& [name, value] : report.scalars) {
                if (name == check.name) {
                    check.obtained = value;
                    check.pass = std::abs(value - check.target) <= tol;
                    found = true;
                    break;
                }
            }
            if (!found) {
                check.pass = false;
                check.detail = "no such quantity in this experiment";
            } else {
                check.detail = "abs_tol " + Table::cell(tol);
            }
            report.checks.push_back(std::move(check));
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_outputs(report, out_dir);
    RunResult result;
    result.exit_code = report.all_checks_pass() ? 0 : 2;
    result.report = std::move(report);
    return result;
}

RunResult run_experiment_file(const std::string& config_path, const Overrides& overrides) {
    std::ifstream is(config_path);
    if (!is) throw std::runtime_error("cannot open config: " + config_path);
    json config;
    try {
        is >> config;
    } catch (const json::parse_error& err) {
        throw SchemaError("", std::string{"invalid JSON: "} + err.what());
    }
    return run_experiment(config, overrides);
}

std::vector<std::string> list_examples() { return catalog_names(); }

void write_report_outputs(const Report& report, const std::string& out_dir) {
    write_outputs(report, out_dir);
}

}  // namespace superdiff::lab
