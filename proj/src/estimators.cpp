#include "superdiff/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "superdiff/parallel.hpp"

namespace superdiff::fk {

namespace {

std::vector<std::size_t> checkpoint_steps(const std::vector<double>& checkpoints, double dt) {
    std::vector<std::size_t> steps;
    steps.reserve(checkpoints.size());
    std::size_t prev = 0;
    bool first = true;
    for (double t : checkpoints) {
        const std::size_t s = static_cast<std::size_t>(std::llround(t / dt));
        if (!first && s <= prev)
            throw std::invalid_argument("checkpoints must be strictly increasing on the dt grid");
        if (std::abs(static_cast<double>(s) * dt - t) > 1e-9 * std::max(1.0, t))
            throw std::invalid_argument("checkpoint time is not a multiple of dt");
        steps.push_back(s);
        prev = s;
        first = false;
    }
    return steps;
}

enum class Payload { weighted_terminal, weighted_aux, abs_beta_aux };

// Shared replica loop: one path per replica, values recorded at each
// checkpoint. weighted_terminal produces log values (log e_beta(t) + log f),
// the aux payloads produce plain values.
std::vector<std::vector<double>> run_checkpointed(const ModelSpec& model,
                                                  std::span<const double> x,
                                                  const std::vector<double>& checkpoints,
                                                  std::size_t replicas, const PathConfig& config,
                                                  Payload payload, const ScalarField* f,
                                                  double kill_radius = 0.0) {
    config.validate();
    if (checkpoints.empty()) throw std::invalid_argument("no checkpoints");
    if (checkpoints.back() > config.horizon + 1e-9)
        throw std::invalid_argument("checkpoint beyond config horizon");
    const auto steps = checkpoint_steps(checkpoints, config.dt);
    const std::size_t n_cp = checkpoints.size();
    std::vector<std::vector<double>> out(n_cp, std::vector<double>(replicas, 0.0));
    const Point x0(x.begin(), x.end());

    parallel_for(replicas, [&](std::size_t r) {
        Rng rng = Rng::stream(config.seed, r);
        PathStepper stepper(model.diffusion(), &model.beta(), x0, config.dt, rng);
        if (payload == Payload::weighted_aux) stepper.enable_weighted_aux(f);
        if (payload == Payload::abs_beta_aux) stepper.enable_abs_beta_aux();
        bool killed = false;
        std::size_t step = 0;
        for (std::size_t c = 0; c < n_cp; ++c) {
            while (step < steps[c]) {
                if (killed) break;
                stepper.step();
                ++step;
                if (kill_radius > 0.0 && stepper.radius() >= kill_radius) killed = true;
            }
            switch (payload) {
                case Payload::weighted_terminal: {
                    if (killed) {
                        out[c][r] = -std::numeric_limits<double>::infinity();
                    } else {
                        const double fv = f ? (*f)(stepper.x()) : 1.0;
                        out[c][r] = fv > 0.0 ? stepper.log_weight() + std::log(fv)
                                             : -std::numeric_limits<double>::infinity();
                    }
                    break;
                }
                case Payload::weighted_aux:
                    out[c][r] = stepper.aux();
                    break;
                case Payload::abs_beta_aux:
                    out[c][r] = stepper.abs_aux();
                    break;
            }
        }
    });
    return out;
}

double burn_in_start(const std::vector<double>& t_grid) {
    const std::size_t drop = t_grid.size() / 5;  // first 20% of the grid
    return t_grid[std::min(drop, t_grid.size() - 1)];
}

}  // namespace

MCEstimate estimate_semigroup(const ModelSpec& model, const ScalarField& f,
                              std::span<const double> x, double t, std::size_t replicas,
                              const PathConfig& config) {
    if (t > config.horizon + 1e-9)
        throw std::invalid_argument("estimate_semigroup: t beyond config horizon");
    if (replicas < 100) throw std::invalid_argument("estimate_semigroup: need replicas >= 100");
    auto logs = run_checkpointed(model, x, {t}, replicas, config, Payload::weighted_terminal, &f);
    return stats::summarize_exp_log(logs[0]);
}

std::vector<MCEstimate> semigroup_trace(const ModelSpec& model, std::span<const double> x,
                                        const std::vector<double>& checkpoints,
                                        std::size_t replicas, const PathConfig& config) {
    auto logs =
        run_checkpointed(model, x, checkpoints, replicas, config, Payload::weighted_terminal, nullptr);
    std::vector<MCEstimate> out;
    out.reserve(logs.size());
    for (auto& l : logs) out.push_back(stats::summarize_exp_log(l));
    return out;
}

GrowthEstimate estimate_lambda_inf(const ModelSpec& model, const std::vector<Point>& x_grid,
                                   const std::vector<double>& t_grid, std::size_t replicas,
                                   const PathConfig& config,
                                   std::vector<std::pair<double, double>>* sup_trace) {
    if (x_grid.empty()) throw std::invalid_argument("estimate_lambda_inf: empty x_grid");
    if (t_grid.size() < 4) throw std::invalid_argument("estimate_lambda_inf: need >= 4 grid times");
    std::vector<double> sup(t_grid.size(), 0.0);
    PathConfig cfg = config;
    cfg.horizon = t_grid.back();
    for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
        PathConfig per = cfg;
        per.seed = cfg.seed + 0x9E37 * xi;  // independent replicas per start point
        auto trace = semigroup_trace(model, x_grid[xi], t_grid, replicas, per);
        for (std::size_t c = 0; c < t_grid.size(); ++c) sup[c] = std::max(sup[c], trace[c].mean);
    }
    std::vector<std::pair<double, double>> series;
    for (std::size_t c = 0; c < t_grid.size(); ++c) series.emplace_back(t_grid[c], sup[c]);
    if (sup_trace) *sup_trace = series;
    return stats::fit_exponential(series, burn_in_start(t_grid), t_grid.back());
}

Lambda2Result estimate_lambda2(const ModelSpec& model, const std::vector<double>& radii,
                               const std::vector<double>& t_grid, std::size_t replicas,
                               const PathConfig& config) {
    if (radii.size() < 2) throw std::invalid_argument("estimate_lambda2: need >= 2 radii");
    if (!std::is_sorted(radii.begin(), radii.end()))
        throw std::invalid_argument("estimate_lambda2: radii must increase");
    if (t_grid.size() < 4) throw std::invalid_argument("estimate_lambda2: need >= 4 grid times");
    Lambda2Result result;
    PathConfig cfg = config;
    cfg.horizon = t_grid.back();
    const int d = model.dim();
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double n = radii[ri];
        // start points along the first axis inside D_n
        const double offsets[] = {0.0, 0.45 * n, 0.9 * n, -0.45 * n, -0.9 * n};
        std::vector<std::vector<double>> sup_logs;  // per checkpoint: best per-replica logs
        std::vector<double> sup_mean(t_grid.size(), 0.0);
        std::size_t best_survivors = 0;
        for (std::size_t oi = 0; oi < 5; ++oi) {
            Point x0(static_cast<std::size_t>(d), 0.0);
            x0[0] = offsets[oi];
            PathConfig per = cfg;
            per.seed = cfg.seed + 0x51ED * (ri * 8 + oi);
            auto logs = run_checkpointed(model, x0, t_grid, replicas, per,
                                         Payload::weighted_terminal, nullptr, n);
            std::size_t survivors = 0;
            for (double lv : logs.back())
                if (std::isfinite(lv)) ++survivors;
            best_survivors = std::max(best_survivors, survivors);
            for (std::size_t c = 0; c < t_grid.size(); ++c) {
                const MCEstimate e = stats::summarize_exp_log(logs[c]);
                sup_mean[c] = std::max(sup_mean[c], e.mean);
            }
        }
        std::vector<std::pair<double, MCEstimate>> trace;
        std::vector<std::pair<double, double>> series;
        for (std::size_t c = 0; c < t_grid.size(); ++c) {
            MCEstimate e;
            e.mean = sup_mean[c];
            e.samples = replicas;
            trace.emplace_back(t_grid[c], e);
            series.emplace_back(t_grid[c], sup_mean[c]);
        }
        result.traces.push_back(std::move(trace));
        GrowthEstimate fit;
        bool starved = false;
        for (const auto& [t, v] : series)
            if (t >= burn_in_start(t_grid) && !(v > 0.0)) starved = true;
        if (starved) {
            fit.rate = std::numeric_limits<double>::quiet_NaN();
        } else {
            fit = stats::fit_exponential(series, burn_in_start(t_grid), t_grid.back());
        }
        result.per_radius.emplace_back(n, fit);
        if (ri + 1 == radii.size()) {
            result.fit = fit;
            result.survivors_at_end = best_survivors;
            result.inconclusive = starved || best_survivors < 50;  // rare-event starvation
        }
    }
    return result;
}

DivergenceVerdict classify_trace(std::vector<std::pair<double, MCEstimate>> trace,
                                 const DivergenceThresholds& th) {
    DivergenceVerdict v;
    v.trace = std::move(trace);
    const auto& tr = v.trace;
    if (tr.size() < 2) return v;
    const double first = tr.front().second.mean;
    const double last = tr.back().second.mean;
    const double prev = tr[tr.size() - 2].second.mean;
    bool monotone_up = true;
    for (std::size_t i = 1; i < tr.size(); ++i)
        monotone_up &= tr[i].second.mean >= tr[i - 1].second.mean * (1.0 - 1e-12);
    if (monotone_up && first > 0.0 && last > th.growth_factor * first) {
        v.verdict = Divergence::divergent;
        return v;
    }
    const double denom = std::max(std::abs(prev), 1e-300);
    const double rel_change = std::abs(last - prev) / denom;
    const bool stabilized = rel_change < th.stabilize_rel_change;
    const bool bounded_decay = last <= first * (1.0 + 1e-9);
    if (stabilized || bounded_decay) {
        v.verdict = Divergence::finite;
        return v;
    }
    v.verdict = Divergence::inconclusive;
    return v;
}

GaugeResult estimate_gauge(const ModelSpec& model, std::span<const double> x,
                           const std::vector<double>& horizons, std::size_t replicas,
                           const PathConfig& config) {
    if (horizons.size() < 3) throw std::invalid_argument("estimate_gauge: need >= 3 horizons");
    PathConfig cfg = config;
    cfg.horizon = horizons.back();
    auto estimates = semigroup_trace(model, x, horizons, replicas, cfg);
    GaugeResult result;
    result.per_horizon = estimates;
    std::vector<std::pair<double, MCEstimate>> trace;
    for (std::size_t i = 0; i < horizons.size(); ++i) trace.emplace_back(horizons[i], estimates[i]);
    result.verdict = classify_trace(std::move(trace));
    return result;
}

DivergenceVerdict green_potential(const ModelSpec& model, const ScalarField& g,
                                  std::span<const double> x, const std::vector<double>& horizons,
                                  std::size_t replicas, const PathConfig& config) {
    if (!g.nonnegative()) throw std::invalid_argument("green_potential: g must be >= 0");
    PathConfig cfg = config;
    cfg.horizon = horizons.back();
    auto values = run_checkpointed(model, x, horizons, replicas, cfg, Payload::weighted_aux, &g);
    std::vector<std::pair<double, MCEstimate>> trace;
    for (std::size_t i = 0; i < horizons.size(); ++i)
        trace.emplace_back(horizons[i], stats::summarize(values[i]));
    return classify_trace(std::move(trace));
}

std::vector<std::pair<double, MCEstimate>> kato_profile(const ModelSpec& model,
                                                        const std::vector<double>& small_ts,
                                                        const std::vector<Point>& x_grid,
                                                        std::size_t replicas,
                                                        const PathConfig& config) {
    if (small_ts.empty() || x_grid.empty())
        throw std::invalid_argument("kato_profile: empty inputs");
    for (double t : small_ts)
        if (!(t > 0.0 && t <= 1.0))
            throw std::invalid_argument("kato_profile: small_ts must lie in (0, 1]");
    std::vector<double> increasing(small_ts.rbegin(), small_ts.rend());
    if (!std::is_sorted(increasing.begin(), increasing.end()))
        throw std::invalid_argument("kato_profile: small_ts must be sorted decreasing");
    PathConfig cfg = config;
    cfg.horizon = increasing.back();
    std::vector<MCEstimate> sup(increasing.size());
    for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
        PathConfig per = cfg;
        per.seed = cfg.seed + 0xA5A5 * xi;
        auto values =
            run_checkpointed(model, x_grid[xi], increasing, replicas, per, Payload::abs_beta_aux, nullptr);
        for (std::size_t c = 0; c < increasing.size(); ++c) {
            const MCEstimate e = stats::summarize(values[c]);
            if (e.mean >= sup[c].mean) sup[c] = e;
        }
    }
    std::vector<std::pair<double, MCEstimate>> out;
    for (std::size_t i = 0; i < small_ts.size(); ++i)
        out.emplace_back(small_ts[i], sup[increasing.size() - 1 - i]);
    return out;
}

const char* to_string(Criticality c) {
    switch (c) {
        case Criticality::supercritical: return "supercritical";
        case Criticality::subcritical: return "subcritical";
        case Criticality::critical: return "critical";
        default: return "inconclusive";
    }
}

CriticalityResult classify_criticality(const ModelSpec& model, double epsilon,
                                       const CriticalityBudget& budget) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("classify_criticality: epsilon must lie in (0, 1]");
    CriticalityResult result;
    result.lambda_inf_base =
        estimate_lambda_inf(model, budget.x_grid, budget.t_grid, budget.replicas, budget.config);
    ModelSpec scaled = model.with_beta(model.beta().scaled(1.0 + epsilon));
    PathConfig scaled_cfg = budget.config;
    scaled_cfg.seed = budget.config.seed + 1;
    result.lambda_inf_scaled =
        estimate_lambda_inf(scaled, budget.x_grid, budget.t_grid, budget.replicas, scaled_cfg);
    const GrowthEstimate& base = result.lambda_inf_base;
    const GrowthEstimate& up = result.lambda_inf_scaled;

    const double band = std::max(budget.zero_band, 1e-12);
    if (base.rate - base.half_width > 0.0 && std::abs(base.rate) > band) {
        result.verdict = Criticality::supercritical;
        return result;
    }
    if (std::abs(base.rate) > std::max(base.half_width, band)) return result;
    if (up.rate - up.half_width > 0.0 && std::abs(up.rate) > band) {
        result.verdict = Criticality::critical;
        return result;
    }
    if (std::abs(up.rate) > std::max(up.half_width, band)) return result;
    GaugeResult gauge = estimate_gauge(model, budget.x_grid.front(), budget.horizons,
                                       budget.replicas, budget.config);
    result.gauge = gauge.verdict.verdict;
    result.gauge_consulted = true;
    if (result.gauge == Divergence::finite) result.verdict = Criticality::subcritical;
    return result;
}

}  // namespace superdiff::fk
