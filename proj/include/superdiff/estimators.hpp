#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "superdiff/model.hpp"
#include "superdiff/path.hpp"
#include "superdiff/stats.hpp"

namespace superdiff::fk {

// ============================================================
// Feynman-Kac Monte Carlo estimators. All replicas draw from
// counter-seeded streams and are reduced in replica order, so results
// are independent of the thread count. Weight arithmetic stays in log
// space until the shifted reduction.
// ============================================================

/// P^beta_t f(x): mean of e_beta(t) f(xi_t) over replicas.
MCEstimate estimate_semigroup(const ModelSpec& model, const ScalarField& f,
                              std::span<const double> x, double t, std::size_t replicas,
                              const PathConfig& config);

/// Per-checkpoint semigroup estimates from shared paths, f == 1.
std::vector<MCEstimate> semigroup_trace(const ModelSpec& model, std::span<const double> x,
                                        const std::vector<double>& checkpoints,
                                        std::size_t replicas, const PathConfig& config);

/// L-infinity growth bound: sup over x_grid of the f == 1 semigroup
/// estimate per grid time, then an OLS fit of log(sup) over the window
/// [t_grid after 20% burn-in, end]. When sup_trace is supplied it receives
/// the per-time suprema.
GrowthEstimate estimate_lambda_inf(const ModelSpec& model, const std::vector<Point>& x_grid,
                                   const std::vector<double>& t_grid, std::size_t replicas,
                                   const PathConfig& config,
                                   std::vector<std::pair<double, double>>* sup_trace = nullptr);

struct Lambda2Result {
    GrowthEstimate fit;                                      // largest radius
    std::vector<std::pair<double, GrowthEstimate>> per_radius;
    std::vector<std::vector<std::pair<double, MCEstimate>>> traces;  // per radius: (t, sup estimate)
    std::size_t survivors_at_end = 0;                        // best x at the largest radius
    bool inconclusive = false;                               // rare-event starvation
};

/// Growth rate of the ball-killed weighted semigroup per radius; the largest
/// radius's fit is the headline estimate. Start points are placed on the
/// first axis at {0, +-0.45 n, +-0.9 n}.
Lambda2Result estimate_lambda2(const ModelSpec& model, const std::vector<double>& radii,
                               const std::vector<double>& t_grid, std::size_t replicas,
                               const PathConfig& config);

struct GaugeResult {
    std::vector<MCEstimate> per_horizon;
    DivergenceVerdict verdict;
};

/// Gauge trace Pi_x e_beta(t) along increasing horizons with a
/// finite/divergent verdict. "finite" accepts both stabilized and
/// decaying traces (bounded either way); "divergent" requires monotone
/// growth by more than the configured factor.
GaugeResult estimate_gauge(const ModelSpec& model, std::span<const double> x,
                           const std::vector<double>& horizons, std::size_t replicas,
                           const PathConfig& config);

/// Truncated potential Pi_x integral_0^T e_beta(s) g(xi_s) ds per horizon,
/// classified like estimate_gauge.
DivergenceVerdict green_potential(const ModelSpec& model, const ScalarField& g,
                                  std::span<const double> x, const std::vector<double>& horizons,
                                  std::size_t replicas, const PathConfig& config);

/// Kato-class diagnostic: sup over x_grid of Pi_x integral_0^t |beta| ds for
/// each small t (returned with t decreasing, as supplied).
std::vector<std::pair<double, MCEstimate>> kato_profile(const ModelSpec& model,
                                                        const std::vector<double>& small_ts,
                                                        const std::vector<Point>& x_grid,
                                                        std::size_t replicas,
                                                        const PathConfig& config);

enum class Criticality { supercritical, subcritical, critical, inconclusive };

const char* to_string(Criticality c);

struct CriticalityBudget {
    std::vector<Point> x_grid;
    std::vector<double> t_grid;
    std::vector<double> horizons;
    std::size_t replicas = 2000;
    PathConfig config;
    /// Rates within this band of zero count as zero even when the OLS CI is
    /// narrower; slowly decaying traces (log/sqrt laws) carry pre-asymptotic
    /// slopes of this size at desk horizons.
    double zero_band = 0.05;
};

struct CriticalityResult {
    Criticality verdict = Criticality::inconclusive;
    GrowthEstimate lambda_inf_base;
    GrowthEstimate lambda_inf_scaled;
    Divergence gauge = Divergence::inconclusive;
    bool gauge_consulted = false;
};

/// Classifier over the lambda_inf sign for beta and (1+eps) beta, with the
/// gauge verdict breaking the zero/zero tie.
CriticalityResult classify_criticality(const ModelSpec& model, double epsilon,
                                       const CriticalityBudget& budget);

/// Divergence verdict thresholds (artifact conventions, configurable).
struct DivergenceThresholds {
    double stabilize_rel_change = 0.05;
    double growth_factor = 2.0;
};

DivergenceVerdict classify_trace(std::vector<std::pair<double, MCEstimate>> trace,
                                 const DivergenceThresholds& thresholds = {});

}  // namespace superdiff::fk
