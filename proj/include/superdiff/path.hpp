#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "superdiff/model.hpp"
#include "superdiff/rng.hpp"

namespace superdiff {

// ============================================================
// Euler-Maruyama paths of the L-diffusion with Feynman-Kac weight
// accumulation and ball exit times. Additive functionals use
// left-endpoint quadrature throughout.
// ============================================================

struct PathConfig {
    double dt = 1e-2;
    double horizon = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Path {
    int dim = 1;
    std::vector<double> times;      // 0 = t0 < ... < tM = T
    std::vector<double> positions;  // (M+1) x dim, row-major
    std::vector<double> log_weight; // integral of beta along the path, left endpoints
    std::map<std::string, std::vector<double>> aux;  // named accumulators
    std::optional<double> exit_time;

    std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    const double* at(std::size_t i) const { return positions.data() + i * static_cast<std::size_t>(dim); }
};

/// One Euler-Maruyama path from x0. Deterministic given the generator state.
/// Throws when a non-finite position appears (reports the step index).
Path simulate_path(const DiffusionSpec& diffusion, std::span<const double> x0,
                   const PathConfig& config, Rng& rng);

/// Fills log_weight with the left-endpoint Riemann sum of beta along the
/// recorded positions; e_beta(t_i) = exp(log_weight[i]).
void accumulate_fk(Path& path, const ScalarField& beta);

/// Adds the accumulator named `name` holding the left-endpoint sums of
/// integral g(xi_s) e_beta(s) ds (weighted = true uses the current
/// log_weight; weighted = false integrates g alone).
void accumulate_aux(Path& path, const std::string& name, const ScalarField& g, bool weighted);

/// As simulate_path, but records the first grid time with |x| >= radius as
/// exit_time; positions are frozen there.
Path simulate_killed(const DiffusionSpec& diffusion, std::span<const double> x0, double radius,
                     const PathConfig& config, Rng& rng);

// ------------------------------------------------------------
// Streaming kernel shared by the Monte Carlo estimators: advances one
// path without storing it, tracking the FK log-weight and optional
// auxiliary integrals. Checkpoint logic lives in the estimators.
// ------------------------------------------------------------
class PathStepper {
  public:
    PathStepper(const DiffusionSpec& diffusion, const ScalarField* beta,
                std::span<const double> x0, double dt, Rng& rng);

    void step();

    double t() const { return t_; }
    double log_weight() const { return logw_; }
    std::span<const double> x() const { return {x_.data(), x_.size()}; }
    double radius() const;

    /// integral g(xi_s) e_beta(s) ds accumulated alongside (left endpoint).
    void enable_weighted_aux(const ScalarField* g) { aux_g_ = g; }
    /// integral |beta(xi_s)| ds accumulated alongside.
    void enable_abs_beta_aux() { abs_beta_aux_ = true; }
    double aux() const { return aux_; }
    double abs_aux() const { return abs_aux_; }

  private:
    const DiffusionSpec& diffusion_;
    const ScalarField* beta_;
    const ScalarField* aux_g_ = nullptr;
    bool abs_beta_aux_ = false;
    double dt_;
    double sqrt_dt_;
    Rng& rng_;
    double t_ = 0.0;
    double logw_ = 0.0;
    double aux_ = 0.0;
    double abs_aux_ = 0.0;
    std::size_t step_index_ = 0;
    std::vector<double> x_, b_, z_, noise_;
};

}  // namespace superdiff
