#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "superdiff/model.hpp"
#include "superdiff/rng.hpp"
#include "superdiff/stats.hpp"

namespace superdiff::particle {

// ============================================================
// Branching-particle approximation: atoms of mass 1/N follow the
// L-diffusion and branch at rate q = 2 N k + beta+ + beta-, producing
// two offspring with probability (N k + beta+)/q and none otherwise.
// The mean offspring drift is then exactly beta and the fluctuation
// coefficient converges to k. beta acts through genuine births and
// deaths, never through mass re-weighting, so extinction events are
// real. Event probabilities per substep are kept at or below
// event_cap via adaptive substepping, with the exact exponential form
// 1 - exp(-q dt) so constant rates carry no timestep bias.
// ============================================================

struct SimConfig {
    std::size_t particles_per_unit_mass = 100;  // N
    double dt = 1e-2;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::size_t max_particles = 1'000'000;
    double event_cap = 0.1;
    /// When > 0, particles beyond this radius stop being simulated and are
    /// booked as escaped mass. Only valid for runs whose observables are
    /// compactly supported (the caller declares that); total-mass statistics
    /// from such runs are lower bounds.
    double escape_radius = 0.0;

    void validate() const;
};

/// Largest dt honoring the per-step event bound on a probe grid; infinite-k
/// families make this 0 and rely entirely on runtime substepping.
double max_stable_dt(const ModelSpec& model, const SimConfig& config);

struct ParticleCloud {
    double time = 0.0;
    int dim = 1;
    std::size_t n_per_unit_mass = 100;
    std::vector<double> positions;  // count x dim, row-major
    Rng rng{0};
    bool rounded = false;  // initial masses were not multiples of 1/N
    double escaped_in_last_step = 0.0;

    std::size_t count() const { return positions.size() / static_cast<std::size_t>(dim); }
    double mass() const {
        return static_cast<double>(count()) / static_cast<double>(n_per_unit_mass);
    }
};

struct CapExceeded : std::runtime_error {
    explicit CapExceeded(std::size_t cap)
        : std::runtime_error("particle count exceeded max_particles = " + std::to_string(cap)) {}
};

/// Each atom of mass m becomes round(m N) particles at the atom position.
/// Throws when everything rounds away.
ParticleCloud init_cloud(const InitialMeasure& mu, std::size_t n_per_unit_mass, int dim,
                         std::uint64_t seed);

/// One Euler-Maruyama + branching step of length dt (adaptive substeps).
/// Throws CapExceeded when the population passes config.max_particles.
void evolve(ParticleCloud& cloud, const ModelSpec& model, double dt, const SimConfig& config);

struct BallObservable {
    std::string name;
    Point center;
    double radius = 1.0;
};

struct FieldObservable {
    std::string name;
    ScalarField h;
};

struct Observables {
    std::vector<BallObservable> balls;
    std::vector<FieldObservable> fields;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> total_mass;
    std::vector<std::size_t> particle_count;
    std::map<std::string, std::vector<double>> observables;  // per registered name
    bool truncated = false;   // hit max_particles; record ends early
    bool rounded = false;
    double escaped_mass = 0.0;
    std::uint64_t seed = 0;
};

/// Full trajectory with observables sampled every sample_dt (deterministic
/// under the seed). On cap overflow the partial record is returned with the
/// truncated flag set.
TrajectoryRecord run_trajectory(const ModelSpec& model, const InitialMeasure& mu,
                                const SimConfig& config, const Observables& observables,
                                double sample_dt);

/// Mean of exp(-<f, X_t>) over replicas.
MCEstimate laplace_functional(const ModelSpec& model, const InitialMeasure& mu,
                              const ScalarField& f, double t, std::size_t replicas,
                              const SimConfig& config);

struct MartingalePoint {
    double t = 0.0;
    MCEstimate mean;              // of M_t = e^{-lambda t} <h, X_t>
    stats::VarianceEstimate var;  // empirical Var(M_t) with its SE
};

/// M_t = e^{-lambda t} <h, X_t> along t_grid; the caller declares
/// (L + beta - lambda) h = 0 (catalog-supplied h).
std::vector<MartingalePoint> martingale_series(const ModelSpec& model, const InitialMeasure& mu,
                                               const ScalarField& h, double lambda,
                                               const std::vector<double>& t_grid,
                                               std::size_t replicas, const SimConfig& config);

/// Raw per-replica samples of M_t: result[c][r] for t_grid[c], replica r.
std::vector<std::vector<double>> martingale_samples(const ModelSpec& model,
                                                    const InitialMeasure& mu,
                                                    const ScalarField& h, double lambda,
                                                    const std::vector<double>& t_grid,
                                                    std::size_t replicas, const SimConfig& config);

struct ExtinctionStats {
    double weak_extinction_freq = 0.0;  // final total mass below eta
    double extinction_freq = 0.0;       // zero particles at the end
    std::vector<double> survivor_growth_rates;
};

/// Frequencies over a batch of trajectories plus per-survivor exponential
/// growth fits on the tail of the mass trajectory. `extinct_means_zero`
/// selects who counts as a survivor for the fits: particle_count > 0 when
/// set, final mass >= eta otherwise.
ExtinctionStats extinction_stats(const std::vector<TrajectoryRecord>& trajectories, double eta,
                                 bool extinct_means_zero);

/// Replica records with shared budgets, replica r seeded from (seed, r).
std::vector<TrajectoryRecord> run_replicas(const ModelSpec& model, const InitialMeasure& mu,
                                           const SimConfig& config, const Observables& observables,
                                           double sample_dt, std::size_t replicas);

// ------------------------------------------------------------
// Closed-form law of the total mass for spatially constant (beta, k):
// ||X_t|| is then a continuous-state branching process whose transition
// is a Poisson mixture of Gamma variables. Used for total-mass
// experiments at horizons where a particle representation cannot fit,
// and as a cross-check distribution for the particle simulator.
// ------------------------------------------------------------
struct ConstantMassLaw {
    double beta = 0.0;
    double k = 1.0;

    double mean(double m0, double t) const;
    double variance(double m0, double t) const;
    double extinction_probability(double m0, double t) const;
    /// Exact sample of ||X_t|| given ||X_0|| = m0.
    double sample(double m0, double t, Rng& rng) const;
};

}  // namespace superdiff::particle
