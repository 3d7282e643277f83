#include "superdiff/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "superdiff/parallel.hpp"

namespace superdiff::particle {

void SimConfig::validate() const {
    if (particles_per_unit_mass < 10)
        throw std::invalid_argument("SimConfig: need N >= 10 particles per unit mass");
    if (!(dt > 0.0) || !(horizon >= dt)) throw std::invalid_argument("SimConfig: bad dt/horizon");
    if (!(event_cap > 0.0 && event_cap <= 0.1))
        throw std::invalid_argument("SimConfig: event_cap must lie in (0, 0.1]");
    if (max_particles == 0) throw std::invalid_argument("SimConfig: max_particles must be > 0");
}

double max_stable_dt(const ModelSpec& model, const SimConfig& config) {
    const double n = static_cast<double>(config.particles_per_unit_mass);
    const double k_sup = model.k().upper_bound();
    const double beta_up = std::max(model.branching().beta_upper(), 0.0);
    const double beta_down = std::max(-model.beta().lower_bound(), 0.0);
    const double rate = 2.0 * n * k_sup + beta_up + beta_down;
    if (!std::isfinite(rate)) return 0.0;
    if (rate <= 0.0) return config.horizon;
    return config.event_cap / rate;
}

ParticleCloud init_cloud(const InitialMeasure& mu, std::size_t n_per_unit_mass, int dim,
                         std::uint64_t seed) {
    ParticleCloud cloud;
    cloud.dim = dim;
    cloud.n_per_unit_mass = n_per_unit_mass;
    cloud.rng = Rng(seed);
    const double n = static_cast<double>(n_per_unit_mass);
    for (const auto& atom : mu.atoms()) {
        if (static_cast<int>(atom.position.size()) != dim)
            throw std::invalid_argument("init_cloud: atom dimension mismatch");
        const double exact = atom.mass * n;
        const auto count = static_cast<std::size_t>(std::llround(exact));
        if (std::abs(exact - static_cast<double>(count)) > 1e-9) cloud.rounded = true;
        for (std::size_t c = 0; c < count; ++c)
            cloud.positions.insert(cloud.positions.end(), atom.position.begin(),
                                   atom.position.end());
    }
    if (cloud.count() == 0) throw std::invalid_argument("init_cloud: zero particles after rounding");
    return cloud;
}

namespace {

struct PendingParticle {
    Point x;
    double remaining;
};

}  // namespace

void evolve(ParticleCloud& cloud, const ModelSpec& model, double dt, const SimConfig& config) {
    const int d = cloud.dim;
    const double n = static_cast<double>(cloud.n_per_unit_mass);
    const DiffusionSpec& diffusion = model.diffusion();
    const ScalarField& beta = model.beta();
    const ScalarField& k = model.k();
    const double esc2 = config.escape_radius > 0.0
                            ? config.escape_radius * config.escape_radius
                            : std::numeric_limits<double>::infinity();

    std::vector<double> next;
    next.reserve(cloud.positions.size() + 64);
    std::vector<PendingParticle> stack;
    Point x(static_cast<std::size_t>(d));
    std::vector<double> b(static_cast<std::size_t>(d)), z(static_cast<std::size_t>(d)),
        noise(static_cast<std::size_t>(d));

    const std::size_t count = cloud.count();
    double escaped = 0.0;
    for (std::size_t p = 0; p < count; ++p) {
        const double* src = cloud.positions.data() + p * static_cast<std::size_t>(d);
        stack.push_back(PendingParticle{Point(src, src + d), dt});
        while (!stack.empty()) {
            PendingParticle cur = std::move(stack.back());
            stack.pop_back();
            x = std::move(cur.x);
            double remaining = cur.remaining;
            bool alive = true;
            while (remaining > 0.0 && alive) {
                // substep keeping the event probability at or below event_cap
                const double kx = k(x);
                const double bx = beta(x);
                const double q0 = 2.0 * n * kx + std::abs(bx);
                double step = remaining;
                if (q0 * step > config.event_cap) step = config.event_cap / q0;

                diffusion.drift_at(x, b);
                for (auto& zz : z) zz = cloud.rng.normal();
                diffusion.sigma_times(x, z, noise);
                const double root = std::sqrt(step);
                double r2 = 0.0;
                for (int i = 0; i < d; ++i) {
                    auto& xi = x[static_cast<std::size_t>(i)];
                    xi += b[static_cast<std::size_t>(i)] * step + root * noise[static_cast<std::size_t>(i)];
                    if (!std::isfinite(xi))
                        throw std::runtime_error("evolve: non-finite particle position");
                    r2 += xi * xi;
                }
                remaining -= step;
                if (r2 >= esc2) {
                    escaped += 1.0 / n;
                    alive = false;
                    break;
                }

                const double k_new = k(x);
                const double b_new = beta(x);
                const double q = 2.0 * n * k_new + std::abs(b_new);
                if (q <= 0.0) continue;
                const double p_event = -std::expm1(-q * step);
                if (cloud.rng.uniform() >= p_event) continue;
                const double beta_plus = std::max(b_new, 0.0);
                const double p_two = (n * k_new + beta_plus) / q;
                if (cloud.rng.uniform() < p_two) {
                    // binary split: one branch continues here, the sibling is queued
                    if (stack.size() + next.size() / static_cast<std::size_t>(d) + 2 >
                        config.max_particles)
                        throw CapExceeded(config.max_particles);
                    stack.push_back(PendingParticle{x, remaining});
                } else {
                    alive = false;
                }
            }
            if (alive) {
                if (next.size() / static_cast<std::size_t>(d) + 1 > config.max_particles)
                    throw CapExceeded(config.max_particles);
                next.insert(next.end(), x.begin(), x.end());
            }
        }
    }
    cloud.positions = std::move(next);
    cloud.time += dt;
    if (config.escape_radius > 0.0 && escaped > 0.0) {
        // escaped mass is accounted by the caller via the return in
        // run_trajectory; stash it in the rng-free field
        cloud.escaped_in_last_step = escaped;
    } else {
        cloud.escaped_in_last_step = 0.0;
    }
}

namespace {

double ball_mass(const ParticleCloud& cloud, const BallObservable& ball) {
    const int d = cloud.dim;
    const double r2 = ball.radius * ball.radius;
    std::size_t inside = 0;
    for (std::size_t p = 0; p < cloud.count(); ++p) {
        const double* x = cloud.positions.data() + p * static_cast<std::size_t>(d);
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            const double diff = x[i] - (static_cast<std::size_t>(i) < ball.center.size()
                                            ? ball.center[static_cast<std::size_t>(i)]
                                            : 0.0);
            s += diff * diff;
        }
        if (s <= r2) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(cloud.n_per_unit_mass);
}

double field_sum(const ParticleCloud& cloud, const ScalarField& h) {
    const int d = cloud.dim;
    double s = 0.0;
    for (std::size_t p = 0; p < cloud.count(); ++p)
        s += h(std::span<const double>(cloud.positions.data() + p * static_cast<std::size_t>(d),
                                       static_cast<std::size_t>(d)));
    return s / static_cast<double>(cloud.n_per_unit_mass);
}

}  // namespace

TrajectoryRecord run_trajectory(const ModelSpec& model, const InitialMeasure& mu,
                                const SimConfig& config, const Observables& observables,
                                double sample_dt) {
    config.validate();
    if (!(sample_dt >= config.dt))
        throw std::invalid_argument("run_trajectory: sample_dt must be >= dt");
    TrajectoryRecord rec;
    rec.seed = config.seed;
    ParticleCloud cloud = init_cloud(mu, config.particles_per_unit_mass, model.dim(), config.seed);
    rec.rounded = cloud.rounded;

    const std::size_t n_samples = static_cast<std::size_t>(std::llround(config.horizon / sample_dt));
    const std::size_t steps_per_sample = static_cast<std::size_t>(std::llround(sample_dt / config.dt));
    auto sample = [&](double t) {
        rec.times.push_back(t);
        rec.total_mass.push_back(cloud.mass());
        rec.particle_count.push_back(cloud.count());
        for (const auto& ball : observables.balls)
            rec.observables[ball.name].push_back(ball_mass(cloud, ball));
        for (const auto& field : observables.fields)
            rec.observables[field.name].push_back(field_sum(cloud, field.h));
    };
    sample(0.0);
    for (std::size_t s = 1; s <= n_samples; ++s) {
        try {
            for (std::size_t i = 0; i < steps_per_sample; ++i) {
                evolve(cloud, model, config.dt, config);
                rec.escaped_mass += cloud.escaped_in_last_step;
            }
        } catch (const CapExceeded&) {
            rec.truncated = true;
            break;
        }
        sample(static_cast<double>(s) * sample_dt);
        if (cloud.count() == 0) {
            // extinct: the remaining samples are exact zeros
            for (std::size_t rest = s + 1; rest <= n_samples; ++rest)
                sample(static_cast<double>(rest) * sample_dt);
            break;
        }
    }
    return rec;
}

std::vector<TrajectoryRecord> run_replicas(const ModelSpec& model, const InitialMeasure& mu,
                                           const SimConfig& config, const Observables& observables,
                                           double sample_dt, std::size_t replicas) {
    std::vector<TrajectoryRecord> records(replicas);
    parallel_for(replicas, [&](std::size_t r) {
        SimConfig per = config;
        per.seed = Rng::stream(config.seed, r).next_u64();
        records[r] = run_trajectory(model, mu, per, observables, sample_dt);
    });
    return records;
}

MCEstimate laplace_functional(const ModelSpec& model, const InitialMeasure& mu,
                              const ScalarField& f, double t, std::size_t replicas,
                              const SimConfig& config) {
    if (!f.nonnegative()) throw std::invalid_argument("laplace_functional: f must be >= 0");
    config.validate();
    std::vector<double> values(replicas, 0.0);
    std::size_t truncated = 0;
    std::vector<std::uint8_t> flags(replicas, 0);
    parallel_for(replicas, [&](std::size_t r) {
        SimConfig per = config;
        per.horizon = t;
        per.seed = Rng::stream(config.seed, r).next_u64();
        ParticleCloud cloud = init_cloud(mu, per.particles_per_unit_mass, model.dim(), per.seed);
        const std::size_t steps = static_cast<std::size_t>(std::llround(t / per.dt));
        try {
            for (std::size_t s = 0; s < steps && cloud.count() > 0; ++s)
                evolve(cloud, model, per.dt, per);
        } catch (const CapExceeded&) {
            flags[r] = 1;
        }
        values[r] = std::exp(-field_sum(cloud, f));
    });
    for (auto fl : flags) truncated += fl;
    MCEstimate e = stats::summarize(values);
    e.truncated = truncated > 0;
    return e;
}

std::vector<std::vector<double>> martingale_samples(const ModelSpec& model,
                                                    const InitialMeasure& mu,
                                                    const ScalarField& h, double lambda,
                                                    const std::vector<double>& t_grid,
                                                    std::size_t replicas, const SimConfig& config) {
    config.validate();
    if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw std::invalid_argument("martingale_series: t_grid must be increasing");
    const std::size_t n_t = t_grid.size();
    std::vector<std::vector<double>> samples(n_t, std::vector<double>(replicas, 0.0));
    parallel_for(replicas, [&](std::size_t r) {
        SimConfig per = config;
        per.horizon = t_grid.back();
        per.seed = Rng::stream(config.seed, r).next_u64();
        ParticleCloud cloud = init_cloud(mu, per.particles_per_unit_mass, model.dim(), per.seed);
        std::size_t step = 0;
        for (std::size_t c = 0; c < n_t; ++c) {
            const auto target = static_cast<std::size_t>(std::llround(t_grid[c] / per.dt));
            while (step < target && cloud.count() > 0) {
                evolve(cloud, model, per.dt, per);
                ++step;
            }
            samples[c][r] = std::exp(-lambda * t_grid[c]) * field_sum(cloud, h);
        }
    });
    return samples;
}

std::vector<MartingalePoint> martingale_series(const ModelSpec& model, const InitialMeasure& mu,
                                               const ScalarField& h, double lambda,
                                               const std::vector<double>& t_grid,
                                               std::size_t replicas, const SimConfig& config) {
    const auto samples = martingale_samples(model, mu, h, lambda, t_grid, replicas, config);
    const std::size_t n_t = t_grid.size();
    std::vector<MartingalePoint> out(n_t);
    for (std::size_t c = 0; c < n_t; ++c) {
        out[c].t = t_grid[c];
        out[c].mean = stats::summarize(samples[c]);
        out[c].var = stats::variance_with_se(samples[c]);
    }
    return out;
}

ExtinctionStats extinction_stats(const std::vector<TrajectoryRecord>& trajectories, double eta,
                                 bool extinct_means_zero) {
    if (trajectories.size() < 100)
        throw std::invalid_argument("extinction_stats: need >= 100 trajectories");
    ExtinctionStats st;
    std::size_t weak = 0, extinct = 0;
    for (const auto& rec : trajectories) {
        if (rec.escaped_mass > 0.0)
            throw std::invalid_argument(
                "extinction_stats: records with escaped mass cannot feed extinction frequencies");
        const double final_mass = rec.total_mass.back();
        const std::size_t final_count = rec.particle_count.back();
        if (final_mass < eta) ++weak;
        if (final_count == 0) ++extinct;
        const bool survivor = extinct_means_zero ? final_count > 0 : final_mass >= eta;
        if (survivor && rec.times.size() >= 6) {
            // exponential fit over the trailing half of the trajectory
            std::vector<std::pair<double, double>> series;
            const std::size_t from = rec.times.size() / 2;
            bool positive = true;
            for (std::size_t i = from; i < rec.times.size(); ++i) {
                positive &= rec.total_mass[i] > 0.0;
                series.emplace_back(rec.times[i], rec.total_mass[i]);
            }
            if (positive && series.size() >= 4) {
                st.survivor_growth_rates.push_back(
                    stats::fit_exponential(series, series.front().first, series.back().first).rate);
            }
        }
    }
    const double n = static_cast<double>(trajectories.size());
    st.weak_extinction_freq = static_cast<double>(weak) / n;
    st.extinction_freq = static_cast<double>(extinct) / n;
    return st;
}

// ---------------- constant-coefficient total-mass law ----------------

double ConstantMassLaw::mean(double m0, double t) const { return m0 * std::exp(beta * t); }

double ConstantMassLaw::variance(double m0, double t) const {
    if (std::abs(beta) < 1e-12) return 2.0 * k * m0 * t;
    const double e = std::exp(beta * t);
    return 2.0 * k * m0 * e * (e - 1.0) / beta;
}

double ConstantMassLaw::extinction_probability(double m0, double t) const {
    if (k <= 0.0) return 0.0;
    const double u_inf = std::abs(beta) < 1e-12
                             ? 1.0 / (k * t)
                             : beta * std::exp(beta * t) / (k * (std::exp(beta * t) - 1.0));
    return std::exp(-m0 * u_inf);
}

double ConstantMassLaw::sample(double m0, double t, Rng& rng) const {
    if (m0 <= 0.0) return 0.0;
    if (k <= 0.0) return mean(m0, t);  // deterministic exponential flow
    // Laplace exponent u_t(theta) = A theta / (1 + B theta) gives a
    // Poisson(m0 A / B) mixture of Exp(mean B) masses.
    const double a = std::exp(beta * t);
    const double b = std::abs(beta) < 1e-12 ? k * t : (k / beta) * (std::exp(beta * t) - 1.0);
    const std::uint64_t atoms = rng.poisson(m0 * a / b);
    if (atoms == 0) return 0.0;
    return rng.gamma(static_cast<double>(atoms), b);
}

}  // namespace superdiff::particle
