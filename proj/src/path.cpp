#include "superdiff/path.hpp"

#include <cmath>
#include <stdexcept>

namespace superdiff {

void PathConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("PathConfig: dt must be > 0");
    if (!(horizon >= dt)) throw std::invalid_argument("PathConfig: need dt <= horizon");
}

PathStepper::PathStepper(const DiffusionSpec& diffusion, const ScalarField* beta,
                         std::span<const double> x0, double dt, Rng& rng)
    : diffusion_(diffusion),
      beta_(beta),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      rng_(rng),
      x_(x0.begin(), x0.end()),
      b_(x0.size()),
      z_(x0.size()),
      noise_(x0.size()) {
    if (static_cast<int>(x_.size()) != diffusion.dim())
        throw std::invalid_argument("PathStepper: x0 dimension mismatch");
    for (double v : x_)
        if (!std::isfinite(v)) throw std::invalid_argument("PathStepper: x0 must be finite");
}

void PathStepper::step() {
    // left-endpoint accumulation before the move
    if (beta_) {
        const double bval = (*beta_)(x());
        logw_ += bval * dt_;
        if (abs_beta_aux_) abs_aux_ += std::abs(bval) * dt_;
        if (aux_g_) aux_ += (*aux_g_)(x()) * std::exp(logw_ - bval * dt_) * dt_;
    } else if (aux_g_) {
        aux_ += (*aux_g_)(x()) * dt_;
    }

    diffusion_.drift_at(x(), b_);
    for (auto& z : z_) z = rng_.normal();
    diffusion_.sigma_times(x(), z_, noise_);
    for (std::size_t i = 0; i < x_.size(); ++i) {
        x_[i] += b_[i] * dt_ + sqrt_dt_ * noise_[i];
        if (!std::isfinite(x_[i]))
            throw std::runtime_error("diffusion step " + std::to_string(step_index_ + 1) +
                                     ": non-finite position (coefficient blow-up or dt too large)");
    }
    t_ += dt_;
    ++step_index_;
}

double PathStepper::radius() const { return norm(x()); }

namespace {

Path simulate_impl(const DiffusionSpec& diffusion, std::span<const double> x0,
                   std::optional<double> kill_radius, const PathConfig& config, Rng& rng) {
    config.validate();
    if (kill_radius && norm(x0) >= *kill_radius)
        throw std::invalid_argument("simulate_killed: x0 must start inside the ball");
    const int d = diffusion.dim();
    const std::size_t steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
    Path path;
    path.dim = d;
    path.times.resize(steps + 1);
    path.positions.resize((steps + 1) * static_cast<std::size_t>(d));
    path.log_weight.assign(steps + 1, 0.0);
    for (std::size_t i = 0; i <= steps; ++i) path.times[i] = static_cast<double>(i) * config.dt;
    path.times[steps] = config.horizon;

    PathStepper stepper(diffusion, nullptr, x0, config.dt, rng);
    auto record = [&](std::size_t i) {
        const auto xs = stepper.x();
        std::copy(xs.begin(), xs.end(),
                  path.positions.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(d)));
    };
    record(0);
    for (std::size_t i = 1; i <= steps; ++i) {
        stepper.step();
        record(i);
        if (kill_radius && stepper.radius() >= *kill_radius) {
            path.exit_time = path.times[i];
            // positions frozen (unused) after the exit
            for (std::size_t j = i + 1; j <= steps; ++j) record(j);
            break;
        }
    }
    return path;
}

}  // namespace

Path simulate_path(const DiffusionSpec& diffusion, std::span<const double> x0,
                   const PathConfig& config, Rng& rng) {
    return simulate_impl(diffusion, x0, std::nullopt, config, rng);
}

Path simulate_killed(const DiffusionSpec& diffusion, std::span<const double> x0, double radius,
                     const PathConfig& config, Rng& rng) {
    return simulate_impl(diffusion, x0, radius, config, rng);
}

void accumulate_fk(Path& path, const ScalarField& beta) {
    if (path.times.empty()) throw std::invalid_argument("accumulate_fk: empty path");
    path.log_weight.assign(path.times.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        const double dt = path.times[i] - path.times[i - 1];
        acc += beta(std::span<const double>(path.at(i - 1), static_cast<std::size_t>(path.dim))) * dt;
        path.log_weight[i] = acc;
    }
}

void accumulate_aux(Path& path, const std::string& name, const ScalarField& g, bool weighted) {
    std::vector<double> acc(path.times.size(), 0.0);
    double running = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        const double dt = path.times[i] - path.times[i - 1];
        const double gval = g(std::span<const double>(path.at(i - 1), static_cast<std::size_t>(path.dim)));
        const double w = weighted ? std::exp(path.log_weight[i - 1]) : 1.0;
        running += gval * w * dt;
        acc[i] = running;
    }
    path.aux[name] = std::move(acc);
}

}  // namespace superdiff
