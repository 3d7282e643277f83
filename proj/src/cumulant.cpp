#include "superdiff/cumulant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace superdiff::cumulant {

static_assert(std::endian::native == std::endian::little, "CUM1 dump assumes little-endian host");

SpaceGrid SpaceGrid::line(double r_box, std::size_t nodes, BoundaryCondition bc) {
    SpaceGrid g;
    g.kind = GridKind::line;
    g.dim = 1;
    g.r_box = r_box;
    g.nodes = nodes;
    g.bc = bc;
    g.validate();
    return g;
}

SpaceGrid SpaceGrid::radial(int dim, double r_box, std::size_t nodes, BoundaryCondition bc) {
    SpaceGrid g;
    g.kind = GridKind::radial;
    g.dim = dim;
    g.r_box = r_box;
    g.nodes = nodes;
    g.bc = bc;
    g.validate();
    return g;
}

void SpaceGrid::validate() const {
    if (nodes < 64) throw std::invalid_argument("SpaceGrid: need >= 64 nodes");
    if (!(r_box > 0.0)) throw std::invalid_argument("SpaceGrid: r_box must be > 0");
    if (dim < 1) throw std::invalid_argument("SpaceGrid: dim must be >= 1");
}

double SpaceGrid::spacing() const {
    return kind == GridKind::line ? 2.0 * r_box / static_cast<double>(nodes - 1)
                                  : r_box / static_cast<double>(nodes - 1);
}

double SpaceGrid::node(std::size_t i) const {
    return kind == GridKind::line ? -r_box + spacing() * static_cast<double>(i)
                                  : spacing() * static_cast<double>(i);
}

double CumulantSolution::at(double t, double x) const {
    // nearest stored slice in time, linear interpolation in space
    std::size_t ti = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double d = std::abs(times[i] - t);
        if (d < best) {
            best = d;
            ti = i;
        }
    }
    const double pos = grid.kind == GridKind::radial ? std::abs(x) : x;
    const double h = grid.spacing();
    const double lo = grid.kind == GridKind::radial ? 0.0 : -grid.r_box;
    double s = (pos - lo) / h;
    s = std::clamp(s, 0.0, static_cast<double>(grid.nodes - 1));
    const std::size_t i0 = std::min(static_cast<std::size_t>(s), grid.nodes - 2);
    const double frac = s - static_cast<double>(i0);
    const auto u = slice(ti);
    return u[i0] * (1.0 - frac) + u[i0 + 1] * frac;
}

double CumulantSolution::sup_at_time(std::size_t ti) const {
    const auto u = slice(ti);
    return *std::max_element(u.begin(), u.end());
}

namespace {

struct Coeffs {
    std::vector<double> a;     // scalar diffusion coefficient per node
    std::vector<double> conv;  // full first-derivative coefficient per node
    std::vector<double> beta;
    std::vector<double> k;
};

Coeffs extract_coeffs(const ModelSpec& model, const SpaceGrid& grid) {
    const int d = model.dim();
    Coeffs c;
    c.a.resize(grid.nodes);
    c.conv.resize(grid.nodes);
    c.beta.resize(grid.nodes);
    c.k.resize(grid.nodes);
    if (grid.kind == GridKind::line) {
        if (d != 1) throw std::invalid_argument("cumulant: line grid needs a 1D model");
        std::vector<double> b(1);
        for (std::size_t i = 0; i < grid.nodes; ++i) {
            const double x = grid.node(i);
            const std::span<const double> xs(&x, 1);
            c.a[i] = model.diffusion().a().scalar_at(xs);
            model.diffusion().drift_at(xs, b);
            c.conv[i] = b[0];
            c.beta[i] = model.beta()(xs);
            c.k[i] = model.k()(xs);
        }
        return c;
    }
    if (d != grid.dim) throw std::invalid_argument("cumulant: radial grid dimension mismatch");
    if (!model.diffusion().is_radial() || !model.beta().is_radial() || !model.k().is_radial())
        throw std::invalid_argument("cumulant: radial grid needs radial coefficients");
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    std::vector<double> b(static_cast<std::size_t>(d), 0.0);
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        const double r = grid.node(i);
        x[0] = r;
        c.a[i] = model.diffusion().a().scalar_at(x);
        model.diffusion().drift_at(x, b);
        // radial drift component; the angular part vanishes for radial models
        const double br = b[0];
        c.beta[i] = model.beta()(x);
        c.k[i] = model.k()(x);
        c.conv[i] = r > 0.0 ? br + 0.5 * c.a[i] * static_cast<double>(d - 1) / r : 0.0;
    }
    return c;
}

struct Tridiag {
    std::vector<double> lower, diag, upper;
};

// rows of (I - dt L) for the implicit diffusion half
Tridiag build_implicit(const Coeffs& c, const SpaceGrid& grid, double dt) {
    const std::size_t n = grid.nodes;
    const double h = grid.spacing();
    Tridiag m;
    m.lower.assign(n, 0.0);
    m.diag.assign(n, 1.0);
    m.upper.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double diff = 0.5 * c.a[i] / (h * h);
        const double adv = c.conv[i] / (2.0 * h);
        m.lower[i] = -dt * (diff - adv);
        m.diag[i] = 1.0 + dt * 2.0 * diff;
        m.upper[i] = -dt * (diff + adv);
    }
    // left end
    if (grid.kind == GridKind::radial) {
        // symmetry at r = 0: L u(0) = (a d / h^2) (u1 - u0)
        const double g = c.a[0] * static_cast<double>(grid.dim) / (h * h);
        m.diag[0] = 1.0 + dt * g;
        m.upper[0] = -dt * g;
    } else if (grid.bc == BoundaryCondition::neumann_zero) {
        const double g = c.a[0] / (h * h);
        m.diag[0] = 1.0 + dt * g;
        m.upper[0] = -dt * g;
    }  // dirichlet: identity row
    // right end
    if (grid.bc == BoundaryCondition::neumann_zero) {
        const double g = c.a[n - 1] / (h * h);
        m.diag[n - 1] = 1.0 + dt * g;
        m.lower[n - 1] = -dt * g;
    }
    return m;
}

void thomas_solve(const Tridiag& m, std::vector<double>& rhs, std::vector<double>& scratch_c,
                  std::vector<double>& scratch_d) {
    const std::size_t n = rhs.size();
    scratch_c.resize(n);
    scratch_d.resize(n);
    scratch_c[0] = m.upper[0] / m.diag[0];
    scratch_d[0] = rhs[0] / m.diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = m.diag[i] - m.lower[i] * scratch_c[i - 1];
        scratch_c[i] = m.upper[i] / denom;
        scratch_d[i] = (rhs[i] - m.lower[i] * scratch_d[i - 1]) / denom;
    }
    rhs[n - 1] = scratch_d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = scratch_d[i] - scratch_c[i] * rhs[i + 1];
}

// explicit reaction flow du = (beta u - k u^2) dt with capped substeps
void reaction_flow(std::vector<double>& u, const Coeffs& c, double dt, double cap,
                   std::size_t& clips) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        double v = u[i];
        const double beta = c.beta[i];
        const double k = c.k[i];
        if (beta == 0.0 && k == 0.0) continue;
        double tau = 0.0;
        while (tau < dt) {
            const double rate = std::abs(beta) + 2.0 * k * v;
            double step = dt - tau;
            if (rate * step > cap) step = cap / rate;
            v += step * (beta * v - k * v * v);
            if (v < 0.0) {
                v = 0.0;
                ++clips;
            }
            tau += step;
        }
        u[i] = v;
    }
}

void apply_dirichlet(std::vector<double>& u, const SpaceGrid& grid) {
    if (grid.bc != BoundaryCondition::dirichlet_zero) return;
    if (grid.kind == GridKind::line) u.front() = 0.0;
    u.back() = 0.0;
}

}  // namespace

CumulantSolution solve_cumulant(const ModelSpec& model, const ScalarField& f, double horizon,
                                const SpaceGrid& grid, double dt, const SolverOptions& options) {
    grid.validate();
    if (!(dt > 0.0 && horizon >= dt)) throw std::invalid_argument("solve_cumulant: bad dt/horizon");
    const Coeffs coeffs = extract_coeffs(model, grid);
    const Tridiag matrix = build_implicit(coeffs, grid, dt);
    const std::size_t n = grid.nodes;
    const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));

    std::vector<double> u(n), scratch_c, scratch_d;
    double sup_f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        u[i] = grid.kind == GridKind::radial
                   ? f(std::span<const double>(&x, 1))
                   : f(std::span<const double>(&x, 1));
        if (u[i] < 0.0) throw std::invalid_argument("solve_cumulant: f must be >= 0 on the grid");
        sup_f = std::max(sup_f, u[i]);
    }
    apply_dirichlet(u, grid);

    CumulantSolution sol;
    sol.grid = grid;
    const std::size_t stride =
        std::max<std::size_t>(1, (steps + options.max_stored_slices - 2) /
                                     (options.max_stored_slices - 1));
    auto store = [&](double t) {
        sol.times.push_back(t);
        sol.values.insert(sol.values.end(), u.begin(), u.end());
    };
    store(0.0);

    const double upper_b = model.branching().beta_upper();
    for (std::size_t s = 1; s <= steps; ++s) {
        reaction_flow(u, coeffs, dt, options.reaction_step_cap, sol.clip_count);
        thomas_solve(matrix, u, scratch_c, scratch_d);
        apply_dirichlet(u, grid);
        const double t = static_cast<double>(s) * dt;
        const double bound =
            options.blowup_factor * std::exp(upper_b * t) * std::max(sup_f, 1e-12);
        for (double v : u) {
            if (!(v <= bound)) {
                std::ostringstream msg;
                msg << "solve_cumulant: step-size instability at t=" << t << " (sup u=" << v
                    << " exceeds " << bound << "); reduce dt";
                throw std::runtime_error(msg.str());
            }
        }
        if (s % stride == 0 || s == steps) store(t);
    }
    return sol;
}

namespace {

// radial grids never reach here; picard is a line-grid oracle
std::vector<double> picard_kernel(const ModelSpec& model, const SpaceGrid& grid, double dt) {
    const std::size_t n = grid.nodes;
    const double h = grid.spacing();
    std::vector<double> kmat(n * n);
    std::vector<double> b(1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        const std::span<const double> xs(&x, 1);
        model.diffusion().drift_at(xs, b);
        const double mean = x + b[0] * dt;
        const double var = model.diffusion().a().scalar_at(xs) * dt;
        const double inv = 1.0 / std::sqrt(2.0 * 3.14159265358979323846 * var);
        for (std::size_t j = 0; j < n; ++j) {
            const double z = grid.node(j) - mean;
            kmat[i * n + j] = h * inv * std::exp(-0.5 * z * z / var);
        }
    }
    return kmat;
}

void kernel_apply(const std::vector<double>& kmat, std::span<const double> in,
                  std::vector<double>& out) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = kmat.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * in[j];
        out[i] = s;
    }
}

}  // namespace

CumulantSolution picard_solve(const ModelSpec& model, const ScalarField& f, double horizon,
                              const SpaceGrid& grid, double dt, std::size_t max_iterations) {
    grid.validate();
    if (grid.kind != GridKind::line || grid.bc != BoundaryCondition::dirichlet_zero)
        throw std::invalid_argument("picard_solve: line grid with dirichlet_zero only");
    if (horizon > 5.0 + 1e-12) throw std::invalid_argument("picard_solve: horizon <= 5 (oracle scale)");
    if (max_iterations < 10) throw std::invalid_argument("picard_solve: need iterations >= 10");
    const std::size_t n = grid.nodes;
    const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const Coeffs coeffs = extract_coeffs(model, grid);
    const std::vector<double> kmat = picard_kernel(model, grid, dt);

    // linear term F[j] = K^j f
    std::vector<std::vector<double>> lin(steps + 1, std::vector<double>(n));
    double sup_f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.node(i);
        lin[0][i] = f(std::span<const double>(&x, 1));
        if (lin[0][i] < 0.0) throw std::invalid_argument("picard_solve: f must be >= 0");
        sup_f = std::max(sup_f, lin[0][i]);
    }
    for (std::size_t j = 1; j <= steps; ++j) kernel_apply(kmat, lin[j - 1], lin[j]);

    std::vector<std::vector<double>> u(steps + 1, std::vector<double>(n, 0.0));
    u[0] = lin[0];
    auto reaction = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = -coeffs.beta[i] * v[i] + coeffs.k[i] * v[i] * v[i];
    };

    // window length from the local Lipschitz scale of the nonlinearity
    double k_sup = 0.0, beta_sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        k_sup = std::max(k_sup, coeffs.k[i]);
        beta_sup = std::max(beta_sup, std::abs(coeffs.beta[i]));
    }
    const double u_scale =
        sup_f * std::exp(std::max(model.branching().beta_upper(), 0.0) * horizon);
    const double rate = beta_sup + 2.0 * k_sup * std::max(u_scale, 1e-12);
    std::size_t window = std::max<std::size_t>(
        1, std::min<double>(static_cast<double>(steps), std::floor(0.3 / (dt * rate)) + 1.0));

    std::vector<std::vector<double>> psi(steps + 1, std::vector<double>(n, 0.0));
    std::vector<double> cvec(n), pvec(n), tmp(n), unew(n);
    std::size_t done = 0;  // slices [0..done] are converged
    while (done < steps) {
        const std::size_t hi = std::min(steps, done + window);
        bool converged = false;
        for (std::size_t it = 0; it < max_iterations; ++it) {
            for (std::size_t j = 0; j <= hi; ++j) reaction(u[j], psi[j]);
            double diff = 0.0;
            std::fill(cvec.begin(), cvec.end(), 0.0);
            pvec = psi[0];
            for (std::size_t j = 1; j <= hi; ++j) {
                for (std::size_t i = 0; i < n; ++i) tmp[i] = cvec[i] + psi[j - 1][i];
                kernel_apply(kmat, tmp, cvec);
                kernel_apply(kmat, pvec, tmp);
                std::swap(pvec, tmp);
                if (j <= done) continue;
                for (std::size_t i = 0; i < n; ++i) {
                    const double integral = dt * (0.5 * psi[j][i] + cvec[i] - 0.5 * pvec[i]);
                    unew[i] = lin[j][i] - integral;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    diff = std::max(diff, std::abs(unew[i] - u[j][i]));
                    u[j][i] = unew[i];
                }
            }
            if (diff < 1e-6) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            if (window == 1)
                throw std::runtime_error("picard_solve: no convergence within iteration budget");
            window = std::max<std::size_t>(1, window / 2);
            continue;
        }
        done = hi;
    }

    CumulantSolution sol;
    sol.grid = grid;
    sol.times.resize(steps + 1);
    sol.values.reserve((steps + 1) * n);
    for (std::size_t j = 0; j <= steps; ++j) {
        sol.times[j] = static_cast<double>(j) * dt;
        sol.values.insert(sol.values.end(), u[j].begin(), u[j].end());
    }
    return sol;
}

ExtinctionResult extinction_probability(const ModelSpec& model, const InitialMeasure& mu,
                                        double t, const std::vector<double>& theta_sequence,
                                        const SpaceGrid& grid, double dt) {
    if (theta_sequence.size() < 3)
        throw std::invalid_argument("extinction_probability: need >= 3 thetas");
    if (!std::is_sorted(theta_sequence.begin(), theta_sequence.end()))
        throw std::invalid_argument("extinction_probability: thetas must increase");
    if (theta_sequence.back() < 1e3)
        throw std::invalid_argument("extinction_probability: largest theta must be >= 1e3");

    ExtinctionResult result;
    result.thetas = theta_sequence;
    std::vector<double> prev_final;
    for (double theta : theta_sequence) {
        CumulantSolution sol =
            solve_cumulant(model, ScalarField::constant(theta), t, grid, dt);
        const auto final_slice = sol.slice(sol.times.size() - 1);
        if (!prev_final.empty()) {
            for (std::size_t i = 0; i < final_slice.size(); ++i)
                if (final_slice[i] < prev_final[i] - 1e-6 * std::max(1.0, prev_final[i]))
                    result.monotone_in_theta = false;
        }
        prev_final.assign(final_slice.begin(), final_slice.end());
        double integral = 0.0;
        for (const auto& atom : mu.atoms()) {
            const double x = grid.kind == GridKind::radial ? norm(atom.position)
                                                           : atom.position[0];
            integral += atom.mass * sol.at(t, x);
        }
        result.mu_integrals.push_back(integral);
    }
    const std::size_t m = theta_sequence.size();
    const double t_lo = theta_sequence[m - 2], t_hi = theta_sequence[m - 1];
    const double i_lo = result.mu_integrals[m - 2], i_hi = result.mu_integrals[m - 1];
    const double extrapolated = (t_hi * i_hi - t_lo * i_lo) / (t_hi - t_lo);
    result.probability_raw = std::clamp(std::exp(-i_hi), 0.0, 1.0);
    result.probability = std::clamp(std::exp(-extrapolated), 0.0, 1.0);
    return result;
}

UchResult solve_uch(const ModelSpec& model, const ScalarField& h, double c, double horizon,
                    const SpaceGrid& grid, double dt) {
    if (!(c > 0.0)) throw std::invalid_argument("solve_uch: c must be > 0");
    for (std::size_t i = 0; i < grid.nodes; ++i) {
        const double x = grid.node(i);
        if (!(h(std::span<const double>(&x, 1)) > 0.0))
            throw std::invalid_argument("solve_uch: h not positive on the grid");
    }
    UchResult result;
    result.solution = solve_cumulant(model, h.scaled(c), horizon, grid, dt);
    const CumulantSolution& sol = result.solution;
    const std::size_t nt = sol.times.size();
    for (std::size_t ti = 1; ti < nt; ++ti) {
        const auto prev = sol.slice(ti - 1);
        const auto cur = sol.slice(ti);
        for (std::size_t i = 0; i < grid.nodes; ++i)
            result.max_time_increment = std::max(result.max_time_increment, cur[i] - prev[i]);
    }
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const auto cur = sol.slice(ti);
        for (std::size_t i = 0; i < grid.nodes; ++i) {
            const double x = grid.node(i);
            const double bound = c * h(std::span<const double>(&x, 1));
            result.max_bound_violation = std::max(result.max_bound_violation, cur[i] - bound);
        }
    }
    const double probe = 0.0;
    const double u_half = sol.at(horizon / 2.0, probe);
    const double u_full = sol.at(horizon, probe);
    result.tail_ratio = u_half > 0.0 ? u_full / u_half : 0.0;
    result.classification = result.tail_ratio >= 0.8 ? UchLimit::all_positive : UchLimit::all_zero;
    return result;
}

DomainMonotoneReport domain_monotone_check(const ModelSpec& model, const ScalarField& f,
                                           double horizon, const std::vector<double>& radii,
                                           std::size_t nodes_at_largest, double dt) {
    if (radii.size() < 2) throw std::invalid_argument("domain_monotone_check: need >= 2 radii");
    if (!std::is_sorted(radii.begin(), radii.end()))
        throw std::invalid_argument("domain_monotone_check: radii must increase");
    const bool radial = model.dim() > 1;
    const double r_max = radii.back();
    const std::size_t master_intervals = nodes_at_largest - 1;
    const double h = radial ? r_max / static_cast<double>(master_intervals)
                            : 2.0 * r_max / static_cast<double>(master_intervals);

    DomainMonotoneReport report;
    report.min_increment = std::numeric_limits<double>::infinity();
    for (double r : radii) {
        // snap the radius onto the master spacing so nodes align across runs
        const std::size_t m = std::max<std::size_t>(
            32, static_cast<std::size_t>(std::llround(r / h)));
        const double r_snap = static_cast<double>(m) * h;
        SpaceGrid grid = radial ? SpaceGrid::radial(model.dim(), r_snap, m + 1)
                                : SpaceGrid::line(r_snap, 2 * m + 1);
        report.radii.push_back(r_snap);
        report.per_radius.push_back(solve_cumulant(model, f, horizon, grid, dt));
    }
    // pairwise comparison on shared nodes (sub-grids are centered)
    for (std::size_t p = 1; p < report.per_radius.size(); ++p) {
        const CumulantSolution& small = report.per_radius[p - 1];
        const CumulantSolution& big = report.per_radius[p];
        const std::size_t offset = radial ? 0 : (big.grid.nodes - small.grid.nodes) / 2;
        double sup_diff = 0.0;
        for (std::size_t ti = 0; ti < small.times.size() && ti < big.times.size(); ++ti) {
            const auto us = small.slice(ti);
            const auto ub = big.slice(ti);
            for (std::size_t i = 0; i < small.grid.nodes; ++i) {
                const double diff = ub[i + offset] - us[i];
                report.min_increment = std::min(report.min_increment, diff);
                sup_diff = std::max(sup_diff, std::abs(diff));
            }
        }
        if (p + 1 == report.per_radius.size()) report.sup_diff_last_two = sup_diff;
    }
    return report;
}

// ---------------- serialization ----------------

namespace {
template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("CUM1: truncated stream");
    return v;
}
}  // namespace

void write_cum1(std::ostream& os, const CumulantSolution& sol) {
    os.write("CUM1", 4);
    put<std::uint32_t>(os, 1);  // version
    put<std::uint8_t>(os, sol.grid.kind == GridKind::radial ? 1 : 0);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(sol.grid.dim));
    put<double>(os, sol.grid.r_box);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(sol.grid.nodes));
    put<std::uint8_t>(os, sol.grid.bc == BoundaryCondition::neumann_zero ? 1 : 0);
    put<std::uint64_t>(os, sol.times.size());
    put<std::uint64_t>(os, sol.clip_count);
    os.write(reinterpret_cast<const char*>(sol.times.data()),
             static_cast<std::streamsize>(sol.times.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(sol.values.data()),
             static_cast<std::streamsize>(sol.values.size() * sizeof(double)));
}

CumulantSolution read_cum1(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CUM1", 4) != 0) throw std::runtime_error("CUM1: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw std::runtime_error("CUM1: unsupported version");
    CumulantSolution sol;
    sol.grid.kind = get<std::uint8_t>(is) == 1 ? GridKind::radial : GridKind::line;
    sol.grid.dim = static_cast<int>(get<std::uint32_t>(is));
    sol.grid.r_box = get<double>(is);
    sol.grid.nodes = get<std::uint32_t>(is);
    sol.grid.bc =
        get<std::uint8_t>(is) == 1 ? BoundaryCondition::neumann_zero : BoundaryCondition::dirichlet_zero;
    const auto n_times = get<std::uint64_t>(is);
    sol.clip_count = get<std::uint64_t>(is);
    sol.times.resize(n_times);
    sol.values.resize(n_times * sol.grid.nodes);
    is.read(reinterpret_cast<char*>(sol.times.data()),
            static_cast<std::streamsize>(sol.times.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(sol.values.data()),
            static_cast<std::streamsize>(sol.values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("CUM1: truncated stream");
    return sol;
}

void write_cum1_file(const std::string& path, const CumulantSolution& sol) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_cum1(os, sol);
}

CumulantSolution read_cum1_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_cum1(is);
}

void write_csv(std::ostream& os, const CumulantSolution& sol) {
    os << "t,x,u\n";
    char buf[96];
    for (std::size_t ti = 0; ti < sol.times.size(); ++ti) {
        const auto u = sol.slice(ti);
        for (std::size_t i = 0; i < sol.grid.nodes; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sol.times[ti],
                          sol.grid.node(i), u[i]);
            os << buf;
        }
    }
}

}  // namespace superdiff::cumulant
