#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace superdiff {

/// One Monte Carlo estimate. std_error is sample standard deviation / sqrt(n).
struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    bool truncated = false;   // horizon cut applied
    bool underflow = false;   // all weights vanished in log space

    std::string flags() const {
        std::string s;
        if (truncated) s += "truncated";
        if (underflow) s += s.empty() ? "underflow" : "|underflow";
        return s;
    }
};

/// Exponential-rate fit: log(value) regressed on t over [window_lo, window_hi].
struct GrowthEstimate {
    double rate = 0.0;
    double half_width = 0.0;  // 95% CI half-width of the slope
    double window_lo = 0.0;
    double window_hi = 0.0;
    double r_squared = 1.0;

    bool contains(double target) const {
        return target >= rate - half_width && target <= rate + half_width;
    }
};

enum class Divergence { finite, divergent, inconclusive };

struct DivergenceVerdict {
    Divergence verdict = Divergence::inconclusive;
    std::vector<std::pair<double, MCEstimate>> trace;  // (horizon, estimate), horizons increasing
};

inline const char* to_string(Divergence d) {
    switch (d) {
        case Divergence::finite: return "finite";
        case Divergence::divergent: return "divergent";
        default: return "inconclusive";
    }
}

namespace stats {

/// Order-independent sum: pairwise reduction over the index order.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

/// Mean and standard error of raw samples.
inline MCEstimate summarize(const std::vector<double>& samples) {
    MCEstimate e;
    e.samples = samples.size();
    if (samples.empty()) return e;
    e.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        std::vector<double> sq(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double d = samples[i] - e.mean;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(samples.size() - 1);
        e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    }
    return e;
}

/// Mean and standard error of exp(log_values); -inf entries are exact zeros.
/// The shift by the max keeps the reduction stable for strongly negative
/// Feynman-Kac log-weights.
inline MCEstimate summarize_exp_log(const std::vector<double>& log_values) {
    MCEstimate e;
    e.samples = log_values.size();
    if (log_values.empty()) return e;
    double m = -std::numeric_limits<double>::infinity();
    for (double lv : log_values) m = std::max(m, lv);
    if (!std::isfinite(m)) {  // every sample is zero
        e.underflow = true;
        return e;
    }
    std::vector<double> scaled(log_values.size());
    for (std::size_t i = 0; i < log_values.size(); ++i) {
        const double lv = log_values[i];
        scaled[i] = std::isfinite(lv) ? std::exp(lv - m) : 0.0;
    }
    MCEstimate inner = summarize(scaled);
    const double scale = std::exp(m);
    e.mean = scale * inner.mean;
    e.std_error = scale * inner.std_error;
    return e;
}

/// Sample variance together with its own standard error (via the fourth
/// central moment).
struct VarianceEstimate {
    double variance = 0.0;
    double std_error = 0.0;
};

inline VarianceEstimate variance_with_se(const std::vector<double>& samples) {
    VarianceEstimate v;
    const std::size_t n = samples.size();
    if (n < 2) return v;
    const double mean = pairwise_sum(samples) / static_cast<double>(n);
    std::vector<double> d2(n), d4(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = pairwise_sum(d2) / static_cast<double>(n);
    const double m4 = pairwise_sum(d4) / static_cast<double>(n);
    v.variance = m2 * static_cast<double>(n) / static_cast<double>(n - 1);
    const double nn = static_cast<double>(n);
    const double var_of_var = (m4 - (nn - 3.0) / (nn - 1.0) * m2 * m2) / nn;
    v.std_error = var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
    return v;
}

inline double binomial_se(double p_hat, std::size_t n) {
    if (n == 0) return 0.0;
    const double v = p_hat * (1.0 - p_hat) / static_cast<double>(n);
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

/// Quantile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

/// Two-sided 97.5% Student-t quantile for small regression dof.
inline double t_quantile_975(std::size_t dof) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                   2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                   2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                   2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof == 0) return 12.706;
    if (dof <= 30) return table[dof - 1];
    return 1.96;
}

/// OLS of log(value) on t. Throws on non-positive values inside the window.
inline GrowthEstimate fit_exponential(const std::vector<std::pair<double, double>>& series,
                                      double window_lo, double window_hi) {
    std::vector<double> ts, ys;
    for (const auto& [t, v] : series) {
        if (t < window_lo - 1e-12 || t > window_hi + 1e-12) continue;
        if (!(v > 0.0)) throw std::invalid_argument("fit_exponential: non-positive value in window");
        ts.push_back(t);
        ys.push_back(std::log(v));
    }
    if (ts.size() < 2) throw std::invalid_argument("fit_exponential: need at least 2 points in window");
    const std::size_t n = ts.size();
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tm += ts[i];
        ym += ys[i];
    }
    tm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = ts[i] - tm;
        const double dy = ys[i] - ym;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_exponential: degenerate time window");
    GrowthEstimate g;
    g.window_lo = window_lo;
    g.window_hi = window_hi;
    g.rate = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - ym - g.rate * (ts[i] - tm);
        ssr += r * r;
    }
    if (n > 2) {
        const double se = std::sqrt(std::max(0.0, ssr / static_cast<double>(n - 2)) / sxx);
        g.half_width = t_quantile_975(n - 2) * se;
    } else {
        g.half_width = 0.0;
    }
    g.r_squared = syy > 1e-300 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    return g;
}

}  // namespace stats
}  // namespace superdiff
