#include "superdiff/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace superdiff {

using nlohmann::json;

std::string to_string(FieldKind k) {
    switch (k) {
        case FieldKind::constant: return "constant";
        case FieldKind::ball_indicator: return "ball_indicator";
        case FieldKind::exponential: return "exponential";
        case FieldKind::two_sided_exponential: return "two_sided_exponential";
        case FieldKind::gaussian: return "gaussian";
        case FieldKind::power_tail: return "power_tail";
        case FieldKind::radial_table: return "radial_table";
    }
    return "constant";
}

FieldKind field_kind_from_string(const std::string& s) {
    if (s == "constant") return FieldKind::constant;
    if (s == "ball_indicator") return FieldKind::ball_indicator;
    if (s == "exponential") return FieldKind::exponential;
    if (s == "two_sided_exponential") return FieldKind::two_sided_exponential;
    if (s == "gaussian") return FieldKind::gaussian;
    if (s == "power_tail") return FieldKind::power_tail;
    if (s == "radial_table") return FieldKind::radial_table;
    throw std::invalid_argument("unknown field kind: " + s);
}

ScalarField ScalarField::constant(double value) {
    ScalarField f;
    f.kind_ = FieldKind::constant;
    f.a_ = value;
    return f;
}

ScalarField ScalarField::ball_indicator(double radius, double level) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball_indicator: radius must be > 0");
    ScalarField f;
    f.kind_ = FieldKind::ball_indicator;
    f.a_ = radius;
    f.b_ = level;
    return f;
}

ScalarField ScalarField::exponential(double rate, double amplitude) {
    ScalarField f;
    f.kind_ = FieldKind::exponential;
    f.a_ = rate;
    f.b_ = amplitude;
    if (rate == 0.0) return constant(amplitude);
    return f;
}

ScalarField ScalarField::two_sided_exponential(double rate, double amplitude) {
    if (!(rate >= 0.0)) throw std::invalid_argument("two_sided_exponential: rate must be >= 0");
    if (rate == 0.0) return constant(amplitude);
    ScalarField f;
    f.kind_ = FieldKind::two_sided_exponential;
    f.a_ = rate;
    f.b_ = amplitude;
    return f;
}

ScalarField ScalarField::gaussian(double rate, double amplitude) {
    if (!(rate >= 0.0)) throw std::invalid_argument("gaussian: rate must be >= 0");
    if (rate == 0.0) return constant(amplitude);
    ScalarField f;
    f.kind_ = FieldKind::gaussian;
    f.a_ = rate;
    f.b_ = amplitude;
    return f;
}

ScalarField ScalarField::power_tail(double rho, double amplitude) {
    if (!(rho > 0.0)) throw std::invalid_argument("power_tail: rho must be > 0");
    ScalarField f;
    f.kind_ = FieldKind::power_tail;
    f.a_ = rho;
    f.b_ = amplitude;
    return f;
}

ScalarField ScalarField::radial_table(std::vector<double> r, std::vector<double> v) {
    if (r.size() != v.size() || r.size() < 2)
        throw std::invalid_argument("radial_table: need matching r/v arrays with >= 2 entries");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw std::invalid_argument("radial_table: radii must increase");
    if (r.front() < 0.0) throw std::invalid_argument("radial_table: radii must be >= 0");
    ScalarField f;
    f.kind_ = FieldKind::radial_table;
    f.table_r_ = std::move(r);
    f.table_v_ = std::move(v);
    return f;
}

double ScalarField::operator()(std::span<const double> x) const {
    switch (kind_) {
        case FieldKind::constant:
            return a_;
        case FieldKind::ball_indicator: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s <= a_ * a_ ? b_ : 0.0;
        }
        case FieldKind::exponential:
            return b_ * std::exp(a_ * x[0]);
        case FieldKind::two_sided_exponential:
            return b_ * std::exp(-a_ * norm(x));
        case FieldKind::gaussian: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return b_ * std::exp(-a_ * s);
        }
        case FieldKind::power_tail: {
            const double r = norm(x);
            return r <= 1.0 ? b_ : b_ * std::pow(r, -a_);
        }
        case FieldKind::radial_table: {
            const double r = norm(x);
            if (r <= table_r_.front()) return table_v_.front();
            if (r >= table_r_.back()) return table_v_.back();
            const auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
            const std::size_t i = static_cast<std::size_t>(it - table_r_.begin());
            const double t = (r - table_r_[i - 1]) / (table_r_[i] - table_r_[i - 1]);
            return table_v_[i - 1] + t * (table_v_[i] - table_v_[i - 1]);
        }
    }
    return 0.0;
}

double ScalarField::upper_bound() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case FieldKind::constant: return a_;
        case FieldKind::ball_indicator: return std::max(b_, 0.0);
        case FieldKind::exponential: return b_ > 0.0 ? inf : 0.0;
        case FieldKind::two_sided_exponential:
        case FieldKind::gaussian:
        case FieldKind::power_tail: return std::max(b_, 0.0);
        case FieldKind::radial_table: return *std::max_element(table_v_.begin(), table_v_.end());
    }
    return inf;
}

double ScalarField::lower_bound() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case FieldKind::constant: return a_;
        case FieldKind::ball_indicator: return std::min(b_, 0.0);
        case FieldKind::exponential: return b_ < 0.0 ? -inf : 0.0;
        case FieldKind::two_sided_exponential:
        case FieldKind::gaussian:
        case FieldKind::power_tail: return std::min(b_, 0.0);
        case FieldKind::radial_table: return *std::min_element(table_v_.begin(), table_v_.end());
    }
    return -inf;
}

bool ScalarField::nonnegative() const { return lower_bound() >= 0.0; }

ScalarField ScalarField::scaled(double factor) const {
    ScalarField f = *this;
    switch (kind_) {
        case FieldKind::constant: f.a_ *= factor; break;
        case FieldKind::ball_indicator: f.b_ *= factor; break;
        case FieldKind::exponential:
        case FieldKind::two_sided_exponential:
        case FieldKind::gaussian:
        case FieldKind::power_tail: f.b_ *= factor; break;
        case FieldKind::radial_table:
            for (auto& v : f.table_v_) v *= factor;
            break;
    }
    return f;
}

std::optional<ScalarField> ScalarField::times(const ScalarField& other) const {
    if (kind_ == FieldKind::constant) return other.scaled(a_);
    if (other.kind_ == FieldKind::constant) return scaled(other.a_);
    if (kind_ == other.kind_) {
        switch (kind_) {
            case FieldKind::exponential:
                return exponential(a_ + other.a_, b_ * other.b_);
            case FieldKind::two_sided_exponential:
                return two_sided_exponential(a_ + other.a_, b_ * other.b_);
            case FieldKind::gaussian:
                return gaussian(a_ + other.a_, b_ * other.b_);
            default: break;
        }
    }
    return std::nullopt;
}

bool ScalarField::same_family_as(const ScalarField& other, double tol) const {
    if (kind_ != other.kind_) return false;
    if (std::abs(a_ - other.a_) > tol || std::abs(b_ - other.b_) > tol) return false;
    if (table_r_.size() != other.table_r_.size()) return false;
    for (std::size_t i = 0; i < table_r_.size(); ++i) {
        if (std::abs(table_r_[i] - other.table_r_[i]) > tol) return false;
        if (std::abs(table_v_[i] - other.table_v_[i]) > tol) return false;
    }
    return true;
}

json ScalarField::to_json() const {
    json p;
    switch (kind_) {
        case FieldKind::constant: p["value"] = a_; break;
        case FieldKind::ball_indicator:
            p["radius"] = a_;
            p["level"] = b_;
            break;
        case FieldKind::exponential:
        case FieldKind::two_sided_exponential:
        case FieldKind::gaussian:
            p["rate"] = a_;
            p["amplitude"] = b_;
            break;
        case FieldKind::power_tail:
            p["rho"] = a_;
            p["amplitude"] = b_;
            break;
        case FieldKind::radial_table:
            p["r"] = table_r_;
            p["v"] = table_v_;
            break;
    }
    return json{{"kind", to_string(kind_)}, {"params", p}};
}

ScalarField ScalarField::from_json(const json& j) {
    const FieldKind kind = field_kind_from_string(j.at("kind").get<std::string>());
    const json& p = j.at("params");
    switch (kind) {
        case FieldKind::constant: return constant(p.at("value").get<double>());
        case FieldKind::ball_indicator:
            return ball_indicator(p.at("radius").get<double>(), p.at("level").get<double>());
        case FieldKind::exponential:
            return exponential(p.at("rate").get<double>(), p.value("amplitude", 1.0));
        case FieldKind::two_sided_exponential:
            return two_sided_exponential(p.at("rate").get<double>(), p.value("amplitude", 1.0));
        case FieldKind::gaussian:
            return gaussian(p.at("rate").get<double>(), p.value("amplitude", 1.0));
        case FieldKind::power_tail:
            return power_tail(p.at("rho").get<double>(), p.value("amplitude", 1.0));
        case FieldKind::radial_table:
            return radial_table(p.at("r").get<std::vector<double>>(),
                                p.at("v").get<std::vector<double>>());
    }
    throw std::invalid_argument("unreachable field kind");
}

bool nonnegative_on_probe_grid(const ScalarField& f, int dim) {
    if (!f.nonnegative()) return false;
    // up to 10^4 probe points on [-20, 20]^d
    int per_axis = 10000;
    for (int d = 1; d < dim; ++d) per_axis = std::max(2, static_cast<int>(std::pow(10000.0, 1.0 / dim)));
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    const double h = 40.0 / (per_axis - 1);
    for (;;) {
        for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = -20.0 + h * idx[static_cast<std::size_t>(d)];
        if (f(x) < 0.0) return false;
        int d = 0;
        for (; d < dim; ++d) {
            if (++idx[static_cast<std::size_t>(d)] < per_axis) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d == dim) break;
    }
    return true;
}

// ---------------- drift ----------------

DriftSpec DriftSpec::constant(std::vector<double> v) {
    DriftSpec d;
    d.kind = DriftKind::constant;
    d.shift = std::move(v);
    return d;
}

DriftSpec DriftSpec::linear(double gamma) {
    DriftSpec d;
    d.kind = DriftKind::linear;
    d.gamma = gamma;
    return d;
}

DriftSpec DriftSpec::affine(std::vector<double> v, double gamma) {
    DriftSpec d;
    d.kind = DriftKind::affine;
    d.shift = std::move(v);
    d.gamma = gamma;
    return d;
}

void DriftSpec::eval(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = 0.0;
        if (i < shift.size()) v += shift[i];
        v += gamma * x[i];
        out[i] = v;
    }
}

double DriftSpec::max_magnitude_probe(int dim, double box) const {
    double s = 0.0;
    for (double v : shift) s += v * v;
    return std::sqrt(s) + std::abs(gamma) * box * std::sqrt(static_cast<double>(dim));
}

json DriftSpec::to_json() const {
    json p;
    switch (kind) {
        case DriftKind::zero: return json{{"kind", "zero"}, {"params", json::object()}};
        case DriftKind::constant: p["v"] = shift; return json{{"kind", "constant"}, {"params", p}};
        case DriftKind::linear: p["gamma"] = gamma; return json{{"kind", "linear"}, {"params", p}};
        case DriftKind::affine:
            p["v"] = shift;
            p["gamma"] = gamma;
            return json{{"kind", "affine"}, {"params", p}};
        case DriftKind::grad_q: return json{{"kind", "grad_q"}, {"params", json::object()}};
    }
    return json{{"kind", "zero"}, {"params", json::object()}};
}

DriftSpec DriftSpec::from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const json p = j.value("params", json::object());
    if (kind == "zero") return zero();
    if (kind == "constant") return constant(p.at("v").get<std::vector<double>>());
    if (kind == "linear") return linear(p.at("gamma").get<double>());
    if (kind == "affine")
        return affine(p.at("v").get<std::vector<double>>(), p.at("gamma").get<double>());
    if (kind == "grad_q") {
        DriftSpec d;
        d.kind = DriftKind::grad_q;
        return d;
    }
    throw std::invalid_argument("unknown drift kind: " + kind);
}

json QForm::to_json() const { return json{{"c0", c0}, {"linear", lin}, {"quad", quad}}; }

QForm QForm::from_json(const json& j) {
    QForm q;
    q.c0 = j.value("c0", 0.0);
    q.lin = j.value("linear", std::vector<double>{});
    q.quad = j.value("quad", 0.0);
    return q;
}

// ---------------- diffusion matrix ----------------

namespace {
// Jacobi eigendecomposition for small symmetric matrices.
void jacobi_eigen(int n, std::vector<double> a, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) eigvecs[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return eigvecs[static_cast<std::size_t>(i) * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = A(i, p), aiq = A(i, q);
                    A(i, p) = c * aip - s * aiq;
                    A(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = A(p, i), aqi = A(q, i);
                    A(p, i) = c * api - s * aqi;
                    A(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = V(i, p), viq = V(i, q);
                    V(i, p) = c * vip - s * viq;
                    V(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    eigvals.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eigvals[static_cast<std::size_t>(i)] = A(i, i);
}
}  // namespace

DiffusionMatrix DiffusionMatrix::identity() { return DiffusionMatrix(); }

DiffusionMatrix DiffusionMatrix::constant_spd(int dim, std::vector<double> matrix) {
    if (static_cast<int>(matrix.size()) != dim * dim)
        throw std::invalid_argument("constant_spd: matrix must be d x d");
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(matrix[static_cast<std::size_t>(i) * dim + j] -
                         matrix[static_cast<std::size_t>(j) * dim + i]) > 1e-12)
                throw std::invalid_argument("constant_spd: matrix must be symmetric");
    DiffusionMatrix m;
    m.kind_ = DiffusionMatrixKind::constant_spd;
    m.dim_ = dim;
    m.a_ = matrix;
    std::vector<double> evals, evecs;
    jacobi_eigen(dim, matrix, evals, evecs);
    m.eig_lo_ = *std::min_element(evals.begin(), evals.end());
    m.eig_hi_ = *std::max_element(evals.begin(), evals.end());
    if (!(m.eig_lo_ > 0.0))
        throw std::invalid_argument("constant_spd: matrix is not positive definite");
    // sigma = V diag(sqrt(lambda)) V^T
    m.sigma_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k)
                s += evecs[static_cast<std::size_t>(i) * dim + k] *
                     std::sqrt(evals[static_cast<std::size_t>(k)]) *
                     evecs[static_cast<std::size_t>(j) * dim + k];
            m.sigma_[static_cast<std::size_t>(i) * dim + j] = s;
        }
    m.scalar_constant_ = true;
    for (int i = 0; i < dim && m.scalar_constant_; ++i)
        for (int j = 0; j < dim; ++j) {
            const double want = i == j ? matrix[0] : 0.0;
            if (std::abs(matrix[static_cast<std::size_t>(i) * dim + j] - want) > 1e-12) {
                m.scalar_constant_ = false;
                break;
            }
        }
    return m;
}

DiffusionMatrix DiffusionMatrix::radial_scalar(ScalarField s) {
    if (!s.is_radial()) throw std::invalid_argument("radial_scalar: field must be radial");
    if (!(s.lower_bound() > 0.0) && s.kind() != FieldKind::radial_table)
        throw std::invalid_argument("radial_scalar: field must be strictly positive");
    DiffusionMatrix m;
    m.kind_ = DiffusionMatrixKind::radial_scalar;
    m.radial_s_ = std::move(s);
    // ellipticity probe on |x| in [0, 20]
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double r = 20.0 * i / 400.0;
        const double v = m.radial_s_.at1d(r);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo > 0.0)) throw std::invalid_argument("radial_scalar: probe found non-positive a(x)");
    m.eig_lo_ = lo;
    m.eig_hi_ = hi;
    return m;
}

void DiffusionMatrix::sigma_times(std::span<const double> x, std::span<const double> z,
                                  std::span<double> out) const {
    switch (kind_) {
        case DiffusionMatrixKind::identity:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = z[i];
            return;
        case DiffusionMatrixKind::constant_spd: {
            const int d = dim_;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += sigma_[static_cast<std::size_t>(i) * d + j] * z[static_cast<std::size_t>(j)];
                out[static_cast<std::size_t>(i)] = s;
            }
            return;
        }
        case DiffusionMatrixKind::radial_scalar: {
            const double root = std::sqrt(radial_s_(x));
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = root * z[i];
            return;
        }
    }
}

void DiffusionMatrix::apply(std::span<const double> x, std::span<const double> v,
                            std::span<double> out) const {
    switch (kind_) {
        case DiffusionMatrixKind::identity:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i];
            return;
        case DiffusionMatrixKind::constant_spd: {
            const int d = dim_;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += a_[static_cast<std::size_t>(i) * d + j] * v[static_cast<std::size_t>(j)];
                out[static_cast<std::size_t>(i)] = s;
            }
            return;
        }
        case DiffusionMatrixKind::radial_scalar: {
            const double s = radial_s_(x);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * v[i];
            return;
        }
    }
}

double DiffusionMatrix::scalar_at(std::span<const double> x) const {
    switch (kind_) {
        case DiffusionMatrixKind::identity: return 1.0;
        case DiffusionMatrixKind::constant_spd:
            if (!scalar_constant_)
                throw std::invalid_argument("scalar_at: diffusion matrix is not scalar");
            return a_[0];
        case DiffusionMatrixKind::radial_scalar: return radial_s_(x);
    }
    return 1.0;
}

void DiffusionMatrix::eigen_range(int, double& lo, double& hi) const {
    lo = eig_lo_;
    hi = eig_hi_;
}

json DiffusionMatrix::to_json() const {
    switch (kind_) {
        case DiffusionMatrixKind::identity:
            return json{{"kind", "identity"}, {"params", json::object()}};
        case DiffusionMatrixKind::constant_spd:
            return json{{"kind", "constant_spd"}, {"params", json{{"matrix", a_}}}};
        case DiffusionMatrixKind::radial_scalar:
            return json{{"kind", "radial_scalar"}, {"params", json{{"s", radial_s_.to_json()}}}};
    }
    return json{{"kind", "identity"}, {"params", json::object()}};
}

DiffusionMatrix DiffusionMatrix::from_json(const json& j, int dim) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") return identity();
    if (kind == "constant_spd")
        return constant_spd(dim, j.at("params").at("matrix").get<std::vector<double>>());
    if (kind == "radial_scalar")
        return radial_scalar(ScalarField::from_json(j.at("params").at("s")));
    throw std::invalid_argument("unknown diffusion matrix kind: " + kind);
}

}  // namespace superdiff
