#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace superdiff {

using Point = std::vector<double>;

inline double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// ============================================================
// Scalar coefficient fields.
//
// Coefficients are closed-form analytic families rather than arbitrary
// callbacks: this keeps sign analysis, global bounds, products (needed by
// the h-transform) and serialization exact.
// ============================================================

enum class FieldKind {
    constant,                // value
    ball_indicator,          // level inside |x| <= radius, 0 outside
    exponential,             // amplitude * exp(rate * x1)
    two_sided_exponential,   // amplitude * exp(-rate * |x|)
    gaussian,                // amplitude * exp(-rate * |x|^2)
    power_tail,              // amplitude * |x|^-rho outside the unit ball, amplitude inside
    radial_table,            // linear interpolation in |x|, clamped at the ends
};

std::string to_string(FieldKind k);
FieldKind field_kind_from_string(const std::string& s);

class ScalarField {
  public:
    ScalarField() : kind_(FieldKind::constant), a_(0.0), b_(0.0) {}

    static ScalarField constant(double value);
    static ScalarField ball_indicator(double radius, double level);
    static ScalarField exponential(double rate, double amplitude = 1.0);
    static ScalarField two_sided_exponential(double rate, double amplitude = 1.0);
    static ScalarField gaussian(double rate, double amplitude = 1.0);
    static ScalarField power_tail(double rho, double amplitude = 1.0);
    static ScalarField radial_table(std::vector<double> r, std::vector<double> v);

    double operator()(std::span<const double> x) const;
    double at1d(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    FieldKind kind() const { return kind_; }
    double param_a() const { return a_; }  // value / radius / rate / rho
    double param_b() const { return b_; }  // level / amplitude

    /// Family-level sup over R^d; +inf for unbounded families.
    double upper_bound() const;
    /// Family-level inf over R^d.
    double lower_bound() const;
    /// Family-level sign analysis (>= 0 everywhere).
    bool nonnegative() const;
    /// True when the value depends on x only through |x|.
    bool is_radial() const { return kind_ != FieldKind::exponential; }
    bool is_constant() const { return kind_ == FieldKind::constant; }

    ScalarField scaled(double factor) const;
    /// Closed-form pointwise product where the result stays in a family.
    std::optional<ScalarField> times(const ScalarField& other) const;

    /// Exact structural equality (kind and parameters).
    bool same_family_as(const ScalarField& other, double tol = 1e-12) const;

    nlohmann::json to_json() const;
    static ScalarField from_json(const nlohmann::json& j);

  private:
    FieldKind kind_;
    double a_;  // value | radius | rate | rho
    double b_;  // level | amplitude
    std::vector<double> table_r_, table_v_;
};

/// Checks field >= 0 on a uniform probe grid over [-20, 20]^d (capped at
/// 10^4 points) in addition to the family sign analysis. A heuristic guard
/// for "for all x" conditions, not a proof.
bool nonnegative_on_probe_grid(const ScalarField& f, int dim);

// ============================================================
// Drift and diffusion-matrix families.
// ============================================================

enum class DriftKind { zero, constant, linear, affine, grad_q };

/// Affine drift b(x) = shift + gamma * x; grad_q is resolved against
/// (a, Q) when a DiffusionSpec is assembled.
struct DriftSpec {
    DriftKind kind = DriftKind::zero;
    std::vector<double> shift;  // dimension-d vector (constant part)
    double gamma = 0.0;         // coefficient of x

    static DriftSpec zero() { return {}; }
    static DriftSpec constant(std::vector<double> v);
    static DriftSpec linear(double gamma);
    static DriftSpec affine(std::vector<double> v, double gamma);

    void eval(std::span<const double> x, std::span<double> out) const;
    double max_magnitude_probe(int dim, double box = 20.0) const;

    nlohmann::json to_json() const;
    static DriftSpec from_json(const nlohmann::json& j);
};

/// Q with b = a grad(Q), kept in closed form: Q(x) = c0 + lin.x + quad*|x|^2.
struct QForm {
    double c0 = 0.0;
    std::vector<double> lin;
    double quad = 0.0;

    nlohmann::json to_json() const;
    static QForm from_json(const nlohmann::json& j);
};

enum class DiffusionMatrixKind { identity, constant_spd, radial_scalar };

class DiffusionMatrix {
  public:
    static DiffusionMatrix identity();
    /// Row-major symmetric positive-definite matrix; the symmetric square
    /// root is precomputed by Jacobi diagonalization.
    static DiffusionMatrix constant_spd(int dim, std::vector<double> matrix);
    /// a(x) = s(|x|) * I with s a positive radial field.
    static DiffusionMatrix radial_scalar(ScalarField s);

    DiffusionMatrixKind kind() const { return kind_; }

    /// out = sigma(x) * z with sigma sigma^T = a.
    void sigma_times(std::span<const double> x, std::span<const double> z,
                     std::span<double> out) const;
    /// out = a(x) * v.
    void apply(std::span<const double> x, std::span<const double> v,
               std::span<double> out) const;
    /// Scalar a(x) for 1D / radial problems; throws for non-scalar matrices.
    double scalar_at(std::span<const double> x) const;
    /// Eigenvalue range probe for the ellipticity check.
    void eigen_range(int dim, double& lo, double& hi) const;
    bool is_scalar() const { return kind_ != DiffusionMatrixKind::constant_spd || scalar_constant_; }

    const ScalarField& radial_field() const { return radial_s_; }
    const std::vector<double>& matrix() const { return a_; }

    nlohmann::json to_json() const;
    static DiffusionMatrix from_json(const nlohmann::json& j, int dim);

  private:
    DiffusionMatrixKind kind_ = DiffusionMatrixKind::identity;
    int dim_ = 0;
    std::vector<double> a_;      // constant_spd only
    std::vector<double> sigma_;  // precomputed symmetric sqrt
    ScalarField radial_s_;
    bool scalar_constant_ = true;
    double eig_lo_ = 1.0, eig_hi_ = 1.0;
};

}  // namespace superdiff
