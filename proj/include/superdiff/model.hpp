#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "superdiff/fields.hpp"

namespace superdiff {

// ============================================================
// Problem instances: diffusion generator, branching potentials,
// initial measures. Immutable after construction; operations on
// them are pure functions, so instances can be shared freely
// across worker threads.
// ============================================================

/// Generator L = 1/2 div(a grad) + b . grad. Construction runs the
/// ellipticity and drift-growth probes and resolves grad_q drifts.
class DiffusionSpec {
  public:
    DiffusionSpec(int dim, DriftSpec drift, DiffusionMatrix a,
                  std::optional<QForm> q = std::nullopt);

    int dim() const { return dim_; }
    const DriftSpec& drift() const { return drift_; }
    const DiffusionMatrix& a() const { return a_; }
    const std::optional<QForm>& q() const { return q_; }

    void drift_at(std::span<const double> x, std::span<double> out) const {
        drift_.eval(x, out);
    }
    void sigma_times(std::span<const double> x, std::span<const double> z,
                     std::span<double> out) const {
        a_.sigma_times(x, z, out);
    }

    /// True when every coefficient depends on x only through |x| (needed for
    /// radial PDE grids).
    bool is_radial() const;

    nlohmann::json to_json() const;
    static DiffusionSpec from_json(const nlohmann::json& j);

  private:
    int dim_;
    DriftSpec drift_;
    DiffusionMatrix a_;
    std::optional<QForm> q_;
};

/// Mass creation/annihilation beta (bounded above) and branching
/// intensity k >= 0.
class BranchingSpec {
  public:
    BranchingSpec(ScalarField beta, ScalarField k, int dim);

    const ScalarField& beta() const { return beta_; }
    const ScalarField& k() const { return k_; }
    /// Declared global upper bound for beta (family analysis).
    double beta_upper() const { return beta_upper_; }

    nlohmann::json to_json() const;
    static BranchingSpec from_json(const nlohmann::json& j, int dim);

  private:
    ScalarField beta_;
    ScalarField k_;
    double beta_upper_;
};

/// Finite atomic initial measure.
class InitialMeasure {
  public:
    struct Atom {
        Point position;
        double mass;
    };

    explicit InitialMeasure(std::vector<Atom> atoms);
    static InitialMeasure point(Point x, double mass = 1.0);

    const std::vector<Atom>& atoms() const { return atoms_; }
    double total_mass() const;

    nlohmann::json to_json() const;
    static InitialMeasure from_json(const nlohmann::json& j);

  private:
    std::vector<Atom> atoms_;
};

struct ReferenceValues {
    double lambda2 = 0.0;
    double lambda_inf = 0.0;
    std::string notes;
};

/// The full problem instance (L, beta, k) plus optional closed-form
/// reference values for catalog entries.
class ModelSpec {
  public:
    ModelSpec(DiffusionSpec diffusion, BranchingSpec branching,
              std::optional<ReferenceValues> reference = std::nullopt);

    const DiffusionSpec& diffusion() const { return diffusion_; }
    const BranchingSpec& branching() const { return branching_; }
    const std::optional<ReferenceValues>& reference() const { return reference_; }
    int dim() const { return diffusion_.dim(); }

    const ScalarField& beta() const { return branching_.beta(); }
    const ScalarField& k() const { return branching_.k(); }

    /// Same model with beta replaced (k, L unchanged); reference dropped.
    ModelSpec with_beta(ScalarField beta) const;
    ModelSpec with_k(ScalarField k) const;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& j);

  private:
    DiffusionSpec diffusion_;
    BranchingSpec branching_;
    std::optional<ReferenceValues> reference_;
};

}  // namespace superdiff
