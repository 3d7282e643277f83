#include "superdiff/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace superdiff {

using nlohmann::json;

DiffusionSpec::DiffusionSpec(int dim, DriftSpec drift, DiffusionMatrix a, std::optional<QForm> q)
    : dim_(dim), drift_(std::move(drift)), a_(std::move(a)), q_(std::move(q)) {
    if (dim_ < 1) throw std::invalid_argument("DiffusionSpec: dimension must be >= 1");
    double lo = 0.0, hi = 0.0;
    a_.eigen_range(dim_, lo, hi);
    if (!(lo > 0.0)) throw std::invalid_argument("DiffusionSpec: uniform ellipticity violated");

    if (drift_.kind == DriftKind::grad_q) {
        if (!q_) throw std::invalid_argument("DiffusionSpec: grad_q drift needs Q");
        // b = a grad(Q) with grad(Q)(x) = lin + 2*quad*x; resolved once here.
        std::vector<double> lin(static_cast<std::size_t>(dim_), 0.0);
        for (std::size_t i = 0; i < lin.size() && i < q_->lin.size(); ++i) lin[i] = q_->lin[i];
        if (a_.kind() == DiffusionMatrixKind::radial_scalar)
            throw std::invalid_argument("DiffusionSpec: grad_q with radial-scalar a is unsupported");
        std::vector<double> shift(static_cast<std::size_t>(dim_), 0.0);
        std::vector<double> origin(static_cast<std::size_t>(dim_), 0.0);
        a_.apply(origin, lin, shift);
        double gamma = 2.0 * q_->quad;
        if (a_.kind() == DiffusionMatrixKind::constant_spd) {
            if (!a_.is_scalar() && gamma != 0.0)
                throw std::invalid_argument(
                    "DiffusionSpec: grad_q with quadratic Q needs scalar a");
            gamma *= a_.scalar_at(origin);
        }
        drift_ = DriftSpec::affine(std::move(shift), gamma);
    }

    // |b(x)| <= C (1 + |x|) probe; affine drifts satisfy it structurally, the
    // probe guards table-driven corner cases and keeps the check uniform.
    const double probe = drift_.max_magnitude_probe(dim_);
    if (!std::isfinite(probe))
        throw std::invalid_argument("DiffusionSpec: drift growth probe failed");

    if (q_) {
        // consistency probe for b = a grad(Q) when Q is supplied
        std::vector<double> x(static_cast<std::size_t>(dim_), 0.0);
        std::vector<double> g(static_cast<std::size_t>(dim_), 0.0);
        std::vector<double> ag(static_cast<std::size_t>(dim_), 0.0);
        std::vector<double> b(static_cast<std::size_t>(dim_), 0.0);
        for (int probe_i = 0; probe_i < 32; ++probe_i) {
            for (int d = 0; d < dim_; ++d)
                x[static_cast<std::size_t>(d)] = -6.0 + 12.0 * ((probe_i * 7 + d * 3) % 17) / 16.0;
            for (int d = 0; d < dim_; ++d) {
                const std::size_t di = static_cast<std::size_t>(d);
                g[di] = (di < q_->lin.size() ? q_->lin[di] : 0.0) + 2.0 * q_->quad * x[di];
            }
            a_.apply(x, g, ag);
            drift_.eval(x, b);
            for (int d = 0; d < dim_; ++d)
                if (std::abs(ag[static_cast<std::size_t>(d)] - b[static_cast<std::size_t>(d)]) > 1e-8)
                    throw std::invalid_argument("DiffusionSpec: b != a grad(Q) on probe grid");
        }
    }
}

bool DiffusionSpec::is_radial() const {
    if (a_.kind() == DiffusionMatrixKind::constant_spd && !a_.is_scalar()) return false;
    switch (drift_.kind) {
        case DriftKind::zero:
        case DriftKind::linear: return true;
        case DriftKind::constant:
        case DriftKind::affine: {
            for (double v : drift_.shift)
                if (v != 0.0) return false;
            return true;
        }
        default: return false;
    }
}

json DiffusionSpec::to_json() const {
    json j{{"d", dim_}, {"drift", drift_.to_json()}, {"a", a_.to_json()}};
    if (q_) j["Q"] = q_->to_json();
    return j;
}

DiffusionSpec DiffusionSpec::from_json(const json& j) {
    const int d = j.at("d").get<int>();
    std::optional<QForm> q;
    if (j.contains("Q")) q = QForm::from_json(j.at("Q"));
    return DiffusionSpec(d, DriftSpec::from_json(j.at("drift")),
                         DiffusionMatrix::from_json(j.at("a"), d), q);
}

BranchingSpec::BranchingSpec(ScalarField beta, ScalarField k, int dim)
    : beta_(std::move(beta)), k_(std::move(k)) {
    if (!nonnegative_on_probe_grid(k_, dim))
        throw std::invalid_argument("BranchingSpec: k must be >= 0 (family or probe check failed)");
    beta_upper_ = beta_.upper_bound();
    if (!std::isfinite(beta_upper_))
        throw std::invalid_argument("BranchingSpec: beta must be bounded from above");
}

json BranchingSpec::to_json() const {
    return json{{"beta", beta_.to_json()}, {"k", k_.to_json()}, {"B", beta_upper_}};
}

BranchingSpec BranchingSpec::from_json(const json& j, int dim) {
    BranchingSpec b(ScalarField::from_json(j.at("beta")), ScalarField::from_json(j.at("k")), dim);
    if (j.contains("B")) {
        const double declared = j.at("B").get<double>();
        if (declared < b.beta_upper_ - 1e-9)
            throw std::invalid_argument("BranchingSpec: declared B below family upper bound");
    }
    return b;
}

InitialMeasure::InitialMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("InitialMeasure: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.mass > 0.0)) throw std::invalid_argument("InitialMeasure: masses must be > 0");
        total += a.mass;
    }
    if (!(total > 0.0)) throw std::invalid_argument("InitialMeasure: total mass must be > 0");
}

InitialMeasure InitialMeasure::point(Point x, double mass) {
    return InitialMeasure({Atom{std::move(x), mass}});
}

double InitialMeasure::total_mass() const {
    double total = 0.0;
    for (const auto& a : atoms_) total += a.mass;
    return total;
}

json InitialMeasure::to_json() const {
    json arr = json::array();
    for (const auto& a : atoms_) arr.push_back(json{{"x", a.position}, {"mass", a.mass}});
    return arr;
}

InitialMeasure InitialMeasure::from_json(const json& j) {
    std::vector<Atom> atoms;
    for (const auto& e : j)
        atoms.push_back(Atom{e.at("x").get<Point>(), e.at("mass").get<double>()});
    return InitialMeasure(std::move(atoms));
}

ModelSpec::ModelSpec(DiffusionSpec diffusion, BranchingSpec branching,
                     std::optional<ReferenceValues> reference)
    : diffusion_(std::move(diffusion)),
      branching_(std::move(branching)),
      reference_(std::move(reference)) {
    if (reference_ && reference_->lambda_inf < reference_->lambda2 - 1e-12)
        throw std::invalid_argument("ModelSpec: reference must satisfy lambda_inf >= lambda2");
}

ModelSpec ModelSpec::with_beta(ScalarField beta) const {
    return ModelSpec(diffusion_, BranchingSpec(std::move(beta), branching_.k(), dim()),
                     std::nullopt);
}

ModelSpec ModelSpec::with_k(ScalarField k) const {
    return ModelSpec(diffusion_, BranchingSpec(branching_.beta(), std::move(k), dim()),
                     std::nullopt);
}

json ModelSpec::to_json() const {
    json j{{"diffusion", diffusion_.to_json()}, {"branching", branching_.to_json()}};
    if (reference_) {
        j["reference"] = json{{"lambda2", reference_->lambda2},
                              {"lambda_inf", reference_->lambda_inf},
                              {"notes", reference_->notes}};
    }
    return j;
}

ModelSpec ModelSpec::from_json(const json& j) {
    DiffusionSpec d = DiffusionSpec::from_json(j.at("diffusion"));
    BranchingSpec b = BranchingSpec::from_json(j.at("branching"), d.dim());
    std::optional<ReferenceValues> ref;
    if (j.contains("reference")) {
        ReferenceValues r;
        r.lambda2 = j.at("reference").at("lambda2").get<double>();
        r.lambda_inf = j.at("reference").at("lambda_inf").get<double>();
        r.notes = j.at("reference").value("notes", std::string{});
        ref = r;
    }
    return ModelSpec(std::move(d), std::move(b), std::move(ref));
}

}  // namespace superdiff
