#include "superdiff/catalog.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace superdiff {

using nlohmann::json;

namespace {

ScalarField field_param(const json& params, const std::string& key, const ScalarField& fallback) {
    if (!params.contains(key)) return fallback;
    const json& v = params.at(key);
    if (v.is_number()) return ScalarField::constant(v.get<double>());
    return ScalarField::from_json(v);
}

double num_param(const json& params, const std::string& key, double fallback) {
    return params.value(key, fallback);
}

double require_num(const json& params, const std::string& key) {
    if (!params.contains(key))
        throw std::invalid_argument("catalog: missing parameter '" + key + "'");
    return params.at(key).get<double>();
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"drift_bm",        "ou_outward",
            "bm_plain",        "planar_annihilation",
            "compact_annihilation_1d", "htransform_survival"};
}

CatalogEntry catalog_entry(const std::string& name, const json& params) {
    if (name == "drift_bm") {
        // 1D Brownian motion with leftward drift -b0 and constant mass creation.
        const double b0 = require_num(params, "b0");
        if (!(b0 > 0.0)) throw std::invalid_argument("drift_bm: b0 must be > 0");
        const double beta = num_param(params, "beta", 0.0);
        ScalarField k = field_param(params, "k", ScalarField::constant(1.0));
        QForm q;
        q.lin = {-b0};
        ReferenceValues ref;
        ref.lambda2 = beta - 0.5 * b0 * b0;
        ref.lambda_inf = beta;
        ref.notes = "lambda2 = beta - b0^2/2, lambda_inf = beta (constant beta)";
        ModelSpec model(DiffusionSpec(1, DriftSpec::constant({-b0}), DiffusionMatrix::identity(), q),
                        BranchingSpec(ScalarField::constant(beta), std::move(k), 1), ref);
        return CatalogEntry{
            name, std::move(model), HarmonicPair{ScalarField::constant(1.0), beta},
            "occupation density is flat downstream of the drift and decays at rate 2*b0 "
            "upstream, so an intensity integrable along the drift direction gives survival "
            "while a constant intensity gives weak extinction"};
    }

    if (name == "ou_outward") {
        // outward Ornstein-Uhlenbeck: drift +gamma*x, constant mass creation
        const double gamma = require_num(params, "gamma");
        if (!(gamma > 0.0)) throw std::invalid_argument("ou_outward: gamma must be > 0");
        const int d = static_cast<int>(num_param(params, "d", 1));
        if (d < 1) throw std::invalid_argument("ou_outward: d must be >= 1");
        const double beta = num_param(params, "beta", 0.0);
        ScalarField k = field_param(params, "k", ScalarField::constant(1.0));
        QForm q;
        q.quad = 0.5 * gamma;
        ReferenceValues ref;
        ref.lambda2 = beta - gamma * d;
        ref.lambda_inf = beta;
        ref.notes = "lambda2 = beta - gamma*d, lambda_inf = beta (constant beta)";
        ModelSpec model(DiffusionSpec(d, DriftSpec::linear(gamma), DiffusionMatrix::identity(), q),
                        BranchingSpec(ScalarField::constant(beta), std::move(k), d), ref);
        return CatalogEntry{name, std::move(model),
                            HarmonicPair{ScalarField::constant(1.0), beta},
                            "local extinction iff beta in [0, gamma*d]"};
    }

    if (name == "bm_plain") {
        const int d = static_cast<int>(num_param(params, "d", 1));
        const double beta = num_param(params, "beta", 0.0);
        ScalarField k = field_param(params, "k", ScalarField::constant(0.0));
        ReferenceValues ref;
        ref.lambda2 = beta;
        ref.lambda_inf = beta;
        ref.notes = "free Brownian motion: lambda2 = lambda_inf = beta (constant beta)";
        ModelSpec model(DiffusionSpec(d, DriftSpec::zero(), DiffusionMatrix::identity(), QForm{}),
                        BranchingSpec(ScalarField::constant(beta), std::move(k), d), ref);
        return CatalogEntry{name, std::move(model),
                            HarmonicPair{ScalarField::constant(1.0), beta}, ""};
    }

    if (name == "planar_annihilation") {
        // 2D Brownian motion with constant annihilation on a disk
        const double alpha = num_param(params, "alpha", 1.0);
        if (!(alpha > 0.0)) throw std::invalid_argument("planar_annihilation: alpha must be > 0");
        const double radius = num_param(params, "radius", 1.0);
        ScalarField k = field_param(params, "k", ScalarField::constant(1.0));
        ReferenceValues ref;
        ref.lambda2 = 0.0;
        ref.lambda_inf = 0.0;
        ref.notes = "compact annihilation in d=2: expected weight ~ c/log(t), both bounds 0";
        ModelSpec model(DiffusionSpec(2, DriftSpec::zero(), DiffusionMatrix::identity(), QForm{}),
                        BranchingSpec(ScalarField::ball_indicator(radius, -alpha), std::move(k), 2),
                        ref);
        return CatalogEntry{name, std::move(model), std::nullopt,
                            "gauge decays like c/log(t); subcritical potential"};
    }

    if (name == "compact_annihilation_1d") {
        const double alpha = num_param(params, "alpha", 1.0);
        if (!(alpha > 0.0))
            throw std::invalid_argument("compact_annihilation_1d: alpha must be > 0");
        const double radius = num_param(params, "radius", 1.0);
        ScalarField k = field_param(params, "k", ScalarField::constant(1.0));
        ReferenceValues ref;
        ref.lambda2 = 0.0;
        ref.lambda_inf = 0.0;
        ref.notes = "compact annihilation in d=1: expected weight ~ c/sqrt(t), both bounds 0";
        ModelSpec model(DiffusionSpec(1, DriftSpec::zero(), DiffusionMatrix::identity(), QForm{}),
                        BranchingSpec(ScalarField::ball_indicator(radius, -alpha), std::move(k), 1),
                        ref);
        return CatalogEntry{name, std::move(model), std::nullopt,
                            "gauge decays like c/sqrt(t); subcritical potential"};
    }

    if (name == "htransform_survival") {
        // super-Brownian motion with constant annihilation -B and branching
        // intensity exp(-c x), c = sqrt(2 (B + eps)). The pair (h, eps) with
        // h = exp(+c x) satisfies h''/2 - (B + eps) h = 0, so the transform
        // yields drift +c, potential eps and intensity 1: a supercritical
        // constant-coefficient model. Weak extinction with survival.
        const double big_b = require_num(params, "B");
        const double eps = require_num(params, "epsilon");
        if (!(big_b > 0.0) || !(eps > 0.0))
            throw std::invalid_argument("htransform_survival: need B > 0 and epsilon > 0");
        const double c = std::sqrt(2.0 * (big_b + eps));
        const double sign = num_param(params, "sign", -1.0) < 0.0 ? -1.0 : 1.0;
        ReferenceValues ref;
        ref.lambda2 = -big_b;
        ref.lambda_inf = -big_b;
        ref.notes = "constant beta = -B on free Brownian motion";
        ModelSpec model(DiffusionSpec(1, DriftSpec::zero(), DiffusionMatrix::identity(), QForm{}),
                        BranchingSpec(ScalarField::constant(-big_b),
                                      ScalarField::exponential(sign * c, 1.0), 1),
                        ref);
        return CatalogEntry{name, std::move(model),
                            HarmonicPair{ScalarField::exponential(-sign * c, 1.0), eps},
                            "weak and local extinction, yet survival with positive probability"};
    }

    throw std::invalid_argument("unknown catalog name: " + name);
}

ModelSpec catalog_build(const std::string& name, const json& params) {
    return catalog_entry(name, params).model;
}

}  // namespace superdiff
