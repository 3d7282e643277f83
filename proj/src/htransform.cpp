#include "superdiff/htransform.hpp"

#include <cmath>
#include <stdexcept>

namespace superdiff {

namespace {

struct LogGradient {
    std::vector<double> shift;  // constant part of grad(log h)
    double gamma = 0.0;         // linear part: grad(log h) = shift + gamma * x
    double log_at_origin = 0.0;
    double hessian_trace = 0.0;  // tr(grad^2 log h), constant for these families
};

LogGradient log_gradient(const ScalarField& h, int dim) {
    LogGradient g;
    g.shift.assign(static_cast<std::size_t>(dim), 0.0);
    switch (h.kind()) {
        case FieldKind::constant:
            if (!(h.param_a() > 0.0)) throw std::invalid_argument("h_transform: h not positive");
            g.log_at_origin = std::log(h.param_a());
            return g;
        case FieldKind::exponential:
            if (!(h.param_b() > 0.0)) throw std::invalid_argument("h_transform: h not positive");
            g.shift[0] = h.param_a();
            g.log_at_origin = std::log(h.param_b());
            return g;
        case FieldKind::gaussian:
            if (!(h.param_b() > 0.0)) throw std::invalid_argument("h_transform: h not positive");
            g.gamma = -2.0 * h.param_a();
            g.hessian_trace = -2.0 * h.param_a() * dim;
            g.log_at_origin = std::log(h.param_b());
            return g;
        default:
            throw std::invalid_argument(
                "h_transform: unsupported field family for symbolic transform");
    }
}

}  // namespace

ModelSpec h_transform(const ModelSpec& model, const ScalarField& h,
                      std::optional<double> lambda) {
    const int dim = model.dim();
    const DiffusionSpec& diff = model.diffusion();
    const LogGradient lg = log_gradient(h, dim);

    // drift' = b + a grad(log h); the result must stay affine
    std::vector<double> add_shift(static_cast<std::size_t>(dim), 0.0);
    double add_gamma = 0.0;
    const auto& a = diff.a();
    if (a.kind() == DiffusionMatrixKind::radial_scalar &&
        (lg.gamma != 0.0 || lg.shift != std::vector<double>(static_cast<std::size_t>(dim), 0.0)))
        throw std::invalid_argument(
            "h_transform: unsupported field family for symbolic transform (radial a)");
    {
        std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
        a.apply(origin, lg.shift, add_shift);
        if (lg.gamma != 0.0) {
            if (a.kind() != DiffusionMatrixKind::identity)
                throw std::invalid_argument(
                    "h_transform: gaussian h requires identity diffusion matrix");
            add_gamma = lg.gamma;
        }
    }

    DriftSpec new_drift = diff.drift();
    if (new_drift.shift.size() < static_cast<std::size_t>(dim))
        new_drift.shift.resize(static_cast<std::size_t>(dim), 0.0);
    for (int d = 0; d < dim; ++d) new_drift.shift[static_cast<std::size_t>(d)] += add_shift[static_cast<std::size_t>(d)];
    new_drift.gamma += add_gamma;
    {
        bool all_zero_shift = true;
        for (double v : new_drift.shift) all_zero_shift &= v == 0.0;
        if (all_zero_shift && new_drift.gamma == 0.0)
            new_drift.kind = DriftKind::zero;
        else if (all_zero_shift)
            new_drift.kind = DriftKind::linear;
        else if (new_drift.gamma == 0.0)
            new_drift.kind = DriftKind::constant;
        else
            new_drift.kind = DriftKind::affine;
    }

    // beta' = lambda when the caller declares (L + beta - lambda) h = 0;
    // otherwise (L h + beta h) / h expanded symbolically.
    ScalarField new_beta;
    if (lambda) {
        new_beta = ScalarField::constant(*lambda);
    } else {
        if (!model.beta().is_constant())
            throw std::invalid_argument(
                "h_transform: symbolic potential needs constant beta (supply lambda instead)");
        if (lg.gamma != 0.0)
            throw std::invalid_argument(
                "h_transform: symbolic potential for gaussian h is unsupported (supply lambda)");
        const DriftSpec& b = diff.drift();
        const double c = lg.shift.empty() ? 0.0 : lg.shift[0];
        double a11 = 1.0;
        if (a.kind() == DiffusionMatrixKind::constant_spd) a11 = a.matrix()[0];
        if (b.gamma != 0.0 && c != 0.0)
            throw std::invalid_argument(
                "h_transform: symbolic potential with linear drift leaves the field families");
        const double b1 = b.shift.empty() ? 0.0 : b.shift[0];
        new_beta = ScalarField::constant(model.beta().param_a() + 0.5 * c * c * a11 + c * b1);
    }

    auto new_k = model.k().times(h);
    if (!new_k)
        throw std::invalid_argument(
            "h_transform: unsupported field family for symbolic transform (k * h)");

    std::optional<QForm> new_q = diff.q();
    if (new_q) {
        // Q' = Q + log h keeps b' = a grad(Q') exact for these families.
        new_q->c0 += lg.log_at_origin;
        if (new_q->lin.size() < static_cast<std::size_t>(dim))
            new_q->lin.resize(static_cast<std::size_t>(dim), 0.0);
        if (h.kind() == FieldKind::exponential) new_q->lin[0] += h.param_a();
        if (h.kind() == FieldKind::gaussian) new_q->quad -= h.param_a();
    }

    DiffusionSpec new_diff(dim, new_drift, a, new_q);
    return ModelSpec(std::move(new_diff),
                     BranchingSpec(std::move(new_beta), std::move(*new_k), dim), std::nullopt);
}

}  // namespace superdiff
