#pragma once

#include <optional>

#include "superdiff/model.hpp"

namespace superdiff {

// ============================================================
// h-transform of the semilinear operator A(u) = Lu + beta u - k u^2:
// A^h(u) = (1/h) A(h u) shifts the drift by a grad(log h), replaces the
// potential and multiplies the intensity by h.
// ============================================================

/// Rewrites the model through a positive h with closed-form gradient.
///
/// When `lambda` is supplied the caller declares (L + beta - lambda) h = 0
/// and the new potential is the constant lambda. Without it the potential
/// (L h + beta h) / h is computed symbolically, which is supported for
/// exponential/constant h against constant-coefficient diffusions.
/// Throws when h is not positive or the field algebra leaves the closed
/// families.
ModelSpec h_transform(const ModelSpec& model, const ScalarField& h,
                      std::optional<double> lambda = std::nullopt);

}  // namespace superdiff
