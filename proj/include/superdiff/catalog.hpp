#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "superdiff/model.hpp"

namespace superdiff {

// ============================================================
// Catalog of reference problem instances with closed-form growth
// bounds where they are known. Parameters come in as a JSON object;
// scalar fields may be given either as a number (meaning a constant)
// or as a full field object.
// ============================================================

/// A positive function with (L + beta - lambda) h = 0 for the entry, used by
/// the martingale and u_ch machinery.
struct HarmonicPair {
    ScalarField h;
    double lambda = 0.0;
};

struct CatalogEntry {
    std::string name;
    ModelSpec model;
    std::optional<HarmonicPair> harmonic;
    std::string notes;
};

std::vector<std::string> catalog_names();

/// Builds a fully populated model for one catalog key. Throws on unknown
/// names or parameters outside the entry's constraints.
ModelSpec catalog_build(const std::string& name, const nlohmann::json& params);

/// Same as catalog_build but also returns the entry's harmonic pair and notes.
CatalogEntry catalog_entry(const std::string& name, const nlohmann::json& params);

}  // namespace superdiff
