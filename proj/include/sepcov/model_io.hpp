#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sepcov/spectral_model.hpp"

namespace sepcov {

/// Model document:
///   {"n": 1000, "N": 2000,
///    "atoms_a": [[1, 0.5], [4, 0.5]],
///    "atoms_b": [["1.0", "0.5"], [4, 0.5]]}
/// Values and weights may be JSON numbers or decimal strings.
SpectralModel model_from_json(const nlohmann::json& doc);

/// Canonical form. `include_meta` adds the non-canonical "swapped" flag and
/// hash; the hash itself is computed from the form without them.
nlohmann::json model_to_json(const SpectralModel& model, bool include_meta = true);

/// Throws DomainError naming the path when the file is missing or invalid.
SpectralModel load_model(const std::filesystem::path& path);
void save_model(const SpectralModel& model, const std::filesystem::path& path);

/// Parses a decimal number, rejecting trailing garbage.
double parse_decimal(const std::string& text);

}  // namespace sepcov
