#pragma once

#include "mixgp/svgp.hpp"

#include "json.hpp"

namespace mixgp {

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document for a model. Doubles are written in shortest
/// round-trip form, so load(save(m)) reproduces every value bit for bit.
nlohmann::json model_to_json(const VariationalGP& model);
/// Throws std::invalid_argument on unknown versions or malformed documents.
VariationalGP model_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Points& X);
Vector vector_from_json(const nlohmann::json& j);
Points points_from_json(const nlohmann::json& j, Eigen::Index cols = -1);

}  // namespace mixgp
