#pragma once

#include "mfg/model.hpp"

#include <json.hpp>

#include <string>

namespace mfg {

inline constexpr int kClassSchemaVersion = 1;

nlohmann::json matrix_to_json(const RowMatrix& m);
RowMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// Serialises tabular, linear and hard-instance classes; other model kinds raise ConfigError.
nlohmann::json class_to_json(const ModelClass& models);
ModelClass class_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

void save_class(const ModelClass& models, const std::string& path);
ModelClass load_class(const std::string& path);

}  // namespace mfg
