#include "mfg/class_io.hpp"
#include "mfg/environments.hpp"

#include <fstream>
#include <memory>

namespace mfg {

using nlohmann::json;

json matrix_to_json(const RowMatrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

RowMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError("matrix payload has " + std::to_string(data.size()) + " entries, expected " +
                      std::to_string(rows * cols));
  }
  return Eigen::Map<const RowMatrix>(data.data(), rows, cols);
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

namespace {

template <class T>
json list_to_json(const std::vector<T>& items) {
  json out = json::array();
  for (const auto& item : items) {
    if constexpr (std::is_same_v<T, RowMatrix>) {
      out.push_back(matrix_to_json(item));
    } else {
      out.push_back(vector_to_json(item));
    }
  }
  return out;
}

std::vector<RowMatrix> matrices_from_json(const json& j) {
  std::vector<RowMatrix> out;
  for (const auto& item : j) out.push_back(matrix_from_json(item));
  return out;
}

std::vector<Vector> vectors_from_json(const json& j) {
  std::vector<Vector> out;
  for (const auto& item : j) out.push_back(vector_from_json(item));
  return out;
}

json tabular_body(const ModelClass& models) {
  const auto& first = dynamic_cast<const TabularModel&>(models[0]);
  const TabularReward& reward = first.reward_table();
  json body = {{"initial", vector_to_json(first.initial())},
               {"reward",
                {{"sensitivity", reward.sensitivity},
                 {"base", list_to_json(reward.base)},
                 {"tilt", list_to_json(reward.tilt)}}}};
  json list = json::array();
  for (int i = 0; i < models.size(); ++i) {
    const auto* m = dynamic_cast<const TabularModel*>(&models[i]);
    if (!m || m->shared_reward() != first.shared_reward()) {
      throw ConfigError("tabular class members must share one reward table");
    }
    list.push_back({{"sensitivity", m->sensitivity()},
                    {"logits", list_to_json(m->logits())},
                    {"mixing", list_to_json(m->mixing())}});
  }
  body["models"] = std::move(list);
  return body;
}

json linear_body(const ModelClass& models) {
  const auto& first = dynamic_cast<const LinearModel&>(models[0]);
  const LinearFeatures& f = first.features();
  json body = {{"features",
                {{"d_phi", f.dim_phi},
                 {"d_psi", f.dim_psi},
                 {"phi", list_to_json(f.phi)},
                 {"u", list_to_json(f.u)},
                 {"reward_base", list_to_json(f.reward_base)},
                 {"reward_mix", list_to_json(f.reward_mix)}}}};
  json list = json::array();
  for (int i = 0; i < models.size(); ++i) {
    const auto* m = dynamic_cast<const LinearModel*>(&models[i]);
    if (!m || m->shared_features() != first.shared_features()) {
      throw ConfigError("linear class members must share one feature set");
    }
    list.push_back({{"psi", list_to_json(m->psi())},
                    {"lipschitz",
                     {{"transition", m->lipschitz().transition},
                      {"reward", m->lipschitz().reward}}}});
  }
  body["models"] = std::move(list);
  return body;
}

json hard_body(const ModelClass& models) {
  const auto& first = dynamic_cast<const HardInstanceModel&>(models[0]);
  json body = {{"d", models.shape().states},
               {"eps", first.eps()},
               {"L_T", models.lipschitz().transition}};
  json list = json::array();
  for (int i = 0; i < models.size(); ++i) {
    const auto* m = dynamic_cast<const HardInstanceModel*>(&models[i]);
    if (!m) throw ConfigError("hard class contains a foreign model");
    list.push_back(m->is_flat() ? json(nullptr) : vector_to_json(m->center()));
  }
  body["models"] = std::move(list);
  return body;
}

}  // namespace

json class_to_json(const ModelClass& models) {
  const std::string kind = models[0].kind();
  const Shape& shape = models.shape();
  const json& prov = models.provenance();
  json out = {{"schema_version", kClassSchemaVersion},
              {"H", shape.horizon},
              {"S", shape.states},
              {"A", shape.actions},
              {"kind", kind},
              {"seed", prov.value("seed", json(0))},
              {"spec", prov.value("spec", json::object())},
              {"size", models.size()},
              {"true_index", models.true_index() ? json(*models.true_index()) : json(nullptr)}};
  if (kind == "tabular") {
    out["body"] = tabular_body(models);
  } else if (kind == "linear") {
    out["body"] = linear_body(models);
  } else if (kind == "hard") {
    out["body"] = hard_body(models);
  } else {
    throw ConfigError("class_to_json: no serialiser for model kind '" + kind + "'");
  }
  return out;
}

ModelClass class_from_json(const json& j) {
  if (j.value("schema_version", 0) != kClassSchemaVersion) {
    throw ConfigError("unsupported class schema_version");
  }
  const Shape shape{j.at("H").get<int>(), j.at("S").get<int>(), j.at("A").get<int>()};
  const std::string kind = j.at("kind").get<std::string>();
  const json& body = j.at("body");
  std::vector<ModelPtr> models;
  if (kind == "tabular") {
    auto reward = std::make_shared<TabularReward>();
    reward->shape = shape;
    reward->sensitivity = body.at("reward").at("sensitivity").get<double>();
    reward->base = vectors_from_json(body.at("reward").at("base"));
    reward->tilt = matrices_from_json(body.at("reward").at("tilt"));
    const Vector initial = vector_from_json(body.at("initial"));
    for (const auto& m : body.at("models")) {
      models.push_back(std::make_shared<TabularModel>(
          shape, initial, m.at("sensitivity").get<double>(), matrices_from_json(m.at("logits")),
          matrices_from_json(m.at("mixing")), reward));
    }
  } else if (kind == "linear") {
    auto features = std::make_shared<LinearFeatures>();
    const json& f = body.at("features");
    features->shape = shape;
    features->dim_phi = f.at("d_phi").get<int>();
    features->dim_psi = f.at("d_psi").get<int>();
    features->phi = matrices_from_json(f.at("phi"));
    features->u = matrices_from_json(f.at("u"));
    features->reward_base = vectors_from_json(f.at("reward_base"));
    features->reward_mix = matrices_from_json(f.at("reward_mix"));
    for (const auto& m : body.at("models")) {
      const LipschitzConstants lip{m.at("lipschitz").at("transition").get<double>(),
                                   m.at("lipschitz").at("reward").get<double>()};
      models.push_back(
          std::make_shared<LinearModel>(features, matrices_from_json(m.at("psi")), lip));
    }
  } else if (kind == "hard") {
    const int d = body.at("d").get<int>();
    const double eps = body.at("eps").get<double>();
    const double lt = body.at("L_T").get<double>();
    for (const auto& m : body.at("models")) {
      models.push_back(std::make_shared<HardInstanceModel>(
          d, eps, lt, m.is_null() ? Vector() : vector_from_json(m)));
    }
  } else {
    throw ConfigError("class_from_json: unknown kind '" + kind + "'");
  }
  std::optional<int> true_index;
  if (j.contains("true_index") && !j.at("true_index").is_null()) true_index = j.at("true_index").get<int>();
  json provenance = {{"kind", kind}, {"seed", j.value("seed", json(0))}, {"spec", j.value("spec", json::object())}};
  ModelClass out(std::move(models), true_index, std::move(provenance));
  if (out.shape() != shape) throw ConfigError("class_from_json: header shape disagrees with body");
  return out;
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << j.dump(1) << '\n';
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
}

void save_class(const ModelClass& models, const std::string& path) {
  save_json(class_to_json(models), path);
}

ModelClass load_class(const std::string& path) { return class_from_json(load_json(path)); }

}  // namespace mfg
