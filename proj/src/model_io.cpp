#include "mixgp/model_io.hpp"

#include <stdexcept>
#include <string>

namespace mixgp {

using nlohmann::json;

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Points& X) {
  json out = json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Points points_from_json(const json& j, Eigen::Index cols) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of points");
  if (j.empty()) return Points(0, cols < 0 ? 0 : cols);
  const Eigen::Index d = static_cast<Eigen::Index>(j[0].size());
  if (cols >= 0 && d != cols)
    throw std::invalid_argument("points must have " + std::to_string(cols) + " coordinates");
  Points X(static_cast<Eigen::Index>(j.size()), d);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from_json(j[i]);
    if (row.size() != d) throw std::invalid_argument("ragged point array at row " + std::to_string(i));
    X.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return X;
}

namespace {

std::string_view mean_name(MeanMode m) {
  switch (m) {
    case MeanMode::zero: return "zero";
    case MeanMode::fixed_constant: return "fixed_constant";
    case MeanMode::learned_constant: return "learned_constant";
  }
  return "zero";
}

MeanMode mean_from_name(const std::string& s) {
  if (s == "zero") return MeanMode::zero;
  if (s == "fixed_constant") return MeanMode::fixed_constant;
  if (s == "learned_constant") return MeanMode::learned_constant;
  throw std::invalid_argument("unknown mean mode: " + s);
}

}  // namespace

json model_to_json(const VariationalGP& model) {
  json doc;
  doc["format"] = "mixgp-model";
  doc["version"] = kModelFormatVersion;
  doc["kernel"] = {
      {"kind", model.kernel_spec.kind == KernelKind::preference ? "preference" : "rbf"},
      {"base_dim", model.kernel_spec.base_dim},
      {"log_lengthscales", to_json(model.kernel.log_lengthscales)},
      {"log_outputscale", model.kernel.log_outputscale},
  };
  doc["mean"] = {{"mode", mean_name(model.mean_mode)}, {"value", model.mean_value}};
  doc["inducing"] = to_json(model.inducing);
  doc["m_white"] = to_json(model.m_white);
  json L = json::array();
  for (Eigen::Index i = 0; i < model.L_white.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j <= i; ++j) row.push_back(model.L_white(i, j));
    L.push_back(std::move(row));
  }
  doc["L_white"] = std::move(L);
  doc["jitter"] = {{"initial", model.jitter.initial}, {"max_relative", model.jitter.max_relative}};
  if (!model.transform.identity())
    doc["input_transform"] = {{"offset", to_json(model.transform.offset)},
                              {"scale", to_json(model.transform.scale)}};
  if (model.likert) {
    doc["likert"] = {{"options", model.likert->options()},
                     {"lapse", model.likert->lapse()},
                     {"raw", to_json(model.likert->raw())},
                     {"cut_points", to_json(model.likert->cut_points())}};
  }
  return doc;
}

VariationalGP model_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "mixgp-model") throw std::invalid_argument("not a mixgp model document");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw std::invalid_argument("unsupported model format version " + std::to_string(version));
    VariationalGP m;
    const json& k = doc.at("kernel");
    const std::string kind = k.at("kind").get<std::string>();
    if (kind != "rbf" && kind != "preference") throw std::invalid_argument("unknown kernel kind: " + kind);
    m.kernel_spec = KernelSpec{kind == "preference" ? KernelKind::preference : KernelKind::rbf,
                               k.at("base_dim").get<int>()};
    m.kernel.log_lengthscales = vector_from_json(k.at("log_lengthscales"));
    m.kernel.log_outputscale = k.at("log_outputscale").get<double>();
    m.mean_mode = mean_from_name(doc.at("mean").at("mode").get<std::string>());
    m.mean_value = doc.at("mean").at("value").get<double>();
    m.inducing = points_from_json(doc.at("inducing"), m.kernel_spec.point_dim());
    m.m_white = vector_from_json(doc.at("m_white"));
    const json& L = doc.at("L_white");
    const Eigen::Index n = static_cast<Eigen::Index>(L.size());
    m.L_white = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector row = vector_from_json(L[static_cast<std::size_t>(i)]);
      if (row.size() != i + 1) throw std::invalid_argument("L_white must be stored as lower-triangular rows");
      m.L_white.row(i).head(i + 1) = row.transpose();
    }
    m.jitter.initial = doc.at("jitter").at("initial").get<double>();
    m.jitter.max_relative = doc.at("jitter").at("max_relative").get<double>();
    if (doc.contains("input_transform")) {
      m.transform.offset = vector_from_json(doc["input_transform"].at("offset"));
      m.transform.scale = vector_from_json(doc["input_transform"].at("scale"));
    }
    if (doc.contains("likert")) {
      const json& l = doc["likert"];
      m.likert = LikertLikelihood::from_raw(vector_from_json(l.at("raw")), l.at("lapse").get<double>());
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace mixgp
