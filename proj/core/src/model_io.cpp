#include "srla/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace srla {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    const auto& row = rows.at(i);
    if (static_cast<int>(row.size()) != c) {
      throw std::runtime_error("model file: ragged matrix rows");
    }
    for (int j = 0; j < c; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr.at(i).get<double>();
  return v;
}

void write_doc(const json& doc, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_model: cannot open " + file.string());
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("save_model: write failed for " + file.string());
}

json read_doc(const std::filesystem::path& file, const std::string& expected_kind) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_model: cannot open " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_model: malformed or truncated file " + file.string() +
                             " (" + e.what() + ")");
  }
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw std::runtime_error("load_model: missing format_version in " + file.string());
  }
  if (doc["format_version"].get<int>() != kFormatVersion) {
    throw std::runtime_error("load_model: unsupported format_version " +
                             doc["format_version"].dump() + " in " + file.string());
  }
  if (!expected_kind.empty() && doc.value("kind", "") != expected_kind) {
    throw std::runtime_error("load_model: expected kind '" + expected_kind + "' in " +
                             file.string() + ", found '" + doc.value("kind", "") + "'");
  }
  return doc;
}

}  // namespace

void save_model(const HmmModel& model, const std::filesystem::path& file) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "hmm";
  doc["n_states"] = model.n_states;
  doc["initial_probs"] = vector_to_json(model.initial_probs);
  doc["transition"] = matrix_to_json(model.transition);
  doc["emission_mean"] = matrix_to_json(model.emission_mean);
  doc["emission_var"] = matrix_to_json(model.emission_var);
  write_doc(doc, file);
}

HmmModel load_hmm(const std::filesystem::path& file) {
  const json doc = read_doc(file, "hmm");
  HmmModel model;
  model.n_states = doc.at("n_states").get<int>();
  model.initial_probs = vector_from_json(doc.at("initial_probs"));
  model.transition = matrix_from_json(doc.at("transition"));
  model.emission_mean = matrix_from_json(doc.at("emission_mean"));
  model.emission_var = matrix_from_json(doc.at("emission_var"));
  model.validate();
  return model;
}

void save_model(const IohmmModel& model, const std::filesystem::path& file) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "iohmm";
  doc["n_states"] = model.n_states;
  doc["initial_probs"] = vector_to_json(model.initial_probs);
  json tw = json::array();
  for (const auto& w : model.transition_weights) tw.push_back(matrix_to_json(w));
  doc["transition_weights"] = std::move(tw);
  json ew = json::array();
  for (const auto& w : model.emission_weights) ew.push_back(matrix_to_json(w));
  doc["emission_weights"] = std::move(ew);
  doc["emission_var"] = matrix_to_json(model.emission_var);
  write_doc(doc, file);
}

IohmmModel load_iohmm(const std::filesystem::path& file) {
  const json doc = read_doc(file, "iohmm");
  IohmmModel model;
  model.n_states = doc.at("n_states").get<int>();
  model.initial_probs = vector_from_json(doc.at("initial_probs"));
  for (const auto& w : doc.at("transition_weights")) {
    model.transition_weights.push_back(matrix_from_json(w));
  }
  for (const auto& w : doc.at("emission_weights")) {
    model.emission_weights.push_back(matrix_from_json(w));
  }
  model.emission_var = matrix_from_json(doc.at("emission_var"));
  model.validate();
  return model;
}

void save_model(const QFunction& model, const std::filesystem::path& file) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "qfunction";
  json ws = json::array();
  for (const auto& w : model.weights) ws.push_back(matrix_to_json(w));
  doc["weights"] = std::move(ws);
  json bs = json::array();
  for (const auto& b : model.biases) bs.push_back(vector_to_json(b));
  doc["biases"] = std::move(bs);
  write_doc(doc, file);
}

QFunction load_qfunction(const std::filesystem::path& file) {
  const json doc = read_doc(file, "qfunction");
  QFunction model;
  for (const auto& w : doc.at("weights")) model.weights.push_back(matrix_from_json(w));
  for (const auto& b : doc.at("biases")) model.biases.push_back(vector_from_json(b));
  if (model.weights.empty() || model.weights.size() != model.biases.size()) {
    throw std::runtime_error("load_model: inconsistent qfunction layers in " + file.string());
  }
  if (!model.all_finite()) {
    throw std::runtime_error("load_model: non-finite qfunction parameters in " + file.string());
  }
  return model;
}

void save_model(const Normalizer& model, const std::filesystem::path& file) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "normalizer";
  doc["normalizer_kind"] = model.kind == NormalizerKind::kStandard ? "standard" : "minmax";
  doc["setting_offset"] = vector_to_json(model.setting_offset);
  doc["setting_scale"] = vector_to_json(model.setting_scale);
  doc["sensor_offset"] = vector_to_json(model.sensor_offset);
  doc["sensor_scale"] = vector_to_json(model.sensor_scale);
  doc["setting_passthrough"] = model.setting_passthrough;
  doc["sensor_passthrough"] = model.sensor_passthrough;
  write_doc(doc, file);
}

Normalizer load_normalizer(const std::filesystem::path& file) {
  const json doc = read_doc(file, "normalizer");
  Normalizer model;
  const std::string kind = doc.at("normalizer_kind").get<std::string>();
  if (kind == "standard") {
    model.kind = NormalizerKind::kStandard;
  } else if (kind == "minmax") {
    model.kind = NormalizerKind::kMinMax;
  } else {
    throw std::runtime_error("load_model: unknown normalizer kind '" + kind + "'");
  }
  model.setting_offset = vector_from_json(doc.at("setting_offset"));
  model.setting_scale = vector_from_json(doc.at("setting_scale"));
  model.sensor_offset = vector_from_json(doc.at("sensor_offset"));
  model.sensor_scale = vector_from_json(doc.at("sensor_scale"));
  model.setting_passthrough =
      doc.at("setting_passthrough").get<std::vector<std::uint8_t>>();
  model.sensor_passthrough =
      doc.at("sensor_passthrough").get<std::vector<std::uint8_t>>();
  return model;
}

std::string peek_model_kind(const std::filesystem::path& file) {
  const json doc = read_doc(file, "");
  return doc.value("kind", "");
}

}  // namespace srla
