#include "hmmop/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hmmop {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(what) + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string(what) + " rows have inconsistent length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json model_json(const HmmModel& model) {
  json doc;
  doc["n_states"] = model.n_states();
  doc["T"] = matrix_to_json(model.T());
  doc["initial"] = vector_to_json(model.initial());
  const auto& e = model.emission();
  if (e.is_gaussian()) {
    doc["emission"] = {{"kind", "gaussian"},
                       {"params", {{"means", vector_to_json(e.as_gaussian().means)}, {"sd", e.as_gaussian().sd}}}};
  } else {
    doc["emission"] = {{"kind", "categorical"}, {"params", {{"probs", matrix_to_json(e.as_categorical().probs)}}}};
  }
  return doc;
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string model_to_json(const HmmModel& model, const std::optional<Vector>& psi) {
  json doc = model_json(model);
  if (psi) doc["psi"] = vector_to_json(*psi);
  return doc.dump(2) + "\n";
}

HmmModel model_from_json(const std::string& text) {
  const json doc = parse(text, "model JSON");
  try {
    const int n = doc.at("n_states").get<int>();
    Matrix T = matrix_from_json(doc.at("T"), "T");
    if (T.rows() != n || T.cols() != n) throw std::invalid_argument("T does not match n_states");
    Vector initial = doc.contains("initial") ? vector_from_json(doc.at("initial"), "initial")
                                             : Vector::Constant(n, 1.0 / n);
    const json& em = doc.at("emission");
    const std::string kind = em.at("kind").get<std::string>();
    const json& params = em.at("params");
    EmissionModel emission = [&] {
      if (kind == "gaussian") {
        return EmissionModel::gaussian(vector_from_json(params.at("means"), "means"), params.at("sd").get<double>());
      }
      if (kind == "categorical") return EmissionModel::categorical(matrix_from_json(params.at("probs"), "probs"));
      throw std::invalid_argument("unknown emission kind '" + kind + "'");
    }();
    return HmmModel(TransitionMatrix(std::move(T)), std::move(emission), std::move(initial));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model JSON: ") + e.what());
  }
}

std::optional<Vector> psi_from_model_json(const std::string& text) {
  const json doc = parse(text, "model JSON");
  if (!doc.contains("psi")) return std::nullopt;
  return vector_from_json(doc.at("psi"), "psi");
}

void write_model_file(const std::string& path, const HmmModel& model, const std::optional<Vector>& psi) {
  write_text_file(path, model_to_json(model, psi));
}

HmmModel read_model_file(const std::string& path) { return model_from_json(read_text_file(path)); }

std::string sentence_to_json(const OmittedSentence& s) {
  json doc;
  doc["O"] = s.O;
  if (s.W) doc["W"] = *s.W;
  if (s.N) doc["N"] = *s.N;
  if (s.X) doc["X"] = *s.X;
  return doc.dump();
}

OmittedSentence sentence_from_json(const std::string& line) {
  const json doc = parse(line, "dataset line");
  try {
    OmittedSentence s;
    s.O = doc.at("O").get<ObsSeq>();
    if (doc.contains("W") && !doc.at("W").is_null()) s.W = doc.at("W").get<Placement>();
    if (doc.contains("N") && !doc.at("N").is_null()) s.N = doc.at("N").get<int>();
    if (doc.contains("X") && !doc.at("X").is_null()) s.X = doc.at("X").get<StateSeq>();
    validate_sentence(s);
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("dataset line: ") + e.what());
  }
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& s : data) out << sentence_to_json(s) << '\n';
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      data.push_back(sentence_from_json(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void write_dataset_file(const std::string& path, const Dataset& data) {
  std::ostringstream os;
  write_dataset(os, data);
  write_text_file(path, os.str());
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file '" + path + "'");
  return read_dataset(in);
}

PsiFile read_psi_file(const std::string& path) {
  const json doc = parse(read_text_file(path), "psi file");
  PsiFile out;
  try {
    out.psi = vector_from_json(doc.at("psi"), "psi");
    if (doc.contains("known")) {
      out.known = doc.at("known").get<std::vector<bool>>();
      if (out.known.size() != static_cast<std::size_t>(out.psi.size())) {
        throw std::invalid_argument("psi file: 'known' length differs from 'psi'");
      }
    } else {
      out.known.assign(static_cast<std::size_t>(out.psi.size()), true);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("psi file: ") + e.what());
  }
  for (Eigen::Index i = 0; i < out.psi.size(); ++i) {
    if (!(out.psi[i] >= 0.0 && out.psi[i] <= 1.0)) throw std::invalid_argument("psi file: entries must lie in [0, 1]");
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing file '" + path + "'");
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& s : data) {
    for (char c : sentence_to_json(s)) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace hmmop
