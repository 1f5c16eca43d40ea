#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "hmmop/hmm.hpp"
#include "hmmop/omission.hpp"

namespace hmmop {

// Model document (see docs/schema.md):
//   {"n_states": n, "T": [[...], ...], "initial": [...],
//    "emission": {"kind": "gaussian", "params": {"means": [...], "sd": s}}
//              | {"kind": "categorical", "params": {"probs": [[...], ...]}},
//    "psi": [...]            (optional, written by fitters)}
std::string model_to_json(const HmmModel& model, const std::optional<Vector>& psi = std::nullopt);
HmmModel model_from_json(const std::string& text);
std::optional<Vector> psi_from_model_json(const std::string& text);

void write_model_file(const std::string& path, const HmmModel& model,
                      const std::optional<Vector>& psi = std::nullopt);
HmmModel read_model_file(const std::string& path);

// Dataset: JSON-lines, one {"O": [...], "W": [...]?, "N": n?, "X": [...]?} per line.
std::string sentence_to_json(const OmittedSentence& s);
OmittedSentence sentence_from_json(const std::string& line);
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void write_dataset_file(const std::string& path, const Dataset& data);
Dataset read_dataset_file(const std::string& path);

// Omission-probability vector file: {"psi": [...]} with optional
// {"known": [true, false, ...]} marking entries that are unknown.
struct PsiFile {
  Vector psi;
  std::vector<bool> known;
};
PsiFile read_psi_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// FNV-1a over the serialized dataset; used to check that methods see identical data.
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace hmmop
