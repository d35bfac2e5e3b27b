#pragma once
// Model description files (JSON):
//   { "kind": "iid",    "probs": ["0.5", "0.5"], "rho": [["0","1"],["1","0"]] }
//   { "kind": "markov", "transition": [["0.9","0.1"],["0.2","0.8"]] }
//   { "kind": "hmm",    "transition": [[...]],   "emission": [[...]] }
// Probabilities are decimal strings (exact rationals like "1/3" are accepted
// too, as are plain JSON numbers). "rho" is optional in a model file and may
// also live in its own file, either as a bare array of arrays or under a
// "rho" key. Rows must sum to 1 within 1e-12; rows that sum to 1 exactly as
// rationals keep their exact view, which is what downstream regime ties use.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aeplab/distortion.hpp"
#include "aeplab/distribution.hpp"
#include "aeplab/process.hpp"
#include "aeplab/rational.hpp"

namespace aeplab {

struct LoadedModel {
  ProcessModel model;
  std::optional<DistortionMatrix> rho;
};

namespace detail {

inline Rational parse_entry(const nlohmann::json& j, const std::string& where) {
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  if (j.is_number()) {
    auto r = Rational::from_double(j.get<double>());
    if (!r) throw std::invalid_argument(where + ": numeric value is not exactly representable");
    return *r;
  }
  throw std::invalid_argument(where + ": expected a string or number");
}

// A probability row: exact view when the rational sum is exactly 1,
// double-only when it is merely within 1e-12, rejected otherwise.
inline FiniteDistribution parse_prob_row(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(where + ": expected a nonempty array");
  std::vector<Rational> entries;
  entries.reserve(j.size());
  for (const auto& cell : j) entries.push_back(parse_entry(cell, where));
  Rational sum(0);
  for (const auto& e : entries) {
    if (e.is_negative()) throw std::invalid_argument(where + ": negative probability");
    sum = sum + e;
  }
  if (sum == Rational(1)) return FiniteDistribution::from_rationals(entries);
  double sd = sum.value();
  if (std::fabs(sd - 1.0) > kProbSumTol)
    throw std::invalid_argument(where + ": row sums to " + std::to_string(sd) +
                                ", expected 1 within 1e-12");
  std::vector<double> probs;
  probs.reserve(entries.size());
  for (const auto& e : entries) probs.push_back(e.value());
  return FiniteDistribution(probs);
}

inline RowMatrix parse_stochastic_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(where + ": expected a nonempty array");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<Rational> entries;
  bool all_exact = true;
  std::vector<FiniteDistribution> parsed;
  parsed.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = parse_prob_row(j[i], where + " row " + std::to_string(i));
    if (i == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw std::invalid_argument(where + ": ragged rows");
    all_exact = all_exact && row.has_exact();
    parsed.push_back(std::move(row));
  }
  if (all_exact) {
    for (const auto& row : parsed)
      for (const auto& e : row.exact()) entries.push_back(e);
    return RowMatrix::from_rationals(rows, cols, std::move(entries));
  }
  std::vector<double> vals;
  vals.reserve(rows * cols);
  for (const auto& row : parsed)
    for (double p : row.probs()) vals.push_back(p);
  return RowMatrix(rows, cols, std::move(vals));
}

}  // namespace detail

inline DistortionMatrix load_rho_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() && j.contains("rho") ? j.at("rho") : j;
  if (!arr.is_array() || arr.empty() || !arr[0].is_array())
    throw std::invalid_argument("rho: expected an array of arrays");
  const std::size_t ns = arr.size();
  const std::size_t nt = arr[0].size();
  std::vector<Rational> entries;
  entries.reserve(ns * nt);
  for (std::size_t x = 0; x < ns; ++x) {
    if (!arr[x].is_array() || arr[x].size() != nt)
      throw std::invalid_argument("rho: ragged rows");
    for (std::size_t y = 0; y < nt; ++y)
      entries.push_back(detail::parse_entry(arr[x][y], "rho[" + std::to_string(x) + "]"));
  }
  return DistortionMatrix(ns, nt, std::move(entries));
}

inline LoadedModel load_model_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("model: missing field 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<DistortionMatrix> rho;
  if (j.contains("rho")) rho = load_rho_json(j.at("rho"));

  if (kind == "iid") {
    if (!j.contains("probs")) throw std::invalid_argument("model: iid requires field 'probs'");
    return {ProcessModel::iid(detail::parse_prob_row(j.at("probs"), "probs")), std::move(rho)};
  }
  if (kind == "markov") {
    if (!j.contains("transition"))
      throw std::invalid_argument("model: markov requires field 'transition'");
    return {ProcessModel::markov(detail::parse_stochastic_matrix(j.at("transition"), "transition")),
            std::move(rho)};
  }
  if (kind == "hmm") {
    if (!j.contains("transition") || !j.contains("emission"))
      throw std::invalid_argument("model: hmm requires fields 'transition' and 'emission'");
    return {ProcessModel::hmm(detail::parse_stochastic_matrix(j.at("transition"), "transition"),
                              detail::parse_stochastic_matrix(j.at("emission"), "emission")),
            std::move(rho)};
  }
  throw std::invalid_argument("model: unknown kind '" + kind + "' (expected iid, markov or hmm)");
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

inline LoadedModel load_model_file(const std::string& path) {
  return load_model_json(read_json_file(path));
}

inline DistortionMatrix load_rho_file(const std::string& path) {
  return load_rho_json(read_json_file(path));
}

}  // namespace aeplab
