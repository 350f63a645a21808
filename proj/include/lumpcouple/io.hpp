#ifndef LUMPCOUPLE_IO_HPP
#define LUMPCOUPLE_IO_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/coupling.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/lumping.hpp"
#include "lumpcouple/scalar.hpp"
#include "lumpcouple/verification.hpp"

namespace lumpcouple {

using Json = nlohmann::ordered_json;

/// "p/q" strings and decimal strings are read exactly; bare JSON numbers
/// go through their shortest decimal spelling.
template <class T>
T scalar_from_json(const Json& j) {
  if (j.is_string()) return Num<T>::parse(j.get<std::string>());
  if (j.is_number_integer()) return Num<T>::ratio(j.get<long>(), 1);
  if (j.is_number_unsigned()) return Num<T>::ratio(static_cast<long>(j.get<unsigned long>()), 1);
  if (j.is_number_float()) return Num<T>::from_double(j.get<double>());
  throw Error(ErrorKind::InvalidInput, "expected a number or a \"p/q\" string, got " + j.dump());
}

/// Rationals as "p/q" strings in lowest terms, doubles as JSON numbers.
template <class T>
Json scalar_to_json(const T& v) {
  if constexpr (Num<T>::exact) {
    return Num<T>::str(v);
  } else {
    return v;
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidInput, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::InvalidInput, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline StateSpace states_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidInput, "'states' must be an array of strings");
  StateSpace s;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorKind::InvalidInput, "state identifiers must be strings");
    s.add(v.get<std::string>());
  }
  return s;
}

template <class T>
std::vector<T> dist_from_json(const Json& j, const StateSpace& s) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "a distribution must be an object state -> probability");
  std::vector<T> out(s.size(), Num<T>::zero());
  for (const auto& [k, v] : j.items()) out[s.index(k)] += scalar_from_json<T>(v);
  return out;
}

template <class T>
Json dist_to_json(const std::vector<T>& d, const StateSpace& s, bool keepZeros = false) {
  Json j = Json::object();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (keepZeros || d[i] != Num<T>::zero()) j[s.name(i)] = scalar_to_json(d[i]);
  return j;
}

inline bool looks_sparse(const Json& j, const StateSpace& s) {
  if (!j.is_array()) return false;
  for (const auto& t : j)
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
        !s.contains(t[0].get<std::string>()) || !s.contains(t[1].get<std::string>()))
      return false;
  return true;
}

}  // namespace detail

/// Dense array of rows in state order, or sparse [from, to, value] triples.
/// A document that reads as sparse is taken as sparse.
template <class T>
Kernel<T> kernel_from_json(const Json& j, const StateSpace& s) {
  Kernel<T> k(s.size());
  if (!j.is_array()) throw Error(ErrorKind::InvalidInput, "'transitions' must be an array");
  if (detail::looks_sparse(j, s)) {
    std::vector<Row<T>> rows(s.size());
    for (const auto& t : j)
      rows[s.index(t[0].get<std::string>())].push_back({s.index(t[1].get<std::string>()), scalar_from_json<T>(t[2])});
    for (std::size_t i = 0; i < s.size(); ++i) k.set_row(i, std::move(rows[i]));
    return k;
  }
  if (j.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "dense transitions need one row per state");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != s.size())
      throw Error(ErrorKind::ShapeMismatch, "dense row " + std::to_string(i) + " has the wrong length");
    Row<T> r;
    for (std::size_t c = 0; c < s.size(); ++c) r.push_back({c, scalar_from_json<T>(row[c])});
    k.set_row(i, std::move(r));
  }
  return k;
}

template <class T>
Json kernel_to_json(const Kernel<T>& k, const StateSpace& s) {
  Json j = Json::array();
  for (std::size_t i = 0; i < k.size(); ++i)
    for (const auto& e : k.row(i)) j.push_back(Json::array({s.name(i), s.name(e.to), scalar_to_json(e.p)}));
  return j;
}

template <class T>
Chain<T> chain_from_json(const Json& j) {
  auto s = detail::states_from_json(detail::require(j, "states"));
  auto init = detail::dist_from_json<T>(detail::require(j, "initial"), s);
  auto k = kernel_from_json<T>(detail::require(j, "transitions"), s);
  return Chain<T>(std::move(s), std::move(init), std::move(k));
}

template <class T>
Json chain_to_json(const Chain<T>& c) {
  Json j;
  j["states"] = c.space.names();
  j["initial"] = detail::dist_to_json(c.initial, c.space);
  j["transitions"] = kernel_to_json(c.kernel, c.space);
  return j;
}

/// {"states", "initial", "steps": [transitions, ...]}
template <class T>
InhomogeneousChain<T> inhomogeneous_from_json(const Json& j) {
  InhomogeneousChain<T> c;
  c.space = detail::states_from_json(detail::require(j, "states"));
  c.initial = detail::dist_from_json<T>(detail::require(j, "initial"), c.space);
  const auto& steps = detail::require(j, "steps");
  if (!steps.is_array()) throw Error(ErrorKind::InvalidInput, "'steps' must be an array of transition blocks");
  for (const auto& t : steps) c.steps.push_back(kernel_from_json<T>(t, c.space));
  return c;
}

template <class T>
Json inhomogeneous_to_json(const InhomogeneousChain<T>& c) {
  Json j;
  j["states"] = c.space.names();
  j["initial"] = detail::dist_to_json(c.initial, c.space);
  j["steps"] = Json::array();
  for (const auto& k : c.steps) j["steps"].push_back(kernel_to_json(k, c.space));
  return j;
}

/// Map file: object domain state -> codomain state.
inline LumpingMap map_from_json(const Json& j, const StateSpace& domain, const std::vector<std::string>& codomain = {}) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "a map must be an object state -> state");
  std::map<std::string, std::string> pairs;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(ErrorKind::InvalidInput, "map targets must be strings");
    pairs[k] = v.get<std::string>();
  }
  for (const auto& [k, v] : pairs)
    if (!domain.contains(k)) throw Error(ErrorKind::InvalidInput, "map mentions unknown state '" + k + "'");
  return LumpingMap::from_names(domain, pairs, codomain, codomain.empty());
}

inline Json map_to_json(const LumpingMap& m) {
  Json j = Json::object();
  for (std::size_t i = 0; i < m.domain.size(); ++i) j[m.domain.name(i)] = m.image_name(i);
  return j;
}

/// {"nu": {z: {x: p}}, "Q": transitions over the codomain}
template <class T>
ExactLumpingWitness<T> witness_from_json(const Json& j, const LumpingMap& m) {
  ExactLumpingWitness<T> w;
  w.nu.assign(m.codomain.size(), std::vector<T>(m.domain.size(), Num<T>::zero()));
  for (const auto& [z, law] : detail::require(j, "nu").items()) {
    auto zi = m.codomain.index(z);
    w.nu[zi] = detail::dist_from_json<T>(law, m.domain);
  }
  w.imageKernel = kernel_from_json<T>(detail::require(j, "Q"), m.codomain);
  return w;
}

template <class T>
Json witness_to_json(const ExactLumpingWitness<T>& w, const LumpingMap& m) {
  Json j;
  j["nu"] = Json::object();
  for (std::size_t z = 0; z < w.nu.size(); ++z) j["nu"][m.codomain.name(z)] = detail::dist_to_json(w.nu[z], m.domain);
  j["Q"] = kernel_to_json(w.imageKernel, m.codomain);
  return j;
}

/// Link file: {b: {a: p}}, rows indexed by B.
template <class T>
std::vector<std::vector<T>> link_from_json(const Json& j, const StateSpace& a, const StateSpace& b) {
  std::vector<std::vector<T>> link(b.size(), std::vector<T>(a.size(), Num<T>::zero()));
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "a link must be an object b -> {a: p}");
  for (const auto& [bn, row] : j.items()) link[b.index(bn)] = detail::dist_from_json<T>(row, a);
  return link;
}

template <class T>
Json link_to_json(const std::vector<std::vector<T>>& link, const StateSpace& a, const StateSpace& b) {
  Json j = Json::object();
  for (std::size_t i = 0; i < b.size(); ++i) j[b.name(i)] = detail::dist_to_json(link[i], a);
  return j;
}

inline Json phi_diag_to_json(const PhiDiagnostics& d) {
  Json j;
  j["iterations"] = d.iterations;
  j["supDiff"] = d.supDiff;
  j["residual"] = d.residual;
  j["method"] = d.method;
  return j;
}

inline PhiDiagnostics phi_diag_from_json(const Json& j) {
  PhiDiagnostics d;
  d.iterations = j.value("iterations", std::size_t{0});
  d.supDiff = j.value("supDiff", 0.0);
  d.residual = j.value("residual", 0.0);
  d.method = j.value("method", std::string());
  return d;
}

template <class T>
Json coupling_to_json(const CouplingResult<T>& c) {
  Json j;
  j["kind"] = kind_name(c.kind);
  j["states"] = c.space.names();
  j["components"] = c.components;
  j["initial"] = detail::dist_to_json(c.initial, c.space);
  j["transitions"] = kernel_to_json(c.kernel, c.space);
  if (c.reverseKernel) j["reverseTransitions"] = kernel_to_json(*c.reverseKernel, c.space);
  if (!c.timeKernels.empty()) {
    j["steps"] = Json::array();
    for (const auto& k : c.timeKernels) j["steps"].push_back(kernel_to_json(k, c.space));
  }
  std::vector<std::string> open;
  for (std::size_t i = 0; i < c.open.size(); ++i)
    if (c.open[i]) open.push_back(c.space.name(i));
  if (!open.empty()) j["open"] = open;
  j["phi"] = detail::dist_to_json(c.phiDelta, c.delta, true);
  if (c.phiRevDelta) j["phiRev"] = detail::dist_to_json(*c.phiRevDelta, c.delta, true);
  Json d;
  d["iterations"] = c.diagnostics.phi.iterations;
  d["supDiff"] = c.diagnostics.phi.supDiff;
  d["residual"] = c.diagnostics.phi.residual;
  d["method"] = c.diagnostics.phi.method;
  d["deltaSize"] = c.diagnostics.deltaSize;
  if (c.diagnostics.phiRev) d["phiRev"] = phi_diag_to_json(*c.diagnostics.phiRev);
  if (!c.diagnostics.notes.empty()) d["notes"] = c.diagnostics.notes;
  j["diagnostics"] = d;
  return j;
}

template <class T>
CouplingResult<T> coupling_from_json(const Json& j) {
  CouplingResult<T> c;
  c.kind = kind_from_name(detail::require(j, "kind").get<std::string>());
  c.space = detail::states_from_json(detail::require(j, "states"));
  if (j.contains("components")) {
    c.components = j.at("components").get<std::vector<std::vector<std::string>>>();
    if (c.components.size() != c.space.size()) throw Error(ErrorKind::ShapeMismatch, "one component list per state");
  } else {
    for (const auto& n : c.space.names()) {
      auto [a, b] = split_pair(n);
      c.components.push_back({a, b});
    }
  }
  c.initial = detail::dist_from_json<T>(detail::require(j, "initial"), c.space);
  c.kernel = kernel_from_json<T>(detail::require(j, "transitions"), c.space);
  if (j.contains("reverseTransitions")) c.reverseKernel = kernel_from_json<T>(j.at("reverseTransitions"), c.space);
  if (j.contains("steps"))
    for (const auto& s : j.at("steps")) c.timeKernels.push_back(kernel_from_json<T>(s, c.space));
  c.open.assign(c.space.size(), false);
  if (j.contains("open"))
    for (const auto& s : j.at("open")) c.open[c.space.index(s.get<std::string>())] = true;
  for (const auto& [k, v] : detail::require(j, "phi").items()) {
    c.delta.add(k);
    c.phiDelta.push_back(scalar_from_json<T>(v));
  }
  c.phi.assign(c.space.size(), Num<T>::one());
  for (std::size_t i = 0; i < c.space.size(); ++i)
    if (auto d = c.delta.find(c.space.name(i))) c.phi[i] = c.phiDelta[*d];
  if (j.contains("phiRev")) {
    std::vector<T> pr(c.delta.size(), Num<T>::zero());
    for (const auto& [k, v] : j.at("phiRev").items()) pr[c.delta.index(k)] = scalar_from_json<T>(v);
    c.phiRevDelta = pr;
    std::vector<T> onSpace;
    for (const auto& n : c.space.names()) onSpace.push_back(pr[c.delta.index(n)]);
    c.phiRev = onSpace;
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    c.diagnostics.phi = phi_diag_from_json(d);
    c.diagnostics.deltaSize = d.value("deltaSize", c.delta.size());
    if (d.contains("phiRev")) c.diagnostics.phiRev = phi_diag_from_json(d.at("phiRev"));
    if (d.contains("notes")) c.diagnostics.notes = d.at("notes").get<std::vector<std::string>>();
  }
  return c;
}

inline Json report_to_json(const VerificationReport& r) {
  Json j;
  j["ok"] = r.ok();
  j["checks"] = Json::array();
  for (const auto& c : r.checks) {
    Json e;
    e["name"] = c.name;
    e["pass"] = c.pass;
    if (c.skipped) e["skipped"] = true;
    e["deviation"] = c.deviation;
    if (!c.witness.empty()) e["witness"] = c.witness;
    if (c.pValue) e["pValue"] = *c.pValue;
    if (!c.note.empty()) e["note"] = c.note;
    j["checks"].push_back(e);
  }
  return j;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_IO_HPP
