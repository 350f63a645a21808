#ifndef LUMPCOUPLE_STATE_SPACE_HPP
#define LUMPCOUPLE_STATE_SPACE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lumpcouple/error.hpp"

namespace lumpcouple {

/// Ordered list of unique state names. The order fixes row and column order
/// of every kernel defined over the space.
class StateSpace {
 public:
  StateSpace() = default;

  explicit StateSpace(std::vector<std::string> names) {
    for (auto& n : names) add(std::move(n));
  }

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& s) const { return index_.count(s) != 0; }

  std::size_t index(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) throw Error(ErrorKind::InvalidInput, "unknown state '" + s + "'");
    return it->second;
  }

  std::size_t add(std::string s) {
    if (index_.count(s)) throw Error(ErrorKind::InvalidInput, "duplicate state '" + s + "'");
    index_.emplace(s, names_.size());
    names_.push_back(std::move(s));
    return names_.size() - 1;
  }

  /// Returns the index of `s`, adding it first if absent.
  std::size_t intern(const std::string& s) {
    if (auto i = find(s)) return *i;
    return add(s);
  }

  friend bool operator==(const StateSpace& a, const StateSpace& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Product states are serialized as "a|b".
inline std::string pair_label(const std::string& a, const std::string& b) { return a + "|" + b; }

/// Splits a product label at its last '|', so nested products keep their
/// left factor intact.
inline std::pair<std::string, std::string> split_pair(const std::string& label) {
  auto pos = label.rfind('|');
  if (pos == std::string::npos) throw Error(ErrorKind::InvalidInput, "'" + label + "' is not a product state");
  return {label.substr(0, pos), label.substr(pos + 1)};
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_STATE_SPACE_HPP
