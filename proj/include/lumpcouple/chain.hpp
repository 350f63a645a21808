#ifndef LUMPCOUPLE_CHAIN_HPP
#define LUMPCOUPLE_CHAIN_HPP

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lumpcouple/error.hpp"
#include "lumpcouple/scalar.hpp"
#include "lumpcouple/state_space.hpp"

namespace lumpcouple {

template <class T>
struct Entry {
  std::size_t to;
  T p;
};

template <class T>
using Row = std::vector<Entry<T>>;

/// Sparse square matrix stored by rows. Rows are kept sorted by column with
/// no explicit zeros. Not required to be stochastic (the R matrix is not).
template <class T>
class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(std::size_t n) : rows_(n) {}

  std::size_t size() const { return rows_.size(); }
  const Row<T>& row(std::size_t i) const { return rows_.at(i); }

  void set_row(std::size_t i, Row<T> r) {
    std::sort(r.begin(), r.end(), [](const Entry<T>& a, const Entry<T>& b) { return a.to < b.to; });
    Row<T> out;
    out.reserve(r.size());
    for (auto& e : r) {
      if (e.to >= rows_.size()) throw Error(ErrorKind::InvalidInput, "transition target out of range");
      if (!out.empty() && out.back().to == e.to) {
        out.back().p += e.p;
      } else {
        out.push_back(std::move(e));
      }
    }
    std::erase_if(out, [](const Entry<T>& e) { return e.p == Num<T>::zero(); });
    rows_.at(i) = std::move(out);
  }

  void set(std::size_t i, std::size_t j, const T& v) {
    Row<T> r = rows_.at(i);
    auto it = std::find_if(r.begin(), r.end(), [j](const Entry<T>& e) { return e.to == j; });
    if (it != r.end()) {
      it->p = v;
    } else {
      r.push_back({j, v});
    }
    set_row(i, std::move(r));
  }

  T at(std::size_t i, std::size_t j) const {
    const auto& r = rows_.at(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const Entry<T>& e, std::size_t c) { return e.to < c; });
    if (it != r.end() && it->to == j) return it->p;
    return Num<T>::zero();
  }

  T row_sum(std::size_t i) const {
    T s = Num<T>::zero();
    for (const auto& e : rows_.at(i)) s += e.p;
    return s;
  }

  static Kernel identity(std::size_t n) {
    Kernel k(n);
    for (std::size_t i = 0; i < n; ++i) k.rows_[i].push_back({i, Num<T>::one()});
    return k;
  }

  static Kernel from_dense(const std::vector<std::vector<T>>& m) {
    Kernel k(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i].size() != m.size()) throw Error(ErrorKind::ShapeMismatch, "dense matrix is not square");
      Row<T> r;
      for (std::size_t j = 0; j < m[i].size(); ++j) r.push_back({j, m[i][j]});
      k.set_row(i, std::move(r));
    }
    return k;
  }

  std::vector<std::vector<T>> dense() const {
    std::vector<std::vector<T>> m(size(), std::vector<T>(size(), Num<T>::zero()));
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& e : rows_[i]) m[i][e.to] = e.p;
    return m;
  }

  /// y = K x (column action).
  std::vector<T> apply(const std::vector<T>& x) const {
    std::vector<T> y(size(), Num<T>::zero());
    for (std::size_t i = 0; i < size(); ++i) {
      T s = Num<T>::zero();
      for (const auto& e : rows_[i]) s += e.p * x[e.to];
      y[i] = s;
    }
    return y;
  }

  /// y = x K (row action on a measure).
  std::vector<T> left_apply(const std::vector<T>& x) const {
    std::vector<T> y(size(), Num<T>::zero());
    for (std::size_t i = 0; i < size(); ++i) {
      if (x[i] == Num<T>::zero()) continue;
      for (const auto& e : rows_[i]) y[e.to] += x[i] * e.p;
    }
    return y;
  }

  friend bool operator==(const Kernel& a, const Kernel& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& ra = a.rows_[i];
      const auto& rb = b.rows_[i];
      if (ra.size() != rb.size()) return false;
      for (std::size_t k = 0; k < ra.size(); ++k)
        if (ra[k].to != rb[k].to || ra[k].p != rb[k].p) return false;
    }
    return true;
  }

 private:
  std::vector<Row<T>> rows_;
};

/// Largest entrywise difference between two kernels of equal size.
template <class T>
T kernel_deviation(const Kernel<T>& a, const Kernel<T>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "kernels differ in size");
  T worst = Num<T>::zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::map<std::size_t, T> diff;
    for (const auto& e : a.row(i)) diff[e.to] += e.p;
    for (const auto& e : b.row(i)) diff[e.to] -= e.p;
    for (const auto& [j, d] : diff) worst = max_of(worst, Num<T>::abs(d));
  }
  return worst;
}

/// A finite homogeneous chain MC(initial, kernel). States flagged `open` have
/// truncated rows; they occur only on the boundary of a materialized ball.
template <class T>
struct Chain {
  StateSpace space;
  std::vector<T> initial;
  Kernel<T> kernel;
  std::vector<bool> open;

  Chain() = default;
  Chain(StateSpace s, std::vector<T> init, Kernel<T> k)
      : space(std::move(s)), initial(std::move(init)), kernel(std::move(k)), open(space.size(), false) {}

  std::size_t size() const { return space.size(); }
  bool is_open(std::size_t i) const { return i < open.size() && open[i]; }
  bool has_open() const { return std::find(open.begin(), open.end(), true) != open.end(); }
};

/// Convenience constructor from dense data.
template <class T>
Chain<T> make_chain(std::vector<std::string> names, std::vector<T> initial, std::vector<std::vector<T>> dense) {
  StateSpace s(std::move(names));
  if (initial.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "initial law has wrong length");
  if (dense.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "kernel has wrong size");
  return Chain<T>(std::move(s), std::move(initial), Kernel<T>::from_dense(dense));
}

template <class T>
std::vector<T> delta_dist(std::size_t n, std::size_t at) {
  std::vector<T> d(n, Num<T>::zero());
  d.at(at) = Num<T>::one();
  return d;
}

/// Countable, locally finite chain given by a deterministic row generator.
template <class T>
struct GeneratedChain {
  using Successors = std::vector<std::pair<std::string, T>>;
  std::vector<std::pair<std::string, T>> initial;
  std::function<Successors(const std::string&)> successors;
};

/// Reachable ball of a generated chain together with BFS depths from the
/// initial support.
template <class T>
struct Ball {
  Chain<T> chain;
  std::vector<std::size_t> depth;
  std::size_t radius = 0;
};

/// Materializes every state within `radius` steps of the initial support.
/// States at depth `radius` are open: their rows are left empty.
template <class T>
Ball<T> materialize(const GeneratedChain<T>& gen, std::size_t radius) {
  StateSpace space;
  std::vector<std::size_t> depth;
  std::vector<Row<T>> rows;
  std::deque<std::size_t> queue;
  for (const auto& [s, p] : gen.initial) {
    if (!space.contains(s)) {
      space.add(s);
      depth.push_back(0);
      queue.push_back(space.size() - 1);
    }
  }
  std::vector<std::pair<std::size_t, typename GeneratedChain<T>::Successors>> expanded;
  while (!queue.empty()) {
    std::size_t i = queue.front();
    queue.pop_front();
    if (depth[i] >= radius) continue;
    auto succ = gen.successors(space.name(i));
    for (const auto& [s, p] : succ) {
      if (!space.contains(s)) {
        space.add(s);
        depth.push_back(depth[i] + 1);
        queue.push_back(space.size() - 1);
      }
    }
    expanded.emplace_back(i, std::move(succ));
  }
  Ball<T> ball;
  ball.radius = radius;
  std::vector<T> init(space.size(), Num<T>::zero());
  for (const auto& [s, p] : gen.initial) init[space.index(s)] += p;
  Kernel<T> k(space.size());
  for (auto& [i, succ] : expanded) {
    Row<T> r;
    for (const auto& [s, p] : succ) r.push_back({space.index(s), p});
    k.set_row(i, std::move(r));
  }
  ball.chain = Chain<T>(space, std::move(init), std::move(k));
  for (std::size_t i = 0; i < space.size(); ++i) ball.chain.open[i] = depth[i] >= radius;
  ball.depth = std::move(depth);
  return ball;
}

/// Chain whose kernel changes with time: steps[t] moves X_t to X_{t+1}.
template <class T>
struct InhomogeneousChain {
  StateSpace space;
  std::vector<T> initial;
  std::vector<Kernel<T>> steps;

  std::size_t size() const { return space.size(); }
};

/// Exact law of a trajectory prefix (s_0, ..., s_horizon). Trajectories are
/// index sequences into `labels`; zero-probability trajectories are absent.
template <class T>
struct FddTable {
  std::size_t horizon = 0;
  std::vector<std::string> labels;
  std::map<std::vector<std::size_t>, T> entries;

  T total() const {
    T s = Num<T>::zero();
    for (const auto& [k, v] : entries) s += v;
    return s;
  }

  T probability(const std::vector<std::size_t>& traj) const {
    auto it = entries.find(traj);
    return it == entries.end() ? Num<T>::zero() : it->second;
  }

  /// Drops the last coordinate. Requires horizon >= 1.
  FddTable marginalize_last() const {
    if (horizon == 0) throw Error(ErrorKind::InvalidInput, "cannot marginalize a horizon-0 table");
    FddTable out;
    out.horizon = horizon - 1;
    out.labels = labels;
    for (const auto& [k, v] : entries) {
      std::vector<std::size_t> key(k.begin(), k.end() - 1);
      out.entries[key] += v;
    }
    return out;
  }

  std::vector<std::string> named(const std::vector<std::size_t>& traj) const {
    std::vector<std::string> out;
    out.reserve(traj.size());
    for (auto i : traj) out.push_back(labels.at(i));
    return out;
  }

  /// Marginal law of the state at time t, keyed by label.
  std::map<std::string, T> marginal(std::size_t t) const {
    std::map<std::string, T> out;
    for (const auto& [k, v] : entries) out[labels.at(k.at(t))] += v;
    return out;
  }
};

template <class T>
struct FddDeviation {
  T value = Num<T>::zero();
  std::vector<std::string> witness;
};

/// Supremum over trajectories of |a - b|, matching trajectories by state name.
template <class T>
FddDeviation<T> fdd_deviation(const FddTable<T>& a, const FddTable<T>& b) {
  std::map<std::vector<std::string>, T> diff;
  for (const auto& [k, v] : a.entries) diff[a.named(k)] += v;
  for (const auto& [k, v] : b.entries) diff[b.named(k)] -= v;
  FddDeviation<T> out;
  for (const auto& [k, d] : diff) {
    T ad = Num<T>::abs(d);
    if (out.value < ad) {
      out.value = ad;
      out.witness = k;
    }
  }
  return out;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_CHAIN_HPP
