#ifndef LUMPCOUPLE_CHAIN_OPS_HPP
#define LUMPCOUPLE_CHAIN_OPS_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/linalg.hpp"
#include "lumpcouple/scalar.hpp"

namespace lumpcouple {

inline constexpr std::size_t kDefaultTrajectoryCap = 1000000;

struct ValidationIssue {
  std::string kind;  // row-sum | negative-entry | initial-sum | initial-negative | shape
  std::string state;
  double defect = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

/// Checks stochasticity of every closed row and of the initial law.
template <class T>
ValidationReport validate_chain(const Chain<T>& c, double eps = kDefaultEps) {
  ValidationReport rep;
  if (c.initial.size() != c.size() || c.kernel.size() != c.size()) {
    rep.issues.push_back({"shape", "", 0.0, "initial law or kernel does not match the state space"});
    return rep;
  }
  T isum = Num<T>::zero();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.initial[i] < Num<T>::zero())
      rep.issues.push_back({"initial-negative", c.space.name(i), Num<T>::to_double(c.initial[i]), "negative initial mass"});
    isum += c.initial[i];
  }
  T idef = Num<T>::abs(isum - Num<T>::one());
  if (!Num<T>::is_zero(idef, eps))
    rep.issues.push_back({"initial-sum", "", Num<T>::to_double(idef), "initial law sums to " + Num<T>::str(isum)});
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (const auto& e : c.kernel.row(i))
      if (e.p < Num<T>::zero())
        rep.issues.push_back({"negative-entry", c.space.name(i), Num<T>::to_double(e.p),
                              "negative transition to '" + c.space.name(e.to) + "'"});
    if (c.is_open(i)) continue;
    T s = c.kernel.row_sum(i);
    T def = Num<T>::abs(s - Num<T>::one());
    if (!Num<T>::is_zero(def, eps))
      rep.issues.push_back({"row-sum", c.space.name(i), Num<T>::to_double(def), "row sums to " + Num<T>::str(s)});
  }
  return rep;
}

/// States reachable with positive probability from the initial support.
template <class T>
std::vector<bool> reachable_mask(const Chain<T>& c) {
  std::vector<bool> seen(c.size(), false);
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] > Num<T>::zero()) {
      seen[i] = true;
      q.push_back(i);
    }
  while (!q.empty()) {
    std::size_t i = q.front();
    q.pop_front();
    for (const auto& e : c.kernel.row(i))
      if (e.p > Num<T>::zero() && !seen[e.to]) {
        seen[e.to] = true;
        q.push_back(e.to);
      }
  }
  return seen;
}

/// Restriction of a chain to the states flagged in `keep`, in original order.
template <class T>
Chain<T> restrict_chain(const Chain<T>& c, const std::vector<bool>& keep) {
  std::vector<std::size_t> newIndex(c.size(), SIZE_MAX);
  StateSpace s;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (keep[i]) newIndex[i] = s.add(c.space.name(i));
  std::vector<T> init;
  std::vector<bool> open;
  Kernel<T> k(s.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!keep[i]) continue;
    init.push_back(c.initial[i]);
    open.push_back(c.is_open(i));
    Row<T> r;
    for (const auto& e : c.kernel.row(i))
      if (keep[e.to]) r.push_back({newIndex[e.to], e.p});
    k.set_row(newIndex[i], std::move(r));
  }
  Chain<T> out(std::move(s), std::move(init), std::move(k));
  out.open = std::move(open);
  return out;
}

/// Drops states never visited from the initial law.
template <class T>
Chain<T> prune_unreachable(const Chain<T>& c) {
  auto keep = reachable_mask(c);
  if (std::find(keep.begin(), keep.end(), true) == keep.end())
    throw Error(ErrorKind::CorruptInput, "initial law has no mass on any state");
  return restrict_chain(c, keep);
}

/// Strongly connected components (iterative Tarjan). comp[i] is the
/// component id of state i; returns the number of components.
template <class T>
std::size_t strongly_connected(const Kernel<T>& k, std::vector<std::size_t>& comp) {
  const std::size_t n = k.size();
  const std::size_t none = SIZE_MAX;
  std::vector<std::size_t> index(n, none), low(n, 0), stack;
  std::vector<bool> onStack(n, false);
  comp.assign(n, none);
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != none) continue;
    std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
    while (!work.empty()) {
      auto& [v, pos] = work.back();
      if (pos == 0) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        onStack[v] = true;
      }
      const auto& row = k.row(v);
      bool descended = false;
      while (pos < row.size()) {
        std::size_t w = row[pos].to;
        ++pos;
        if (!(row[pos - 1].p > Num<T>::zero())) continue;
        if (index[w] == none) {
          work.push_back({w, 0});
          descended = true;
          break;
        }
        if (onStack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      std::size_t vv = v;
      if (low[vv] == index[vv]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          onStack[w] = false;
          comp[w] = ncomp;
        } while (w != vv);
        ++ncomp;
      }
      work.pop_back();
      if (!work.empty()) {
        std::size_t parent = work.back().first;
        low[parent] = std::min(low[parent], low[vv]);
      }
    }
  }
  return ncomp;
}

/// Components that no positive transition leaves.
template <class T>
std::vector<std::size_t> closed_classes(const Kernel<T>& k, std::vector<std::size_t>& comp) {
  std::size_t nc = strongly_connected(k, comp);
  std::vector<bool> closed(nc, true);
  for (std::size_t i = 0; i < k.size(); ++i)
    for (const auto& e : k.row(i))
      if (e.p > Num<T>::zero() && comp[e.to] != comp[i]) closed[comp[i]] = false;
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < nc; ++c)
    if (closed[c]) out.push_back(c);
  return out;
}

/// Unique stationary law of a kernel with a single recurrent class.
template <class T>
std::vector<T> stationary_distribution(const Kernel<T>& k, double eps = kDefaultEps) {
  const std::size_t n = k.size();
  if (n == 0) throw Error(ErrorKind::InvalidInput, "empty kernel");
  std::vector<std::size_t> comp;
  auto closed = closed_classes(k, comp);
  if (closed.size() != 1)
    throw Error(ErrorKind::NotIrreducible, std::to_string(closed.size()) + " recurrent classes");
  if constexpr (!Num<T>::exact) {
    // Lazy power iteration avoids periodicity; a direct solve backs it up.
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < 200000; ++it) {
      auto next = k.left_apply(pi);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::fabs(next[i] - pi[i]));
      if (res < eps * 0.01) {
        double s = 0.0;
        for (auto v : pi) s += v;
        for (auto& v : pi) v /= s;
        return pi;
      }
      for (std::size_t i = 0; i < n; ++i) pi[i] = 0.5 * (pi[i] + next[i]);
    }
  }
  std::vector<std::vector<T>> a(n, std::vector<T>(n, Num<T>::zero()));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : k.row(i)) a[e.to][i] += e.p;
    a[i][i] -= Num<T>::one();
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = Num<T>::one();
  std::vector<T> b(n, Num<T>::zero());
  b[n - 1] = Num<T>::one();
  auto x = solve_linear(std::move(a), std::move(b));
  if (!x) throw Error(ErrorKind::NotIrreducible, "stationary equations are singular");
  for (auto& v : *x)
    if (v < Num<T>::zero()) v = Num<T>::zero();
  return *x;
}

/// max_j |(pi P)_j - pi_j|
template <class T>
T stationarity_residual(const Kernel<T>& k, const std::vector<T>& pi) {
  auto next = k.left_apply(pi);
  T worst = Num<T>::zero();
  for (std::size_t i = 0; i < pi.size(); ++i) worst = max_of(worst, Num<T>::abs(next[i] - pi[i]));
  return worst;
}

/// P^rev(x,x') = pi(x') P(x',x) / pi(x). Requires full support and pi P = pi.
template <class T>
Kernel<T> time_reversal(const Kernel<T>& k, const std::vector<T>& pi, double eps = kDefaultEps) {
  if (pi.size() != k.size()) throw Error(ErrorKind::ShapeMismatch, "stationary law has wrong length");
  T res = stationarity_residual(k, pi);
  if (!Num<T>::is_zero(res, eps * 100))
    throw Error(ErrorKind::NotStationary, "pi P differs from pi by " + Num<T>::str(res));
  for (const auto& v : pi)
    if (!Num<T>::is_positive(v, 0.0)) throw Error(ErrorKind::NotStationary, "stationary law lacks full support");
  std::vector<Row<T>> rows(k.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    for (const auto& e : k.row(i)) rows[e.to].push_back({i, pi[i] * e.p / pi[e.to]});
  Kernel<T> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out.set_row(i, std::move(rows[i]));
  return out;
}

/// Exact law of (X_0..X_horizon). Throws TrajectoryBudgetExceeded once more
/// than `cap` positive-probability trajectories would be held.
template <class T>
FddTable<T> fdd(const Chain<T>& c, std::size_t horizon, std::size_t cap = kDefaultTrajectoryCap) {
  FddTable<T> out;
  out.horizon = horizon;
  out.labels = c.space.names();
  std::vector<std::pair<std::vector<std::size_t>, T>> layer;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] != Num<T>::zero()) layer.push_back({{i}, c.initial[i]});
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<std::pair<std::vector<std::size_t>, T>> next;
    for (const auto& [traj, p] : layer) {
      std::size_t s = traj.back();
      if (c.is_open(s))
        throw Error(ErrorKind::InvalidInput, "horizon reaches the truncated boundary at '" + c.space.name(s) + "'");
      for (const auto& e : c.kernel.row(s)) {
        auto nt = traj;
        nt.push_back(e.to);
        next.push_back({std::move(nt), p * e.p});
        if (next.size() > cap)
          throw Error(ErrorKind::TrajectoryBudgetExceeded, "more than " + std::to_string(cap) + " trajectories at t=" +
                                                               std::to_string(t + 1));
      }
    }
    layer = std::move(next);
  }
  for (auto& [traj, p] : layer) out.entries[traj] += p;
  return out;
}

/// Laws of X_0, ..., X_horizon.
template <class T>
std::vector<std::vector<T>> marginal_laws(const Chain<T>& c, std::size_t horizon) {
  std::vector<std::vector<T>> out{c.initial};
  for (std::size_t t = 0; t < horizon; ++t) out.push_back(c.kernel.left_apply(out.back()));
  return out;
}

template <class T>
struct SmoothedLaw {
  std::vector<T> dist;
  T tailMass;
};

/// sum_{n<=N} 2^{-n-1} alpha P^n, renormalized; tailMass is 2^{-(N+1)}.
template <class T>
SmoothedLaw<T> geometric_smoothing(const Chain<T>& c, std::size_t truncation) {
  std::vector<T> acc(c.size(), Num<T>::zero());
  std::vector<T> cur = c.initial;
  T w = Num<T>::ratio(1, 2);
  T mass = Num<T>::zero();
  for (std::size_t n = 0; n <= truncation; ++n) {
    for (std::size_t i = 0; i < c.size(); ++i) acc[i] += w * cur[i];
    mass += w;
    w /= 2;
    if (n < truncation) cur = c.kernel.left_apply(cur);
  }
  for (auto& v : acc) v /= mass;
  return {acc, Num<T>::one() - mass};
}

/// Uniform draw in [0,1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T, class Support>
std::size_t draw_index(std::mt19937_64& rng, const Support& items) {
  double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = SIZE_MAX;
  for (const auto& [idx, p] : items) {
    double w = Num<T>::to_double(p);
    if (w <= 0.0) continue;
    acc += w;
    last = idx;
    if (u < acc) return idx;
  }
  if (last == SIZE_MAX) throw Error(ErrorKind::InvalidInput, "cannot sample from an empty row");
  return last;
}

/// One trajectory of length horizon+1, deterministic given the generator state.
template <class T>
std::vector<std::size_t> sample_trajectory(const Chain<T>& c, std::size_t horizon, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, T>> init;
  for (std::size_t i = 0; i < c.size(); ++i) init.push_back({i, c.initial[i]});
  std::vector<std::size_t> traj{draw_index<T>(rng, init)};
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto& row = c.kernel.row(traj.back());
    std::vector<std::pair<std::size_t, T>> items;
    items.reserve(row.size());
    for (const auto& e : row) items.push_back({e.to, e.p});
    traj.push_back(draw_index<T>(rng, items));
  }
  return traj;
}

template <class T>
std::vector<std::size_t> sample_trajectory(const Chain<T>& c, std::size_t horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_trajectory(c, horizon, rng);
}

/// Converts a chain between scalar types (exact -> float for cross-checks).
template <class U, class T>
Chain<U> convert_chain(const Chain<T>& c) {
  std::vector<U> init;
  for (const auto& v : c.initial) init.push_back(Num<U>::from_double(Num<T>::to_double(v)));
  Kernel<U> k(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    Row<U> r;
    for (const auto& e : c.kernel.row(i)) r.push_back({e.to, Num<U>::from_double(Num<T>::to_double(e.p))});
    k.set_row(i, std::move(r));
  }
  Chain<U> out(c.space, std::move(init), std::move(k));
  out.open = c.open;
  return out;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_CHAIN_OPS_HPP
