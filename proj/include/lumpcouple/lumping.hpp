#ifndef LUMPCOUPLE_LUMPING_HPP
#define LUMPCOUPLE_LUMPING_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/chain_ops.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/scalar.hpp"
#include "lumpcouple/state_space.hpp"

namespace lumpcouple {

/// A total map from `domain` onto `codomain` with its fibres.
struct LumpingMap {
  StateSpace domain;
  StateSpace codomain;
  std::vector<std::size_t> assign;
  std::vector<std::vector<std::size_t>> fibres;

  static LumpingMap from_assignment(StateSpace dom, StateSpace cod, std::vector<std::size_t> assignment,
                                    bool requireSurjective = true) {
    if (assignment.size() != dom.size()) throw Error(ErrorKind::ShapeMismatch, "map is not total on its domain");
    LumpingMap m;
    m.fibres.assign(cod.size(), {});
    for (std::size_t a = 0; a < assignment.size(); ++a) {
      if (assignment[a] >= cod.size()) throw Error(ErrorKind::InvalidInput, "map target out of range");
      m.fibres[assignment[a]].push_back(a);
    }
    if (requireSurjective)
      for (std::size_t c = 0; c < cod.size(); ++c)
        if (m.fibres[c].empty())
          throw Error(ErrorKind::InvalidInput, "map is not onto: '" + cod.name(c) + "' has an empty fibre");
    m.domain = std::move(dom);
    m.codomain = std::move(cod);
    m.assign = std::move(assignment);
    return m;
  }

  /// Builds from name pairs. When `codomainOrder` is empty the codomain is
  /// ordered by first appearance along the domain.
  static LumpingMap from_names(const StateSpace& dom, const std::map<std::string, std::string>& pairs,
                               const std::vector<std::string>& codomainOrder = {}, bool requireSurjective = true) {
    StateSpace cod(codomainOrder);
    std::vector<std::size_t> assignment;
    for (const auto& a : dom.names()) {
      auto it = pairs.find(a);
      if (it == pairs.end()) throw Error(ErrorKind::InvalidInput, "map has no image for '" + a + "'");
      if (codomainOrder.empty()) {
        assignment.push_back(cod.intern(it->second));
      } else {
        auto c = cod.find(it->second);
        if (!c) throw Error(ErrorKind::CodomainMismatch, "'" + it->second + "' is not in the codomain");
        assignment.push_back(*c);
      }
    }
    return from_assignment(dom, std::move(cod), std::move(assignment), requireSurjective);
  }

  static LumpingMap identity(const StateSpace& s) {
    std::vector<std::size_t> a(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) a[i] = i;
    return from_assignment(s, s, std::move(a));
  }

  static LumpingMap constant(const StateSpace& s, const std::string& target = "*") {
    return from_assignment(s, StateSpace({target}), std::vector<std::size_t>(s.size(), 0));
  }

  std::size_t operator()(std::size_t a) const { return assign.at(a); }
  const std::string& image_name(std::size_t a) const { return codomain.name(assign.at(a)); }

  /// The same map on a subset of the domain (given by names); the codomain is
  /// kept, so the result need not be onto.
  LumpingMap restrict_to(const StateSpace& sub) const {
    std::vector<std::size_t> a;
    for (const auto& n : sub.names()) a.push_back(assign.at(domain.index(n)));
    return from_assignment(sub, codomain, std::move(a), false);
  }

  /// Same assignment by name, with the codomain reordered/extended to `cod`.
  LumpingMap with_codomain(const StateSpace& cod, bool requireSurjective = false) const {
    std::vector<std::size_t> a;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      auto c = cod.find(image_name(i));
      if (!c) throw Error(ErrorKind::CodomainMismatch, "'" + image_name(i) + "' is not a state of the image chain");
      a.push_back(*c);
    }
    return from_assignment(domain, cod, std::move(a), requireSurjective);
  }

  std::map<std::string, std::string> as_names() const {
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < domain.size(); ++i) out[domain.name(i)] = image_name(i);
    return out;
  }
};

template <class T>
std::vector<T> pushforward(const std::vector<T>& dist, const LumpingMap& m) {
  std::vector<T> out(m.codomain.size(), Num<T>::zero());
  for (std::size_t a = 0; a < dist.size(); ++a) out[m(a)] += dist[a];
  return out;
}

/// Law of (f(X_0), ..., f(X_k)) by a forward pass aggregated over
/// (image prefix, current state).
template <class T>
FddTable<T> image_fdd(const Chain<T>& c, const LumpingMap& m, std::size_t horizon,
                      std::size_t cap = kDefaultTrajectoryCap) {
  if (m.domain.size() != c.size()) throw Error(ErrorKind::ShapeMismatch, "map domain does not match the chain");
  using Key = std::pair<std::vector<std::size_t>, std::size_t>;
  std::map<Key, T> layer;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] != Num<T>::zero()) layer[{{m(i)}, i}] += c.initial[i];
  for (std::size_t t = 0; t < horizon; ++t) {
    std::map<Key, T> next;
    for (const auto& [key, p] : layer) {
      std::size_t s = key.second;
      if (c.is_open(s))
        throw Error(ErrorKind::InvalidInput, "horizon reaches the truncated boundary at '" + c.space.name(s) + "'");
      for (const auto& e : c.kernel.row(s)) {
        auto prefix = key.first;
        prefix.push_back(m(e.to));
        next[{std::move(prefix), e.to}] += p * e.p;
      }
      if (next.size() > cap)
        throw Error(ErrorKind::TrajectoryBudgetExceeded,
                    "more than " + std::to_string(cap) + " image prefixes at t=" + std::to_string(t + 1));
    }
    layer = std::move(next);
  }
  FddTable<T> out;
  out.horizon = horizon;
  out.labels = m.codomain.names();
  for (const auto& [key, p] : layer) out.entries[key.first] += p;
  std::erase_if(out.entries, [](const auto& kv) { return kv.second == Num<T>::zero(); });
  return out;
}

/// sup over horizon-k trajectories of |law of f(X) - law of the image chain|.
template <class T>
FddDeviation<T> compare_image_to_chain(const Chain<T>& c, const LumpingMap& m, const Chain<T>& image,
                                       std::size_t horizon, std::size_t cap = kDefaultTrajectoryCap) {
  for (const auto& n : m.codomain.names())
    if (!image.space.contains(n))
      throw Error(ErrorKind::CodomainMismatch, "'" + n + "' is not a state of the image chain");
  return fdd_deviation(image_fdd(c, m, horizon, cap), fdd(image, horizon, cap));
}

template <class T>
struct MarkovViolation {
  std::string kind;                  // "history" or "inhomogeneous"
  std::size_t time = 0;              // index of the predicted image state
  std::vector<std::string> history;  // conditioning states at times time-L..time-1
  std::string target;
  T conditional;                     // P(target | history)
  T reference;                       // P(target | current state only)
  std::size_t referenceTime = 0;     // time of the reference prediction
};

template <class T>
struct ImageMarkovReport {
  std::size_t horizon = 0;
  bool isMarkovUpTo = true;
  std::optional<std::size_t> firstViolationTime;
  std::vector<MarkovViolation<T>> violations;

  const MarkovViolation<T>* counterexample() const { return violations.empty() ? nullptr : &violations.front(); }
};

/// Tests, for every positive-probability image history up to the horizon,
/// whether the next image state depends only on the current one, and whether
/// the one-step law is the same at every time. For each kind, the violations
/// at the first offending time are listed, for the shortest offending history.
template <class T>
ImageMarkovReport<T> image_markov_test(const Chain<T>& c, const LumpingMap& m, std::size_t horizon,
                                       double eps = kDefaultEps, std::size_t cap = kDefaultTrajectoryCap) {
  ImageMarkovReport<T> rep;
  rep.horizon = horizon;
  if (horizon == 0) return rep;
  std::vector<FddTable<T>> tables(horizon + 1);
  tables[horizon] = image_fdd(c, m, horizon, cap);
  for (std::size_t t = horizon; t-- > 0;) tables[t] = tables[t + 1].marginalize_last();
  const auto& names = m.codomain.names();

  using Cond = std::map<std::vector<std::size_t>, std::map<std::size_t, T>>;
  auto conditionals = [&](std::size_t t, std::size_t len) {
    Cond joint;
    for (const auto& [traj, p] : tables[t].entries) {
      std::vector<std::size_t> suffix(traj.end() - 1 - static_cast<std::ptrdiff_t>(len), traj.end() - 1);
      joint[suffix][traj.back()] += p;
    }
    for (auto& [suffix, row] : joint) {
      T tot = Num<T>::zero();
      for (const auto& [z, p] : row) tot += p;
      for (auto& [z, p] : row) p /= tot;
    }
    return joint;
  };
  auto label = [&](const std::vector<std::size_t>& v) {
    std::vector<std::string> out;
    for (auto i : v) out.push_back(names[i]);
    return out;
  };

  // History dependence and time dependence are scanned separately; the first
  // time with a history violation is reported when there is one.
  std::vector<MarkovViolation<T>> history, timeDep;
  std::size_t historyTime = 0, timeDepTime = 0;
  std::map<std::size_t, std::pair<std::size_t, std::map<std::size_t, T>>> firstStep;  // c -> (time, law)
  for (std::size_t t = 1; t <= horizon && (history.empty() || timeDep.empty()); ++t) {
    Cond one = conditionals(t, 1);
    for (std::size_t len = 2; len <= t && history.empty(); ++len) {
      Cond longer = conditionals(t, len);
      for (const auto& [suffix, row] : longer) {
        const auto& ref = one.at({suffix.back()});
        std::map<std::size_t, std::pair<T, T>> cmp;
        for (const auto& [z, p] : row) cmp[z].first = p;
        for (const auto& [z, p] : ref) cmp[z].second = p;
        for (const auto& [z, pr] : cmp)
          if (!Num<T>::near(pr.first, pr.second, eps))
            history.push_back({"history", t, label(suffix), names[z], pr.first, pr.second, t});
      }
      if (!history.empty()) historyTime = t;
    }
    if (!timeDep.empty()) continue;
    for (const auto& [cur, row] : one) {
      auto it = firstStep.find(cur[0]);
      if (it == firstStep.end()) {
        firstStep[cur[0]] = {t, row};
        continue;
      }
      std::map<std::size_t, std::pair<T, T>> cmp;
      for (const auto& [z, p] : row) cmp[z].first = p;
      for (const auto& [z, p] : it->second.second) cmp[z].second = p;
      for (const auto& [z, pr] : cmp)
        if (!Num<T>::near(pr.first, pr.second, eps))
          timeDep.push_back({"inhomogeneous", t, label(cur), names[z], pr.first, pr.second, it->second.first});
    }
    if (!timeDep.empty()) timeDepTime = t;
  }
  auto order = [](const auto& a, const auto& b) {
    if (a.history != b.history) return a.history < b.history;
    return a.target < b.target;
  };
  std::stable_sort(history.begin(), history.end(), order);
  std::stable_sort(timeDep.begin(), timeDep.end(), order);
  rep.violations = history;
  rep.violations.insert(rep.violations.end(), timeDep.begin(), timeDep.end());
  if (!rep.violations.empty()) {
    rep.isMarkovUpTo = false;
    rep.firstViolationTime = history.empty() ? timeDepTime : historyTime;
  }
  return rep;
}

template <class T>
struct DynkinCounterexample {
  std::string z, zNext, x1, x2;
  T sum1, sum2;
};

template <class T>
struct DynkinResult {
  bool isStrong = false;
  std::optional<Kernel<T>> imageKernel;
  std::optional<DynkinCounterexample<T>> counterexample;
};

/// Dynkin's criterion: the mass sent into each fibre is constant across the
/// source fibre. States flagged in `open` (truncated rows) are skipped.
template <class T>
DynkinResult<T> dynkin_check(const Kernel<T>& k, const LumpingMap& m, double eps = kDefaultEps,
                             const std::vector<bool>& open = {}) {
  if (k.size() != m.domain.size()) throw Error(ErrorKind::ShapeMismatch, "map domain does not match the kernel");
  const std::size_t nc = m.codomain.size();
  DynkinResult<T> res;
  Kernel<T> q(nc);
  for (std::size_t z = 0; z < nc; ++z) {
    std::optional<std::vector<T>> first;
    std::size_t firstState = 0;
    for (auto x : m.fibres[z]) {
      if (!open.empty() && open[x]) continue;
      std::vector<T> sums(nc, Num<T>::zero());
      for (const auto& e : k.row(x)) sums[m(e.to)] += e.p;
      if (!first) {
        first = sums;
        firstState = x;
        continue;
      }
      for (std::size_t z2 = 0; z2 < nc; ++z2)
        if (!Num<T>::near(sums[z2], (*first)[z2], eps)) {
          res.counterexample = DynkinCounterexample<T>{m.codomain.name(z), m.codomain.name(z2), m.domain.name(firstState),
                                                       m.domain.name(x), (*first)[z2], sums[z2]};
          return res;
        }
    }
    if (first) {
      Row<T> r;
      for (std::size_t z2 = 0; z2 < nc; ++z2) r.push_back({z2, (*first)[z2]});
      q.set_row(z, std::move(r));
    }
  }
  res.isStrong = true;
  res.imageKernel = std::move(q);
  return res;
}

/// Fibre-supported family nu[z] (dense over the domain) and image kernel Q.
template <class T>
struct ExactLumpingWitness {
  std::vector<std::vector<T>> nu;
  Kernel<T> imageKernel;

  /// Link matrix Lambda(z, x) = nu_z(x).
  std::vector<std::vector<T>> link() const { return nu; }
};

template <class T>
struct ExactResidual {
  T residual = Num<T>::zero();
  T normalizationDefect = Num<T>::zero();
  std::string z, x;
  std::size_t fibresChecked = 0;

  bool ok(double eps) const {
    return Num<T>::is_zero(residual, eps) && Num<T>::is_zero(normalizationDefect, eps);
  }
};

/// sup over (z, x') of |(nu_z P)(x') - sum_z' Q(z,z') nu_z'(x')|. Fibres whose
/// witness charges a truncated state are skipped.
template <class T>
ExactResidual<T> exact_lumping_verify(const Kernel<T>& k, const LumpingMap& m, const ExactLumpingWitness<T>& w,
                                      const std::vector<bool>& open = {}) {
  const std::size_t na = m.domain.size(), nc = m.codomain.size();
  if (k.size() != na) throw Error(ErrorKind::ShapeMismatch, "map domain does not match the kernel");
  if (w.nu.size() != nc || w.imageKernel.size() != nc)
    throw Error(ErrorKind::ShapeMismatch, "witness does not match the codomain");
  for (std::size_t z = 0; z < nc; ++z) {
    if (w.nu[z].size() != na) throw Error(ErrorKind::ShapeMismatch, "witness law has wrong length");
    for (std::size_t x = 0; x < na; ++x)
      if (w.nu[z][x] != Num<T>::zero() && m(x) != z)
        throw Error(ErrorKind::ShapeMismatch, "witness law for '" + m.codomain.name(z) + "' charges '" +
                                                  m.domain.name(x) + "' outside its fibre");
  }
  ExactResidual<T> out;
  for (std::size_t z = 0; z < nc; ++z) {
    T s = Num<T>::zero();
    for (auto v : w.nu[z]) s += v;
    out.normalizationDefect = max_of(out.normalizationDefect, Num<T>::abs(s - Num<T>::one()));
    bool skip = false;
    for (std::size_t x = 0; x < na; ++x)
      if (w.nu[z][x] != Num<T>::zero() && !open.empty() && open[x]) skip = true;
    if (skip) continue;
    ++out.fibresChecked;
    std::vector<T> lhs = k.left_apply(w.nu[z]);
    for (const auto& e : w.imageKernel.row(z))
      for (std::size_t x = 0; x < na; ++x)
        if (w.nu[e.to][x] != Num<T>::zero()) lhs[x] -= e.p * w.nu[e.to][x];
    for (std::size_t x = 0; x < na; ++x) {
      T d = Num<T>::abs(lhs[x]);
      if (out.residual < d) {
        out.residual = d;
        out.z = m.codomain.name(z);
        out.x = m.domain.name(x);
      }
    }
  }
  return out;
}

/// nu_z = stationary law restricted to the fibre, renormalized.
template <class T>
std::optional<std::vector<std::vector<T>>> stationary_fibre_family(const std::vector<T>& pi, const LumpingMap& m) {
  std::vector<std::vector<T>> nu(m.codomain.size(), std::vector<T>(m.domain.size(), Num<T>::zero()));
  for (std::size_t z = 0; z < m.codomain.size(); ++z) {
    T mass = Num<T>::zero();
    for (auto x : m.fibres[z]) mass += pi[x];
    if (!(mass > Num<T>::zero())) return std::nullopt;
    for (auto x : m.fibres[z]) nu[z][x] = pi[x] / mass;
  }
  return nu;
}

/// Q(z, z') = sum over the target fibre of (nu_z P).
template <class T>
Kernel<T> fibre_sum_kernel(const Kernel<T>& k, const LumpingMap& m, const std::vector<std::vector<T>>& nu) {
  Kernel<T> q(m.codomain.size());
  for (std::size_t z = 0; z < m.codomain.size(); ++z) {
    auto mu = k.left_apply(nu[z]);
    Row<T> r;
    for (std::size_t x = 0; x < mu.size(); ++x) r.push_back({m(x), mu[x]});
    q.set_row(z, std::move(r));
  }
  return q;
}

/// Largest deviation of alpha from the mixture sum_z (f_* alpha)(z) nu_z.
template <class T>
T admissibility_defect(const std::vector<T>& alpha, const LumpingMap& m, const std::vector<std::vector<T>>& nu) {
  auto az = pushforward(alpha, m);
  T worst = Num<T>::zero();
  for (std::size_t x = 0; x < alpha.size(); ++x)
    worst = max_of(worst, Num<T>::abs(alpha[x] - az[m(x)] * nu[m(x)][x]));
  return worst;
}

template <class T>
struct ExactDiscovery {
  std::optional<ExactLumpingWitness<T>> witness;
  T residual = Num<T>::zero();
  bool initialAdmissible = false;
  T admissibilityDefect = Num<T>::zero();
};

/// Tries the stationary-fibre candidate. An empty witness does not prove the
/// map is not an exact lumping.
template <class T>
ExactDiscovery<T> exact_lumping_discover(const Chain<T>& c, const LumpingMap& m, double eps = kDefaultEps) {
  ExactDiscovery<T> out;
  auto pi = stationary_distribution(c.kernel, eps);
  auto nu = stationary_fibre_family(pi, m);
  if (!nu) return out;
  ExactLumpingWitness<T> w{*nu, fibre_sum_kernel(c.kernel, m, *nu)};
  auto res = exact_lumping_verify(c.kernel, m, w);
  out.residual = max_of(res.residual, res.normalizationDefect);
  out.admissibilityDefect = admissibility_defect(c.initial, m, *nu);
  out.initialAdmissible = Num<T>::is_zero(out.admissibilityDefect, eps);
  if (res.ok(eps)) out.witness = std::move(w);
  return out;
}

template <class T>
struct Lift {
  Chain<T> chain;
  LumpingMap map;
};

namespace detail {

// Splits `total` over n slots in proportion to random integer weights in
// [lo, 4]; at least one weight is positive.
template <class T>
std::vector<T> random_split(std::mt19937_64& rng, const T& total, std::size_t n, unsigned lo) {
  std::vector<long> w(n);
  long sum = 0;
  while (sum == 0) {
    sum = 0;
    for (auto& v : w) {
      v = static_cast<long>(lo + rng() % (5 - lo));
      sum += v;
    }
  }
  std::vector<T> out;
  for (auto v : w) out.push_back(total * Num<T>::ratio(v, sum));
  return out;
}

}  // namespace detail

/// Random chain with fibreSizes[c] states "c.i" over each image state c whose
/// fibre sums reproduce the image kernel exactly. With `positive` every
/// allowed transition gets positive mass.
template <class T>
Lift<T> lift_strong(const Chain<T>& image, const std::vector<std::size_t>& fibreSizes, std::uint64_t seed,
                    bool positive = false) {
  if (fibreSizes.size() != image.size()) throw Error(ErrorKind::ShapeMismatch, "one fibre size per image state");
  std::mt19937_64 rng(seed);
  StateSpace s;
  std::vector<std::size_t> assignment;
  std::vector<std::vector<std::size_t>> fib(image.size());
  for (std::size_t c = 0; c < image.size(); ++c) {
    if (fibreSizes[c] == 0) throw Error(ErrorKind::InvalidInput, "fibre sizes must be positive");
    for (std::size_t i = 0; i < fibreSizes[c]; ++i) {
      fib[c].push_back(s.add(image.space.name(c) + "." + std::to_string(i)));
      assignment.push_back(c);
    }
  }
  const unsigned lo = positive ? 1 : 0;
  Kernel<T> k(s.size());
  for (std::size_t c = 0; c < image.size(); ++c)
    for (auto x : fib[c]) {
      Row<T> r;
      for (const auto& e : image.kernel.row(c)) {
        auto parts = detail::random_split(rng, e.p, fib[e.to].size(), lo);
        for (std::size_t j = 0; j < parts.size(); ++j) r.push_back({fib[e.to][j], parts[j]});
      }
      k.set_row(x, std::move(r));
    }
  std::vector<T> init(s.size(), Num<T>::zero());
  for (std::size_t c = 0; c < image.size(); ++c) {
    if (image.initial[c] == Num<T>::zero()) continue;
    auto parts = detail::random_split(rng, image.initial[c], fib[c].size(), lo);
    for (std::size_t j = 0; j < parts.size(); ++j) init[fib[c][j]] = parts[j];
  }
  auto m = LumpingMap::from_assignment(s, image.space, assignment);
  return {Chain<T>(std::move(s), std::move(init), std::move(k)), std::move(m)};
}

template <class T>
struct ExactLift {
  Chain<T> chain;
  LumpingMap map;
  ExactLumpingWitness<T> witness;
};

/// Random chain lumping exactly onto an irreducible image: the time reversal
/// of a positive strong lift of the reversed image. The witness is the
/// stationary law restricted to fibres, and the initial law is the mixture
/// of the witness laws weighted by the image's initial law.
template <class T>
ExactLift<T> lift_exact(const Chain<T>& image, const std::vector<std::size_t>& fibreSizes, std::uint64_t seed) {
  auto piZ = stationary_distribution(image.kernel);
  Chain<T> rev(image.space, piZ, time_reversal(image.kernel, piZ));
  auto lifted = lift_strong(rev, fibreSizes, seed, true);
  auto pi = stationary_distribution(lifted.chain.kernel);
  Kernel<T> k = time_reversal(lifted.chain.kernel, pi);
  auto nu = *stationary_fibre_family(pi, lifted.map);
  std::vector<T> init(pi.size(), Num<T>::zero());
  for (std::size_t x = 0; x < pi.size(); ++x) init[x] = image.initial[lifted.map(x)] * nu[lifted.map(x)][x];
  ExactLumpingWitness<T> w{nu, image.kernel};
  return {Chain<T>(lifted.chain.space, std::move(init), std::move(k)), lifted.map, std::move(w)};
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_LUMPING_HPP
