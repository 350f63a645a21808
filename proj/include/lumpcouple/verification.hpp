#ifndef LUMPCOUPLE_VERIFICATION_HPP
#define LUMPCOUPLE_VERIFICATION_HPP

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/chain_ops.hpp"
#include "lumpcouple/coupling.hpp"
#include "lumpcouple/lumping.hpp"
#include "lumpcouple/scalar.hpp"

namespace lumpcouple {

struct Check {
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string deviation = "0";  // exact text in rational mode
  double deviationValue = 0.0;
  std::string witness;
  std::optional<double> pValue;
  std::string note;
};

struct VerificationReport {
  std::vector<Check> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || c.skipped; });
  }

  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  void append(const VerificationReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }
};

namespace detail {

inline std::string join_names(const std::vector<std::string>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

template <class T>
Check make_check(const std::string& name, const T& dev, double eps, const std::string& witness = "") {
  Check c;
  c.name = name;
  c.deviation = Num<T>::str(dev);
  c.deviationValue = Num<T>::to_double(dev);
  c.pass = Num<T>::is_zero(dev, eps);
  if (!c.pass) c.witness = witness;
  return c;
}

template <class T>
const Kernel<T>& step_kernel(const CouplingResult<T>& c, std::size_t t) {
  return t < c.timeKernels.size() ? c.timeKernels[t] : c.kernel;
}

}  // namespace detail

/// Law of the coupled trajectory (W_0..W_k), honoring time-indexed kernels.
template <class T>
FddTable<T> coupling_fdd(const CouplingResult<T>& c, std::size_t horizon, std::size_t cap = kDefaultTrajectoryCap) {
  if (c.timeKernels.empty()) return fdd(c.chain(), horizon, cap);
  FddTable<T> out;
  out.horizon = horizon;
  out.labels = c.space.names();
  std::vector<std::pair<std::vector<std::size_t>, T>> layer;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] != Num<T>::zero()) layer.push_back({{i}, c.initial[i]});
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<std::pair<std::vector<std::size_t>, T>> next;
    for (const auto& [traj, p] : layer)
      for (const auto& e : detail::step_kernel(c, t).row(traj.back())) {
        auto nt = traj;
        nt.push_back(e.to);
        next.push_back({std::move(nt), p * e.p});
      }
    if (next.size() > cap) throw Error(ErrorKind::TrajectoryBudgetExceeded, "coupled trajectories exceed the cap");
    layer = std::move(next);
  }
  for (auto& [traj, p] : layer) out.entries[traj] += p;
  return out;
}

/// Law of one factor's trajectory under the coupling, aggregated over
/// (factor prefix, coupled state).
template <class T>
FddTable<T> coupling_projection_fdd(const CouplingResult<T>& c, std::size_t factor, std::size_t horizon,
                                    std::size_t cap = kDefaultTrajectoryCap) {
  auto m = c.projection(factor);
  using Key = std::pair<std::vector<std::size_t>, std::size_t>;
  std::map<Key, T> layer;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] != Num<T>::zero()) layer[{{m(i)}, i}] += c.initial[i];
  for (std::size_t t = 0; t < horizon; ++t) {
    std::map<Key, T> next;
    for (const auto& [key, p] : layer) {
      if (c.timeKernels.empty() && !c.open.empty() && c.open[key.second])
        throw Error(ErrorKind::InvalidInput, "horizon reaches the truncated boundary");
      for (const auto& e : detail::step_kernel(c, t).row(key.second)) {
        auto prefix = key.first;
        prefix.push_back(m(e.to));
        next[{std::move(prefix), e.to}] += p * e.p;
      }
    }
    if (next.size() > cap) throw Error(ErrorKind::TrajectoryBudgetExceeded, "projected prefixes exceed the cap");
    layer = std::move(next);
  }
  FddTable<T> out;
  out.horizon = horizon;
  out.labels = m.codomain.names();
  for (const auto& [key, p] : layer) out.entries[key.first] += p;
  return out;
}

/// Law of (X_0..X_k) for a time-inhomogeneous chain.
template <class T>
FddTable<T> inhomogeneous_fdd(const InhomogeneousChain<T>& c, std::size_t horizon,
                              std::size_t cap = kDefaultTrajectoryCap) {
  CouplingResult<T> view;
  view.space = c.space;
  view.initial = c.initial;
  view.kernel = Kernel<T>::identity(c.size());
  view.timeKernels = c.steps;
  return coupling_fdd(view, horizon, cap);
}

/// Each factor's marginal trajectory law against its own chain, compared by
/// state name for every trajectory up to the horizon.
template <class T>
VerificationReport verify_marginals(const CouplingResult<T>& c, const std::vector<FddTable<T>>& marginals,
                                    std::size_t horizon, double eps = kDefaultEps) {
  VerificationReport rep;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    auto mine = coupling_projection_fdd(c, i, horizon);
    auto dev = fdd_deviation(mine, marginals[i]);
    rep.checks.push_back(detail::make_check("marginal " + std::to_string(i + 1) + " fdd", dev.value, eps,
                                            detail::join_names(dev.witness)));
  }
  return rep;
}

template <class T>
VerificationReport verify_marginals(const CouplingResult<T>& c, const Chain<T>& x, const Chain<T>& y,
                                    std::size_t horizon, double eps = kDefaultEps) {
  return verify_marginals(c, std::vector<FddTable<T>>{fdd(x, horizon), fdd(y, horizon)}, horizon, eps);
}

template <class T>
VerificationReport verify_marginals(const CouplingResult<T>& c, const InhomogeneousChain<T>& x,
                                    const InhomogeneousChain<T>& y, std::size_t horizon,
                                    double eps = kDefaultEps) {
  return verify_marginals(c, std::vector<FddTable<T>>{inhomogeneous_fdd(x, horizon), inhomogeneous_fdd(y, horizon)},
                          horizon, eps);
}

namespace detail {

// Joint law of (X_0..X_k, f(X_0)..f(X_m)) grouped by the image window.
template <class T>
std::map<std::vector<std::string>, std::vector<std::pair<std::vector<std::string>, T>>> windowed_joint(
    const Chain<T>& c, const LumpingMap& f, std::size_t k, std::size_t m, std::size_t cap) {
  struct Key {
    std::vector<std::size_t> xs, win;
    std::size_t cur;
    bool operator<(const Key& o) const { return std::tie(xs, win, cur) < std::tie(o.xs, o.win, o.cur); }
  };
  std::map<Key, T> layer;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.initial[i] != Num<T>::zero()) layer[{{i}, {f(i)}, i}] += c.initial[i];
  for (std::size_t t = 0; t < m; ++t) {
    std::map<Key, T> next;
    for (const auto& [key, p] : layer)
      for (const auto& e : c.kernel.row(key.cur)) {
        Key nk = key;
        if (t < k) nk.xs.push_back(e.to);
        nk.win.push_back(f(e.to));
        nk.cur = e.to;
        next[nk] += p * e.p;
      }
    if (next.size() > cap) throw Error(ErrorKind::TrajectoryBudgetExceeded, "windowed joint exceeds the cap");
    layer = std::move(next);
  }
  std::map<std::pair<std::vector<std::string>, std::vector<std::string>>, T> agg;
  for (const auto& [key, p] : layer) {
    std::vector<std::string> xs, win;
    for (auto i : key.xs) xs.push_back(c.space.name(i));
    for (auto i : key.win) win.push_back(f.codomain.name(i));
    agg[{win, xs}] += p;
  }
  std::map<std::vector<std::string>, std::vector<std::pair<std::vector<std::string>, T>>> out;
  for (auto& [key, p] : agg) out[key.first].push_back({key.second, p});
  return out;
}

}  // namespace detail

template <class T>
struct ConditionalIndependenceResult {
  T deviation = Num<T>::zero();
  std::size_t horizon = 0, window = 0;
  std::string witness;
};

/// Mixes, over image windows z_0..z_m drawn from the image chain, the
/// product of the conditional laws of X_0..k and Y_0..k given the window, and
/// compares the mixture with the coupled law at horizon k.
template <class T>
ConditionalIndependenceResult<T> verify_conditional_independence(const CouplingResult<T>& c, const Chain<T>& x,
                                                                 const Chain<T>& y, const Chain<T>& z,
                                                                 const LumpingMap& f, const LumpingMap& g,
                                                                 std::size_t horizon, std::size_t window,
                                                                 std::size_t cap = kDefaultTrajectoryCap) {
  if (window < horizon) throw Error(ErrorKind::InvalidInput, "window must be at least the horizon");
  auto jx = detail::windowed_joint(x, f, horizon, window, cap);
  auto jy = detail::windowed_joint(y, g, horizon, window, cap);
  auto zt = fdd(z, window, cap);
  using Pair = std::pair<std::vector<std::string>, std::vector<std::string>>;
  std::map<Pair, T> diff;
  for (const auto& [traj, pz] : zt.entries) {
    auto win = zt.named(traj);
    auto ix = jx.find(win);
    auto iy = jy.find(win);
    if (ix == jx.end() || iy == jy.end()) continue;
    T px = Num<T>::zero(), py = Num<T>::zero();
    for (const auto& [xs, p] : ix->second) px += p;
    for (const auto& [ys, p] : iy->second) py += p;
    T scale = pz / (px * py);
    for (const auto& [xs, p] : ix->second)
      for (const auto& [ys, q] : iy->second) diff[{xs, ys}] += scale * p * q;
  }
  auto ct = coupling_fdd(c, horizon, cap);
  for (const auto& [traj, p] : ct.entries) {
    Pair key;
    for (auto w : traj) {
      key.first.push_back(c.components[w][0]);
      key.second.push_back(c.components[w][1]);
    }
    diff[key] -= p;
  }
  ConditionalIndependenceResult<T> out;
  out.horizon = horizon;
  out.window = window;
  for (const auto& [key, d] : diff) {
    T ad = Num<T>::abs(d);
    if (out.deviation < ad) {
      out.deviation = ad;
      out.witness = "X=(" + detail::join_names(key.first) + ") Y=(" + detail::join_names(key.second) + ")";
    }
  }
  return out;
}

/// When f is a strong lumping: phi = 1, Delta' = Delta, P = R, and the second
/// projection is strong with image P_Y. Skipped when f is not strong.
template <class T>
VerificationReport verify_strong_projection(const CouplingResult<T>& c, const Chain<T>& x, const LumpingMap& f,
                                            const Chain<T>& y, double eps = kDefaultEps) {
  VerificationReport rep;
  auto px = prune_unreachable(x);
  auto dk = dynkin_check(px.kernel, f.restrict_to(px.space), eps);
  if (!dk.isStrong) {
    Check s;
    s.name = "strong projection";
    s.skipped = true;
    s.note = "precondition not met: the first map is not a strong lumping";
    if (dk.counterexample)
      s.note += " (from '" + dk.counterexample->x1 + "' the mass into fibre '" + dk.counterexample->zNext + "' is " +
                Num<T>::str(dk.counterexample->sum1) + ", from '" + dk.counterexample->x2 + "' it is " +
                Num<T>::str(dk.counterexample->sum2) + ")";
    rep.checks.push_back(s);
    return rep;
  }
  T phiDev = Num<T>::zero();
  for (const auto& v : c.phiDelta) phiDev = max_of(phiDev, Num<T>::abs(v - Num<T>::one()));
  rep.checks.push_back(detail::make_check("phi is identically 1", phiDev, eps));
  Check same;
  same.name = "support equals Delta";
  same.pass = c.space == c.delta;
  same.deviation = std::to_string(c.delta.size() - c.space.size());
  same.deviationValue = static_cast<double>(c.delta.size() - c.space.size());
  rep.checks.push_back(same);
  if (same.pass) {
    rep.checks.push_back(detail::make_check("P equals R", kernel_deviation(c.kernel, c.r), eps));
  } else {
    Check pr;
    pr.name = "P equals R";
    pr.note = "support differs from Delta";
    rep.checks.push_back(pr);
  }
  auto p2 = c.projection(1, &y.space);
  auto d2 = dynkin_check(c.kernel, p2, eps);
  Check st;
  st.name = "second projection strong with image P_Y";
  if (!d2.isStrong) {
    st.pass = false;
    st.note = "second projection fails Dynkin's criterion";
  } else {
    T dev = Num<T>::zero();
    for (std::size_t b = 0; b < y.size(); ++b) {
      if (p2.fibres[b].empty()) continue;
      for (std::size_t b2 = 0; b2 < y.size(); ++b2)
        dev = max_of(dev, Num<T>::abs(d2.imageKernel->at(b, b2) - y.kernel.at(b, b2)));
    }
    st = detail::make_check(st.name, dev, eps);
  }
  rep.checks.push_back(st);
  return rep;
}

enum class WitnessSide { First, Second };

/// With an exact witness nu for the map of one factor, the projection onto
/// the other factor is exact with mu_b(a,b) = nu_{g(b)}(a) phi(a,b) (and
/// symmetrically). Checks the lumping residual, the normalization of mu, and
/// that alpha is the mu-mixture of the other factor's initial law.
template <class T>
VerificationReport verify_exact_projection(const CouplingResult<T>& c, const ExactLumpingWitness<T>& witness,
                                           const LumpingMap& witnessMap, const Chain<T>& other,
                                           const LumpingMap& otherMap, WitnessSide side = WitnessSide::First,
                                           double eps = kDefaultEps) {
  const std::size_t wi = side == WitnessSide::First ? 0 : 1;  // factor carrying the witness
  const std::size_t oi = 1 - wi;                                // projection under test
  auto proj = c.projection(oi);
  const StateSpace& cod = proj.codomain;
  std::vector<std::vector<T>> mu(cod.size(), std::vector<T>(c.size(), Num<T>::zero()));
  for (std::size_t w = 0; w < c.size(); ++w) {
    const auto& own = c.components[w][wi];
    const auto& oth = c.components[w][oi];
    std::size_t zi = witnessMap.codomain.index(otherMap.image_name(otherMap.domain.index(oth)));
    mu[cod.index(oth)][w] = witness.nu[zi][witnessMap.domain.index(own)] * c.phi[w];
  }
  T normDefect = Num<T>::zero();
  for (auto& row : mu) {
    T s = Num<T>::zero();
    for (const auto& v : row) s += v;
    normDefect = max_of(normDefect, Num<T>::abs(s - Num<T>::one()));
    if (s > Num<T>::zero())
      for (auto& v : row) v /= s;
  }
  Kernel<T> q(cod.size());
  for (std::size_t b = 0; b < cod.size(); ++b) {
    std::size_t ob = other.space.index(cod.name(b));
    Row<T> row;
    for (const auto& e : other.kernel.row(ob)) {
      auto to = cod.find(other.space.name(e.to));
      if (!to) continue;
      row.push_back({*to, e.p});
    }
    q.set_row(b, std::move(row));
  }
  VerificationReport rep;
  rep.checks.push_back(detail::make_check("witness family normalized", normDefect, eps));
  auto res = exact_lumping_verify(c.kernel, proj, ExactLumpingWitness<T>{mu, q}, c.open);
  rep.checks.push_back(detail::make_check("exact lumping residual", res.residual, eps,
                                          "fibre '" + res.z + "', state '" + res.x + "'"));
  T initDev = Num<T>::zero();
  std::string where;
  for (std::size_t w = 0; w < c.size(); ++w) {
    std::size_t b = cod.index(c.components[w][oi]);
    T expected = other.initial[other.space.index(cod.name(b))] * mu[b][w];
    T d = Num<T>::abs(c.initial[w] - expected);
    if (initDev < d) {
      initDev = d;
      where = c.space.name(w);
    }
  }
  rep.checks.push_back(detail::make_check("initial law is the witness mixture", initDev, eps, where));
  return rep;
}

/// pi P = pi, and pi(w) P(w,w') = pi(w') P^rev(w',w) when a reversed kernel
/// is present.
template <class T>
VerificationReport verify_stationarity(const CouplingResult<T>& c, double eps = kDefaultEps) {
  VerificationReport rep;
  auto next = c.kernel.left_apply(c.initial);
  T dev = Num<T>::zero();
  std::string where;
  for (std::size_t i = 0; i < c.size(); ++i) {
    T d = Num<T>::abs(next[i] - c.initial[i]);
    if (dev < d) {
      dev = d;
      where = c.space.name(i);
    }
  }
  rep.checks.push_back(detail::make_check("pi P = pi", dev, eps, where));
  Check db;
  db.name = "detailed balance";
  if (!c.reverseKernel) {
    db.skipped = true;
    db.note = "no reversed kernel";
    rep.checks.push_back(db);
    return rep;
  }
  T worst = Num<T>::zero();
  std::string pair;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::map<std::size_t, T> d;
    for (const auto& e : c.kernel.row(i)) d[e.to] += c.initial[i] * e.p;
    for (std::size_t j = 0; j < c.size(); ++j) {
      T rev = c.reverseKernel->at(j, i);
      if (rev != Num<T>::zero()) d[j] -= c.initial[j] * rev;
    }
    for (const auto& [j, v] : d)
      if (worst < Num<T>::abs(v)) {
        worst = Num<T>::abs(v);
        pair = c.space.name(i) + " -> " + c.space.name(j);
      }
  }
  rep.checks.push_back(detail::make_check("detailed balance", worst, eps, pair));
  return rep;
}

/// Chi-square test of each factor's one-time marginal at t = 0..k against the
/// exact law, over n sampled coupled trajectories. Cells with expected count
/// below 5 are pooled; each test must reach p >= 1e-3 / (number of tests).
template <class T>
VerificationReport monte_carlo_check(const CouplingResult<T>& c, const std::vector<Chain<T>>& marginals,
                                     std::size_t samples, std::size_t horizon, std::uint64_t seed,
                                     double alpha = 1e-3) {
  std::mt19937_64 rng(seed);
  Chain<T> cc = c.chain();
  const std::size_t arity = marginals.size();
  // counts[i][t][name]
  std::vector<std::vector<std::map<std::string, std::size_t>>> counts(
      arity, std::vector<std::map<std::string, std::size_t>>(horizon + 1));
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<std::pair<std::size_t, T>> init;
    for (std::size_t i = 0; i < cc.size(); ++i) init.push_back({i, cc.initial[i]});
    std::size_t w = draw_index<T>(rng, init);
    for (std::size_t t = 0; t <= horizon; ++t) {
      if (t > 0) {
        const auto& row = detail::step_kernel(c, t - 1).row(w);
        std::vector<std::pair<std::size_t, T>> items;
        for (const auto& e : row) items.push_back({e.to, e.p});
        w = draw_index<T>(rng, items);
      }
      for (std::size_t i = 0; i < arity; ++i) ++counts[i][t][c.components[w][i]];
    }
  }
  struct Pending {
    std::string name;
    double chi2 = 0.0;
    std::size_t df = 0;
    bool exactMatch = true;
  };
  std::vector<Pending> tests;
  for (std::size_t i = 0; i < arity; ++i) {
    auto laws = marginal_laws(marginals[i], horizon);
    for (std::size_t t = 0; t <= horizon; ++t) {
      std::vector<std::pair<double, double>> cells;  // (expected, observed)
      double pooledE = 0.0, pooledO = 0.0;
      std::map<std::string, std::size_t> seen = counts[i][t];
      for (std::size_t s = 0; s < marginals[i].size(); ++s) {
        double e = Num<T>::to_double(laws[t][s]) * static_cast<double>(samples);
        double o = 0.0;
        auto it = seen.find(marginals[i].space.name(s));
        if (it != seen.end()) {
          o = static_cast<double>(it->second);
          seen.erase(it);
        }
        if (e >= 5.0) {
          cells.push_back({e, o});
        } else {
          pooledE += e;
          pooledO += o;
        }
      }
      for (const auto& [n, k] : seen) pooledO += static_cast<double>(k);
      if (pooledE > 0.0 || pooledO > 0.0) {
        if (pooledE < 5.0 && !cells.empty()) {
          auto sm = std::min_element(cells.begin(), cells.end());
          sm->first += pooledE;
          sm->second += pooledO;
        } else {
          cells.push_back({pooledE, pooledO});
        }
      }
      Pending p;
      p.name = "marginal " + std::to_string(i + 1) + " at t=" + std::to_string(t);
      if (cells.size() <= 1) {
        p.df = 0;
        p.exactMatch = cells.empty() || cells[0].first == cells[0].second ||
                       std::fabs(cells[0].first - cells[0].second) < 1e-6 * static_cast<double>(samples);
      } else {
        for (const auto& [e, o] : cells) p.chi2 += e > 0.0 ? (o - e) * (o - e) / e : (o > 0.0 ? 1e300 : 0.0);
        p.df = cells.size() - 1;
      }
      tests.push_back(p);
    }
  }
  std::size_t ntests = 0;
  for (const auto& p : tests) ntests += p.df > 0 ? 1 : 0;
  const double threshold = alpha / static_cast<double>(std::max<std::size_t>(1, ntests));
  VerificationReport rep;
  for (const auto& p : tests) {
    Check ch;
    ch.name = p.name;
    if (p.df == 0) {
      ch.pass = p.exactMatch;
      ch.pValue = p.exactMatch ? 1.0 : 0.0;
      ch.note = "single cell";
    } else {
      double pv = p.chi2 >= 1e300 ? 0.0 : boost::math::gamma_q(static_cast<double>(p.df) / 2.0, p.chi2 / 2.0);
      ch.pValue = pv;
      ch.pass = pv >= threshold;
      ch.deviationValue = p.chi2;
      ch.deviation = Num<double>::str(p.chi2);
      ch.note = "chi2 with " + std::to_string(p.df) + " df, threshold " + Num<double>::str(threshold);
    }
    rep.checks.push_back(ch);
  }
  return rep;
}

template <class T>
struct JointLawResult {
  T deviation = Num<T>::zero();
  std::size_t trajectories = 0;
  std::string witness;
};

/// Coupled trajectory probabilities against the closed form
/// (alpha_X(a_0) alpha_Y(b_0) / alpha_Z(c_0)) * prod R * phi(w_k), with the
/// start weight multiplied by phi^rev(w_0) for stationary couplings. R is
/// rebuilt here directly from the input kernels.
template <class T>
JointLawResult<T> verify_joint_law(const CouplingResult<T>& c, const Chain<T>& x, const Chain<T>& y,
                                   const Chain<T>& z, const LumpingMap& f, const LumpingMap& g,
                                   std::size_t horizon, std::size_t cap = kDefaultTrajectoryCap) {
  std::map<std::string, T> phi, phiRev;
  for (std::size_t w = 0; w < c.delta.size(); ++w) {
    phi[c.delta.name(w)] = c.phiDelta.at(w);
    if (c.phiRevDelta) phiRev[c.delta.name(w)] = c.phiRevDelta->at(w);
  }
  auto img = [&](const LumpingMap& m, const std::string& s) { return z.space.index(m.image_name(m.domain.index(s))); };
  struct Path {
    std::vector<std::string> labels;
    std::size_t a, b;
    T weight;
  };
  std::vector<Path> layer;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = 0; b < y.size(); ++b) {
      if (!(x.initial[a] > Num<T>::zero()) || !(y.initial[b] > Num<T>::zero())) continue;
      std::size_t ca = img(f, x.space.name(a)), cb = img(g, y.space.name(b));
      if (ca != cb || !(z.initial[ca] > Num<T>::zero())) continue;
      std::string l = pair_label(x.space.name(a), y.space.name(b));
      T w = x.initial[a] * y.initial[b] / z.initial[ca];
      if (c.phiRevDelta) w *= phiRev.count(l) ? phiRev[l] : Num<T>::zero();
      if (w == Num<T>::zero()) continue;
      layer.push_back({{l}, a, b, w});
    }
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<Path> next;
    for (const auto& p : layer) {
      std::size_t cz = img(f, x.space.name(p.a));
      for (const auto& ex : x.kernel.row(p.a)) {
        std::size_t cz2 = img(f, x.space.name(ex.to));
        T pz = z.kernel.at(cz, cz2);
        if (!(pz > Num<T>::zero())) continue;
        for (const auto& ey : y.kernel.row(p.b)) {
          if (img(g, y.space.name(ey.to)) != cz2) continue;
          Path q = p;
          q.labels.push_back(pair_label(x.space.name(ex.to), y.space.name(ey.to)));
          q.a = ex.to;
          q.b = ey.to;
          q.weight = p.weight * ex.p * ey.p / pz;
          next.push_back(std::move(q));
        }
      }
      if (next.size() > cap) throw Error(ErrorKind::TrajectoryBudgetExceeded, "R-paths exceed the cap");
    }
    layer = std::move(next);
  }
  std::map<std::vector<std::string>, T> diff;
  for (const auto& p : layer) {
    auto it = phi.find(p.labels.back());
    T v = p.weight * (it == phi.end() ? Num<T>::zero() : it->second);
    if (v != Num<T>::zero()) diff[p.labels] += v;
  }
  auto ct = coupling_fdd(c, horizon, cap);
  for (const auto& [traj, p] : ct.entries) diff[ct.named(traj)] -= p;
  JointLawResult<T> out;
  out.trajectories = diff.size();
  for (const auto& [k, d] : diff) {
    T ad = Num<T>::abs(d);
    if (out.deviation < ad) {
      out.deviation = ad;
      out.witness = detail::join_names(k, " ");
    }
  }
  return out;
}

/// phi(a,b) <= alpha'_Z(c) / (alpha'_X(a) alpha'_Y(b)) for the geometric
/// smoothings (truncated at N with the tail added to the numerator), and
/// phi(w) = 0 with R(w,w') > 0 forces phi(w') = 0.
template <class T>
VerificationReport check_phi_invariants(const CouplingResult<T>& c, const Chain<T>& x, const Chain<T>& y,
                                        const Chain<T>& z, const LumpingMap& f, std::size_t truncation,
                                        double eps = kDefaultEps) {
  auto sx = geometric_smoothing(x, truncation);
  auto sy = geometric_smoothing(y, truncation);
  auto sz = geometric_smoothing(z, truncation);
  const T mass = Num<T>::one() - sx.tailMass;
  VerificationReport rep;
  T worst = Num<T>::zero();
  std::string where;
  for (std::size_t w = 0; w < c.delta.size(); ++w) {
    auto [a, b] = split_pair(c.delta.name(w));
    T ax = sx.dist[x.space.index(a)] * mass;
    T ay = sy.dist[y.space.index(b)] * mass;
    if (!(ax > Num<T>::zero()) || !(ay > Num<T>::zero())) continue;
    T az = sz.dist[z.space.index(f.image_name(f.domain.index(a)))] * mass + sz.tailMass;
    T excess = c.phiDelta[w] - az / (ax * ay);
    if (worst < excess) {
      worst = excess;
      where = c.delta.name(w);
    }
  }
  rep.checks.push_back(detail::make_check("phi upper bound", worst, eps, where));
  T leak = Num<T>::zero();
  std::string leakAt;
  for (std::size_t w = 0; w < c.delta.size(); ++w) {
    if (!Num<T>::is_zero(c.phiDelta[w], eps)) continue;
    for (const auto& e : c.r.row(w))
      if (e.p > Num<T>::zero() && leak < Num<T>::abs(c.phiDelta[e.to])) {
        leak = Num<T>::abs(c.phiDelta[e.to]);
        leakAt = c.delta.name(w) + " -> " + c.delta.name(e.to);
      }
  }
  rep.checks.push_back(detail::make_check("zero propagation", leak, eps, leakAt));
  return rep;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_VERIFICATION_HPP
