#ifndef LUMPCOUPLE_COUPLING_VARIANTS_HPP
#define LUMPCOUPLE_COUPLING_VARIANTS_HPP

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/chain_ops.hpp"
#include "lumpcouple/coupling.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/lumping.hpp"
#include "lumpcouple/scalar.hpp"

namespace lumpcouple {

namespace detail {

// P^rev on the support of pi; rows of states outside the support are empty.
template <class T>
Kernel<T> reverse_on_support(const Kernel<T>& k, const std::vector<T>& pi) {
  std::vector<Row<T>> rows(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(pi[i] > Num<T>::zero())) continue;
    for (const auto& e : k.row(i))
      if (pi[e.to] > Num<T>::zero()) rows[e.to].push_back({i, pi[i] * e.p / pi[e.to]});
  }
  Kernel<T> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out.set_row(i, std::move(rows[i]));
  return out;
}

template <class T>
void require_stationary(const Chain<T>& c, const char* which, double tol) {
  T res = stationarity_residual(c.kernel, c.initial);
  if (!Num<T>::is_zero(res, tol))
    throw Error(ErrorKind::NotStationary,
                std::string(which) + "'s initial law is not stationary (residual " + Num<T>::str(res) + ")");
}

}  // namespace detail

/// Stationary coupling MC(pi, P) on Delta'' = {phi > 0, phi^rev > 0} with
/// pi = pi_X pi_Y phi phi^rev / pi_Z. The initial laws of x, y, z must be
/// stationary. The reversed coupled kernel is returned alongside.
template <class T>
CouplingResult<T> build_stationary_coupling(const Chain<T>& x, const Chain<T>& y, const Chain<T>& z,
                                            const LumpingMap& f, const LumpingMap& g,
                                            const CouplingOptions& o = {}) {
  const double stol = Num<T>::exact ? 0.0 : o.normalizationTol;
  detail::require_stationary(x, "X", stol);
  detail::require_stationary(y, "Y", stol);
  detail::require_stationary(z, "Z", stol);
  auto p = detail::prepare(x, y, z, f, g, o);
  auto xr = detail::reverse_on_support(p.x.kernel, p.x.initial);
  auto yr = detail::reverse_on_support(p.y.kernel, p.y.initial);
  auto zr = detail::reverse_on_support(p.z.kernel, p.z.initial);
  Kernel<T> rr = build_R(xr, yr, zr, p.delta, p.f, p.g);
  auto phi = iterate_phi(p.r, o.phi);
  auto phiRev = iterate_phi(rr, o.phi);

  CouplingResult<T> out;
  out.kind = CouplingKind::Stationary;
  out.delta = p.delta.space;
  out.r = p.r;
  out.phiDelta = phi.values;
  out.phiRevDelta = phiRev.values;
  out.diagnostics.phi = phi_diagnostics(phi);
  out.diagnostics.phiRev = phi_diagnostics(phiRev);
  out.diagnostics.deltaSize = p.delta.size();

  std::vector<std::size_t> keep, newIndex(p.delta.size(), SIZE_MAX);
  for (std::size_t w = 0; w < p.delta.size(); ++w)
    if (detail::positive_phi(phi.values[w], o) && detail::positive_phi(phiRev.values[w], o)) {
      newIndex[w] = keep.size();
      keep.push_back(w);
    }
  std::vector<T> pr;
  for (auto w : keep) {
    out.space.add(p.delta.space.name(w));
    out.components.push_back(detail::components_of(p, w));
    out.phi.push_back(phi.values[w]);
    pr.push_back(phiRev.values[w]);
    auto [a, b] = p.delta.pairs[w];
    out.initial.push_back(p.x.initial[a] * p.y.initial[b] * phi.values[w] * phiRev.values[w] /
                          p.z.initial[p.delta.image[w]]);
  }
  out.phiRev = pr;
  auto restricted = [&](const Kernel<T>& r, const std::vector<T>& h) {
    Kernel<T> k(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      Row<T> row;
      for (const auto& e : r.row(keep[i]))
        if (newIndex[e.to] != SIZE_MAX) row.push_back({newIndex[e.to], e.p * h[e.to] / h[keep[i]]});
      k.set_row(i, std::move(row));
    }
    return k;
  };
  out.kernel = restricted(p.r, phi.values);
  out.reverseKernel = restricted(rr, phiRev.values);
  out.open.assign(keep.size(), false);
  detail::check_normalization(out.initial, out.kernel, out.space, out.open, o);
  detail::check_normalization(out.initial, *out.reverseKernel, out.space, out.open, o);

  const double tol = Num<T>::exact ? 0.0 : o.normalizationTol;
  T res = stationarity_residual(out.kernel, out.initial);
  if (!Num<T>::is_zero(res, tol))
    throw Error(ErrorKind::NotStationary, "coupled law is not stationary (residual " + Num<T>::str(res) + ")");
  for (std::size_t i = 0; i < out.size(); ++i)
    for (const auto& e : out.kernel.row(i)) {
      T lhs = out.initial[i] * e.p;
      T rhs = out.initial[e.to] * out.reverseKernel->at(e.to, i);
      if (!Num<T>::near(lhs, rhs, tol))
        throw Error(ErrorKind::NotStationary, "detailed balance fails between '" + out.space.name(i) + "' and '" +
                                                  out.space.name(e.to) + "'");
    }
  return out;
}

struct Absorbers {
  std::string a, b, c;
};

/// Absorption probability lambda of a quasistationary chain, after checking
/// P(X_t != rho) = (1-lambda)^t and a time-invariant conditional law for
/// t = 1..checks.
template <class T>
T quasistationary_lambda(const Chain<T>& c, const std::string& rhoName, const char* which, double eps,
                         std::size_t checks = 5) {
  auto rho = c.space.find(rhoName);
  if (!rho) throw Error(ErrorKind::NotQuasistationary, std::string(which) + ": unknown absorber '" + rhoName + "'");
  const auto& row = c.kernel.row(*rho);
  if (row.size() != 1 || row[0].to != *rho || row[0].p != Num<T>::one())
    throw Error(ErrorKind::NotQuasistationary, std::string(which) + ": '" + rhoName + "' is not absorbing");
  if (c.initial[*rho] != Num<T>::zero())
    throw Error(ErrorKind::NotQuasistationary, std::string(which) + ": initial law charges the absorber");
  auto laws = marginal_laws(c, checks);
  T lambda = laws[1][*rho];
  if (!(lambda > Num<T>::zero()) || !(lambda < Num<T>::one()))
    throw Error(ErrorKind::NotQuasistationary, std::string(which) + ": absorption probability " +
                                                   Num<T>::str(lambda) + " is not in (0,1)");
  T surv = Num<T>::one();
  for (std::size_t t = 1; t <= checks; ++t) {
    surv *= (Num<T>::one() - lambda);
    T alive = Num<T>::one() - laws[t][*rho];
    if (!Num<T>::near(alive, surv, eps))
      throw Error(ErrorKind::NotQuasistationary,
                  std::string(which) + ": P(X_" + std::to_string(t) + " != rho) = " + Num<T>::str(alive));
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i == *rho) continue;
      if (!Num<T>::near(T(laws[t][i] / surv), c.initial[i], eps))
        throw Error(ErrorKind::NotQuasistationary, std::string(which) + ": conditional law at t=" +
                                                       std::to_string(t) + " differs at '" + c.space.name(i) + "'");
    }
  }
  return lambda;
}

/// Quasistationary coupling: couple the chains whose absorber restarts from
/// the quasistationary law in stationarity, then make the absorbing pair
/// absorbing again and start from the normalized law off it.
template <class T>
CouplingResult<T> build_quasistationary_coupling(const Chain<T>& x, const Chain<T>& y, const Chain<T>& z,
                                                 const LumpingMap& f, const LumpingMap& g, const Absorbers& rho,
                                                 const CouplingOptions& o = {}) {
  const double tol = Num<T>::exact ? 0.0 : std::max(o.eps, 1e-12);
  T lx = quasistationary_lambda(x, rho.a, "X", tol);
  T ly = quasistationary_lambda(y, rho.b, "Y", tol);
  T lz = quasistationary_lambda(z, rho.c, "Z", tol);
  if (!Num<T>::near(lx, lz, tol) || !Num<T>::near(ly, lz, tol))
    throw Error(ErrorKind::AbsorptionMismatch, "absorption probabilities " + Num<T>::str(lx) + ", " +
                                                   Num<T>::str(ly) + ", " + Num<T>::str(lz) + " differ");
  auto fz = f.with_codomain(z.space);
  auto gz = g.with_codomain(z.space);
  std::size_t rc = z.space.index(rho.c);
  if (fz.fibres[rc] != std::vector<std::size_t>{x.space.index(rho.a)})
    throw Error(ErrorKind::NotQuasistationary, "the absorber of X must be the only lift of the image absorber");
  if (gz.fibres[rc] != std::vector<std::size_t>{y.space.index(rho.b)})
    throw Error(ErrorKind::NotQuasistationary, "the absorber of Y must be the only lift of the image absorber");

  auto restart = [](const Chain<T>& c, const std::string& r, const T& lambda) {
    std::size_t ri = c.space.index(r);
    Chain<T> out = c;
    Row<T> row;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.initial[i] != Num<T>::zero()) row.push_back({i, c.initial[i]});
    out.kernel.set_row(ri, std::move(row));
    for (std::size_t i = 0; i < c.size(); ++i) out.initial[i] = c.initial[i] / (Num<T>::one() + lambda);
    out.initial[ri] = lambda / (Num<T>::one() + lambda);
    return out;
  };
  auto res = build_stationary_coupling(restart(x, rho.a, lx), restart(y, rho.b, ly), restart(z, rho.c, lz), f, g, o);
  const std::string absorbing = pair_label(rho.a, rho.b);
  auto wr = res.space.find(absorbing);
  if (!wr) throw Error(ErrorKind::NotQuasistationary, "absorbing pair missing from the stationary coupling");
  res.kind = CouplingKind::Quasistationary;
  res.kernel.set_row(*wr, Row<T>{{*wr, Num<T>::one()}});
  res.reverseKernel.reset();
  T mass = Num<T>::one() - res.initial[*wr];
  res.initial[*wr] = Num<T>::zero();
  for (auto& v : res.initial) v /= mass;
  res.diagnostics.notes.push_back("absorption probability " + Num<T>::str(lz));
  return res;
}

namespace detail {

inline std::string time_label(const std::string& s, std::size_t t) { return s + "@" + std::to_string(t); }

// Homogeneous chain on state x time. Layer T keeps moving within itself with
// the last kernel (steps[T] if supplied), or stays put when there is none.
template <class T>
Chain<T> lift_in_time(const InhomogeneousChain<T>& c, std::size_t horizon) {
  if (c.steps.size() < horizon) throw Error(ErrorKind::ShapeMismatch, "fewer kernels than the horizon");
  const std::size_t n = c.size();
  StateSpace s;
  for (std::size_t t = 0; t <= horizon; ++t)
    for (const auto& name : c.space.names()) s.add(time_label(name, t));
  std::vector<T> init(s.size(), Num<T>::zero());
  for (std::size_t i = 0; i < n; ++i) init[i] = c.initial[i];
  Kernel<T> k(s.size());
  for (std::size_t t = 0; t <= horizon; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      Row<T> row;
      if (t == horizon) {
        if (c.steps.empty()) {
          row.push_back({t * n + i, Num<T>::one()});
        } else {
          const auto& last = c.steps[std::min(horizon, c.steps.size() - 1)];
          if (last.size() != n) throw Error(ErrorKind::ShapeMismatch, "kernel size differs from the state space");
          for (const auto& e : last.row(i)) row.push_back({t * n + e.to, e.p});
        }
      } else {
        if (c.steps[t].size() != n) throw Error(ErrorKind::ShapeMismatch, "kernel size differs from the state space");
        for (const auto& e : c.steps[t].row(i)) row.push_back({(t + 1) * n + e.to, e.p});
      }
      k.set_row(t * n + i, std::move(row));
    }
  return Chain<T>(std::move(s), std::move(init), std::move(k));
}

inline LumpingMap lift_map_in_time(const LumpingMap& m, const StateSpace& dom, const StateSpace& cod,
                                   std::size_t horizon) {
  std::vector<std::size_t> a;
  const std::size_t n = m.domain.size(), nc = m.codomain.size();
  for (std::size_t t = 0; t <= horizon; ++t)
    for (std::size_t i = 0; i < n; ++i) a.push_back(t * nc + m(i));
  return LumpingMap::from_assignment(dom, cod, std::move(a));
}

}  // namespace detail

/// Time-inhomogeneous coupling up to `horizon` via the homogeneous coupling
/// of the space-time chains. timeKernels[t] moves the pair from time t to
/// t+1; `kernel` is the coupled continuation after the horizon (the identity
/// when no kernels were given).
template <class T>
CouplingResult<T> build_inhomogeneous_coupling(const InhomogeneousChain<T>& x, const InhomogeneousChain<T>& y,
                                               const InhomogeneousChain<T>& z, const LumpingMap& f,
                                               const LumpingMap& g, std::size_t horizon,
                                               const CouplingOptions& o = {}) {
  auto lx = detail::lift_in_time(x, horizon);
  auto ly = detail::lift_in_time(y, horizon);
  auto lz = detail::lift_in_time(z, horizon);
  auto fz = f.with_codomain(z.space, true);
  auto gz = g.with_codomain(z.space, true);
  auto lf = detail::lift_map_in_time(fz, lx.space, lz.space, horizon);
  auto lg = detail::lift_map_in_time(gz, ly.space, lz.space, horizon);
  auto lifted = build_coupling(lx, ly, lz, lf, lg, o);

  auto strip = [](const std::string& s) {
    auto pos = s.rfind('@');
    return std::make_pair(s.substr(0, pos), static_cast<std::size_t>(std::stoul(s.substr(pos + 1))));
  };
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  std::vector<std::size_t> times;
  for (std::size_t w = 0; w < lifted.size(); ++w) {
    auto [a, ta] = strip(lifted.components[w][0]);
    auto [b, tb] = strip(lifted.components[w][1]);
    idx.push_back({x.space.index(a), y.space.index(b)});
    times.push_back(ta);
  }
  std::vector<std::pair<std::size_t, std::size_t>> uniq = idx;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  CouplingResult<T> out;
  out.kind = CouplingKind::Inhomogeneous;
  for (auto [a, b] : uniq) {
    out.space.add(pair_label(x.space.name(a), y.space.name(b)));
    out.components.push_back({x.space.name(a), y.space.name(b)});
  }
  auto pos = [&](std::size_t w) {
    return static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), idx[w]) - uniq.begin());
  };
  const std::size_t n = uniq.size();
  out.initial.assign(n, Num<T>::zero());
  out.phi.assign(n, Num<T>::zero());
  std::vector<bool> phiSet(n, false);
  out.timeKernels.assign(horizon, Kernel<T>(n));
  std::vector<std::vector<Row<T>>> rows(horizon + 1, std::vector<Row<T>>(n));
  for (std::size_t w = 0; w < lifted.size(); ++w) {
    std::size_t i = pos(w);
    if (times[w] == 0) out.initial[i] += lifted.initial[w];
    if (!phiSet[i]) {
      out.phi[i] = lifted.phi[w];
      phiSet[i] = true;
    }
    for (const auto& e : lifted.kernel.row(w)) rows[times[w]][i].push_back({pos(e.to), e.p});
  }
  for (std::size_t t = 0; t < horizon; ++t)
    for (std::size_t i = 0; i < n; ++i) out.timeKernels[t].set_row(i, std::move(rows[t][i]));
  // Pairs never occupied after the horizon get a self-loop.
  out.kernel = Kernel<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[horizon][i].empty()) rows[horizon][i].push_back({i, Num<T>::one()});
    out.kernel.set_row(i, std::move(rows[horizon][i]));
  }
  out.open.assign(n, false);
  out.delta = lifted.delta;
  out.r = lifted.r;
  out.phiDelta = lifted.phiDelta;
  out.diagnostics = lifted.diagnostics;
  out.diagnostics.notes.push_back("time-indexed kernels for t < " + std::to_string(horizon) +
                                  (x.steps.empty() ? "; frozen afterwards" : "; last kernel afterwards"));
  return out;
}

/// Coupling of k chains with a common image, folding the two-chain
/// construction from the left with the map f_1 of the first factor.
template <class T>
CouplingResult<T> couple_many(const std::vector<Chain<T>>& chains, const std::vector<LumpingMap>& maps,
                              const Chain<T>& z, const CouplingOptions& o = {}) {
  if (chains.empty() || chains.size() != maps.size())
    throw Error(ErrorKind::ShapeMismatch, "need one map per chain and at least one chain");
  CouplingResult<T> acc;
  acc.kind = CouplingKind::Multiway;
  {
    detail::require_valid(chains[0], "chain 1", o.eps);
    auto c0 = chains[0];
    acc.space = c0.space;
    for (const auto& n : c0.space.names()) acc.components.push_back({n});
    acc.initial = c0.initial;
    acc.kernel = c0.kernel;
    acc.phi.assign(c0.size(), Num<T>::one());
    acc.open.assign(c0.size(), false);
    acc.delta = c0.space;
    acc.r = c0.kernel;
    acc.phiDelta = acc.phi;
  }
  const LumpingMap f1 = maps[0].with_codomain(z.space);
  for (std::size_t i = 1; i < chains.size(); ++i) {
    Chain<T> w = acc.chain();
    std::vector<std::size_t> assign;
    for (std::size_t s = 0; s < w.size(); ++s) assign.push_back(f1(f1.domain.index(acc.components[s][0])));
    auto h = LumpingMap::from_assignment(w.space, z.space, assign, false);
    try {
      auto next = build_coupling(w, chains[i], z, h, maps[i], o);
      for (auto& comp : next.components) {
        std::vector<std::string> full = acc.components[w.space.index(comp[0])];
        full.push_back(comp[1]);
        comp = std::move(full);
      }
      next.kind = CouplingKind::Multiway;
      next.diagnostics.notes.push_back("stage " + std::to_string(i));
      acc = std::move(next);
    } catch (const Error& e) {
      throw Error(e.kind(), "stage " + std::to_string(i) + ": " + e.detail());
    }
  }
  return acc;
}

/// Lambda(b, a) = nu_{g(b)}(a) when f(a) = g(b), from an exact witness of f.
template <class T>
std::vector<std::vector<T>> link_from_exact_witness(const LumpingMap& f, const LumpingMap& gIn,
                                                    const ExactLumpingWitness<T>& w) {
  LumpingMap g = align_codomains(f, gIn);
  std::vector<std::vector<T>> link(g.domain.size(), std::vector<T>(f.domain.size(), Num<T>::zero()));
  for (std::size_t b = 0; b < g.domain.size(); ++b)
    for (auto a : f.fibres[g(b)]) link[b][a] = w.nu[g(b)][a];
  return link;
}

/// Intertwining coupling on E = {Lambda(b,a) > 0} for Lambda P_X = P_Y Lambda,
/// started from alpha(a,b) = alpha_Y(b) Lambda(b,a). Only the kernel of x is
/// used; its initial law is implied by alpha_X = alpha_Y Lambda.
template <class T>
CouplingResult<T> diaconis_fill_intertwining(const Chain<T>& x, const Chain<T>& y,
                                             const std::vector<std::vector<T>>& link,
                                             const CouplingOptions& o = {}) {
  const std::size_t na = x.size(), nb = y.size();
  if (link.size() != nb) throw Error(ErrorKind::ShapeMismatch, "link needs one row per state of Y");
  for (std::size_t b = 0; b < nb; ++b) {
    if (link[b].size() != na) throw Error(ErrorKind::ShapeMismatch, "link needs one column per state of X");
    T s = Num<T>::zero();
    for (const auto& v : link[b]) {
      if (v < Num<T>::zero()) throw Error(ErrorKind::InvalidInput, "link has a negative entry");
      s += v;
    }
    if (!Num<T>::is_zero(Num<T>::abs(s - Num<T>::one()), o.eps))
      throw Error(ErrorKind::InvalidInput, "link row '" + y.space.name(b) + "' sums to " + Num<T>::str(s));
  }
  // Lambda P_X and P_Y Lambda
  std::vector<std::vector<T>> lp(nb, std::vector<T>(na, Num<T>::zero())), pl = lp;
  for (std::size_t b = 0; b < nb; ++b) {
    lp[b] = x.kernel.left_apply(link[b]);
    for (const auto& e : y.kernel.row(b))
      for (std::size_t a = 0; a < na; ++a) pl[b][a] += e.p * link[e.to][a];
  }
  T dev = Num<T>::zero();
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < na; ++a) dev = max_of(dev, Num<T>::abs(lp[b][a] - pl[b][a]));
  if (!Num<T>::is_zero(dev, o.eps))
    throw Error(ErrorKind::NotIntertwined, "max |Lambda P_X - P_Y Lambda| = " + Num<T>::str(dev));

  CouplingResult<T> out;
  out.kind = CouplingKind::Intertwining;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      if (link[b][a] > Num<T>::zero()) {
        index[{a, b}] = pairs.size();
        pairs.push_back({a, b});
        out.space.add(pair_label(x.space.name(a), y.space.name(b)));
        out.components.push_back({x.space.name(a), y.space.name(b)});
        out.initial.push_back(y.initial[b] * link[b][a]);
      }
  out.kernel = Kernel<T>(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [a, b] = pairs[i];
    Row<T> row;
    for (const auto& ex : x.kernel.row(a)) {
      const T& denom = pl[b][ex.to];
      if (!(denom > Num<T>::zero())) continue;
      for (const auto& ey : y.kernel.row(b)) {
        auto it = index.find({ex.to, ey.to});
        if (it == index.end()) continue;
        row.push_back({it->second, ey.p * link[ey.to][ex.to] * ex.p / denom});
      }
    }
    out.kernel.set_row(i, std::move(row));
  }
  out.phi.assign(pairs.size(), Num<T>::one());
  out.open.assign(pairs.size(), false);
  out.delta = out.space;
  out.r = out.kernel;
  out.phiDelta = out.phi;
  detail::check_normalization(out.initial, out.kernel, out.space, out.open, o);

  // proj^1 strong with image P_X, proj^2 exact with nu_b = Lambda(b, .).
  auto p1 = out.projection(0, &x.space);
  auto dk = dynkin_check(out.kernel, p1, o.normalizationTol);
  if (!dk.isStrong) throw Error(ErrorKind::NotIntertwined, "first projection of the output is not a strong lumping");
  for (std::size_t a = 0; a < na; ++a) {
    if (p1.fibres[a].empty()) continue;
    for (std::size_t a2 = 0; a2 < na; ++a2)
      if (!Num<T>::near(dk.imageKernel->at(a, a2), x.kernel.at(a, a2), o.normalizationTol))
        throw Error(ErrorKind::NotIntertwined, "first projection does not reproduce P_X");
  }
  auto p2 = out.projection(1, &y.space);
  ExactLumpingWitness<T> w{std::vector<std::vector<T>>(nb, std::vector<T>(pairs.size(), Num<T>::zero())), y.kernel};
  for (std::size_t i = 0; i < pairs.size(); ++i) w.nu[pairs[i].second][i] = link[pairs[i].second][pairs[i].first];
  auto ex = exact_lumping_verify(out.kernel, p2, w);
  if (!ex.ok(o.normalizationTol))
    throw Error(ErrorKind::NotIntertwined, "second projection is not exact (residual " + Num<T>::str(ex.residual) + ")");
  out.diagnostics.deltaSize = pairs.size();
  out.diagnostics.phi.method = "none";
  out.diagnostics.notes.push_back("first projection strong; second projection exact with residual " +
                                  Num<T>::str(ex.residual));
  return out;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_COUPLING_VARIANTS_HPP
