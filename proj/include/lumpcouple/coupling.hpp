#ifndef LUMPCOUPLE_COUPLING_HPP
#define LUMPCOUPLE_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lumpcouple/chain.hpp"
#include "lumpcouple/chain_ops.hpp"
#include "lumpcouple/error.hpp"
#include "lumpcouple/linalg.hpp"
#include "lumpcouple/lumping.hpp"
#include "lumpcouple/scalar.hpp"
#include "lumpcouple/state_space.hpp"

namespace lumpcouple {

/// Pairs (a, b) with f(a) = g(b), ordered by (index of a, index of b).
struct ProductSpace {
  StateSpace space;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> image;  // codomain index of each pair
  std::size_t nB = 0;
  std::unordered_map<std::uint64_t, std::size_t> lookup;

  std::size_t size() const { return pairs.size(); }

  std::optional<std::size_t> find(std::size_t a, std::size_t b) const {
    auto it = lookup.find(static_cast<std::uint64_t>(a) * nB + b);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
  }
};

/// Throws CodomainMismatch unless both maps have the same codomain (as a
/// set); returns g re-expressed over f's codomain order.
inline LumpingMap align_codomains(const LumpingMap& f, const LumpingMap& g) {
  if (f.codomain.size() != g.codomain.size())
    throw Error(ErrorKind::CodomainMismatch, "maps have codomains of different sizes");
  for (const auto& n : g.codomain.names())
    if (!f.codomain.contains(n)) throw Error(ErrorKind::CodomainMismatch, "'" + n + "' is not in both codomains");
  return g.with_codomain(f.codomain);
}

inline ProductSpace build_delta(const LumpingMap& f, const LumpingMap& gIn) {
  LumpingMap g = align_codomains(f, gIn);
  ProductSpace d;
  d.nB = g.domain.size();
  for (std::size_t a = 0; a < f.domain.size(); ++a)
    for (auto b : g.fibres[f(a)]) {
      d.lookup.emplace(static_cast<std::uint64_t>(a) * d.nB + b, d.pairs.size());
      d.pairs.push_back({a, b});
      d.image.push_back(f(a));
      d.space.add(pair_label(f.domain.name(a), g.domain.name(b)));
    }
  // fibres are increasing, so pairs are already lexicographic
  return d;
}

/// R((a,b),(a',b')) = P_X(a,a') P_Y(b,b') / P_Z(f(a),f(a')), or 0 when the
/// denominator vanishes. pZ is indexed by f's codomain.
template <class T>
Kernel<T> build_R(const Kernel<T>& pX, const Kernel<T>& pY, const Kernel<T>& pZ, const ProductSpace& d,
                  const LumpingMap& f, const LumpingMap& gIn) {
  LumpingMap g = align_codomains(f, gIn);
  Kernel<T> r(d.size());
  for (std::size_t w = 0; w < d.size(); ++w) {
    auto [a, b] = d.pairs[w];
    Row<T> row;
    for (const auto& ex : pX.row(a)) {
      T pz = pZ.at(f(a), f(ex.to));
      if (!(pz > Num<T>::zero())) continue;
      for (const auto& ey : pY.row(b)) {
        if (g(ey.to) != f(ex.to)) continue;
        auto w2 = d.find(ex.to, ey.to);
        if (!w2) continue;
        row.push_back({*w2, ex.p * ey.p / pz});
      }
    }
    r.set_row(w, std::move(row));
  }
  return r;
}

struct PhiOptions {
  double tol = kDefaultEps;
  std::size_t maxIter = 100000;
  std::size_t stableRounds = 3;
};

template <class T>
struct PhiVector {
  std::vector<T> values;
  std::size_t iterations = 0;
  double supDiff = 0.0;
  double residual = 0.0;
  bool converged = false;
  std::string method;  // fixed-point | krylov | iteration | zero
};

/// Raised when phi does not settle; carries the last iterate.
template <class T>
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& detail, PhiVector<T> last)
      : Error(ErrorKind::PhiNotConverged, detail), last_(std::move(last)) {}
  const PhiVector<T>& last() const { return last_; }

 private:
  PhiVector<T> last_;
};

namespace detail {

// |new - old| / max(1, |new|): absolute near zero, relative for large phi.
inline double mixed_diff(double now, double before) {
  return std::fabs(now - before) / std::max(1.0, std::fabs(now));
}

template <class T>
double sup_mixed_diff(const std::vector<T>& now, const std::vector<T>& before, const std::vector<bool>* mask = nullptr) {
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    worst = std::max(worst, mixed_diff(Num<T>::to_double(now[i]), Num<T>::to_double(before[i])));
  }
  return worst;
}

template <class T>
double residual_of(const Kernel<T>& r, const std::vector<T>& phi, const std::vector<bool>* mask = nullptr) {
  auto rp = r.apply(phi);
  return sup_mixed_diff(rp, phi, mask);
}

inline PhiVector<double> iterate_phi_float(const Kernel<double>& r, const PhiOptions& o) {
  PhiVector<double> out;
  out.method = "iteration";
  std::vector<double> phi(r.size(), 1.0);
  std::size_t stable = 0;
  for (std::size_t m = 1; m <= o.maxIter; ++m) {
    auto next = r.apply(phi);
    double d = sup_mixed_diff(next, phi);
    phi = std::move(next);
    out.iterations = m;
    out.supDiff = d;
    stable = d < o.tol ? stable + 1 : 0;
    if (stable >= o.stableRounds) {
      out.converged = true;
      break;
    }
  }
  out.values = std::move(phi);
  out.residual = residual_of(r, out.values);
  if (!out.converged) {
    std::ostringstream msg;
    msg << "phi still moving after " << out.iterations << " iterations (last difference " << out.supDiff << ")";
    throw NotConvergedError<double>(msg.str(), out);
  }
  return out;
}

template <class T>
Kernel<double> to_float_kernel(const Kernel<T>& k) {
  Kernel<double> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    Row<double> r;
    for (const auto& e : k.row(i)) r.push_back({e.to, Num<T>::to_double(e.p)});
    out.set_row(i, std::move(r));
  }
  return out;
}

// Limit of R^m 1 from the minimal polynomial of R relative to 1. With
// mu = (x-1) h and h(1) != 0 the limit is the projection h(R) 1 / h(1) onto
// the fixed space; if 1 is not a root the limit is zero.
inline PhiVector<Rational> krylov_limit(const Kernel<Rational>& r, const PhiOptions& o) {
  const std::size_t n = r.size();
  KrylovBasis<Rational> basis(n);
  std::vector<Rational> v(n, Rational(1));
  std::optional<std::vector<Rational>> dep;
  std::size_t d = 0;
  while (!(dep = basis.add(v))) {
    v = r.apply(v);
    ++d;
  }
  Poly<Rational> mu(d + 1);
  for (std::size_t i = 0; i < d; ++i) mu[i] = -(*dep)[i];
  mu[d] = 1;
  PhiVector<Rational> out;
  out.iterations = d;
  auto [h, rem] = divide_by_x_minus_one(mu);
  if (rem != 0) {
    out.values.assign(n, Rational(0));
    out.method = "zero";
  } else {
    Rational h1 = poly_eval(h, Rational(1));
    if (h1 == 0) {
      out.values.assign(n, Rational(1));
      throw NotConvergedError<Rational>("R has a Jordan block at eigenvalue 1 on the orbit of 1", out);
    }
    out.values = poly_apply(h, r, std::vector<Rational>(n, Rational(1)));
    for (auto& x : out.values) x /= h1;
    out.method = "krylov";
  }
  for (const auto& x : out.values)
    if (x < 0) throw NotConvergedError<Rational>("candidate limit has a negative entry", out);
  if (r.apply(out.values) != out.values) throw NotConvergedError<Rational>("candidate limit is not fixed by R", out);
  // The projection is the limit only if R^m 1 converges; confirm numerically.
  auto fl = iterate_phi_float(to_float_kernel(r), o);
  double gap = sup_mixed_diff(fl.values, [&] {
    std::vector<double> e;
    for (const auto& x : out.values) e.push_back(x.get_d());
    return e;
  }());
  if (gap > 1e-6)
    throw NotConvergedError<Rational>("exact fixed vector disagrees with the iterated limit by " + std::to_string(gap),
                                      out);
  out.converged = true;
  return out;
}

}  // namespace detail

/// phi = lim R^m 1. Float mode iterates until `stableRounds` consecutive
/// successive differences fall below tol. Exact mode stops at an exact fixed
/// point when one appears early and otherwise derives the limit from the
/// minimal polynomial.
template <class T>
PhiVector<T> iterate_phi(const Kernel<T>& r, const PhiOptions& o = {}) {
  if constexpr (!Num<T>::exact) {
    return detail::iterate_phi_float(r, o);
  } else {
    const std::size_t n = r.size();
    std::vector<T> phi(n, Num<T>::one());
    const std::size_t limit = std::min(o.maxIter, n + 2);
    for (std::size_t m = 0; m < limit; ++m) {
      auto next = r.apply(phi);
      if (next == phi) {
        PhiVector<T> out;
        out.values = std::move(phi);
        out.iterations = m;
        out.converged = true;
        out.method = "fixed-point";
        return out;
      }
      phi = std::move(next);
    }
    return detail::krylov_limit(r, o);
  }
}

/// phi on a countable product chain given by an R-row generator. On a ball
/// of radius L the m-th iterate is exact within depth L - m, so the ball is
/// doubled until the values within `depth` settle.
template <class T>
struct BallPhi {
  Ball<T> ball;  // chain.kernel holds R; chain.initial is unused
  PhiVector<T> phi;
  std::vector<bool> region;  // depth <= requested depth
};

template <class T>
BallPhi<T> iterate_phi_ball(const GeneratedChain<T>& rgen, std::size_t depth, const PhiOptions& o = {}) {
  std::size_t radius = depth + 64;
  while (true) {
    BallPhi<T> out;
    out.ball = materialize(rgen, radius);
    const auto& r = out.ball.chain.kernel;
    const std::size_t n = r.size();
    out.region.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) out.region[i] = out.ball.depth[i] <= depth;
    std::vector<T> phi(n, Num<T>::one());
    std::size_t stable = 0;
    const std::size_t budget = radius - depth;
    PhiVector<T> pv;
    pv.method = "ball-iteration";
    for (std::size_t m = 1; m <= budget && m <= o.maxIter; ++m) {
      auto next = r.apply(phi);
      double d = detail::sup_mixed_diff(next, phi, &out.region);
      phi = std::move(next);
      pv.iterations = m;
      pv.supDiff = d;
      stable = d < o.tol ? stable + 1 : 0;
      if (stable >= o.stableRounds) {
        pv.converged = true;
        break;
      }
    }
    if (pv.converged) {
      std::vector<bool> inner(n, false);
      for (std::size_t i = 0; i < n; ++i) inner[i] = out.ball.depth[i] + 1 <= depth;
      pv.values = std::move(phi);
      pv.residual = detail::residual_of(r, pv.values, &inner);
      out.phi = std::move(pv);
      return out;
    }
    if (budget >= o.maxIter) {
      pv.values = std::move(phi);
      throw NotConvergedError<T>("phi still moving after " + std::to_string(pv.iterations) + " iterations", pv);
    }
    radius = depth + 2 * budget;
  }
}

enum class CouplingKind { Homogeneous, Stationary, Quasistationary, Inhomogeneous, Multiway, Intertwining };

inline const char* kind_name(CouplingKind k) {
  switch (k) {
    case CouplingKind::Homogeneous: return "homogeneous";
    case CouplingKind::Stationary: return "stationary";
    case CouplingKind::Quasistationary: return "quasistationary";
    case CouplingKind::Inhomogeneous: return "inhomogeneous";
    case CouplingKind::Multiway: return "multiway";
    case CouplingKind::Intertwining: return "intertwining";
  }
  return "homogeneous";
}

inline CouplingKind kind_from_name(const std::string& s) {
  for (auto k : {CouplingKind::Homogeneous, CouplingKind::Stationary, CouplingKind::Quasistationary,
                 CouplingKind::Inhomogeneous, CouplingKind::Multiway, CouplingKind::Intertwining})
    if (s == kind_name(k)) return k;
  throw Error(ErrorKind::InvalidInput, "unknown coupling kind '" + s + "'");
}

struct PhiDiagnostics {
  std::size_t iterations = 0;
  double supDiff = 0.0;
  double residual = 0.0;
  std::string method;
};

template <class T>
PhiDiagnostics phi_diagnostics(const PhiVector<T>& p) {
  return {p.iterations, p.supDiff, p.residual, p.method};
}

struct CouplingDiagnostics {
  PhiDiagnostics phi;
  std::optional<PhiDiagnostics> phiRev;
  std::size_t deltaSize = 0;
  std::vector<std::string> notes;
};

template <class T>
struct CouplingResult {
  CouplingKind kind = CouplingKind::Homogeneous;
  StateSpace space;
  std::vector<std::vector<std::string>> components;  // factor names of each state
  std::vector<T> initial;
  Kernel<T> kernel;
  std::vector<Kernel<T>> timeKernels;  // inhomogeneous: step t -> t+1
  std::optional<Kernel<T>> reverseKernel;
  std::vector<T> phi;
  std::optional<std::vector<T>> phiRev;
  std::vector<bool> open;

  // The full constraint set before restricting to positive phi.
  StateSpace delta;
  Kernel<T> r;
  std::vector<T> phiDelta;
  std::optional<std::vector<T>> phiRevDelta;

  CouplingDiagnostics diagnostics;

  std::size_t size() const { return space.size(); }
  std::size_t arity() const { return components.empty() ? 0 : components.front().size(); }

  Chain<T> chain() const {
    Chain<T> c(space, initial, kernel);
    if (!open.empty()) c.open = open;
    return c;
  }

  /// Projection onto factor i, with the codomain in first-appearance order
  /// unless one is supplied.
  LumpingMap projection(std::size_t i, const StateSpace* codomain = nullptr) const {
    std::map<std::string, std::string> m;
    for (std::size_t w = 0; w < size(); ++w) m[space.name(w)] = components[w].at(i);
    if (codomain) return LumpingMap::from_names(space, m, codomain->names(), false);
    return LumpingMap::from_names(space, m, {}, true);
  }
};

struct CouplingOptions {
  PhiOptions phi;
  std::size_t evidenceHorizon = 6;
  bool checkEvidence = true;
  double eps = kDefaultEps;        // comparisons of probabilities
  double supportTol = 1e-9;        // float mode: phi above this is positive
  double normalizationTol = 1e-9;  // float mode: allowed defect of alpha and rows
  std::size_t trajectoryCap = kDefaultTrajectoryCap;
};

namespace detail {

template <class T>
void require_valid(const Chain<T>& c, const char* what, double eps) {
  auto rep = validate_chain(c, eps);
  if (!rep.ok()) {
    const auto& i = rep.issues.front();
    throw Error(ErrorKind::InvalidInput, std::string(what) + " chain: " + i.kind +
                                             (i.state.empty() ? "" : " at '" + i.state + "'") + ": " + i.detail);
  }
}

template <class T>
std::string describe_violation(const MarkovViolation<T>& v) {
  std::ostringstream s;
  auto join = [](const std::vector<std::string>& h) {
    std::string out;
    for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
    return out;
  };
  if (v.kind == "history") {
    std::size_t from = v.time - v.history.size();
    s << "P(Z_" << v.time << "=" << v.target << " | Z_" << from << ".." << (v.time - 1) << "=(" << join(v.history)
      << ")) = " << Num<T>::str(v.conditional) << " but P(Z_" << v.time << "=" << v.target << " | Z_" << (v.time - 1)
      << "=" << v.history.back() << ") = " << Num<T>::str(v.reference);
  } else {
    s << "P(Z_" << v.time << "=" << v.target << " | Z_" << (v.time - 1) << "=" << v.history.back()
      << ") = " << Num<T>::str(v.conditional) << " but P(Z_" << v.referenceTime << "=" << v.target << " | Z_"
      << (v.referenceTime - 1) << "=" << v.history.back() << ") = " << Num<T>::str(v.reference);
  }
  return s.str();
}

// Finite-horizon evidence that the image of `c` under `m` is the chain `z`.
template <class T>
void evidence_gate(const Chain<T>& c, const LumpingMap& m, const Chain<T>& z, const char* which,
                   const CouplingOptions& o) {
  auto mk = image_markov_test(c, m, o.evidenceHorizon, o.eps, o.trajectoryCap);
  if (!mk.isMarkovUpTo)
    throw Error(ErrorKind::HypothesisEvidenceFailed,
                std::string("image of ") + which + " is not Markov: " + describe_violation(*mk.counterexample()));
  auto dev = compare_image_to_chain(c, m, z, o.evidenceHorizon, o.trajectoryCap);
  if (!Num<T>::is_zero(dev.value, o.eps)) {
    std::string traj;
    for (const auto& s : dev.witness) traj += (traj.empty() ? "" : ",") + s;
    throw Error(ErrorKind::HypothesisEvidenceFailed, std::string("image of ") + which +
                                                         " differs from the image chain by " +
                                                         Num<T>::str(dev.value) + " at (" + traj + ")");
  }
}

template <class T>
bool positive_phi(const T& v, const CouplingOptions& o) {
  if constexpr (Num<T>::exact) {
    return v > 0;
  } else {
    return v > o.supportTol;
  }
}

template <class T>
void check_normalization(const std::vector<T>& alpha, const Kernel<T>& k, const StateSpace& s,
                         const std::vector<bool>& open, const CouplingOptions& o) {
  T tot = Num<T>::zero();
  for (const auto& v : alpha) tot += v;
  T defect = Num<T>::abs(tot - Num<T>::one());
  if (!Num<T>::is_zero(defect, o.normalizationTol))
    throw Error(ErrorKind::NormalizationFailed, "coupled initial law sums to " + Num<T>::str(tot));
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!open.empty() && open[i]) continue;
    T rs = k.row_sum(i);
    if (!Num<T>::is_zero(Num<T>::abs(rs - Num<T>::one()), o.normalizationTol))
      throw Error(ErrorKind::NormalizationFailed, "coupled row '" + s.name(i) + "' sums to " + Num<T>::str(rs));
  }
}

// Shared front half of the finite constructions.
template <class T>
struct Prepared {
  Chain<T> x, y, z;
  LumpingMap f, g;  // restricted to the pruned chains, codomain = z.space
  ProductSpace delta;
  Kernel<T> r;
};

template <class T>
Prepared<T> prepare(const Chain<T>& x, const Chain<T>& y, const Chain<T>& z, const LumpingMap& f,
                    const LumpingMap& g, const CouplingOptions& o) {
  require_valid(x, "X", o.eps);
  require_valid(y, "Y", o.eps);
  require_valid(z, "Z", o.eps);
  if (f.domain.size() != x.size() || g.domain.size() != y.size())
    throw Error(ErrorKind::ShapeMismatch, "map domains do not match the chains");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (f.domain.name(i) != x.space.name(i)) throw Error(ErrorKind::ShapeMismatch, "f is not defined on X's states");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (g.domain.name(i) != y.space.name(i)) throw Error(ErrorKind::ShapeMismatch, "g is not defined on Y's states");
  Prepared<T> p;
  p.x = prune_unreachable(x);
  p.y = prune_unreachable(y);
  p.z = z;
  p.f = f.with_codomain(z.space).restrict_to(p.x.space);
  p.g = g.with_codomain(z.space).restrict_to(p.y.space);
  if (o.checkEvidence) {
    evidence_gate(p.x, p.f, p.z, "X", o);
    evidence_gate(p.y, p.g, p.z, "Y", o);
  }
  p.delta = build_delta(p.f, p.g);
  if (p.delta.size() == 0) throw Error(ErrorKind::HypothesisEvidenceFailed, "no pair of states shares an image");
  p.r = build_R(p.x.kernel, p.y.kernel, p.z.kernel, p.delta, p.f, p.g);
  return p;
}

template <class T>
std::vector<std::string> components_of(const Prepared<T>& p, std::size_t w) {
  auto [a, b] = p.delta.pairs[w];
  return {p.x.space.name(a), p.y.space.name(b)};
}

}  // namespace detail

/// The coupling MC(alpha, P) on Delta' = {phi > 0} with
/// alpha(a,b) = alpha_X(a) alpha_Y(b) phi(a,b) / alpha_Z(c) and
/// P(w,w') = R(w,w') phi(w') / phi(w).
template <class T>
CouplingResult<T> build_coupling(const Chain<T>& x, const Chain<T>& y, const Chain<T>& z, const LumpingMap& f,
                                 const LumpingMap& g, const CouplingOptions& o = {}) {
  auto p = detail::prepare(x, y, z, f, g, o);
  auto phi = iterate_phi(p.r, o.phi);
  CouplingResult<T> out;
  out.kind = CouplingKind::Homogeneous;
  out.delta = p.delta.space;
  out.r = p.r;
  out.phiDelta = phi.values;
  out.diagnostics.phi = phi_diagnostics(phi);
  out.diagnostics.deltaSize = p.delta.size();

  std::vector<std::size_t> keep;
  std::vector<std::size_t> newIndex(p.delta.size(), SIZE_MAX);
  for (std::size_t w = 0; w < p.delta.size(); ++w)
    if (detail::positive_phi(phi.values[w], o)) {
      newIndex[w] = keep.size();
      keep.push_back(w);
    }
  for (auto w : keep) {
    out.space.add(p.delta.space.name(w));
    out.components.push_back(detail::components_of(p, w));
    out.phi.push_back(phi.values[w]);
    auto [a, b] = p.delta.pairs[w];
    const T& az = p.z.initial[p.delta.image[w]];
    out.initial.push_back(az > Num<T>::zero() ? T(p.x.initial[a] * p.y.initial[b] * phi.values[w] / az)
                                              : Num<T>::zero());
  }
  out.kernel = Kernel<T>(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::size_t w = keep[i];
    Row<T> row;
    for (const auto& e : p.r.row(w))
      if (newIndex[e.to] != SIZE_MAX) row.push_back({newIndex[e.to], e.p * phi.values[e.to] / phi.values[w]});
    out.kernel.set_row(i, std::move(row));
  }
  out.open.assign(keep.size(), false);
  detail::check_normalization(out.initial, out.kernel, out.space, out.open, o);
  return out;
}

/// Countable inputs given by generators and state maps.
template <class T>
struct GeneratedSystem {
  GeneratedChain<T> x, y, z;
  std::function<std::string(const std::string&)> f, g;
};

/// Coupling of generator-backed chains on the pairs within `depth` steps of
/// the initial pairs. States at depth `depth`+1 are kept as open boundary
/// states so that every returned row is complete.
template <class T>
CouplingResult<T> build_coupling(const GeneratedSystem<T>& sys, std::size_t depth, const CouplingOptions& o = {}) {
  std::map<std::string, typename GeneratedChain<T>::Successors> zrows;
  auto pz = [&](const std::string& c, const std::string& c2) {
    auto it = zrows.find(c);
    if (it == zrows.end()) it = zrows.emplace(c, sys.z.successors(c)).first;
    T s = Num<T>::zero();
    for (const auto& [n, p] : it->second)
      if (n == c2) s += p;
    return s;
  };
  if (o.checkEvidence) {
    std::size_t k = o.evidenceHorizon;
    auto zb = materialize(sys.z, k);
    for (int side = 0; side < 2; ++side) {
      const auto& gen = side == 0 ? sys.x : sys.y;
      const auto& map = side == 0 ? sys.f : sys.g;
      auto b = materialize(gen, k);
      std::map<std::string, std::string> names;
      StateSpace cod = zb.chain.space;
      for (const auto& n : b.chain.space.names()) {
        names[n] = map(n);
        cod.intern(names[n]);
      }
      auto m = LumpingMap::from_names(b.chain.space, names, cod.names(), false);
      Chain<T> zc = zb.chain;
      if (cod.size() != zc.size())
        throw Error(ErrorKind::HypothesisEvidenceFailed, "image of the ball leaves the image chain's ball");
      detail::evidence_gate(b.chain, m, zc, side == 0 ? "X" : "Y", o);
    }
  }
  // R as a row generator on pairs.
  GeneratedChain<T> rgen;
  std::map<std::string, T> ax, ay, az;
  for (const auto& [s, p] : sys.x.initial) ax[s] += p;
  for (const auto& [s, p] : sys.y.initial) ay[s] += p;
  for (const auto& [s, p] : sys.z.initial) az[s] += p;
  for (const auto& [a, pa] : ax)
    for (const auto& [b, pb] : ay)
      if (pa > Num<T>::zero() && pb > Num<T>::zero() && sys.f(a) == sys.g(b))
        rgen.initial.push_back({pair_label(a, b), pa * pb});
  if (rgen.initial.empty()) throw Error(ErrorKind::HypothesisEvidenceFailed, "no initial pair shares an image");
  rgen.successors = [&](const std::string& w) {
    auto [a, b] = split_pair(w);
    typename GeneratedChain<T>::Successors out;
    auto rx = sys.x.successors(a);
    auto ry = sys.y.successors(b);
    const std::string c = sys.f(a);
    for (const auto& [a2, px] : rx) {
      const std::string c2 = sys.f(a2);
      T z = pz(c, c2);
      if (!(z > Num<T>::zero())) continue;
      for (const auto& [b2, py] : ry)
        if (sys.g(b2) == c2) out.push_back({pair_label(a2, b2), px * py / z});
    }
    return out;
  };
  auto bp = iterate_phi_ball(rgen, depth + 1, o.phi);
  const auto& ball = bp.ball;
  CouplingResult<T> out;
  out.kind = CouplingKind::Homogeneous;
  out.diagnostics.phi = phi_diagnostics(bp.phi);
  out.diagnostics.notes.push_back("countable chain: rows complete up to depth " + std::to_string(depth) +
                                  ", ball radius " + std::to_string(ball.radius));
  std::vector<std::size_t> keep, newIndex(ball.chain.size(), SIZE_MAX);
  for (std::size_t w = 0; w < ball.chain.size(); ++w) {
    if (!bp.region[w]) continue;
    out.delta.add(ball.chain.space.name(w));
    out.phiDelta.push_back(bp.phi.values[w]);
    if (detail::positive_phi(bp.phi.values[w], o)) {
      newIndex[w] = keep.size();
      keep.push_back(w);
    }
  }
  out.diagnostics.deltaSize = out.delta.size();
  for (auto w : keep) {
    const auto& name = ball.chain.space.name(w);
    auto [a, b] = split_pair(name);
    out.space.add(name);
    out.components.push_back({a, b});
    out.phi.push_back(bp.phi.values[w]);
    out.open.push_back(ball.depth[w] > depth);
    T zc = az.count(sys.f(a)) ? az[sys.f(a)] : Num<T>::zero();
    T xa = ax.count(a) ? ax[a] : Num<T>::zero();
    T yb = ay.count(b) ? ay[b] : Num<T>::zero();
    out.initial.push_back(zc > Num<T>::zero() ? T(xa * yb * bp.phi.values[w] / zc) : Num<T>::zero());
  }
  out.kernel = Kernel<T>(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::size_t w = keep[i];
    if (out.open[i]) continue;
    Row<T> row;
    for (const auto& e : ball.chain.kernel.row(w))
      if (newIndex[e.to] != SIZE_MAX) row.push_back({newIndex[e.to], e.p * bp.phi.values[e.to] / bp.phi.values[w]});
    out.kernel.set_row(i, std::move(row));
  }
  detail::check_normalization(out.initial, out.kernel, out.space, out.open, o);
  return out;
}

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_COUPLING_HPP
