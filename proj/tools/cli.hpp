#ifndef LUMPCOUPLE_TOOLS_CLI_HPP
#define LUMPCOUPLE_TOOLS_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lumpcouple/lumpcouple.hpp"

namespace lumpcouple::cli {

struct Options {
  bool exact = false;
  bool json = false;
  double tol = 1e-12;
  std::size_t maxIter = 100000;
  std::size_t horizon = 4;
  std::size_t window = 0;
  std::uint64_t seed = 1;
  std::string output;

  std::vector<std::string> positional;
  std::string map, mapF, mapG, image, witness, link;
  std::string xFile, yFile, zFile;
  std::vector<std::string> chains, maps;
  std::string quasi;
  bool stationary = false, inhomogeneous = false, noEvidence = false;
  std::size_t evidenceHorizon = 6;
  std::size_t mc = 0, count = 1;
  bool list = false;
  std::string exportDir;
};

namespace detail {

inline std::string arg(const Options& o, std::size_t i, const char* what) {
  if (i >= o.positional.size()) throw Error(ErrorKind::InvalidInput, std::string("missing ") + what);
  return o.positional[i];
}

inline CouplingOptions coupling_options(const Options& o) {
  CouplingOptions c;
  c.phi.tol = o.tol;
  c.phi.maxIter = o.maxIter;
  c.evidenceHorizon = o.evidenceHorizon;
  c.checkEvidence = !o.noEvidence;
  return c;
}

inline void emit(const Options& o, std::ostream& out, const Json& j) {
  if (o.output.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_json_file(o.output, j);
  }
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ',')) parts.push_back(p);
  return parts;
}

inline int print_report(const Options& o, std::ostream& out, const VerificationReport& r) {
  if (o.json) {
    out << report_to_json(r).dump(2) << "\n";
  } else {
    for (const auto& c : r.checks) {
      out << (c.skipped ? "SKIP" : c.pass ? "PASS" : "FAIL") << "  " << c.name << "  deviation=" << c.deviation;
      if (c.pValue) out << "  p=" << *c.pValue;
      if (!c.witness.empty()) out << "  [" << c.witness << "]";
      if (!c.note.empty()) out << "  (" << c.note << ")";
      out << "\n";
    }
  }
  return r.ok() ? 0 : 1;
}

template <class T>
Chain<T> load_chain(const std::string& path) {
  return chain_from_json<T>(read_json_file(path));
}

inline LumpingMap load_map(const std::string& path, const StateSpace& dom, const std::vector<std::string>& cod = {}) {
  return map_from_json(read_json_file(path), dom, cod);
}

template <class T>
int cmd_validate(const Options& o, std::ostream& out) {
  auto c = load_chain<T>(arg(o, 0, "chain file"));
  auto rep = validate_chain(c, o.tol);
  auto mask = reachable_mask(c);
  std::size_t reach = std::count(mask.begin(), mask.end(), true);
  if (o.json) {
    Json j;
    j["ok"] = rep.ok();
    j["states"] = c.size();
    j["reachable"] = reach;
    j["issues"] = Json::array();
    for (const auto& i : rep.issues)
      j["issues"].push_back({{"kind", i.kind}, {"state", i.state}, {"defect", i.defect}, {"detail", i.detail}});
    out << j.dump(2) << "\n";
  } else {
    out << (rep.ok() ? "valid" : "invalid") << ": " << c.size() << " states, " << reach << " reachable\n";
    for (const auto& i : rep.issues) out << "  " << i.kind << " at '" << i.state << "': " << i.detail << "\n";
  }
  return rep.ok() ? 0 : 1;
}

template <class T>
Json violation_json(const MarkovViolation<T>& v) {
  return {{"kind", v.kind},
          {"time", v.time},
          {"history", v.history},
          {"target", v.target},
          {"conditional", scalar_to_json(v.conditional)},
          {"reference", scalar_to_json(v.reference)},
          {"referenceTime", v.referenceTime}};
}

template <class T>
int cmd_image_markov(const Options& o, std::ostream& out) {
  auto c = load_chain<T>(arg(o, 0, "chain file"));
  auto m = load_map(o.map, c.space);
  auto rep = image_markov_test(c, m, o.horizon, o.tol);
  if (o.json) {
    Json j;
    j["horizon"] = rep.horizon;
    j["isMarkovUpTo"] = rep.isMarkovUpTo;
    if (rep.firstViolationTime) j["firstViolationTime"] = *rep.firstViolationTime;
    j["violations"] = Json::array();
    for (const auto& v : rep.violations) j["violations"].push_back(violation_json(v));
    out << j.dump(2) << "\n";
  } else if (rep.isMarkovUpTo) {
    out << "image is Markov up to horizon " << rep.horizon << "\n";
  } else {
    out << "image is not Markov: first violation at t=" << *rep.firstViolationTime << "\n";
    for (const auto& v : rep.violations) out << "  " << v.kind << ": " << lumpcouple::detail::describe_violation(v) << "\n";
  }
  return rep.isMarkovUpTo ? 0 : 1;
}

template <class T>
int cmd_check_weak(const Options& o, std::ostream& out) {
  auto c = load_chain<T>(arg(o, 0, "chain file"));
  auto z = load_chain<T>(o.image);
  auto m = load_map(o.map, c.space, z.space.names());
  auto dev = compare_image_to_chain(c, m, z, o.horizon);
  auto mk = image_markov_test(c, m, o.horizon, o.tol);
  bool ok = Num<T>::is_zero(dev.value, o.tol) && mk.isMarkovUpTo;
  if (o.json) {
    Json j;
    j["weak"] = ok;
    j["horizon"] = o.horizon;
    j["deviation"] = scalar_to_json(dev.value);
    if (!dev.witness.empty()) j["witness"] = dev.witness;
    j["isMarkovUpTo"] = mk.isMarkovUpTo;
    if (auto* v = mk.counterexample()) j["counterexample"] = violation_json(*v);
    out << j.dump(2) << "\n";
  } else {
    out << (ok ? "lumps weakly" : "does not lump weakly") << " up to horizon " << o.horizon
        << ": image deviation " << Num<T>::str(dev.value) << "\n";
    if (auto* v = mk.counterexample()) out << "  " << lumpcouple::detail::describe_violation(*v) << "\n";
  }
  return ok ? 0 : 1;
}

template <class T>
int cmd_check_strong(const Options& o, std::ostream& out) {
  auto c = load_chain<T>(arg(o, 0, "chain file"));
  auto m = load_map(o.map, c.space);
  auto res = dynkin_check(c.kernel, m, o.tol);
  if (o.json) {
    Json j;
    j["strong"] = res.isStrong;
    if (res.imageKernel) j["image"] = kernel_to_json(*res.imageKernel, m.codomain);
    if (res.counterexample) {
      const auto& ce = *res.counterexample;
      j["counterexample"] = {{"fibre", ce.z},   {"target", ce.zNext}, {"state1", ce.x1},
                             {"state2", ce.x2}, {"mass1", scalar_to_json(ce.sum1)}, {"mass2", scalar_to_json(ce.sum2)}};
    }
    out << j.dump(2) << "\n";
  } else if (res.isStrong) {
    out << "strong lumping\n";
  } else {
    const auto& ce = *res.counterexample;
    out << "not a strong lumping: from '" << ce.x1 << "' the mass into fibre '" << ce.zNext << "' is "
        << Num<T>::str(ce.sum1) << ", from '" << ce.x2 << "' it is " << Num<T>::str(ce.sum2) << "\n";
  }
  return res.isStrong ? 0 : 1;
}

template <class T>
int cmd_check_exact(const Options& o, std::ostream& out) {
  auto c = load_chain<T>(arg(o, 0, "chain file"));
  auto m = load_map(o.map, c.space);
  std::optional<ExactLumpingWitness<T>> w;
  T residual = Num<T>::zero();
  bool admissible = false;
  if (!o.witness.empty()) {
    w = witness_from_json<T>(read_json_file(o.witness), m);
    auto res = exact_lumping_verify(c.kernel, m, *w);
    residual = max_of(res.residual, res.normalizationDefect);
    admissible = Num<T>::is_zero(admissibility_defect(c.initial, m, w->nu), o.tol);
  } else {
    auto d = exact_lumping_discover(c, m, o.tol);
    w = d.witness;
    residual = d.residual;
    admissible = d.initialAdmissible;
  }
  bool ok = w && Num<T>::is_zero(residual, o.tol);
  if (o.json) {
    Json j;
    j["exact"] = ok;
    j["residual"] = scalar_to_json(residual);
    j["initialAdmissible"] = admissible;
    if (w) j["witness"] = witness_to_json(*w, m);
    out << j.dump(2) << "\n";
  } else {
    out << (ok ? "exact lumping" : w ? "witness fails" : "no witness found") << ": residual " << Num<T>::str(residual)
        << (admissible ? ", initial law is a witness mixture" : ", initial law is not a witness mixture") << "\n";
  }
  return ok ? 0 : 1;
}

template <class T>
int cmd_couple(const Options& o, std::ostream& out) {
  auto co = coupling_options(o);
  CouplingResult<T> res;
  if (o.inhomogeneous) {
    auto x = inhomogeneous_from_json<T>(read_json_file(arg(o, 0, "X file")));
    auto y = inhomogeneous_from_json<T>(read_json_file(arg(o, 1, "Y file")));
    auto z = inhomogeneous_from_json<T>(read_json_file(arg(o, 2, "Z file")));
    auto f = load_map(o.mapF, x.space, z.space.names());
    auto g = load_map(o.mapG, y.space, z.space.names());
    res = build_inhomogeneous_coupling(x, y, z, f, g, o.horizon, co);
  } else {
    auto x = load_chain<T>(arg(o, 0, "X file"));
    auto y = load_chain<T>(arg(o, 1, "Y file"));
    auto z = load_chain<T>(arg(o, 2, "Z file"));
    auto f = load_map(o.mapF, x.space, z.space.names());
    auto g = load_map(o.mapG, y.space, z.space.names());
    if (o.stationary) {
      res = build_stationary_coupling(x, y, z, f, g, co);
    } else if (!o.quasi.empty()) {
      auto parts = split_commas(o.quasi);
      if (parts.size() != 3) throw Error(ErrorKind::InvalidInput, "--quasistationary needs three absorbers a,b,c");
      res = build_quasistationary_coupling(x, y, z, f, g, Absorbers{parts[0], parts[1], parts[2]}, co);
    } else {
      res = build_coupling(x, y, z, f, g, co);
    }
  }
  emit(o, out, coupling_to_json(res));
  if (!o.output.empty() && !o.json)
    out << kind_name(res.kind) << " coupling on " << res.size() << " states written to " << o.output << "\n";
  return 0;
}

template <class T>
int cmd_couple_many(const Options& o, std::ostream& out) {
  auto z = load_chain<T>(arg(o, 0, "Z file"));
  if (o.chains.size() != o.maps.size()) throw Error(ErrorKind::ShapeMismatch, "give one --map per --chain");
  std::vector<Chain<T>> cs;
  std::vector<LumpingMap> ms;
  for (std::size_t i = 0; i < o.chains.size(); ++i) {
    cs.push_back(load_chain<T>(o.chains[i]));
    ms.push_back(load_map(o.maps[i], cs.back().space, z.space.names()));
  }
  emit(o, out, coupling_to_json(couple_many(cs, ms, z, coupling_options(o))));
  return 0;
}

template <class T>
int cmd_intertwine(const Options& o, std::ostream& out) {
  auto x = load_chain<T>(arg(o, 0, "X file"));
  auto y = load_chain<T>(arg(o, 1, "Y file"));
  auto link = link_from_json<T>(read_json_file(o.link), x.space, y.space);
  emit(o, out, coupling_to_json(diaconis_fill_intertwining(x, y, link, coupling_options(o))));
  return 0;
}

template <class T>
Check joint_check(const JointLawResult<T>& j, double eps) {
  auto c = lumpcouple::detail::make_check("closed-form joint law", j.deviation, eps, j.witness);
  c.note = std::to_string(j.trajectories) + " trajectories";
  return c;
}

template <class T>
int cmd_verify(const Options& o, std::ostream& out) {
  auto c = coupling_from_json<T>(read_json_file(arg(o, 0, "coupling file")));
  if (o.xFile.empty() || o.yFile.empty()) throw Error(ErrorKind::InvalidInput, "verify needs --x and --y");
  auto jx = read_json_file(o.xFile), jy = read_json_file(o.yFile);
  VerificationReport rep;
  if (jx.contains("steps")) {
    auto x = inhomogeneous_from_json<T>(jx);
    auto y = inhomogeneous_from_json<T>(jy);
    rep.append(verify_marginals(c, x, y, o.horizon, o.tol));
    return print_report(o, out, rep);
  }
  auto x = chain_from_json<T>(jx);
  auto y = chain_from_json<T>(jy);
  rep.append(verify_marginals(c, x, y, o.horizon, o.tol));
  if (c.kind == CouplingKind::Stationary) rep.append(verify_stationarity(c, o.tol));
  if (!o.zFile.empty() && !o.mapF.empty() && !o.mapG.empty()) {
    auto z = load_chain<T>(o.zFile);
    auto f = load_map(o.mapF, x.space, z.space.names());
    auto g = load_map(o.mapG, y.space, z.space.names());
    std::size_t window = o.window ? o.window : o.horizon;
    auto ci = verify_conditional_independence(c, x, y, z, f, g, o.horizon, window);
    auto ck = lumpcouple::detail::make_check("conditional independence", ci.deviation, o.tol, ci.witness);
    ck.note = "window " + std::to_string(ci.window);
    // Windowed conditioning converges only in the limit unless f is strong.
    if (window > o.horizon || !dynkin_check(x.kernel, f, o.tol).isStrong) ck.pass = true, ck.note += ", informational";
    rep.checks.push_back(ck);
    if (c.kind == CouplingKind::Homogeneous || c.kind == CouplingKind::Stationary)
      rep.checks.push_back(joint_check(verify_joint_law(c, x, y, z, f, g, o.horizon), o.tol));
    rep.append(verify_strong_projection(c, x, f, y, o.tol));
  }
  if (o.mc > 0) {
    auto mc = monte_carlo_check(c, {x, y}, o.mc, o.horizon, o.seed);
    rep.append(mc);
  }
  return print_report(o, out, rep);
}

template <class T>
int cmd_simulate(const Options& o, std::ostream& out) {
  auto j = read_json_file(arg(o, 0, "chain or coupling file"));
  Chain<T> chain;
  std::vector<Kernel<T>> steps;
  if (j.contains("kind")) {
    auto c = coupling_from_json<T>(j);
    chain = c.chain();
    steps = c.timeKernels;
  } else if (j.contains("steps")) {
    auto ic = inhomogeneous_from_json<T>(j);
    chain = Chain<T>(ic.space, ic.initial, Kernel<T>::identity(ic.space.size()));
    steps = ic.steps;
  } else {
    chain = chain_from_json<T>(j);
  }
  std::mt19937_64 rng(o.seed);
  Json trajs = Json::array();
  for (std::size_t n = 0; n < o.count; ++n) {
    std::vector<std::pair<std::size_t, T>> init;
    for (std::size_t i = 0; i < chain.size(); ++i) init.push_back({i, chain.initial[i]});
    std::vector<std::size_t> traj{draw_index<T>(rng, init)};
    for (std::size_t t = 0; t < o.horizon; ++t) {
      const auto& k = t < steps.size() ? steps[t] : chain.kernel;
      if (chain.is_open(traj.back())) throw Error(ErrorKind::InvalidInput, "trajectory left the materialized region");
      std::vector<std::pair<std::size_t, T>> items;
      for (const auto& e : k.row(traj.back())) items.push_back({e.to, e.p});
      traj.push_back(draw_index<T>(rng, items));
    }
    Json names = Json::array();
    for (auto i : traj) names.push_back(chain.space.name(i));
    trajs.push_back(names);
  }
  Json outj;
  outj["seed"] = o.seed;
  outj["horizon"] = o.horizon;
  outj["trajectories"] = trajs;
  emit(o, out, outj);
  return 0;
}

inline void export_examples(const std::string& dir) {
  namespace fs = std::filesystem;
  auto write_case = [&](const std::string& name, const auto& ex) {
    fs::path d = fs::path(dir) / name;
    fs::create_directories(d);
    write_json_file((d / "X.json").string(), chain_to_json(ex.x));
    write_json_file((d / "Y.json").string(), chain_to_json(ex.y));
    write_json_file((d / "Z.json").string(), chain_to_json(ex.z));
    write_json_file((d / "f.json").string(), map_to_json(ex.f));
    write_json_file((d / "g.json").string(), map_to_json(ex.g));
  };
  write_case("batcave", examples::batcave<Rational>());
  write_case("three-bit-shift", examples::three_bit_shift<Rational>());
  auto emc = examples::three_state_emc<Rational>();
  write_case("three-state-emc", emc);
  fs::path d = fs::path(dir) / "three-state-emc";
  write_json_file((d / "witness_x.json").string(), witness_to_json(examples::three_state_emc_witness_x<Rational>(), emc.f));
  write_json_file((d / "witness_y.json").string(), witness_to_json(examples::three_state_emc_witness_y<Rational>(), emc.g));
  fs::create_directories(fs::path(dir) / "biased-walk");
  Json params;
  params["p"] = "2/3";
  params["depth"] = 12;
  params["map"] = "absolute value";
  write_json_file((fs::path(dir) / "biased-walk" / "params.json").string(), params);
  for (const auto& n : examples::names()) {
    Json g;
    g["name"] = n;
    g["values"] = Json::array();
    for (const auto& v : examples::goldens(n))
      g["values"].push_back({{"key", v.key}, {"expected", v.expected}, {"origin", v.origin}});
    write_json_file((fs::path(dir) / n / "golden.json").string(), g);
  }
}

inline int cmd_examples(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.exportDir.empty()) export_examples(o.exportDir);
  if (o.list) {
    for (const auto& n : examples::names()) out << n << "\n";
    return 0;
  }
  if (!o.exportDir.empty() && o.positional.empty()) return 0;
  std::vector<std::string> which = o.positional.empty() ? examples::names() : o.positional;
  int status = 0;
  Json all = Json::object();
  for (const auto& n : which) {
    auto rep = examples::run_example(n);
    if (o.json) {
      all[n] = report_to_json(rep);
    } else {
      out << n << ": " << (rep.ok() ? "ok" : "MISMATCH") << "\n";
      for (const auto& c : rep.checks)
        out << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  (" << c.note << ")"
            << (c.witness.empty() ? "" : "  " + c.witness) << "\n";
    }
    if (!rep.ok()) {
      for (const auto& c : rep.checks)
        if (!c.pass) {
          err << "error: " << n << ": " << c.name << ": " << c.witness << "\n";
          break;
        }
      status = 1;
    }
  }
  if (o.json) out << all.dump(2) << "\n";
  return status;
}

template <class T>
int dispatch(const std::string& cmd, const Options& o, std::ostream& out, std::ostream& err) {
  if (cmd == "validate") return cmd_validate<T>(o, out);
  if (cmd == "check-weak") return cmd_check_weak<T>(o, out);
  if (cmd == "check-strong") return cmd_check_strong<T>(o, out);
  if (cmd == "check-exact") return cmd_check_exact<T>(o, out);
  if (cmd == "image-markov") return cmd_image_markov<T>(o, out);
  if (cmd == "couple") return cmd_couple<T>(o, out);
  if (cmd == "couple-many") return cmd_couple_many<T>(o, out);
  if (cmd == "intertwine") return cmd_intertwine<T>(o, out);
  if (cmd == "verify") return cmd_verify<T>(o, out);
  if (cmd == "simulate") return cmd_simulate<T>(o, out);
  if (cmd == "examples") return cmd_examples(o, out, err);
  throw Error(ErrorKind::InvalidInput, "unknown command '" + cmd + "'");
}

}  // namespace detail

/// Exit codes: 0 success or property holds, 1 computation error or property
/// fails, 2 usage error.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Markovian couplings of chains that share a lumped image", "lumpcouple"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--exact", o.exact, "Exact rational arithmetic (default: double)");
  app.add_flag("--json", o.json, "Machine-readable JSON on stdout");
  app.add_option("--tol", o.tol, "Tolerance for float comparisons and phi convergence");
  app.add_option("--max-iter", o.maxIter, "Iteration budget for phi");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("-o,--output", o.output, "Write the resulting document to this file");

  auto files = [&](CLI::App* s, const char* what) { s->add_option("files", o.positional, what); };

  auto* validate = app.add_subcommand("validate", "Check stochasticity and reachability of a chain");
  files(validate, "chain file");

  auto* weak = app.add_subcommand("check-weak", "Compare the image process with a given image chain");
  files(weak, "chain file");
  weak->add_option("--map", o.map, "map file")->required();
  weak->add_option("--image", o.image, "image chain file")->required();
  weak->add_option("--horizon", o.horizon, "trajectory horizon");

  auto* strong = app.add_subcommand("check-strong", "Dynkin criterion for a strong lumping");
  files(strong, "chain file");
  strong->add_option("--map", o.map, "map file")->required();

  auto* exact = app.add_subcommand("check-exact", "Verify or search for an exact lumping witness");
  files(exact, "chain file");
  exact->add_option("--map", o.map, "map file")->required();
  exact->add_option("--witness", o.witness, "witness file {nu, Q}");

  auto* im = app.add_subcommand("image-markov", "Test the Markov property of the image process");
  files(im, "chain file");
  im->add_option("--map", o.map, "map file")->required();
  im->add_option("--horizon", o.horizon, "trajectory horizon");

  auto* couple = app.add_subcommand("couple", "Build the coupling of X and Y over Z");
  files(couple, "X, Y and Z chain files");
  couple->add_option("--f", o.mapF, "map from X to Z")->required();
  couple->add_option("--g", o.mapG, "map from Y to Z")->required();
  auto* st = couple->add_flag("--stationary", o.stationary, "Stationary coupling on phi > 0 and phi^rev > 0");
  auto* qs = couple->add_option("--quasistationary", o.quasi, "Absorbers a,b,c of X, Y and Z");
  auto* ih = couple->add_flag("--inhomogeneous", o.inhomogeneous, "Inputs carry per-step kernels");
  st->excludes(qs)->excludes(ih);
  qs->excludes(ih);
  couple->add_option("--horizon", o.horizon, "number of steps (inhomogeneous)");
  couple->add_option("--evidence-horizon", o.evidenceHorizon, "horizon of the input evidence checks");
  couple->add_flag("--no-evidence", o.noEvidence, "Skip the image Markov evidence checks");

  auto* many = app.add_subcommand("couple-many", "Couple several chains over one image");
  files(many, "Z chain file");
  many->add_option("--chain", o.chains, "chain file, repeated")->required();
  many->add_option("--map", o.maps, "map file, one per chain")->required();

  auto* inter = app.add_subcommand("intertwine", "Coupling from an intertwining link");
  files(inter, "X and Y chain files");
  inter->add_option("--link", o.link, "link file {b: {a: p}}")->required();

  auto* verify = app.add_subcommand("verify", "Check a coupling against its inputs");
  files(verify, "coupling file");
  verify->add_option("--x", o.xFile, "X chain file")->required();
  verify->add_option("--y", o.yFile, "Y chain file")->required();
  verify->add_option("--z", o.zFile, "Z chain file");
  verify->add_option("--f", o.mapF, "map from X to Z");
  verify->add_option("--g", o.mapG, "map from Y to Z");
  verify->add_option("--horizon", o.horizon, "trajectory horizon");
  verify->add_option("--window", o.window, "conditioning window (default: horizon)");
  verify->add_option("--mc", o.mc, "Monte Carlo samples (0 = off)");

  auto* sim = app.add_subcommand("simulate", "Sample trajectories of a chain or coupling");
  files(sim, "chain or coupling file");
  sim->add_option("--horizon", o.horizon, "trajectory horizon");
  sim->add_option("--count", o.count, "number of trajectories");

  auto* ex = app.add_subcommand("examples", "Run bundled examples against golden values");
  files(ex, "example names");
  ex->add_flag("--list", o.list, "List example names");
  ex->add_option("--export", o.exportDir, "Write example input files to this directory");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'lumpcouple --help' for usage\n";
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  bool useExact = o.exact || numeric_mode_from_env() == NumericMode::Exact;
  try {
    return useExact ? detail::dispatch<Rational>(cmd, o, out, err) : detail::dispatch<double>(cmd, o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: InvalidInput: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lumpcouple::cli

#endif  // LUMPCOUPLE_TOOLS_CLI_HPP
