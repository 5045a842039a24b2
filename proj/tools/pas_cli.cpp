// pas: command-line front end for the Plant-and-Steal library.
//
// Exit codes: 0 ok, 1 property violated, 2 bad input, 3 exact-MMS cap
// exceeded, 4 unknown mechanism or agent-count mismatch, 5 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pas/experiments.hpp"
#include "pas/json_io.hpp"

namespace {

using namespace pas;

class MechanismError : public Error {
 public:
  using Error::Error;
};

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(out);
  if (!os) throw InputError("cannot write '" + out + "'");
  os << j.dump(2) << '\n';
}

MechanismRef resolve_or_fail(const std::string& name) {
  try {
    return resolve_mechanism(name);
  } catch (const InputError& e) {
    throw MechanismError(e.what());
  }
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(detail::parse_int(tok, "list entry")));
  }
  if (out.empty()) throw InputError("empty list '" + text + "'");
  return out;
}

// ---------------------------------------------------------------------------

struct MmsArgs {
  std::string input, out;
  std::size_t agent = 0;
  std::size_t k = 0;
  std::size_t cap = kDefaultExactCap;
  bool heuristic = false;
};

int run_mms(const MmsArgs& a) {
  const auto file = instance_from_json(read_json_file(a.input));
  const auto& inst = file.instance;
  if (a.agent >= inst.n()) throw InputError("agent index out of range");
  const std::size_t k = a.k ? a.k : inst.n();
  const auto r = a.heuristic ? mms_heuristic(inst.values(a.agent), k) : mms_exact(inst.values(a.agent), k, a.cap);
  Json j{{"agent", a.agent}, {"k", k}};
  j.update(to_json(r));
  emit(j, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct AllocateArgs {
  std::string input, out, mechanism, epsilon = "1/4", odd_plant = "second";
  std::uint64_t seed = kDefaultSeed;
  std::size_t cap = kDefaultExactCap;
};

int run_allocate(const AllocateArgs& a) {
  const MechanismRef mech = resolve_or_fail(a.mechanism);
  if (mech.kind == MechanismKind::kMutant) throw MechanismError("the mutant is only available to verify");
  const auto file = instance_from_json(read_json_file(a.input));
  const auto& inst = file.instance;
  if (mech.kind == MechanismKind::kTwoAgent && inst.n() != 2)
    throw MechanismError(a.mechanism + " needs exactly 2 agents, the instance has " + std::to_string(inst.n()));
  if (mech.kind == MechanismKind::kNAgent && inst.n() < 2)
    throw MechanismError(a.mechanism + " needs at least 2 agents");

  Json j;
  if (mech.kind == MechanismKind::kNAgent) {
    NAgentOptions opt;
    opt.exact_cap = a.cap;
    if (a.odd_plant == "last")
      opt.odd_plant = OddPlantTarget::kLastOfOpposite;
    else if (a.odd_plant != "second")
      throw InputError("--odd-plant must be 'second' or 'last'");
    j = to_json(run_n_agent_mechanism(inst, file.predictions, opt));
  } else {
    MechanismOptions opt;
    opt.seed = a.seed;
    opt.epsilon = parse_rational(a.epsilon);
    opt.exact_cap = a.cap;
    j = to_json(run_named_mechanism(mech.name, inst, file.predictions, opt));
  }
  j["predictions"] = file.prediction_kind;
  emit(j, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string property, mechanism = "B-RR-PAS", out, agents = "3", ms = "8,10,12", epsilon = "1/4", bound;
  bool mutant = false, exhaustive = false, stop_at_first = false;
  std::size_t n = 2, min_m = 1, max_m = 0, trials = 0, panel = 50, per_d = 200, cap = kDefaultExactCap;
  std::uint64_t seed = kDefaultSeed, budget = 0, d_stride = 1;
};

int run_verify(const VerifyArgs& a) {
  const std::string name = a.mutant ? std::string(kMutantMechanismName) : a.mechanism;
  if (a.property != "noise") resolve_or_fail(name);
  PropertyReport rep;
  Json j;
  if (a.property == "truthfulness") {
    FuzzSpec spec;
    spec.mechanism = name;
    spec.n = a.n;
    spec.min_m = a.min_m;
    spec.max_m = a.max_m ? a.max_m : 5;
    spec.panel = a.panel;
    spec.trials = a.trials ? a.trials : 10000;
    spec.seed = a.seed;
    spec.budget = a.budget;
    spec.stop_at_first = a.stop_at_first;
    spec.epsilon = parse_rational(a.epsilon);
    rep = a.exhaustive ? fuzz_truthfulness_exhaustive(spec) : fuzz_truthfulness_sampled(spec);
    j = to_json(rep);
  } else if (a.property == "consistency" || a.property == "robustness") {
    CheckSpec spec;
    spec.mechanism = name;
    if (resolve_or_fail(name).kind == MechanismKind::kNAgent) spec.agents = parse_list(a.agents);
    spec.trials = a.trials ? a.trials : 1000;
    spec.min_m = a.min_m;
    spec.max_m = a.max_m ? a.max_m : 12;
    spec.seed = a.seed;
    spec.exact_cap = a.cap;
    spec.epsilon = parse_rational(a.epsilon);
    if (!a.bound.empty()) spec.bound = parse_rational(a.bound);
    spec.budget = a.budget;
    rep = a.property == "consistency" ? check_consistency(spec) : check_robustness(spec);
    j = to_json(rep);
  } else if (a.property == "noise") {
    NoiseSpec spec;
    spec.ms = parse_list(a.ms);
    spec.per_d = a.per_d;
    spec.d_stride = std::max<std::uint64_t>(1, a.d_stride);
    spec.seed = a.seed;
    spec.budget = a.budget;
    auto curve = check_noise_curve(spec);
    rep = curve.report;
    j = to_json(curve);
  } else {
    throw InputError("unknown property '" + a.property + "'");
  }
  emit(j, a.out);
  return rep.pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string out_dir = ".", mode = "both";
  std::size_t profiles = 100, predictions = 20, m = 100, threads = 1;
  std::uint64_t seed = kDefaultSeed;
  bool raw = false;
};

int run_experiment(const ExperimentArgs& a) {
  SweepSpec spec;
  spec.m = a.m;
  spec.profiles = a.profiles;
  spec.predictions = a.predictions;
  spec.seed = a.seed;
  spec.threads = std::max<std::size_t>(1, a.threads);
  spec.keep_raw = a.raw;
  if (a.mode == "correlated")
    spec.modes = {Correlation::kCorrelated};
  else if (a.mode == "uncorrelated")
    spec.modes = {Correlation::kUncorrelated};
  else if (a.mode != "both")
    throw InputError("--mode must be correlated, uncorrelated or both");
  const auto dmax = max_kendall_tau(spec.m);
  std::erase_if(spec.distances, [&](std::uint64_t d) { return d > dmax; });

  const auto res = run_sweep(spec);
  std::filesystem::create_directories(a.out_dir);
  auto open = [&](const std::string& file) {
    const auto path = (std::filesystem::path(a.out_dir) / file).string();
    std::ofstream os(path);
    if (!os) throw InputError("cannot write '" + path + "'");
    std::cout << path << '\n';
    return os;
  };
  for (Correlation mode : spec.modes) {
    auto os = open(std::string("aggregate_") + to_string(mode) + ".csv");
    write_aggregate_csv(os, res.rows, mode);
  }
  if (a.raw) {
    auto os = open("raw.csv");
    write_raw_csv(os, res.raw, spec.epsilons);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct NoiseArgs {
  std::string input, out, kind = "values";
  std::size_t m = 0;
  std::uint64_t d = 0, seed = kDefaultSeed;
};

int run_noise(const NoiseArgs& a) {
  if (a.input.empty()) {
    if (a.m == 0) throw InputError("give --m or --instance");
    const Ordering o = perturb_to_distance(Ordering::identity(a.m), a.d, a.seed);
    emit(Json{{"m", a.m}, {"d", a.d}, {"seed", a.seed}, {"ordering", to_json(o)}}, a.out);
    return 0;
  }
  // Perturb each agent's true order and emit the instance with noisy predictions.
  const auto file = instance_from_json(read_json_file(a.input));
  const auto& inst = file.instance;
  Rng rng(a.seed);
  std::vector<Ordering> orders;
  std::vector<std::vector<Rational>> values;
  for (Agent i = 0; i < inst.n(); ++i) {
    orders.push_back(perturb_to_distance(induced_ordering(inst, i), a.d, rng.next()));
    values.push_back(values_along(inst.values(i), orders.back()));
  }
  PredictionProfile<Rational> preds;
  if (a.kind == "values")
    preds = PredictionProfile<Rational>::from_values(std::move(values));
  else if (a.kind == "ordering")
    preds = PredictionProfile<Rational>::from_orderings(std::move(orders));
  else
    throw InputError("--kind must be 'values' or 'ordering'");
  emit(instance_to_json(inst, preds), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truthful learning-augmented MMS allocation"};
  app.require_subcommand(1);

  MmsArgs mms;
  auto* c_mms = app.add_subcommand("mms", "Maximin share of one agent");
  c_mms->add_option("instance", mms.input, "Instance JSON file")->required();
  c_mms->add_option("--agent", mms.agent, "Agent index");
  c_mms->add_option("-k", mms.k, "Number of bundles (default n)");
  c_mms->add_option("--exact-cap", mms.cap, "Largest m for the exact search");
  c_mms->add_flag("--heuristic", mms.heuristic, "Use the LPT + local-search heuristic");
  c_mms->add_option("-o,--out", mms.out, "Output file (default stdout)");

  AllocateArgs alloc;
  auto* c_alloc = app.add_subcommand("allocate", "Run a mechanism with truthful reports");
  c_alloc->add_option("instance", alloc.input, "Instance JSON file")->required();
  c_alloc->add_option("-M,--mechanism", alloc.mechanism, "Mechanism name")->required();
  c_alloc->add_option("--seed", alloc.seed, "Seed for the Random baselines");
  c_alloc->add_option("--epsilon", alloc.epsilon, "Cut-and-Balance epsilon");
  c_alloc->add_option("--odd-plant", alloc.odd_plant, "n-agent odd plant target: second or last");
  c_alloc->add_option("--exact-cap", alloc.cap, "Largest m for exact maximin shares");
  c_alloc->add_option("-o,--out", alloc.out, "Output file (default stdout)");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Check a property and print a JSON report");
  c_ver->add_option("property", ver.property, "truthfulness, consistency, robustness or noise")->required();
  c_ver->add_option("-M,--mechanism", ver.mechanism, "Mechanism name");
  c_ver->add_flag("--mutant", ver.mutant, "Fuzz the planted mutant instead");
  c_ver->add_flag("--exhaustive", ver.exhaustive, "Exhaustive two-agent fuzz");
  c_ver->add_flag("--stop-at-first", ver.stop_at_first, "Stop at the first violation");
  c_ver->add_option("--n", ver.n, "Agents for the truthfulness fuzz");
  c_ver->add_option("--agents", ver.agents, "Agent counts for n-agent checks, comma separated");
  c_ver->add_option("--min-m", ver.min_m, "Smallest item count");
  c_ver->add_option("--max-m", ver.max_m, "Largest item count");
  c_ver->add_option("--trials", ver.trials, "Sampled instances");
  c_ver->add_option("--panel", ver.panel, "Prediction panel size for the exhaustive fuzz");
  c_ver->add_option("--epsilon", ver.epsilon, "Cut-and-Balance epsilon");
  c_ver->add_option("--bound", ver.bound, "Override the ratio bound");
  c_ver->add_option("--ms", ver.ms, "Item counts for the noise sweep, comma separated");
  c_ver->add_option("--per-d", ver.per_d, "Instances per distance in the noise sweep");
  c_ver->add_option("--d-stride", ver.d_stride, "Distance stride in the noise sweep");
  c_ver->add_option("--exact-cap", ver.cap, "Largest m for exact maximin shares");
  c_ver->add_option("--seed", ver.seed, "Seed");
  c_ver->add_option("--budget", ver.budget, "Maximum mechanism runs (0 = unlimited)");
  c_ver->add_option("-o,--out", ver.out, "Output file (default stdout)");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "Synthetic two-agent sweep, writes CSV");
  c_exp->add_option("--profiles", exp.profiles, "Valuation profiles per mode");
  c_exp->add_option("--predictions", exp.predictions, "Predictions per profile and distance");
  c_exp->add_option("--m", exp.m, "Items");
  c_exp->add_option("--seed", exp.seed, "Seed");
  c_exp->add_option("--threads", exp.threads, "Worker threads");
  c_exp->add_option("--mode", exp.mode, "correlated, uncorrelated or both");
  c_exp->add_option("--out-dir", exp.out_dir, "Output directory");
  c_exp->add_flag("--raw", exp.raw, "Also write raw.csv");

  NoiseArgs noise;
  auto* c_noise = app.add_subcommand("noise", "Random ordering at an exact Kendall tau distance");
  c_noise->add_option("--m", noise.m, "Items (perturbs the identity order)");
  c_noise->add_option("--instance", noise.input, "Instance JSON; perturbs every agent's true order");
  c_noise->add_option("--d", noise.d, "Kendall tau distance")->required();
  c_noise->add_option("--kind", noise.kind, "Prediction kind written with --instance: values or ordering");
  c_noise->add_option("--seed", noise.seed, "Seed");
  c_noise->add_option("-o,--out", noise.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_mms) return run_mms(mms);
    if (*c_alloc) return run_allocate(alloc);
    if (*c_ver) return run_verify(ver);
    if (*c_exp) return run_experiment(exp);
    if (*c_noise) return run_noise(noise);
  } catch (const CapExceededError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const MechanismError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 5;
  }
  return 5;
}
