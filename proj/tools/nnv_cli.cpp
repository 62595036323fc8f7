// Command-line front end: verify properties, evaluate networks, train with IBP.
//
// Exit codes for verify: 0 proven, 1 refuted, 2 unknown, 3 and above errors.

#include "nnv/nnv.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace {

using namespace nnv;

constexpr int kExitError = 3;
constexpr int kExitUsage = 4;

struct VerifyArgs {
  std::vector<std::string> properties;
  std::string model;
  std::string method = "interval";
  std::string delta = "1/1000000";
  std::size_t tau = 5;
  std::string sigmoid_cuts;
  bool eps_sweep = false;
  std::string sweep_start = "1/100";
  std::size_t jobs = 1;
  bool warm_start = false;
  std::string out;
};

struct EvalArgs {
  std::string model;
  std::string input;
};

struct TrainArgs {
  std::string data;
  std::string layers = "2,16,16,1";
  double eps = 0.05;
  double eta = 0.1;
  std::size_t epochs = 100;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
  std::string out;
  std::string log;
};

RationalVec parse_list(const std::string& s) {
  RationalVec v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty()) v.push_back(parse_rational(cell));
  return v;
}

void emit(const json& j, const std::string& out) {
  std::string text = j.dump(2);
  std::cout << text << '\n';
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text << '\n';
  }
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Proven: return 0;
    case Outcome::Refuted: return 1;
    case Outcome::Unknown: return 2;
  }
  return kExitError;
}

struct JobResult {
  json j;
  int code = 0;
};

JobResult verify_one(const std::string& path, const VerifyArgs& a, Method method, const SolverOptions& opt) {
  JobResult r;
  try {
    Property p;
    if (a.model.empty()) {
      p = load_property(path);
    } else {
      auto net = std::make_shared<const Graph>(load_graph(a.model));
      p = property_from_json(read_json_file(path), std::filesystem::path(path).parent_path(),
                             [&](const std::string&) { return net; });
    }
    Verdict v = run_verification(p, method, opt);
    if (v.outcome == Outcome::Refuted) {
      // never print a counterexample that does not replay
      CexCheck c = check_counterexample(p, *v.counterexample);
      if (!c.valid) throw std::logic_error("solver counterexample failed to replay: " + c.reason);
    }
    r.j = verdict_json(v);
    r.code = exit_code(v.outcome);
    if (a.eps_sweep) {
      if (!is_abstract(method)) throw std::invalid_argument("--eps-sweep needs an abstract method");
      SweepResult s = eps_sweep(p, method, parse_rational(a.sweep_start));
      r.j["eps_sweep"] = {{"eps", to_string(s.eps)}, {"eps_approx", to_double(s.eps)}, {"calls", s.calls}};
    }
  } catch (const std::exception& e) {
    r.j = {{"verdict", "error"}, {"error", e.what()}};
    r.code = kExitError;
    std::cerr << path << ": " << e.what() << '\n';
  }
  r.j["property"] = path;
  return r;
}

int cmd_verify(const VerifyArgs& a) {
  Method method = parse_method(a.method);
  SolverOptions opt;
  opt.delta = parse_rational(a.delta);
  if (!(opt.delta > 0)) throw std::invalid_argument("--delta must be positive");
  opt.tau = a.tau;
  opt.warm_start = a.warm_start;
  if (!a.sigmoid_cuts.empty()) opt.encode.sigmoid.cuts = parse_list(a.sigmoid_cuts);

  std::vector<JobResult> results(a.properties.size());
  std::size_t jobs = std::max<std::size_t>(1, a.jobs);
  for (std::size_t start = 0; start < a.properties.size(); start += jobs) {
    std::vector<std::future<JobResult>> fs;
    for (std::size_t i = start; i < std::min(a.properties.size(), start + jobs); ++i)
      fs.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, verify_one,
                              std::cref(a.properties[i]), std::cref(a), method, std::cref(opt)));
    for (std::size_t k = 0; k < fs.size(); ++k) results[start + k] = fs[k].get();
  }
  int code = 0;
  // worst outcome wins: error, refuted, unknown, proven
  auto rank = [](int c) { return c >= kExitError ? 3 : c == 1 ? 2 : c == 2 ? 1 : 0; };
  for (const auto& r : results)
    if (rank(r.code) > rank(code)) code = r.code;
  if (results.size() == 1) {
    emit(results[0].j, a.out);
  } else {
    json arr = json::array();
    for (const auto& r : results) arr.push_back(r.j);
    emit(arr, a.out);
  }
  for (const auto& r : results) std::cerr << r.j.value("property", "") << ": " << r.j.value("verdict", "?") << '\n';
  return code;
}

int cmd_eval(const EvalArgs& a) {
  Graph g = load_graph(a.model);
  require_valid(g);
  RationalVec x;
  if (std::filesystem::exists(a.input)) {
    json j = read_json_file(a.input);
    for (const auto& v : j) x.push_back(json_rational(v, a.input));
  } else {
    x = parse_list(a.input);
  }
  if (x.size() != g.input_count())
    throw std::invalid_argument("network has " + std::to_string(g.input_count()) + " inputs, got " +
                                std::to_string(x.size()));
  RationalVec y = evaluate(g, x);
  json out = json::array();
  json approx = json::array();
  for (const auto& v : y) {
    out.push_back(to_string(v));
    approx.push_back(to_double(v));
  }
  emit({{"outputs", out}, {"approx", approx}}, "");
  return 0;
}

int cmd_train(const TrainArgs& a) {
  Dataset d = load_dataset(a.data);
  Mlp m;
  std::stringstream ss(a.layers);
  std::string cell;
  while (std::getline(ss, cell, ',')) m.sizes.push_back(std::stoul(cell));
  m.check();
  TrainConfig cfg;
  cfg.eps = a.eps;
  cfg.eta = a.eta;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.seed = a.seed;
  TrainResult r = train_ibp(d, m, cfg, [](const EpochLog& l) {
    std::cerr << "epoch " << l.epoch << " loss_hi " << l.loss_hi << " loss " << l.loss << '\n';
  });
  Graph g = to_graph(m, r.theta);
  if (!a.out.empty()) save_graph(g, a.out);
  if (!a.log.empty()) {
    std::ofstream f(a.log);
    if (!f) throw std::runtime_error("cannot write " + a.log);
    write_training_log(f, r.log);
  }
  Rational eps = from_double(a.eps);
  emit({{"model", a.out},
        {"epochs", a.epochs},
        {"final_loss_hi", r.log.back().loss_hi},
        {"final_loss", r.log.back().loss},
        {"accuracy", accuracy(g, d)},
        {"robust_fraction", robust_fraction(g, d, eps)}},
       "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural network verification toolkit"};
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Verify properties");
  verify->add_option("--property,-p", va.properties, "Property file (repeatable)")->required();
  verify->add_option("--model", va.model, "Network overriding the property's network paths");
  verify->add_option("--method", va.method, "smt | reluplex | interval | zonotope | polyhedron")
      ->check(CLI::IsMember({"smt", "reluplex", "interval", "zonotope", "polyhedron"}));
  verify->add_option("--delta", va.delta, "Margin for strict inequalities");
  verify->add_option("--tau", va.tau, "Repairs of one ReLU before splitting")->check(CLI::PositiveNumber);
  verify->add_option("--sigmoid-cuts", va.sigmoid_cuts, "Comma-separated sigmoid cut points");
  verify->add_flag("--eps-sweep", va.eps_sweep, "Also search the largest provable l-infinity radius");
  verify->add_option("--sweep-start", va.sweep_start, "First radius of the sweep");
  verify->add_option("--jobs,-j", va.jobs, "Properties verified in parallel")->check(CLI::PositiveNumber);
  verify->add_flag("--warm-start", va.warm_start, "Reluplex: add interval bounds on every node");
  verify->add_option("--out,-o", va.out, "Also write the JSON verdict here");
  std::uint64_t unused_seed = 0;
  verify->add_option("--seed", unused_seed, "Accepted for symmetry; verification is deterministic");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a network on one input");
  eval->add_option("--model", ea.model, "Network file")->required();
  eval->add_option("--input", ea.input, "Comma-separated rationals or a JSON array file")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train-ibp", "Train a ReLU network with interval bound propagation");
  train->add_option("--data", ta.data, "CSV dataset, label in the last column")->required();
  train->add_option("--layers", ta.layers, "Layer sizes, e.g. 2,16,16,1");
  train->add_option("--eps", ta.eps, "Training radius (0 = standard training)");
  train->add_option("--eta", ta.eta, "Learning rate");
  train->add_option("--epochs", ta.epochs, "Epochs");
  train->add_option("--batch", ta.batch, "Examples per mini-batch")->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.seed, "Random seed");
  train->add_option("--out,-o", ta.out, "Where to write the trained network");
  train->add_option("--log", ta.log, "Where to write the training log CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  try {
    if (*verify) return cmd_verify(va);
    if (*eval) return cmd_eval(ea);
    if (*train) return cmd_train(ta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
