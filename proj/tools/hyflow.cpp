// Command-line front end: validate feeders, run solvers, generate datasets, train error
// models and produce the method comparison report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "hyflow/eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyflow;

namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

Feeder checked_feeder(const fs::path& path) {
  Feeder f = stage("load", [&] { return load_feeder(path); });
  const ValidationReport report = validate_network(f.network);
  if (!report.ok()) throw StageError("validate", report.violations.front().message);
  return f;
}

json solution_to_json(const PFSolution& sol, const PhaseIndex& index) {
  json buses = json::array();
  for (Index c = 0; c < index.size(); ++c) {
    const PhaseSlot& s = index.slot(c);
    buses.push_back({{"bus", s.bus},
                     {"phase", std::string(1, phase_letter(s.phase))},
                     {"magnitude", std::abs(sol.v[c])},
                     {"angle_deg", std::arg(sol.v[c]) * 180.0 / std::numbers::pi}});
  }
  return {{"method", to_string(sol.method)},
          {"iterations", sol.iterations},
          {"residual", sol.residual},
          {"diagnostics", sol.diagnostics},
          {"v", cvec_to_json(sol.v)},
          {"buses", buses}};
}

void print_violations(const ValidationReport& report) {
  for (const Violation& v : report.violations) std::cout << to_string(v.kind) << ": " << v.message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbalanced distribution power flow: nonlinear, Taylor-linearized and regression-corrected solvers"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { seed = s, seed_given = true; },
                                         "Seed for every random draw")
      ->configurable();

  const std::map<std::string, SvrSolver> solvers{{"ipm", SvrSolver::interior_point},
                                                  {"cd", SvrSolver::coordinate_descent}};

  // validate
  auto* validate = app.add_subcommand("validate", "Check a feeder file");
  fs::path validate_path;
  validate->add_option("feeder", validate_path, "Feeder JSON")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one operating point");
  fs::path solve_feeder, op_path, model_path, solve_out;
  std::string method = "nonlinear";
  solve->add_option("feeder", solve_feeder, "Feeder JSON")->required();
  solve->add_option("--op", op_path, "Operating point JSON (default: nominal feeder loading)");
  solve->add_option("--method", method, "nonlinear | taylor | hybrid")
      ->check(CLI::IsMember({"nonlinear", "taylor", "hybrid"}));
  solve->add_option("--model", model_path, "Error model JSON (hybrid)");
  solve->add_option("--out", solve_out, "Write the solution JSON here instead of stdout");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate train/test datasets");
  fs::path gen_feeder, gen_config, gen_out;
  ScenarioConfig cli_cfg;
  gen->add_option("feeder", gen_feeder, "Feeder JSON")->required();
  gen->add_option("--config", gen_config, "Scenario config JSON");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n-train", cli_cfg.n_train);
  gen->add_option("--n-test", cli_cfg.n_test);
  gen->add_option("--load-variation", cli_cfg.load_variation);
  gen->add_option("--der-variation", cli_cfg.der_variation);
  gen->add_option("--noise-max", cli_cfg.noise_max);
  gen->add_option("--bad-fraction", cli_cfg.bad_sample_fraction);
  gen->add_option("--n-bad", cli_cfg.n_bad_nodes);
  gen->add_option("--threads", cli_cfg.threads);
  bool contaminate = false;
  gen->add_flag("--contaminate", contaminate, "Inject bad data into the training split");

  // train
  auto* train = app.add_subcommand("train", "Fit an error model to a dataset");
  fs::path train_data, train_out;
  std::string kind = "svr", target = "error";
  SvrParams svr_params;
  double ridge = 1e-8;
  train->add_option("dataset", train_data, "Dataset JSON-lines file")->required();
  train->add_option("--kind", kind, "lr | svr")->check(CLI::IsMember({"lr", "svr"}));
  train->add_option("--target", target, "error | voltage")->check(CLI::IsMember({"error", "voltage"}));
  train->add_option("--C", svr_params.C, "SVR regularization")->check(CLI::PositiveNumber);
  train->add_option("--eps", svr_params.epsilon, "SVR tube half-width (standardized units)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--ridge", ridge, "LR ridge term");
  train->add_option("--threads", svr_params.threads);
  train->add_option("--solver", svr_params.solver.method, "SVR solver: ipm | cd")
      ->transform(CLI::CheckedTransformer(solvers));
  train->add_option("--out", train_out, "Model JSON")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Train on <data>/train.jsonl and score methods on <data>/test.jsonl");
  fs::path eval_feeder, eval_data, eval_report, eval_config;
  std::vector<std::string> methods;
  ComparisonConfig cmp;
  eval->add_option("feeder", eval_feeder, "Feeder JSON")->required();
  eval->add_option("--data", eval_data, "Directory written by gen")->required();
  eval->add_option("--methods", methods, "taylor lr-corrected hybrid-svr svr-direct nonlinear-bad-input")->delimiter(',');
  eval->add_option("--report", eval_report, "Report JSON");
  eval->add_option("--config", eval_config, "Scenario config JSON (bad-input measurement model)");
  eval->add_option("--C", cmp.svr.C)->check(CLI::PositiveNumber);
  eval->add_option("--eps", cmp.svr.epsilon)->check(CLI::NonNegativeNumber);
  eval->add_option("--threads", cmp.svr.threads);
  eval->add_option("--solver", cmp.svr.solver.method, "SVR solver: ipm | cd")
      ->transform(CLI::CheckedTransformer(solvers));

  // compare
  auto* compare = app.add_subcommand("compare", "Full pipeline: generate, contaminate, train, evaluate");
  fs::path cmp_feeder, cmp_config, cmp_report;
  bool cmp_contaminate = false;
  std::vector<std::string> cmp_methods;
  compare->add_option("feeder", cmp_feeder, "Feeder JSON")->required();
  compare->add_option("--config", cmp_config, "Scenario config JSON");
  compare->add_option("--methods", cmp_methods, "Subset of the eval methods")->delimiter(',');
  compare->add_flag("--contaminate", cmp_contaminate, "Inject bad data into the training split");
  compare->add_option("--C", cmp.svr.C)->check(CLI::PositiveNumber);
  compare->add_option("--eps", cmp.svr.epsilon)->check(CLI::NonNegativeNumber);
  compare->add_option("--solver", cmp.svr.solver.method, "SVR solver: ipm | cd")
      ->transform(CLI::CheckedTransformer(solvers));
  compare->add_option("--report", cmp_report, "Report JSON");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid of SVR hyperparameters scored on the test split");
  fs::path sweep_feeder, sweep_data;
  std::vector<double> sweep_c{1.0, 10.0, 100.0}, sweep_eps{1e-4, 1e-3, 1e-2};
  sweep->add_option("feeder", sweep_feeder, "Feeder JSON")->required();
  sweep->add_option("--data", sweep_data, "Directory written by gen")->required();
  sweep->add_option("--C", sweep_c, "Values of C")->expected(1, -1);
  sweep->add_option("--eps", sweep_eps, "Values of epsilon")->expected(1, -1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const Feeder f = stage("load", [&] { return load_feeder(validate_path); });
      const ValidationReport report = validate_network(f.network);
      if (report.ok()) {
        std::cout << "ok: " << f.network.buses().size() << " buses, " << f.network.lines().size() << " lines, "
                  << f.network.phase_count() << " non-slack phases\n";
        return 0;
      }
      print_violations(report);
      return 1;
    }

    if (*solve) {
      const Feeder f = checked_feeder(solve_feeder);
      const AdmittanceSystem sys = stage("admittance", [&] { return build_admittance(f.network); });
      OperatingPoint op{f.v0, f.nominal_injection()};
      if (!op_path.empty()) {
        const json doc = stage("op", [&] { return read_json(op_path); });
        op = stage("op", [&] {
          OperatingPoint p{doc.contains("v0") ? cvec_from_json(doc["v0"]) : f.v0, cvec_from_json(doc.at("s"))};
          if (p.s.size() != sys.size()) throw Error("s has " + std::to_string(p.s.size()) + " entries, expected " +
                                                    std::to_string(sys.size()));
          return p;
        });
      }
      PFSolution sol = stage("solve", [&]() -> PFSolution {
        const Method m = method_from_string(method);
        if (m == Method::nonlinear) return solve_nonlinear(sys, op);
        if (m == Method::taylor) return solve_taylor(assemble_linear(sys, op, rotation_vector(f.network)));
        if (model_path.empty()) throw Error("--model is required for the hybrid method");
        const ErrorModel model = model_from_json(read_json(model_path));
        if (!model.fingerprint.empty() && model.fingerprint != sys.phase_index.fingerprint())
          throw Error("model was trained for a different network");
        return hybrid_solve(sys, op, rotation_vector(f.network), model);
      });
      if (sol.method == Method::taylor || sol.method == Method::hybrid || sol.method == Method::lr_corrected)
        sol.residual = power_residual(sys, op, sol.v).cwiseAbs().maxCoeff();
      for (const auto& d : sol.diagnostics) std::cerr << "warning: " << d << '\n';
      const json doc = solution_to_json(sol, sys.phase_index);
      if (solve_out.empty()) std::cout << doc.dump(1) << '\n';
      else write_json(solve_out, doc);
      return 0;
    }

    if (*gen) {
      const Feeder f = checked_feeder(gen_feeder);
      ScenarioConfig cfg = cli_cfg;
      if (!gen_config.empty()) {
        cfg = stage("config", [&] { return config_from_json(read_json(gen_config)); });
        // explicit flags win over the file
        for (const auto* opt : gen->get_options()) {
          if (opt->count() == 0) continue;
          const std::string n = opt->get_name();
          if (n == "--n-train") cfg.n_train = cli_cfg.n_train;
          else if (n == "--n-test") cfg.n_test = cli_cfg.n_test;
          else if (n == "--load-variation") cfg.load_variation = cli_cfg.load_variation;
          else if (n == "--der-variation") cfg.der_variation = cli_cfg.der_variation;
          else if (n == "--noise-max") cfg.noise_max = cli_cfg.noise_max;
          else if (n == "--bad-fraction") cfg.bad_sample_fraction = cli_cfg.bad_sample_fraction;
          else if (n == "--n-bad") cfg.n_bad_nodes = cli_cfg.n_bad_nodes;
          else if (n == "--threads") cfg.threads = cli_cfg.threads;
        }
      }
      if (seed_given) cfg.seed = seed;
      ScenarioSet data = stage("generate", [&] { return generate_scenarios(f, cfg); });
      if (contaminate) data.train = stage("contaminate", [&] { return inject_bad_data(data.train, f.network, cfg); });
      stage("write", [&] {
        fs::create_directories(gen_out);
        write_dataset(gen_out / "train.jsonl", data.train);
        write_dataset(gen_out / "test.jsonl", data.test);
        json cfg_doc = config_to_json(cfg);
        cfg_doc["contaminated"] = contaminate;
        write_json(gen_out / "config.json", cfg_doc);
        return 0;
      });
      std::cout << "wrote " << data.train.size() << " training and " << data.test.size() << " test samples to "
                << gen_out.string() << " (" << data.redraws << " redraws)\n";
      return 0;
    }

    if (*train) {
      const Dataset ds = stage("load", [&] { return read_dataset(train_data); });
      const TargetKind tk = target == "error" ? TargetKind::error : TargetKind::voltage;
      ErrorModel model = stage("train", [&] {
        const TrainingSet ts = ds.training_set(tk);
        return kind == "lr" ? train_lr(ts, ridge) : train_svr(ts, svr_params);
      });
      model.target = tk;
      model.fingerprint = ds.fingerprint;
      stage("write", [&] {
        write_json(train_out, model_to_json(model));
        return 0;
      });
      std::cout << "trained " << to_string(model.kind) << " model on " << ds.size() << " samples -> "
                << train_out.string() << '\n';
      return 0;
    }

    auto parse_methods = [](const std::vector<std::string>& names) {
      std::vector<EvalMethod> out;
      for (const auto& n : names) out.push_back(eval_method_from_string(n));
      return out.empty() ? all_eval_methods() : out;
    };
    auto emit = [](const EvalReport& report, const fs::path& path) {
      const json doc = report_to_json(report);
      std::cout << render_table(doc);
      if (!path.empty()) write_json(path, doc);
    };

    if (*eval) {
      const Feeder f = checked_feeder(eval_feeder);
      cmp.methods = stage("methods", [&] { return parse_methods(methods); });
      cmp.direct_svr = cmp.svr;
      if (!eval_config.empty()) cmp.scenario = stage("config", [&] { return config_from_json(read_json(eval_config)); });
      else if (fs::exists(eval_data / "config.json"))
        cmp.scenario = stage("config", [&] { return config_from_json(read_json(eval_data / "config.json")); });
      if (seed_given) cmp.scenario.seed = seed;
      const Dataset train_ds = stage("load", [&] { return read_dataset(eval_data / "train.jsonl"); });
      const Dataset test_ds = stage("load", [&] { return read_dataset(eval_data / "test.jsonl"); });
      const EvalReport report = stage("evaluate", [&] { return evaluate(f, train_ds, test_ds, cmp); });
      emit(report, eval_report);
      return 0;
    }

    if (*compare) {
      const Feeder f = checked_feeder(cmp_feeder);
      cmp.methods = stage("methods", [&] { return parse_methods(cmp_methods); });
      if (!cmp_config.empty()) cmp.scenario = stage("config", [&] { return config_from_json(read_json(cmp_config)); });
      if (seed_given) cmp.scenario.seed = seed;
      cmp.contaminate = cmp_contaminate;
      cmp.direct_svr = cmp.svr;
      const EvalReport report = run_comparison(f, cmp);
      emit(report, cmp_report);
      return 0;
    }

    if (*sweep) {
      const Feeder f = checked_feeder(sweep_feeder);
      const Dataset train_ds = stage("load", [&] { return read_dataset(sweep_data / "train.jsonl"); });
      const Dataset test_ds = stage("load", [&] { return read_dataset(sweep_data / "test.jsonl"); });
      std::printf("%12s %12s %16s\n", "C", "eps", "max |V| rmse");
      for (double c : sweep_c) {
        for (double e : sweep_eps) {
          ComparisonConfig one;
          one.methods = {EvalMethod::hybrid_svr};
          one.svr.C = c;
          one.svr.epsilon = e;
          const EvalReport r = stage("sweep", [&] { return evaluate(f, train_ds, test_ds, one); });
          double worst = 0.0;
          for (const PhaseRmse& p : r.methods.front().phases) worst = std::max(worst, p.magnitude);
          std::printf("%12.4g %12.4g %16.4e\n", c, e, worst);
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
