#include "hyflow/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace hyflow {

using nlohmann::json;

double wrap_angle(double radians) {
  double d = std::remainder(radians, 2.0 * std::numbers::pi);
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return d;
}

std::vector<PhaseRmse> rmse_per_phase(const std::vector<CVec>& predictions, const std::vector<CVec>& truths,
                                      const PhaseIndex& index) {
  if (predictions.size() != truths.size()) throw Error("rmse: prediction and truth counts differ");
  std::array<double, 3> mag{}, ang{};
  std::array<Index, 3> count{};
  for (std::size_t k = 0; k < truths.size(); ++k) {
    const CVec& p = predictions[k];
    const CVec& t = truths[k];
    if (p.size() != index.size() || t.size() != index.size()) throw Error("rmse: solution length mismatch");
    for (Index c = 0; c < index.size(); ++c) {
      const auto ph = static_cast<std::size_t>(index.slot(c).phase);
      const double dm = std::abs(p[c]) - std::abs(t[c]);
      const double da = wrap_angle(std::arg(p[c]) - std::arg(t[c]));
      mag[ph] += dm * dm;
      ang[ph] += da * da;
      ++count[ph];
    }
  }
  std::vector<PhaseRmse> out;
  for (int k = 0; k < 3; ++k) {
    const auto ph = static_cast<Phase>(k);
    bool present = false;
    for (const PhaseSlot& s : index.slots()) present |= s.phase == ph;
    if (!present) continue;
    const double n = std::max<double>(1.0, static_cast<double>(count[static_cast<std::size_t>(k)]));
    out.push_back({ph, std::sqrt(mag[static_cast<std::size_t>(k)] / n), std::sqrt(ang[static_cast<std::size_t>(k)] / n)});
  }
  return out;
}

std::string_view to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::taylor: return "taylor";
    case EvalMethod::lr_corrected: return "lr-corrected";
    case EvalMethod::hybrid_svr: return "hybrid-svr";
    case EvalMethod::svr_direct: return "svr-direct";
    case EvalMethod::nonlinear_bad_input: return "nonlinear-bad-input";
  }
  return "unknown";
}

std::vector<EvalMethod> all_eval_methods() {
  return {EvalMethod::taylor, EvalMethod::lr_corrected, EvalMethod::hybrid_svr, EvalMethod::svr_direct,
          EvalMethod::nonlinear_bad_input};
}

EvalMethod eval_method_from_string(std::string_view name) {
  for (EvalMethod m : all_eval_methods())
    if (to_string(m) == name) return m;
  throw Error("unknown evaluation method \"" + std::string(name) + "\"");
}

const MethodReport* EvalReport::find(std::string_view method) const {
  for (const MethodReport& m : methods)
    if (m.method == method) return &m;
  return nullptr;
}

json report_to_json(const EvalReport& r) {
  json doc;
  doc["feeder"] = r.feeder;
  doc["provenance"] = r.provenance;
  doc["models_trained"] = r.models_trained;
  doc["methods"] = json::array();
  for (const MethodReport& m : r.methods) {
    json jm = {{"method", m.method}, {"mean_time_s", m.mean_time_s}, {"solved", m.solved}, {"failed", m.failed}};
    jm["phases"] = json::array();
    for (const PhaseRmse& p : m.phases)
      jm["phases"].push_back(
          {{"phase", std::string(1, phase_letter(p.phase))}, {"magnitude_rmse", p.magnitude}, {"angle_rmse", p.angle}});
    doc["methods"].push_back(std::move(jm));
  }
  return doc;
}

EvalReport report_from_json(const json& doc) {
  try {
    EvalReport r;
    r.feeder = doc.at("feeder").get<std::string>();
    r.provenance = doc.value("provenance", json::object());
    r.models_trained = doc.value("models_trained", Index{0});
    for (const json& jm : doc.at("methods")) {
      MethodReport m;
      m.method = jm.at("method").get<std::string>();
      m.mean_time_s = jm.at("mean_time_s").get<double>();
      m.solved = jm.value("solved", Index{0});
      m.failed = jm.value("failed", Index{0});
      for (const json& jp : jm.at("phases")) {
        const PhaseSet ph = PhaseSet::parse(jp.at("phase").get<std::string>());
        m.phases.push_back({ph.phases().front(), jp.at("magnitude_rmse").get<double>(), jp.at("angle_rmse").get<double>()});
      }
      r.methods.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

std::string render_table(const json& report) {
  std::ostringstream out;
  char line[160];
  out << "feeder: " << report.value("feeder", std::string()) << '\n';
  std::snprintf(line, sizeof line, "%-22s %-5s %14s %14s %12s\n", "method", "phase", "|V| rmse [pu]", "angle rmse",
                "time [s]");
  out << line;
  for (const json& jm : report.at("methods")) {
    bool first = true;
    for (const json& jp : jm.at("phases")) {
      const std::string name = first ? jm.at("method").get<std::string>() : "";
      const std::string phase = jp.at("phase").get<std::string>();
      if (first) {
        std::snprintf(line, sizeof line, "%-22s %-5s %14.3e %14.3e %12.3e\n", name.c_str(), phase.c_str(),
                      jp.at("magnitude_rmse").get<double>(), jp.at("angle_rmse").get<double>(),
                      jm.at("mean_time_s").get<double>());
      } else {
        std::snprintf(line, sizeof line, "%-22s %-5s %14.3e %14.3e\n", name.c_str(), phase.c_str(),
                      jp.at("magnitude_rmse").get<double>(), jp.at("angle_rmse").get<double>());
      }
      out << line;
      first = false;
    }
  }
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

bool wants(const ComparisonConfig& cfg, EvalMethod m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

template <typename Solve>
MethodReport run_method(EvalMethod method, const Dataset& test, const PhaseIndex& index, Solve&& solve) {
  MethodReport rep;
  rep.method = std::string(to_string(method));
  std::vector<CVec> predictions, truths;
  double seconds = 0.0;
  for (std::size_t k = 0; k < test.samples.size(); ++k) {
    const Sample& s = test.samples[k];
    try {
      const auto start = Clock::now();
      CVec v = solve(k, s);
      seconds += std::chrono::duration<double>(Clock::now() - start).count();
      predictions.push_back(std::move(v));
      truths.push_back(from_rect(s.x));
      ++rep.solved;
    } catch (const Error&) {
      ++rep.failed;
    }
  }
  rep.phases = rmse_per_phase(predictions, truths, index);
  rep.mean_time_s = rep.solved > 0 ? seconds / static_cast<double>(rep.solved) : 0.0;
  return rep;
}

Index count_flag(const Dataset& ds, SampleFlag f) {
  return std::count_if(ds.samples.begin(), ds.samples.end(), [f](const Sample& s) { return s.flag == f; });
}

}  // namespace

EvalReport evaluate(const Feeder& feeder, const Dataset& train, const Dataset& test, const ComparisonConfig& cfg) {
  const AdmittanceSystem sys = build_admittance(feeder.network);
  const RotationVector t = rotation_vector(feeder.network);
  const std::string fp = sys.phase_index.fingerprint();
  for (const Dataset* ds : {&train, &test})
    if (!ds->fingerprint.empty() && ds->fingerprint != fp)
      throw Error("evaluate: dataset " + ds->split + " was generated for a different network");

  EvalReport report;
  report.feeder = feeder.name;

  const bool need_lr = wants(cfg, EvalMethod::lr_corrected);
  const bool need_svr = wants(cfg, EvalMethod::hybrid_svr);
  const bool need_direct = wants(cfg, EvalMethod::svr_direct);
  std::optional<ErrorModel> lr, svr, direct;
  if (need_lr || need_svr || need_direct) {
    if (train.size() < 2) throw Error("evaluate: training data is required for the requested methods");
  }
  if (need_lr) {
    lr = train_lr(train.training_set(TargetKind::error), cfg.ridge);
    ++report.models_trained;
  }
  if (need_svr) {
    svr = train_svr(train.training_set(TargetKind::error), cfg.svr);
    ++report.models_trained;
  }
  if (need_direct) {
    direct = train_svr(train.training_set(TargetKind::voltage), cfg.direct_svr);
    direct->target = TargetKind::voltage;
    ++report.models_trained;
  }

  const NonlinearSolver solver(sys);
  std::vector<OperatingPoint> corrupted;
  if (wants(cfg, EvalMethod::nonlinear_bad_input)) corrupted = corrupted_measurements(test, feeder.network, cfg.scenario);

  for (EvalMethod m : cfg.methods) {
    auto measured = [](const Sample& s) { return OperatingPoint{s.op.v0, from_rect(s.y.segment(6, s.y.size() - 6))}; };
    switch (m) {
      case EvalMethod::taylor:
        report.methods.push_back(run_method(m, test, sys.phase_index, [&](std::size_t, const Sample& s) {
          return solve_taylor(assemble_linear(sys, measured(s), t)).v;
        }));
        break;
      case EvalMethod::lr_corrected:
        report.methods.push_back(run_method(m, test, sys.phase_index, [&](std::size_t, const Sample& s) {
          return hybrid_solve(sys, measured(s), t, *lr).v;
        }));
        break;
      case EvalMethod::hybrid_svr:
        report.methods.push_back(run_method(m, test, sys.phase_index, [&](std::size_t, const Sample& s) {
          return hybrid_solve(sys, measured(s), t, *svr).v;
        }));
        break;
      case EvalMethod::svr_direct:
        report.methods.push_back(run_method(m, test, sys.phase_index, [&](std::size_t, const Sample& s) {
          return direct_solve(sys, measured(s), *direct).v;
        }));
        break;
      case EvalMethod::nonlinear_bad_input:
        report.methods.push_back(run_method(m, test, sys.phase_index, [&](std::size_t k, const Sample&) {
          return solver.solve(corrupted[k], cfg.scenario.solver).v;
        }));
        break;
    }
  }

  json methods = json::array();
  for (EvalMethod m : cfg.methods) methods.push_back(to_string(m));
  report.provenance = {{"fingerprint", fp},
                       {"seed", train.size() > 0 ? train.seed : test.seed},
                       {"n_train", train.size()},
                       {"n_test", test.size()},
                       {"train_bad", count_flag(train, SampleFlag::bad)},
                       {"train_noisy", count_flag(train, SampleFlag::noisy)},
                       {"methods", methods},
                       {"svr", {{"C", cfg.svr.C}, {"epsilon", cfg.svr.epsilon}}},
                       {"direct_svr", {{"C", cfg.direct_svr.C}, {"epsilon", cfg.direct_svr.epsilon}}},
                       {"ridge", cfg.ridge},
                       {"scenario", config_to_json(cfg.scenario)}};
  return report;
}

EvalReport run_comparison(const Feeder& feeder, const ComparisonConfig& cfg) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(std::string(name) + ": " + e.what());
    }
  };
  ScenarioSet data = stage("generate", [&] { return generate_scenarios(feeder, cfg.scenario); });
  if (cfg.contaminate)
    data.train = stage("contaminate", [&] { return inject_bad_data(data.train, feeder.network, cfg.scenario); });
  EvalReport report = stage("evaluate", [&] { return evaluate(feeder, data.train, data.test, cfg); });
  report.provenance["contaminated"] = cfg.contaminate;
  report.provenance["redraws"] = data.redraws;
  return report;
}

}  // namespace hyflow
