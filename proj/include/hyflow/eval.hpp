#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyflow/scenario.hpp"

namespace hyflow {

struct PhaseRmse {
  Phase phase = Phase::a;
  double magnitude = 0.0;  // p.u.
  double angle = 0.0;      // rad
  friend bool operator==(const PhaseRmse&, const PhaseRmse&) = default;
};

/// Angle difference wrapped to (-pi, pi].
double wrap_angle(double radians);

/// Per-phase RMSE of |v| and of the wrapped angle difference over every (sample, bus)
/// pair. Only phases present in the index are reported, in a, b, c order.
std::vector<PhaseRmse> rmse_per_phase(const std::vector<CVec>& predictions, const std::vector<CVec>& truths,
                                      const PhaseIndex& index);

enum class EvalMethod { taylor, lr_corrected, hybrid_svr, svr_direct, nonlinear_bad_input };

std::string_view to_string(EvalMethod m);
EvalMethod eval_method_from_string(std::string_view name);
std::vector<EvalMethod> all_eval_methods();

struct MethodReport {
  std::string method;
  std::vector<PhaseRmse> phases;
  double mean_time_s = 0.0;
  Index solved = 0;
  Index failed = 0;
  friend bool operator==(const MethodReport&, const MethodReport&) = default;
};

struct EvalReport {
  std::string feeder;
  nlohmann::json provenance;
  std::vector<MethodReport> methods;
  Index models_trained = 0;

  const MethodReport* find(std::string_view method) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& doc);
/// Fixed-width text table; depends only on the JSON form of the report.
std::string render_table(const nlohmann::json& report);

struct ComparisonConfig {
  ScenarioConfig scenario;
  bool contaminate = false;
  std::vector<EvalMethod> methods = all_eval_methods();
  SvrParams svr;
  SvrParams direct_svr;
  double ridge = 1e-8;
};

/// Trains whatever the requested methods need on `train`, then evaluates every method on
/// `test` against its recorded voltages. Timing covers the online solve only.
EvalReport evaluate(const Feeder& feeder, const Dataset& train, const Dataset& test, const ComparisonConfig& cfg);

/// generate -> (contaminate) -> train -> evaluate.
EvalReport run_comparison(const Feeder& feeder, const ComparisonConfig& cfg);

}  // namespace hyflow
