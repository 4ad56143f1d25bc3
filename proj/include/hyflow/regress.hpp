#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyflow/svr.hpp"
#include "hyflow/taylor.hpp"

namespace hyflow {

/// [Re V0 (3); Im V0 (3); P (M); Q (M)]
using FeatureVector = RVec;

FeatureVector make_features(const OperatingPoint& op);
inline Index feature_length(Index phase_count) { return 6 + 2 * phase_count; }

enum class SampleFlag { clean, noisy, bad };
std::string_view to_string(SampleFlag f);
SampleFlag flag_from_string(std::string_view s);

/// One sample per row.
struct TrainingSet {
  RMat features;
  RMat targets;
  std::vector<SampleFlag> flags;

  Index size() const { return features.rows(); }
};

struct Standardizer {
  RVec mean;
  RVec scale;

  template <typename Derived>
  RVec apply(const Eigen::MatrixBase<Derived>& y) const {
    return (y - mean).cwiseQuotient(scale);
  }
  /// Standardizes every row.
  RMat apply_rows(const RMat& rows) const;
};

/// Per-column mean and population standard deviation; deviations below 1e-12 become 1.
Standardizer standardize_fit(const RMat& rows);
Standardizer standardize_fit(const TrainingSet& ts);

enum class ModelKind { lr, svr };
/// What the model regresses: Taylor linearization errors, or voltages directly.
enum class TargetKind { error, voltage };

std::string_view to_string(ModelKind k);
std::string_view to_string(TargetKind k);

struct SvrParams {
  double C = 10.0;
  double epsilon = 1e-4;  // standardized target units
  SvrOptions solver;
  int threads = 0;        // 0: hardware concurrency
};

/// Affine multi-output map  e_hat = weights * standardize(y) + offsets.
struct ErrorModel {
  ModelKind kind = ModelKind::lr;
  TargetKind target = TargetKind::error;
  Standardizer standardizer;
  RMat weights;
  RVec offsets;
  double C = 0.0;
  double epsilon = 0.0;
  double ridge = 0.0;
  std::string fingerprint;

  Index feature_count() const { return weights.cols(); }
  Index output_count() const { return weights.rows(); }
};

ErrorModel train_lr(const TrainingSet& ts, double ridge = 1e-8);
ErrorModel train_svr(const TrainingSet& ts, const SvrParams& params = {});

RVec predict_errors(const ErrorModel& model, const FeatureVector& y);

/// Taylor solution plus predicted linearization error.
PFSolution hybrid_solve(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t,
                        const ErrorModel& model);

/// Voltages straight from a model trained on voltage targets (no physics term).
PFSolution direct_solve(const AdmittanceSystem& sys, const OperatingPoint& op, const ErrorModel& model);

nlohmann::json model_to_json(const ErrorModel& model);
ErrorModel model_from_json(const nlohmann::json& doc);

}  // namespace hyflow
