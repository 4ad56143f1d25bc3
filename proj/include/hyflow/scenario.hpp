#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyflow/feeder.hpp"
#include "hyflow/regress.hpp"

namespace hyflow {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  Index n_train = 4000;
  Index n_test = 1000;
  double load_variation = 0.10;
  double der_variation = 0.20;
  /// Bound of the multiplicative measurement noise on P and Q; sigma is a third of it.
  double noise_max = 0.10;
  /// Noise is a training-data phenomenon; test features are exact unless this is set.
  bool noise_on_test = false;
  double bad_sample_fraction = 0.10;
  Index n_bad_nodes = 3;
  double bad_voltage_low = 0.0;
  double bad_voltage_high = 3.0;
  double bad_power_factor = 1.5;
  double max_failure_rate = 0.01;
  SolverConfig solver;
  int threads = 0;  // 0: hardware concurrency

  /// Throws Error describing the first invalid field.
  void validate() const;
};

nlohmann::json config_to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults.
ScenarioConfig config_from_json(const nlohmann::json& doc);

struct Sample {
  Index index = 0;
  OperatingPoint op;  // true injections
  FeatureVector y;    // measured features
  RVec x;             // recorded voltages [Re; Im], possibly corrupted
  RVec e;             // x minus the Taylor solution at op
  SampleFlag flag = SampleFlag::clean;
};

struct Dataset {
  std::uint64_t seed = 0;
  std::string split;
  std::string fingerprint;
  std::vector<Sample> samples;

  Index size() const { return static_cast<Index>(samples.size()); }
  /// Rows of measured features against linearization errors or recorded voltages.
  TrainingSet training_set(TargetKind target) const;
};

struct ScenarioSet {
  Dataset train;
  Dataset test;
  Index redraws = 0;
};

/// Draws operating points around the feeder's nominal loads and DER output, solves each
/// with the nonlinear solver and records the linearization error. Fully determined by
/// cfg.seed regardless of thread count.
ScenarioSet generate_scenarios(const Feeder& feeder, const ScenarioConfig& cfg);

/// Corrupts floor(bad_sample_fraction * size) samples: recorded voltage magnitudes at
/// n_bad_nodes random buses go near zero or above bad_voltage_high, and the measured
/// injections at those buses gain a systematic error of bad_power_factor * noise_max.
Dataset inject_bad_data(const Dataset& ds, const PhasedNetwork& net, const ScenarioConfig& cfg);

/// Measured injections of each sample as a meter with noise and bad data would report
/// them. The dataset itself is left untouched.
std::vector<OperatingPoint> corrupted_measurements(const Dataset& ds, const PhasedNetwork& net,
                                                   const ScenarioConfig& cfg);

/// JSON-lines: a header line, then one sample per line.
void write_dataset(std::ostream& out, const Dataset& ds);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Independent stream per (seed, domain, counter...).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t counter,
                            std::uint64_t sub = 0);

/// Zero-mean Gaussian with sigma = bound / 3, resampled until |value| <= bound.
double truncated_gaussian(std::mt19937_64& rng, double bound);

struct SyntheticFeederOptions {
  Index buses = 40;                  // including the slack
  double three_phase_fraction = 0.5;
  double two_phase_fraction = 0.2;
  double der_fraction = 0.3;
  double load_kw = 60.0;             // mean per-phase load
  double der_kw = 25.0;
  bool shunts = true;
};

/// Random radial feeder with mutually coupled lines, mixed phasing, loads and DER.
Feeder synthetic_feeder(std::uint64_t seed, const SyntheticFeederOptions& opts = {});

}  // namespace hyflow
