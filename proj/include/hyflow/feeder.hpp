#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "hyflow/network.hpp"

namespace hyflow {

struct PowerBase {
  double kv = 1.0;   // line-to-line
  double kva = 1.0;  // three-phase
  /// Per-phase power base in kVA.
  double phase_kva() const { return kva / 3.0; }
};

/// A network plus the nominal operating data needed to synthesize scenarios.
/// Loads and DER output are stored per phase-index column in p.u. as positive
/// consumption and positive generation respectively.
struct Feeder {
  std::string name;
  PowerBase base;
  PhasedNetwork network;
  CVec v0;
  CVec load;
  CVec der;

  /// Net injection at nominal load and DER output (loads negative).
  CVec nominal_injection() const { return der - load; }
};

/// Parses a feeder document. Structural problems with the network are left to
/// validate_network; malformed JSON or unknown references throw Error.
Feeder feeder_from_json(const nlohmann::json& doc);
Feeder load_feeder(const std::filesystem::path& path);
nlohmann::json feeder_to_json(const Feeder& feeder);

/// Default slack voltages 1/0, 1/-120, 1/120 degrees.
CVec default_slack_voltage();

/// [re, im] pair helpers shared by every JSON format in the project.
nlohmann::json complex_to_json(Complex z);
Complex complex_from_json(const nlohmann::json& j);
nlohmann::json cvec_to_json(const CVec& v);
CVec cvec_from_json(const nlohmann::json& j);

}  // namespace hyflow
