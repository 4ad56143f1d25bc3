#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyflow/types.hpp"

namespace hyflow {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

char phase_letter(Phase p);

/// Subset of {a, b, c}; iteration order is always a, b, c.
class PhaseSet {
 public:
  constexpr PhaseSet() = default;
  constexpr explicit PhaseSet(std::uint8_t mask) : mask_(mask & 0x7u) {}

  /// Parses "abc", "ac", "b", ... Throws on unknown letters, repeats or an empty string.
  static PhaseSet parse(std::string_view letters);
  static constexpr PhaseSet all() { return PhaseSet(0x7u); }

  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool contains(Phase p) const { return (mask_ >> static_cast<int>(p)) & 1u; }
  constexpr bool subset_of(PhaseSet other) const { return (mask_ & ~other.mask_) == 0; }
  constexpr std::uint8_t mask() const { return mask_; }
  Index size() const;
  std::vector<Phase> phases() const;
  std::string str() const;

  friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

 private:
  std::uint8_t mask_ = 0;
};

struct Bus {
  int id = 0;
  PhaseSet phases;
};

/// Series impedance and total shunt admittance of a multi-phase segment, in p.u.
/// Matrix dimension equals the number of phases on the line.
struct Line {
  int from = 0;
  int to = 0;
  PhaseSet phases;
  CMat series_impedance;
  CMat shunt_admittance;
};

struct PhaseSlot {
  int bus = 0;
  Phase phase = Phase::a;
  friend bool operator==(const PhaseSlot&, const PhaseSlot&) = default;
};

/// Maps (bus, phase) of non-slack buses onto columns of the stacked voltage vector,
/// ordered by bus id then phase.
class PhaseIndex {
 public:
  PhaseIndex() = default;
  explicit PhaseIndex(const std::vector<Bus>& buses);

  Index size() const { return static_cast<Index>(slots_.size()); }
  const PhaseSlot& slot(Index column) const { return slots_[static_cast<std::size_t>(column)]; }
  const std::vector<PhaseSlot>& slots() const { return slots_; }
  std::optional<Index> column(int bus, Phase phase) const;
  /// Columns belonging to one bus, in phase order.
  std::vector<Index> columns_of(int bus) const;
  /// 64-bit FNV-1a digest of the slot list, rendered as hex.
  std::string fingerprint() const;

  friend bool operator==(const PhaseIndex&, const PhaseIndex&) = default;

 private:
  std::vector<PhaseSlot> slots_;
  std::vector<std::array<int, 3>> lookup_;  // per bus id, column per phase or -1
};

class PhasedNetwork {
 public:
  PhasedNetwork() = default;
  PhasedNetwork(std::vector<Bus> buses, std::vector<Line> lines);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const PhaseIndex& phase_index() const { return index_; }
  Index phase_count() const { return index_.size(); }
  /// Phase set of a bus; empty set for unknown ids.
  PhaseSet phases_of(int bus) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  PhaseIndex index_;
};

enum class ViolationKind {
  invalid_bus,
  unknown_bus,
  disconnected,
  non_radial,
  phase_mismatch,
  dimension_mismatch,
  singular_impedance,
  asymmetric_matrix,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

ValidationReport validate_network(const PhasedNetwork& net);

/// Partitioned nodal admittance. Slack rows/columns are always phases a, b, c of bus 0.
struct AdmittanceSystem {
  CMat y00;  // 3 x 3
  CMat y0n;  // 3 x M
  CMat yn0;  // M x 3
  CMat ynn;  // M x M
  PhaseIndex phase_index;

  Index size() const { return ynn.rows(); }
  /// Reassembles the (3 + M) square matrix.
  CMat full() const;
};

/// Stamps every line into the nodal admittance and partitions it by slack / non-slack.
/// Throws Error naming the line when a series impedance block is singular.
AdmittanceSystem build_admittance(const PhasedNetwork& net);

}  // namespace hyflow
