#include "hyflow/network.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

namespace hyflow {

char phase_letter(Phase p) { return "abc"[static_cast<int>(p)]; }

PhaseSet PhaseSet::parse(std::string_view letters) {
  std::uint8_t mask = 0;
  for (char ch : letters) {
    int bit = 0;
    switch (ch) {
      case 'a': case 'A': bit = 0; break;
      case 'b': case 'B': bit = 1; break;
      case 'c': case 'C': bit = 2; break;
      default: throw Error("invalid phase letter '" + std::string(1, ch) + "' in \"" + std::string(letters) + "\"");
    }
    if (mask & (1u << bit)) throw Error("repeated phase in \"" + std::string(letters) + "\"");
    mask |= static_cast<std::uint8_t>(1u << bit);
  }
  if (mask == 0) throw Error("empty phase set");
  return PhaseSet(mask);
}

Index PhaseSet::size() const { return std::popcount(mask_); }

std::vector<Phase> PhaseSet::phases() const {
  std::vector<Phase> out;
  for (int k = 0; k < 3; ++k)
    if (mask_ & (1u << k)) out.push_back(static_cast<Phase>(k));
  return out;
}

std::string PhaseSet::str() const {
  std::string s;
  for (Phase p : phases()) s.push_back(phase_letter(p));
  return s;
}

PhaseIndex::PhaseIndex(const std::vector<Bus>& buses) {
  std::vector<const Bus*> order;
  int max_id = -1;
  for (const Bus& b : buses) {
    if (b.id <= 0) continue;
    order.push_back(&b);
    max_id = std::max(max_id, b.id);
  }
  std::stable_sort(order.begin(), order.end(), [](const Bus* l, const Bus* r) { return l->id < r->id; });
  lookup_.assign(static_cast<std::size_t>(max_id + 1), {-1, -1, -1});
  for (const Bus* b : order) {
    auto& row = lookup_[static_cast<std::size_t>(b->id)];
    for (Phase p : b->phases.phases()) {
      if (row[static_cast<int>(p)] >= 0) continue;  // duplicate id; reported by validation
      row[static_cast<int>(p)] = static_cast<int>(slots_.size());
      slots_.push_back({b->id, p});
    }
  }
}

std::optional<Index> PhaseIndex::column(int bus, Phase phase) const {
  if (bus <= 0 || static_cast<std::size_t>(bus) >= lookup_.size()) return std::nullopt;
  const int c = lookup_[static_cast<std::size_t>(bus)][static_cast<int>(phase)];
  if (c < 0) return std::nullopt;
  return c;
}

std::vector<Index> PhaseIndex::columns_of(int bus) const {
  std::vector<Index> out;
  for (int k = 0; k < 3; ++k)
    if (auto c = column(bus, static_cast<Phase>(k))) out.push_back(*c);
  return out;
}

std::string PhaseIndex::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  mix(slots_.size());
  for (const PhaseSlot& s : slots_) {
    mix(static_cast<std::uint64_t>(s.bus));
    mix(static_cast<std::uint64_t>(s.phase));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PhasedNetwork::PhasedNetwork(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)), index_(buses_) {}

PhaseSet PhasedNetwork::phases_of(int bus) const {
  for (const Bus& b : buses_)
    if (b.id == bus) return b.phases;
  return {};
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::invalid_bus: return "invalid bus";
    case ViolationKind::unknown_bus: return "unknown bus";
    case ViolationKind::disconnected: return "disconnected";
    case ViolationKind::non_radial: return "non-radial";
    case ViolationKind::phase_mismatch: return "phase mismatch";
    case ViolationKind::dimension_mismatch: return "dimension mismatch";
    case ViolationKind::singular_impedance: return "singular impedance";
    case ViolationKind::asymmetric_matrix: return "asymmetric matrix";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; });
}

namespace {

std::string line_name(const Line& l, std::size_t k) {
  return "line " + std::to_string(k) + " (" + std::to_string(l.from) + "-" + std::to_string(l.to) + ")";
}

bool is_symmetric(const CMat& m) {
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_invertible(const CMat& z) {
  if (z.rows() == 0 || z.rows() != z.cols()) return false;
  Eigen::FullPivLU<CMat> lu(z);
  lu.setThreshold(1e-12);
  return lu.isInvertible();
}

}  // namespace

ValidationReport validate_network(const PhasedNetwork& net) {
  ValidationReport report;
  auto add = [&report](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };

  const auto& buses = net.buses();
  const auto& lines = net.lines();

  std::set<int> ids;
  bool slack_ok = false;
  for (const Bus& b : buses) {
    if (b.id < 0) add(ViolationKind::invalid_bus, "bus id " + std::to_string(b.id) + " is negative");
    if (!ids.insert(b.id).second) add(ViolationKind::invalid_bus, "duplicate bus id " + std::to_string(b.id));
    if (b.phases.empty()) add(ViolationKind::invalid_bus, "bus " + std::to_string(b.id) + " has no phases");
    if (b.id == 0) slack_ok = b.phases == PhaseSet::all();
  }
  if (!ids.contains(0)) {
    add(ViolationKind::invalid_bus, "slack bus 0 is missing");
  } else if (!slack_ok) {
    add(ViolationKind::invalid_bus, "slack bus 0 must carry phases abc");
  }
  if (!ids.empty() && (*ids.begin() != 0 || *ids.rbegin() != static_cast<int>(ids.size()) - 1))
    add(ViolationKind::invalid_bus, "bus ids are not contiguous from 0");

  bool endpoints_ok = true;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const Line& l = lines[k];
    const std::string name = line_name(l, k);
    if (!ids.contains(l.from) || !ids.contains(l.to)) {
      add(ViolationKind::unknown_bus, name + " references an unknown bus");
      endpoints_ok = false;
      continue;
    }
    if (l.from == l.to) add(ViolationKind::non_radial, name + " is a self loop");
    if (l.phases.empty() || !l.phases.subset_of(net.phases_of(l.from)) || !l.phases.subset_of(net.phases_of(l.to)))
      add(ViolationKind::phase_mismatch, name + " phases \"" + l.phases.str() + "\" not present at both endpoints");
    const Index n = l.phases.size();
    const auto& z = l.series_impedance;
    const auto& y = l.shunt_admittance;
    if (z.rows() != n || z.cols() != n || (y.size() != 0 && (y.rows() != n || y.cols() != n))) {
      add(ViolationKind::dimension_mismatch, name + " matrix size does not match its phase count");
      continue;
    }
    if (!is_invertible(z)) add(ViolationKind::singular_impedance, name + " has a singular series impedance");
    if (!is_symmetric(z) || !is_symmetric(y)) add(ViolationKind::asymmetric_matrix, name + " has a non-symmetric matrix");
  }

  bool connected = true;
  if (endpoints_ok && ids.contains(0)) {
    std::map<int, std::vector<int>> adj;
    for (const Line& l : lines) {
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    std::set<int> seen{0};
    std::queue<int> todo;
    todo.push(0);
    while (!todo.empty()) {
      const int u = todo.front();
      todo.pop();
      for (int w : adj[u])
        if (seen.insert(w).second) todo.push(w);
    }
    if (seen.size() != ids.size()) {
      std::string missing;
      for (int id : ids)
        if (!seen.contains(id)) missing += (missing.empty() ? "" : ", ") + std::to_string(id);
      add(ViolationKind::disconnected, "buses not reachable from the slack: " + missing);
      connected = false;
    }
  }
  // A forest with |E| >= |N| - 1 edges, or any graph with more, contains a cycle.
  const std::size_t tree_edges = buses.empty() ? 0 : buses.size() - 1;
  if (lines.size() > tree_edges || (!connected && lines.size() == tree_edges && !lines.empty()))
    add(ViolationKind::non_radial, std::to_string(lines.size()) + " lines for " + std::to_string(buses.size()) +
                                       " buses; a radial network needs exactly one fewer line than buses");
  return report;
}

CMat AdmittanceSystem::full() const {
  const Index m = size();
  CMat y(3 + m, 3 + m);
  y.topLeftCorner(3, 3) = y00;
  y.topRightCorner(3, m) = y0n;
  y.bottomLeftCorner(m, 3) = yn0;
  y.bottomRightCorner(m, m) = ynn;
  return y;
}

AdmittanceSystem build_admittance(const PhasedNetwork& net) {
  const PhaseIndex& index = net.phase_index();
  const Index m = index.size();

  // Full-matrix position of (bus, phase): slack phases occupy 0..2.
  auto position = [&index](int bus, Phase p) -> Index {
    if (bus == 0) return static_cast<Index>(p);
    auto c = index.column(bus, p);
    if (!c) throw Error("bus " + std::to_string(bus) + " has no phase " + phase_letter(p));
    return 3 + *c;
  };

  // Stamping in a canonical line order keeps the result independent of input order.
  std::vector<std::size_t> order(net.lines().size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&net](std::size_t k) {
    const Line& l = net.lines()[k];
    return std::tuple(std::min(l.from, l.to), std::max(l.from, l.to), l.phases.mask());
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return key(l) < key(r); });

  CMat y = CMat::Zero(3 + m, 3 + m);
  for (std::size_t k : order) {
    const Line& line = net.lines()[k];
    const std::vector<Phase> phases = line.phases.phases();
    const Index n = static_cast<Index>(phases.size());
    if (line.series_impedance.rows() != n || line.series_impedance.cols() != n)
      throw Error(line_name(line, k) + ": impedance size does not match phases \"" + line.phases.str() + "\"");
    if (!is_invertible(line.series_impedance)) throw Error(line_name(line, k) + ": singular series impedance");
    const CMat ys = line.series_impedance.inverse();
    CMat half_shunt = CMat::Zero(n, n);
    if (line.shunt_admittance.size() != 0) half_shunt = 0.5 * line.shunt_admittance;

    std::vector<Index> from(n), to(n);
    for (Index i = 0; i < n; ++i) {
      from[i] = position(line.from, phases[i]);
      to[i] = position(line.to, phases[i]);
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        y(from[i], from[j]) += ys(i, j) + half_shunt(i, j);
        y(to[i], to[j]) += ys(i, j) + half_shunt(i, j);
        y(from[i], to[j]) -= ys(i, j);
        y(to[i], from[j]) -= ys(i, j);
      }
    }
  }

  AdmittanceSystem sys;
  sys.y00 = y.topLeftCorner(3, 3);
  sys.y0n = y.topRightCorner(3, m);
  sys.yn0 = y.bottomLeftCorner(m, 3);
  sys.ynn = y.bottomRightCorner(m, m);
  sys.phase_index = index;
  return sys;
}

}  // namespace hyflow
