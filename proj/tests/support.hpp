#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "hyflow/feeder.hpp"
#include "hyflow/network.hpp"

namespace support {

using namespace hyflow;

inline std::string fixture(const std::string& name) { return std::string(HYFLOW_FIXTURE_DIR) + "/" + name; }

inline CMat diag_matrix(Index n, Complex v) {
  CMat m = CMat::Zero(n, n);
  m.diagonal().setConstant(v);
  return m;
}

inline Line line(int from, int to, const std::string& phases, Complex z, Complex shunt = {}) {
  const PhaseSet ps = PhaseSet::parse(phases);
  Line l{from, to, ps, diag_matrix(ps.size(), z), {}};
  if (shunt != Complex{}) l.shunt_admittance = diag_matrix(ps.size(), shunt);
  return l;
}

inline PhasedNetwork two_bus(const std::string& phases, Complex z) {
  return PhasedNetwork({{0, PhaseSet::all()}, {1, PhaseSet::parse(phases)}}, {line(0, 1, phases, z)});
}

// Random radial network: bus k attaches to a random earlier bus with a phase subset of it,
// coupled series impedance and optionally a capacitive shunt.
inline PhasedNetwork random_radial(std::mt19937_64& rng, int buses, bool shunts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Bus> bs{{0, PhaseSet::all()}};
  std::vector<Line> ls;
  for (int k = 1; k < buses; ++k) {
    const int parent = static_cast<int>(std::uniform_int_distribution<int>(0, k - 1)(rng));
    const PhaseSet pp = bs[static_cast<std::size_t>(parent)].phases;
    PhaseSet ps;
    do ps = PhaseSet(static_cast<std::uint8_t>(pp.mask() & std::uniform_int_distribution<int>(1, 7)(rng)));
    while (ps.empty());
    const Index n = ps.size();
    CMat z(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j <= i; ++j) {
        const Complex v = i == j ? Complex(0.01 + 0.05 * u(rng), 0.02 + 0.1 * u(rng))
                                 : Complex(0.002 + 0.01 * u(rng), 0.005 + 0.02 * u(rng));
        z(i, j) = z(j, i) = v;
      }
    CMat y;
    if (shunts) y = diag_matrix(n, Complex(0.0, 1e-3 * u(rng)));
    bs.push_back({k, ps});
    ls.push_back({parent, k, ps, z, y});
  }
  return PhasedNetwork(std::move(bs), std::move(ls));
}

inline CVec random_injection(std::mt19937_64& rng, Index m, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVec s(m);
  for (Index i = 0; i < m; ++i) s[i] = scale * Complex(u(rng), u(rng));
  return s;
}

}  // namespace support
