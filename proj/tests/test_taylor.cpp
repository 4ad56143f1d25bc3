#include <random>

#include "hyflow/feeder.hpp"
#include "hyflow/taylor.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace hyflow;

namespace {

const Complex kGammaInv = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);

PhasedNetwork without_shunts(const PhasedNetwork& net) {
  std::vector<Line> lines = net.lines();
  for (Line& l : lines) l.shunt_admittance = CMat();
  return PhasedNetwork(net.buses(), lines);
}

}  // namespace

TEST_CASE("rotation entries") {
  CHECK(rotation_of(Phase::a) == Complex(1.0, 0.0));
  CHECK(std::abs(rotation_of(Phase::b) - kGammaInv) < 1e-15);
  CHECK(std::abs(rotation_of(Phase::c) - kGamma) < 1e-15);

  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const RotationVector t = rotation_vector(f.network);
  REQUIRE(t.size() == 6);
  // bus 1 abc, bus 2 ac, bus 3 b
  CHECK(std::abs(t[0] - 1.0) < 1e-15);
  CHECK(std::abs(t[1] - kGammaInv) < 1e-15);
  CHECK(std::abs(t[2] - kGamma) < 1e-15);
  CHECK(std::abs(t[3] - 1.0) < 1e-15);
  CHECK(std::abs(t[4] - kGamma) < 1e-15);
  CHECK(std::abs(t[5] - kGammaInv) < 1e-15);
  CHECK((t.cwiseProduct(t.conjugate()) - CVec::Ones(6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rotated conjugate default slack is one") {
  const CVec v0 = default_slack_voltage();
  for (int p = 0; p < 3; ++p) CHECK(std::abs(rotation_of(static_cast<Phase>(p)) * std::conj(v0[p]) - 1.0) < 1e-15);
}

TEST_CASE("assembly with zero injection") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const LinearSystem lin = assemble_linear(sys, {f.v0, CVec::Zero(sys.size())}, rotation_vector(f.network));
  CHECK(lin.a.cwiseAbs().maxCoeff() == 0.0);
  CHECK((lin.d + sys.yn0 * f.v0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(lin.b == sys.ynn);
}

TEST_CASE("phase-a bus reduces to the unrotated form") {
  const AdmittanceSystem sys = build_admittance(support::two_bus("a", {0.01, 0.02}));
  const Complex s(-0.1, -0.05);
  const OperatingPoint op{default_slack_voltage(), CVec::Constant(1, s)};
  const LinearSystem lin = assemble_linear(sys, op, rotation_vector(sys.phase_index));
  CHECK(std::abs(lin.a[0] - std::conj(s)) < 1e-15);
  CHECK(std::abs(lin.d[0] - (2.0 * std::conj(s) - (sys.yn0 * op.v0)[0])) < 1e-14);
}

TEST_CASE("four-bus d against the entry-wise evaluator") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const OperatingPoint op{f.v0, f.nominal_injection()};
  const RotationVector t = rotation_vector(f.network);
  const LinearSystem lin = assemble_linear(sys, op, t);
  CHECK((lin.d - oracle::linear_rhs(sys.yn0, op.v0, op.s, t)).cwiseAbs().maxCoeff() < 1e-14);
  for (Index i = 0; i < sys.size(); ++i) CHECK(std::abs(lin.a[i] - std::conj(op.s[i]) * t[i] * t[i]) < 1e-15);
}

TEST_CASE("assembly dimension checks") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  CHECK_THROWS_AS(assemble_linear(sys, {f.v0, CVec::Zero(3)}, rotation_vector(f.network)), Error);
  CHECK_THROWS_AS(assemble_linear(sys, {f.v0, CVec::Zero(6)}, CVec::Ones(2)), Error);
}

TEST_CASE("stacked matrix layout") {
  LinearSystem lin;
  lin.a = CVec::Constant(1, Complex(1.0, 2.0));
  lin.b = CMat::Constant(1, 1, Complex(3.0, 5.0));
  const RMat m = stacked_matrix(lin);
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 0) == 4.0);   // Ar + Br
  CHECK(m(0, 1) == -3.0);  // Ax - Bx
  CHECK(m(1, 0) == 7.0);   // Ax + Bx
  CHECK(m(1, 1) == 2.0);   // -Ar + Br
}

TEST_CASE("zero injection reproduces the flat profile") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const PhasedNetwork net = support::random_radial(rng, 8, false);
    const AdmittanceSystem sys = build_admittance(net);
    const OperatingPoint op{default_slack_voltage(), CVec::Zero(sys.size())};
    const PFSolution tay = solve_taylor(assemble_linear(sys, op, rotation_vector(net)));
    CHECK((tay.v - flat_profile(sys.phase_index, op.v0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(tay.method == Method::taylor);
  }
}

TEST_CASE("Taylor solution satisfies its linear system") {
  const Feeder f = load_feeder(support::fixture("ieee13_equivalent.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const LinearSystem lin = assemble_linear(sys, {f.v0, f.nominal_injection()}, rotation_vector(f.network));
  const CVec v = solve_taylor(lin).v;
  const CVec r = lin.a.cwiseProduct(v.conjugate()) + lin.b * v - lin.d;
  CHECK(r.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("singular stacked system is reported") {
  LinearSystem lin;
  lin.a = CVec::Constant(1, Complex(0.0, 0.0));
  lin.b = CMat::Zero(1, 1);
  lin.d = CVec::Ones(1);
  lin.t = CVec::Ones(1);
  CHECK_THROWS_AS(solve_taylor(lin), Error);
}

TEST_CASE("two-bus Taylor error is second order") {
  const Complex z(0.01, 0.02);
  const AdmittanceSystem sys = build_admittance(support::two_bus("a", z));
  const OperatingPoint op{default_slack_voltage(), CVec::Constant(1, Complex(-0.1, -0.05))};
  const Complex truth = oracle::two_bus_voltage(op.v0[0], z, op.s[0]);
  const Complex tay = solve_taylor(assemble_linear(sys, op, rotation_vector(sys.phase_index))).v[0];
  CHECK(std::abs(tay - truth) <= 4.0 * std::norm(1.0 - truth));
  CHECK(std::abs(tay - truth) > 0.0);
}

TEST_CASE("linearization error definition") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const OperatingPoint op{f.v0, f.nominal_injection()};
  const RotationVector t = rotation_vector(f.network);
  const ErrorVector e = linearization_error(sys, op, t);
  const RVec x = to_rect(solve_nonlinear(sys, op).v);
  const RVec xt = to_rect(solve_taylor(assemble_linear(sys, op, t)).v);
  CHECK((e - (x - xt)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.cwiseAbs().maxCoeff() < 1e-2);
  CHECK(e.cwiseAbs().maxCoeff() > 0.0);

  const ErrorVector e0 = linearization_error(build_admittance(without_shunts(f.network)),
                                             {f.v0, CVec::Zero(sys.size())}, t);
  CHECK(e0.cwiseAbs().maxCoeff() < 1e-12);
}

// The expansion of 1/conj(v) leaves a remainder s (1 - t conj(v))^2 / conj(v) in the power
// balance, and 1 - t conj(v) is itself proportional to s, so the error scales with s^3.
TEST_CASE("two-bus error scales with the cube of the load") {
  const Complex z(0.01, 0.02);
  const AdmittanceSystem sys = build_admittance(support::two_bus("a", z));
  const CVec v0 = default_slack_voltage();
  auto error_at = [&](Complex s) {
    const OperatingPoint op{v0, CVec::Constant(1, s)};
    const Complex tay = solve_taylor(assemble_linear(sys, op, rotation_vector(sys.phase_index))).v[0];
    return std::abs(tay - oracle::two_bus_voltage(v0[0], z, s));
  };
  const Complex s(-0.1, -0.05);
  const double ratio = error_at(0.5 * s) / error_at(s);
  CHECK(ratio > 0.1);
  CHECK(ratio < 0.15);
}

TEST_CASE("halving the loads shrinks the error by about eight") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const PhasedNetwork net = support::random_radial(rng, 8, false);
    const AdmittanceSystem sys = build_admittance(net);
    const RotationVector t = rotation_vector(net);
    CVec s = support::random_injection(rng, sys.size(), 0.05);
    for (Index i = 0; i < s.size(); ++i) s[i] = -Complex(std::abs(s[i].real()), std::abs(s[i].imag()));
    const double full = linearization_error(sys, {default_slack_voltage(), s}, t).norm();
    const double half = linearization_error(sys, {default_slack_voltage(), 0.5 * s}, t).norm();
    CAPTURE(trial);
    CHECK(half / full >= 0.1);
    CHECK(half / full <= 0.15);
  }
}

TEST_CASE("rotation is required on a b-phase lateral") {
  const Feeder f = load_feeder(support::fixture("b_lateral.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const OperatingPoint op{f.v0, f.nominal_injection()};
  const double rotated = linearization_error(sys, op, rotation_vector(f.network)).cwiseAbs().maxCoeff();
  const double plain = linearization_error(sys, op, CVec::Ones(sys.size())).cwiseAbs().maxCoeff();
  CHECK(rotated <= 0.1 * plain);
}

TEST_CASE("unrotated expansion far from its point raises a diagnostic") {
  const Feeder f = load_feeder(support::fixture("b_lateral.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const OperatingPoint op{f.v0, f.nominal_injection()};
  CHECK(solve_taylor(assemble_linear(sys, op, rotation_vector(f.network))).diagnostics.empty());
  CHECK_FALSE(solve_taylor(assemble_linear(sys, op, CVec::Ones(sys.size()))).diagnostics.empty());
}

TEST_CASE("doubling S doubles A and the injection part of d") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const AdmittanceSystem sys = build_admittance(f.network);
  const RotationVector t = rotation_vector(f.network);
  const CVec s = f.nominal_injection();
  const LinearSystem one = assemble_linear(sys, {f.v0, s}, t);
  const LinearSystem two = assemble_linear(sys, {f.v0, 2.0 * s}, t);
  const CVec fixed = -(sys.yn0 * f.v0);
  CHECK((two.a - 2.0 * one.a).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(((two.d - fixed) - 2.0 * (one.d - fixed)).cwiseAbs().maxCoeff() < 1e-14);
}
