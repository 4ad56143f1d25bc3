#include "hyflow/taylor.hpp"

#include <cstdio>

namespace hyflow {

Complex rotation_of(Phase p) {
  switch (p) {
    case Phase::a: return {1.0, 0.0};
    case Phase::b: return std::conj(kGamma);
    case Phase::c: return kGamma;
  }
  return {1.0, 0.0};
}

RotationVector rotation_vector(const PhaseIndex& index) {
  RotationVector t(index.size());
  for (Index c = 0; c < index.size(); ++c) t[c] = rotation_of(index.slot(c).phase);
  return t;
}

RotationVector rotation_vector(const PhasedNetwork& net) { return rotation_vector(net.phase_index()); }

LinearSystem assemble_linear(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t) {
  const Index m = sys.size();
  if (op.s.size() != m || t.size() != m || op.v0.size() != 3) throw Error("assemble_linear: dimension mismatch");
  const CVec s_conj = op.s.conjugate();
  LinearSystem lin;
  lin.a = s_conj.cwiseProduct(t).cwiseProduct(t);
  lin.b = sys.ynn;
  lin.d = 2.0 * s_conj.cwiseProduct(t) - sys.yn0 * op.v0;
  lin.t = t;
  return lin;
}

RMat stacked_matrix(const LinearSystem& lin) {
  const Index m = lin.b.rows();
  RMat k(2 * m, 2 * m);
  const RMat br = lin.b.real();
  const RMat bx = lin.b.imag();
  k.topLeftCorner(m, m) = br;
  k.topRightCorner(m, m) = -bx;
  k.bottomLeftCorner(m, m) = bx;
  k.bottomRightCorner(m, m) = br;
  k.topLeftCorner(m, m).diagonal() += lin.a.real();
  k.topRightCorner(m, m).diagonal() += lin.a.imag();
  k.bottomLeftCorner(m, m).diagonal() += lin.a.imag();
  k.bottomRightCorner(m, m).diagonal() -= lin.a.real();
  return k;
}

PFSolution solve_taylor(const LinearSystem& lin) {
  const Index m = lin.b.rows();
  if (lin.a.size() != m || lin.d.size() != m) throw Error("solve_taylor: dimension mismatch");
  PFSolution sol;
  sol.method = Method::taylor;
  sol.iterations = 1;
  if (m == 0) return sol;

  const RMat k = stacked_matrix(lin);
  Eigen::PartialPivLU<RMat> lu(k);
  if (!(lu.rcond() > 1e-14)) throw Error("taylor: stacked rectangular system is singular (degenerate operating point)");
  const RVec rhs = to_rect(lin.d);
  RVec x = lu.solve(rhs);
  x += lu.solve(rhs - k * x);
  sol.v = from_rect(x);

  if (lin.t.size() == m) {
    const double worst = (CVec::Ones(m) - lin.t.cwiseProduct(sol.v.conjugate())).cwiseAbs().maxCoeff();
    if (worst >= 1.0) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "rotated voltage deviation %.3f outside the expansion radius", worst);
      sol.diagnostics.emplace_back(buf);
    }
  }
  return sol;
}

ErrorVector linearization_error(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t,
                                const SolverConfig& cfg) {
  const PFSolution exact = solve_nonlinear(sys, op, cfg);
  const PFSolution approx = solve_taylor(assemble_linear(sys, op, t));
  return to_rect(exact.v) - to_rect(approx.v);
}

}  // namespace hyflow
