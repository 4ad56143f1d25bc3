#include "hyflow/pfcore.hpp"

namespace hyflow {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::nonlinear: return "nonlinear";
    case Method::taylor: return "taylor";
    case Method::hybrid: return "hybrid";
    case Method::lr_corrected: return "lr-corrected";
    case Method::direct: return "direct";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::nonlinear, Method::taylor, Method::hybrid, Method::lr_corrected, Method::direct})
    if (to_string(m) == name) return m;
  throw Error("unknown method \"" + std::string(name) + "\"");
}

CVec flat_profile(const PhaseIndex& index, const CVec& v0) {
  CVec v(index.size());
  for (Index c = 0; c < index.size(); ++c) v[c] = v0[static_cast<Index>(index.slot(c).phase)];
  return v;
}

NonlinearSolver::NonlinearSolver(const AdmittanceSystem& sys) : sys_(sys), lu_(sys.ynn) {
  if (sys_.size() > 0 && !(lu_.rcond() > 1e-14)) throw Error("YNN is singular; network cannot be solved");
}

PFSolution NonlinearSolver::solve(const OperatingPoint& op, const SolverConfig& cfg) const {
  const Index m = sys_.size();
  if (op.s.size() != m || op.v0.size() != 3) throw Error("solve_nonlinear: operating point does not match network");

  const CVec source = sys_.yn0 * op.v0;
  CVec v = flat_profile(sys_.phase_index, op.v0);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const CVec rhs = (op.s.array() / v.array()).conjugate().matrix() - source;
    v = lu_.solve(rhs);
    const double weakest = m > 0 ? v.cwiseAbs().minCoeff() : 1.0;
    if (!(weakest >= cfg.collapse_threshold))
      throw SolverError("voltage collapse in iterate " + std::to_string(it), v, residual);
    residual = m > 0 ? power_residual(sys_, op, v).cwiseAbs().maxCoeff() : 0.0;
    if (residual < cfg.tolerance) return {std::move(v), Method::nonlinear, it, residual, {}};
  }
  throw SolverError("nonlinear solver did not converge in " + std::to_string(cfg.max_iterations) +
                        " iterations (residual " + std::to_string(residual) + ")",
                    v, residual);
}

PFSolution solve_nonlinear(const AdmittanceSystem& sys, const OperatingPoint& op, const SolverConfig& cfg) {
  return NonlinearSolver(sys).solve(op, cfg);
}

}  // namespace hyflow
