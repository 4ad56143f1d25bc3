#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hyflow/network.hpp"

namespace hyflow {

/// Slack voltages and net complex injection per non-slack phase (loads negative), p.u.
struct OperatingPoint {
  CVec v0;
  CVec s;
};

enum class Method { nonlinear, taylor, hybrid, lr_corrected, direct };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

struct PFSolution {
  CVec v;
  Method method = Method::nonlinear;
  int iterations = 0;
  double residual = 0.0;  // max-norm of the power mismatch
  std::vector<std::string> diagnostics;
};

struct SolverConfig {
  double tolerance = 1e-10;
  int max_iterations = 200;
  double collapse_threshold = 0.05;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, CVec last_iterate, double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const CVec& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  CVec last_iterate_;
  double residual_;
};

/// Copy of the slack phasor onto every non-slack phase of the same letter.
CVec flat_profile(const PhaseIndex& index, const CVec& v0);

/// S - V .* conj(YN0 V0 + YNN V)
template <typename Derived>
CVec power_residual(const AdmittanceSystem& sys, const OperatingPoint& op, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != sys.size() || op.s.size() != sys.size() || op.v0.size() != 3)
    throw Error("power_residual: dimension mismatch");
  const CVec current = sys.yn0 * op.v0 + sys.ynn * v;
  return op.s - v.cwiseProduct(current.conjugate());
}

/// Fixed-point power-flow solver V <- YNN^-1 ((S ./ V)^* - YN0 V0). The factorization of
/// YNN is computed once and shared by every solve.
class NonlinearSolver {
 public:
  explicit NonlinearSolver(const AdmittanceSystem& sys);

  PFSolution solve(const OperatingPoint& op, const SolverConfig& cfg = {}) const;
  const AdmittanceSystem& system() const { return sys_; }

 private:
  AdmittanceSystem sys_;
  Eigen::PartialPivLU<CMat> lu_;
};

PFSolution solve_nonlinear(const AdmittanceSystem& sys, const OperatingPoint& op, const SolverConfig& cfg = {});

}  // namespace hyflow
