#pragma once

#include "hyflow/types.hpp"

namespace hyflow {

enum class SvrSolver { interior_point, coordinate_descent };

struct SvrOptions {
  SvrSolver method = SvrSolver::interior_point;
  /// Interior point: stop once the relative duality gap and the scaled residuals are below this.
  double gap_tolerance = 1e-10;
  int max_iterations = 200;
  /// Coordinate descent: stop when the largest projected-gradient violation falls below this.
  double tolerance = 1e-6;
  /// Budget of coordinate-descent passes over the samples, summed over outer rounds.
  long max_passes = 100000;
  int max_outer = 200;
};

/// Solution of a single-output linear epsilon-SVR
///   min 1/2 |w|^2 + C sum(xi + xi*)  s.t.  |z_j - w.x_j - b| <= eps + slack,
/// with its dual multipliers beta_j in [-C, C] (positive above the tube, negative below).
struct SvrFit {
  RVec w;
  double b = 0.0;
  RVec beta;
  double primal = 0.0;
  double gap = 0.0;
  long passes = 0;
  int outer_rounds = 0;
  int iterations = 0;
};

class SvrError : public Error {
 public:
  SvrError(const std::string& what, SvrFit best) : Error(what), best_(std::move(best)) {}
  const SvrFit& best() const { return best_; }
  double gap() const { return best_.gap; }

 private:
  SvrFit best_;
};

/// Primal objective of the problem above at (w, b).
double svr_primal(const RMat& x, const RVec& z, const RVec& w, double b, double C, double eps);

/// Dual objective -1/2 |X^T beta|^2 + z.beta - eps |beta|_1; a lower bound on the primal
/// optimum whenever sum(beta) = 0 and |beta| <= C.
double svr_dual(const RMat& x, const RVec& z, const RVec& beta, double eps);

/// Fits one output. Rows of x are samples.
///
/// interior_point: Mehrotra predictor-corrector on the dual box QP in (alpha, alpha*),
/// beta = alpha - alpha*. The Hessian has rank d, so each Newton system is reduced to a
/// d x d Cholesky solve. The intercept is the multiplier of sum(beta) = 0.
///
/// coordinate_descent: the free intercept is handled by an augmented-Lagrangian outer loop
/// on sum(beta) = 0; each round is a cyclic dual coordinate descent over the box [-C, C].
SvrFit fit_linear_svr(const RMat& x, const RVec& z, double C, double eps, const SvrOptions& opts = {});

}  // namespace hyflow
