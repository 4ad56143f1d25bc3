#pragma once

#include "hyflow/pfcore.hpp"

namespace hyflow {

/// Per-phase rotation: 1 for a, gamma^-1 for b, gamma for c. Rotating the conjugate
/// voltage of each phase by its entry lands it near 1 + j0 under the default slack.
using RotationVector = CVec;

Complex rotation_of(Phase p);
RotationVector rotation_vector(const PhasedNetwork& net);
RotationVector rotation_vector(const PhaseIndex& index);

/// Linearized balance A V^* + B V = d with A = diag(S^* t^2), B = YNN, d = 2 S^* t - YN0 V0.
struct LinearSystem {
  CVec a;  // diagonal of A
  CMat b;
  CVec d;
  RotationVector t;
};

LinearSystem assemble_linear(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t);

/// Real 2M x 2M block form of A V^* + B V used for the rectangular solve.
RMat stacked_matrix(const LinearSystem& lin);

/// Solves the stacked rectangular system; throws Error when it is singular.
PFSolution solve_taylor(const LinearSystem& lin);

/// Real error vector [omega; mu] = [Re; Im](V_nonlinear - V_taylor).
using ErrorVector = RVec;

ErrorVector linearization_error(const AdmittanceSystem& sys, const OperatingPoint& op, const RotationVector& t,
                                const SolverConfig& cfg = {});

}  // namespace hyflow
