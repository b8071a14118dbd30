#pragma once

#include "rpy/lp.hpp"
#include "rpy/mdp.hpp"
#include "rpy/types.hpp"

namespace rpy::fairlp {

/**
 * Outcome of the occupancy-measure LP that trades weighted return against
 * the parity tolerance epsilon.
 *
 * rho0/rho1 carry lambda- and (1-lambda)-weighted discounted state-action
 * mass; b0/b1 are the prices of the two parity constraints. Policies are
 * recovered by row-normalizing the occupancies (uniform on zero-mass rows),
 * and achieved_disparity is recomputed from the exact tabular solvers
 * rather than read off the LP.
 */
struct FairLpSolution {
    lp::LpStatus status = lp::LpStatus::Infeasible;
    Matrix rho0;
    Matrix rho1;
    double b0 = 0.0;
    double b1 = 0.0;
    double objective = 0.0;
    Policy pi0;
    Policy pi1;
    double achieved_disparity = 0.0;
};

/// Assemble the LP: variables [rho0, rho1, b0, b1], flow-balance equalities.
lp::LpProblem build_fair_lp(const GroupPair& pair, double epsilon);

/// Solve the LP and recover policies and the achieved disparity.
FairLpSolution solve_fair(const GroupPair& pair, double epsilon);

/// Best achievable expected return of a single MDP (occupancy LP).
double optimal_return(const Mdp& mdp);

/// Worst achievable expected return (the same LP, minimized).
double minimal_return(const Mdp& mdp);

/**
 * Certificate-producing check that the groups' unconstrained optimal
 * policies already satisfy epsilon-return parity.
 *
 * Decided as a Farkas alternative: the condition fails exactly when the
 * homogeneous system (two flow-balance families tied to the parity prices
 * b0/b1 and level multipliers c0/c1, plus a strictly positive reward row)
 * admits a nonnegative solution, found by a phase-1 LP over the normalized
 * cone. The feasible point is returned as the certificate.
 */
struct OptimaParityResult {
    bool holds = false;
    double optimal_gap = 0.0;       // |eta0* - eta1*|
    double alternative_margin = 0.0; // max of the strict row over the normalized cone
    bool has_certificate = false;
    Matrix certificate_rho0;
    Matrix certificate_rho1;
    double certificate_b0 = 0.0;
    double certificate_b1 = 0.0;
    double certificate_c0 = 0.0;
    double certificate_c1 = 0.0;
};

OptimaParityResult check_prop3(const GroupPair& pair, double epsilon);

} // namespace rpy::fairlp
