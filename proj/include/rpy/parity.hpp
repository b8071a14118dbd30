#pragma once

#include "rpy/mdp.hpp"
#include "rpy/types.hpp"

namespace rpy::parity {

/**
 * Witness-class instantiation for the IPM terms of the disparity bounds.
 *
 * SupNormBall uses the ball of functions bounded by the pair's reward bound
 * R, so the IPM term is R times the L1 distance between distributions and
 * the bound's reward-realizability precondition holds automatically.
 * Lipschitz uses L times the Wasserstein-1 distance under a caller-supplied
 * ground metric; the caller certifies that the rewards are L-Lipschitz.
 */
struct Witness {
    enum class Kind { SupNormBall, Lipschitz };

    Kind kind = Kind::SupNormBall;
    double lipschitz_constant = 0.0;
    Matrix state_metric;        // m x m, for the visitation bound
    Matrix state_action_metric; // (m n) x (m n), for the occupancy bound

    static Witness sup_norm_ball() { return Witness{}; }
    static Witness lipschitz(double constant, Matrix state_metric, Matrix state_action_metric = Matrix());
};

struct VisitationBound {
    double reward_gap_term = 0.0;
    double policy_term = 0.0;
    double policy_term_group0 = 0.0; // expectation under group 0's visitation
    double policy_term_group1 = 0.0;
    double visitation_ipm_term = 0.0;
    double total = 0.0;
};

struct OccupancyBound {
    double reward_gap_term = 0.0;
    double occupancy_ipm_term = 0.0;
    double total = 0.0;
};

struct DisparityReport {
    double delta_ret = 0.0;
    VisitationBound visitation_bound;
    OccupancyBound occupancy_bound;
    Witness::Kind witness = Witness::Kind::SupNormBall;
};

/// Exact return disparity |eta_0(pi_0) - eta_1(pi_1)|.
double return_disparity(const GroupPair& pair, const Policy& pi0, const Policy& pi1);

/**
 * Decomposition bound through reward gap, policy discrepancy, and the IPM
 * between state visitation distributions, each scaled by 1/(1-gamma).
 */
VisitationBound bound_via_visitation(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                     const Witness& witness);

/// Two-term bound: reward gap plus the IPM between occupancy measures.
OccupancyBound bound_via_occupancy(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                   const Witness& witness);

/// Exact disparity together with both bounds; what `analyze` reports.
DisparityReport analyze_disparity(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                  const Witness& witness);

struct TransitionConditionResult {
    bool holds = false;
    double margin = 0.0; // max over admissible c of min_ij <c, d_ij>
    Vector witness_direction;
};

/**
 * Sufficient condition for exact (0-) return parity based on transition
 * difference directions d_ij(k) = T0(s_k|a_i,s_j) - T1(s_k|a_i,s_j).
 *
 * Requires shared rewards, shared initial distributions, and state-only
 * rewards; throws AssumptionViolated otherwise. The condition holds when no
 * direction c (orthogonal to the all-ones vector, box-normalized) has
 * strictly positive inner product with every d_ij; decided by an LP, with
 * the maximizing c returned as a witness when the condition fails.
 */
TransitionConditionResult check_prop2(const GroupPair& pair);

/**
 * Two-state absorbing construction whose return disparity equals c for
 * every policy pair: state 1 pays c(1-gamma) forever, state 2 pays nothing,
 * and the groups start in different states.
 */
GroupPair prop1_counterexample(double c, double gamma);

} // namespace rpy::parity
