#include "rpy/parity.hpp"

#include "rpy/divergence.hpp"
#include "rpy/lp.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace rpy::parity {

Witness Witness::lipschitz(double constant, Matrix state_metric_in, Matrix state_action_metric_in) {
    if (!(constant > 0.0)) throw InvalidParameter("Witness::lipschitz: constant must be positive");
    Witness w;
    w.kind = Kind::Lipschitz;
    w.lipschitz_constant = constant;
    w.state_metric = std::move(state_metric_in);
    w.state_action_metric = std::move(state_action_metric_in);
    return w;
}

double return_disparity(const GroupPair& pair, const Policy& pi0, const Policy& pi1) {
    return std::abs(expected_return(pair.mdp0, pi0) - expected_return(pair.mdp1, pi1));
}

namespace {

double pair_reward_bound(const GroupPair& pair) {
    return std::max(pair.mdp0.reward_bound, pair.mdp1.reward_bound);
}

double state_ipm(const GroupPair& pair, const Vector& mu0, const Vector& mu1, const Witness& w) {
    if (w.kind == Witness::Kind::SupNormBall)
        return pair_reward_bound(pair) * (mu0 - mu1).cwiseAbs().sum();
    if (w.state_metric.rows() != mu0.size() || w.state_metric.cols() != mu0.size())
        throw WitnessPreconditionViolated("Lipschitz witness needs an m x m state metric");
    return w.lipschitz_constant * divergence::wasserstein1_discrete(mu0, mu1, w.state_metric);
}

double occupancy_ipm(const GroupPair& pair, const Matrix& rho0, const Matrix& rho1, const Witness& w) {
    if (w.kind == Witness::Kind::SupNormBall)
        return pair_reward_bound(pair) * (rho0 - rho1).cwiseAbs().sum();
    const Index mn = rho0.size();
    if (w.state_action_metric.rows() != mn || w.state_action_metric.cols() != mn)
        throw WitnessPreconditionViolated(
            "Lipschitz witness needs an (m n) x (m n) state-action metric for the occupancy bound");
    // Flatten row-major: index (s, a) -> s * n + a.
    Vector p(mn), q(mn);
    const Index n = rho0.cols();
    for (Index s = 0; s < rho0.rows(); ++s)
        for (Index a = 0; a < n; ++a) {
            p[s * n + a] = rho0(s, a);
            q[s * n + a] = rho1(s, a);
        }
    return w.lipschitz_constant * divergence::wasserstein1_discrete(p, q, w.state_action_metric);
}

} // namespace

VisitationBound bound_via_visitation(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                     const Witness& witness) {
    const double scale = 1.0 / (1.0 - pair.mdp0.gamma);
    const Vector mu0 = state_visitation(pair.mdp0, pi0);
    const Vector mu1 = state_visitation(pair.mdp1, pi1);

    VisitationBound b;
    b.reward_gap_term = scale * (pair.mdp0.reward - pair.mdp1.reward).cwiseAbs().maxCoeff();

    const Vector row_l1 = (pi0.pi - pi1.pi).cwiseAbs().rowwise().sum();
    const double r = pair_reward_bound(pair);
    b.policy_term_group0 = scale * r * mu0.dot(row_l1);
    b.policy_term_group1 = scale * r * mu1.dot(row_l1);
    b.policy_term = std::min(b.policy_term_group0, b.policy_term_group1);

    b.visitation_ipm_term = scale * state_ipm(pair, mu0, mu1, witness);
    b.total = b.reward_gap_term + b.policy_term + b.visitation_ipm_term;
    return b;
}

OccupancyBound bound_via_occupancy(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                   const Witness& witness) {
    const double scale = 1.0 / (1.0 - pair.mdp0.gamma);
    const Matrix rho0 = occupancy_measure(pair.mdp0, pi0);
    const Matrix rho1 = occupancy_measure(pair.mdp1, pi1);

    OccupancyBound b;
    b.reward_gap_term = scale * (pair.mdp0.reward - pair.mdp1.reward).cwiseAbs().maxCoeff();
    b.occupancy_ipm_term = scale * occupancy_ipm(pair, rho0, rho1, witness);
    b.total = b.reward_gap_term + b.occupancy_ipm_term;
    return b;
}

DisparityReport analyze_disparity(const GroupPair& pair, const Policy& pi0, const Policy& pi1,
                                  const Witness& witness) {
    DisparityReport report;
    report.delta_ret = return_disparity(pair, pi0, pi1);
    report.visitation_bound = bound_via_visitation(pair, pi0, pi1, witness);
    report.occupancy_bound = bound_via_occupancy(pair, pi0, pi1, witness);
    report.witness = witness.kind;
    return report;
}

TransitionConditionResult check_prop2(const GroupPair& pair) {
    const Mdp& m0 = pair.mdp0;
    const Mdp& m1 = pair.mdp1;
    const Index m = m0.num_states;
    const Index n = m0.num_actions;

    if ((m0.reward - m1.reward).cwiseAbs().maxCoeff() > 1e-9)
        throw AssumptionViolated("check_prop2: reward functions must coincide across groups");
    if ((m0.mu - m1.mu).cwiseAbs().maxCoeff() > 1e-9)
        throw AssumptionViolated("check_prop2: initial distributions must coincide across groups");
    for (Index s = 0; s < m; ++s) {
        const auto row = m0.reward.row(s);
        if ((row.array() - row(0)).abs().maxCoeff() > 1e-9)
            throw AssumptionViolated("check_prop2: rewards must be state-only (row " +
                                     std::to_string(s) + " varies across actions)");
    }

    // d_ij(k) = T0(s_k | a_i, s_j) - T1(s_k | a_i, s_j); each d_ij sums to 0.
    std::vector<Vector> directions;
    directions.reserve(static_cast<std::size_t>(m * n));
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j)
            directions.push_back(
                (m0.transition[static_cast<std::size_t>(j)].row(i) -
                 m1.transition[static_cast<std::size_t>(j)].row(i))
                    .transpose());

    // Variables: c (m entries in [-1,1]) and the level t (free).
    //   maximize t  s.t.  <c, d_ij> >= t,  sum c = 0,  c <= 1.
    const Index rows = static_cast<Index>(directions.size()) + 1 + m;
    lp::LpProblem problem = lp::LpProblem::with_size(rows, m + 1);
    problem.objective[m] = 1.0;
    problem.lower_bounds.head(m).setConstant(-1.0);
    problem.lower_bounds[m] = lp::LpProblem::kFree;

    Index row = 0;
    for (const Vector& d : directions) {
        problem.constraints.row(row).head(m) = -d.transpose();
        problem.constraints(row, m) = 1.0;
        problem.rhs[row] = 0.0; // t - <c, d> <= 0
        ++row;
    }
    problem.constraints.row(row).head(m).setOnes();
    problem.senses[static_cast<std::size_t>(row)] = lp::RowSense::Equal;
    ++row;
    for (Index k = 0; k < m; ++k, ++row) {
        problem.constraints(row, k) = 1.0;
        problem.rhs[row] = 1.0;
    }

    const lp::LpOutcome outcome = lp::lp_solve(problem);
    if (outcome.status != lp::LpStatus::Optimal)
        throw NumericalFailure("check_prop2: direction LP did not reach an optimum");

    TransitionConditionResult result;
    result.margin = outcome.value;
    result.holds = outcome.value <= 1e-9;
    if (!result.holds) result.witness_direction = outcome.solution.head(m);
    return result;
}

GroupPair prop1_counterexample(double c, double gamma) {
    if (!(c > 0.0)) throw InvalidParameter("prop1_counterexample: c must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw InvalidParameter("prop1_counterexample: gamma must lie in (0,1)");

    const Index num_actions = 2;
    Matrix reward(2, num_actions);
    reward.row(0).setConstant(c * (1.0 - gamma));
    reward.row(1).setConstant(0.0);

    std::vector<Matrix> transition(2);
    transition[0] = Matrix::Zero(num_actions, 2);
    transition[0].col(0).setOnes(); // state 1 absorbs
    transition[1] = Matrix::Zero(num_actions, 2);
    transition[1].col(1).setOnes(); // state 2 absorbs

    Vector mu0(2), mu1(2);
    mu0 << 1.0, 0.0;
    mu1 << 0.0, 1.0;

    Mdp mdp0(gamma, mu0, transition, reward);
    Mdp mdp1(gamma, mu1, transition, reward);
    return GroupPair(std::move(mdp0), std::move(mdp1), 0.5);
}

} // namespace rpy::parity
