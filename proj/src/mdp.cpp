#include "rpy/mdp.hpp"

#include "rpy/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace rpy {

namespace {
constexpr double kStochTol = 1e-9;

void check_distribution(const Vector& p, const std::string& what) {
    if (p.size() == 0) throw ValidationError(what + ": empty distribution");
    if (!p.allFinite()) throw ValidationError(what + ": entries must be finite");
    if (p.minCoeff() < -kStochTol) throw ValidationError(what + ": negative entry");
    if (std::abs(p.sum() - 1.0) > kStochTol) throw ValidationError(what + ": entries must sum to 1");
}
} // namespace

Mdp::Mdp(double gamma_in, Vector mu_in, std::vector<Matrix> transition_in, Matrix reward_in)
    : num_states(mu_in.size()),
      num_actions(reward_in.cols()),
      gamma(gamma_in),
      mu(std::move(mu_in)),
      transition(std::move(transition_in)),
      reward(std::move(reward_in)) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("Mdp: gamma must lie in (0,1)");
    check_distribution(mu, "Mdp: mu");
    if (reward.rows() != num_states) throw ValidationError("Mdp: reward must be num_states x num_actions");
    if (!reward.allFinite()) throw ValidationError("Mdp: reward must be finite");
    if (static_cast<Index>(transition.size()) != num_states)
        throw ValidationError("Mdp: transition must have one block per state");
    for (Index s = 0; s < num_states; ++s) {
        const Matrix& block = transition[static_cast<std::size_t>(s)];
        if (block.rows() != num_actions || block.cols() != num_states)
            throw ValidationError("Mdp: transition block " + std::to_string(s) +
                                  " must be num_actions x num_states");
        for (Index a = 0; a < num_actions; ++a)
            check_distribution(block.row(a).transpose(),
                               "Mdp: transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
    }
    reward_bound = reward.cwiseAbs().maxCoeff();
}

Policy::Policy(Matrix pi_in) : pi(std::move(pi_in)) {
    if (pi.rows() == 0 || pi.cols() == 0) throw ValidationError("Policy: empty matrix");
    for (Index s = 0; s < pi.rows(); ++s)
        check_distribution(pi.row(s).transpose(), "Policy: row " + std::to_string(s));
}

Policy Policy::uniform(Index num_states, Index num_actions) {
    return Policy(Matrix::Constant(num_states, num_actions, 1.0 / static_cast<double>(num_actions)));
}

Policy Policy::deterministic(Index num_actions, const std::vector<Index>& actions) {
    Matrix pi = Matrix::Zero(static_cast<Index>(actions.size()), num_actions);
    for (Index s = 0; s < pi.rows(); ++s) {
        const Index a = actions[static_cast<std::size_t>(s)];
        if (a < 0 || a >= num_actions) throw IndexOutOfRange("Policy::deterministic: action index");
        pi(s, a) = 1.0;
    }
    return Policy(std::move(pi));
}

GroupPair::GroupPair(Mdp mdp0_in, Mdp mdp1_in, double lambda_in)
    : mdp0(std::move(mdp0_in)), mdp1(std::move(mdp1_in)), lambda(lambda_in) {
    if (mdp0.num_states != mdp1.num_states || mdp0.num_actions != mdp1.num_actions)
        throw ValidationError("GroupPair: MDPs must share state and action spaces");
    if (mdp0.gamma != mdp1.gamma)
        throw ValidationError("GroupPair: MDPs must share the discount factor");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValidationError("GroupPair: lambda must lie in [0,1]");
}

namespace {
void check_policy_shape(const Mdp& mdp, const Policy& pi) {
    if (pi.pi.rows() != mdp.num_states || pi.pi.cols() != mdp.num_actions)
        throw DimensionMismatch("policy shape does not match the MDP");
}
} // namespace

Matrix induced_transition(const Mdp& mdp, const Policy& pi) {
    check_policy_shape(mdp, pi);
    Matrix p(mdp.num_states, mdp.num_states);
    for (Index s = 0; s < mdp.num_states; ++s)
        p.row(s) = pi.pi.row(s) * mdp.transition[static_cast<std::size_t>(s)];
    return p;
}

Vector value_function(const Mdp& mdp, const Policy& pi) {
    const Matrix p = induced_transition(mdp, pi);
    const Vector r = (pi.pi.array() * mdp.reward.array()).rowwise().sum();
    const Matrix system = Matrix::Identity(mdp.num_states, mdp.num_states) - mdp.gamma * p;
    return linalg::lu_solve(system, r);
}

Vector state_visitation(const Mdp& mdp, const Policy& pi) {
    const Matrix p = induced_transition(mdp, pi);
    const Matrix system =
        Matrix::Identity(mdp.num_states, mdp.num_states) - mdp.gamma * p.transpose();
    Vector x = linalg::lu_solve(system, (1.0 - mdp.gamma) * mdp.mu);
    // The solve can leave harmless negative dust on unreachable states.
    for (Index s = 0; s < x.size(); ++s) {
        if (x[s] < 0.0) {
            if (x[s] < -1e-9) throw NumericalFailure("state_visitation: negative mass");
            x[s] = 0.0;
        }
    }
    return x;
}

Matrix occupancy_measure(const Mdp& mdp, const Policy& pi) {
    const Vector visitation = state_visitation(mdp, pi);
    return visitation.asDiagonal() * pi.pi;
}

double expected_return(const Mdp& mdp, const Policy& pi) {
    return mdp.mu.dot(value_function(mdp, pi));
}

Matrix q_function(const Mdp& mdp, const Policy& pi) {
    const Vector v = value_function(mdp, pi);
    Matrix q(mdp.num_states, mdp.num_actions);
    for (Index s = 0; s < mdp.num_states; ++s)
        q.row(s) = mdp.reward.row(s) +
                   mdp.gamma * (mdp.transition[static_cast<std::size_t>(s)] * v).transpose();
    return q;
}

} // namespace rpy
