#pragma once

#include "rpy/types.hpp"

#include <vector>

namespace rpy {

/**
 * Finite Markov decision process (S, A, mu, T, r, gamma).
 *
 * transition[s] is the num_actions x num_states matrix whose row a is the
 * distribution over next states after taking action a in state s. Inputs are
 * validated on construction with a 1e-9 stochasticity tolerance and rejected
 * rather than renormalized.
 */
struct Mdp {
    Index num_states = 0;
    Index num_actions = 0;
    double gamma = 0.0;
    Vector mu;
    std::vector<Matrix> transition;
    Matrix reward;
    double reward_bound = 0.0; // max_{s,a} |r(s,a)|

    Mdp() = default;
    Mdp(double gamma, Vector mu, std::vector<Matrix> transition, Matrix reward);
};

/// Row-stochastic policy matrix, pi(a|s) at (s, a).
struct Policy {
    Matrix pi;

    Policy() = default;
    explicit Policy(Matrix pi);

    static Policy uniform(Index num_states, Index num_actions);
    /// Deterministic policy selecting actions[s] in state s.
    static Policy deterministic(Index num_actions, const std::vector<Index>& actions);
};

/**
 * Two MDPs over shared state/action spaces and discount factor; lambda is
 * the population share of group 0.
 */
struct GroupPair {
    Mdp mdp0;
    Mdp mdp1;
    double lambda = 0.5;

    GroupPair() = default;
    GroupPair(Mdp mdp0, Mdp mdp1, double lambda);

    const Mdp& group(int g) const { return g == 0 ? mdp0 : mdp1; }
};

/// Policy-induced state transition matrix P(s'|s) = sum_a pi(a|s) T(s'|s,a).
Matrix induced_transition(const Mdp& mdp, const Policy& pi);

/// Exact value function, solved from (I - gamma P) v = R.
Vector value_function(const Mdp& mdp, const Policy& pi);

/// Discounted state visitation distribution, (I - gamma P^T) x = (1-gamma) mu.
Vector state_visitation(const Mdp& mdp, const Policy& pi);

/// Discounted state-action occupancy rho(s,a) = visitation(s) pi(a|s).
Matrix occupancy_measure(const Mdp& mdp, const Policy& pi);

/// Expected discounted return under the initial distribution, mu . v.
double expected_return(const Mdp& mdp, const Policy& pi);

/// Q-values q(s,a) = r(s,a) + gamma sum_s' T(s'|s,a) v(s').
Matrix q_function(const Mdp& mdp, const Policy& pi);

} // namespace rpy
