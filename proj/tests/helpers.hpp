#pragma once

#include "rpy/mdp.hpp"
#include "rpy/rng.hpp"
#include "rpy/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace rpy::testing {

inline Mdp random_mdp(Rng& rng, Index m, Index n, double gamma, double reward_scale = 1.0) {
    Vector mu = rng.simplex_vector(m);
    std::vector<Matrix> transition(static_cast<std::size_t>(m));
    for (Index s = 0; s < m; ++s) {
        Matrix block(n, m);
        for (Index a = 0; a < n; ++a) block.row(a) = rng.simplex_vector(m).transpose();
        transition[static_cast<std::size_t>(s)] = std::move(block);
    }
    Matrix reward(m, n);
    for (Index s = 0; s < m; ++s)
        for (Index a = 0; a < n; ++a) reward(s, a) = rng.uniform(-reward_scale, reward_scale);
    return Mdp(gamma, std::move(mu), std::move(transition), std::move(reward));
}

inline Policy random_policy(Rng& rng, Index m, Index n) {
    Matrix pi(m, n);
    for (Index s = 0; s < m; ++s) pi.row(s) = rng.simplex_vector(n).transpose();
    return Policy(std::move(pi));
}

inline GroupPair random_pair(Rng& rng, Index m, Index n, double gamma, double lambda = 0.5) {
    return GroupPair(random_mdp(rng, m, n, gamma), random_mdp(rng, m, n, gamma), lambda);
}

/// All n^m deterministic policies over m states and n actions.
inline std::vector<Policy> all_deterministic_policies(Index m, Index n) {
    std::vector<Policy> out;
    std::vector<Index> actions(static_cast<std::size_t>(m), 0);
    for (;;) {
        out.push_back(Policy::deterministic(n, actions));
        Index s = 0;
        while (s < m) {
            if (++actions[static_cast<std::size_t>(s)] < n) break;
            actions[static_cast<std::size_t>(s)] = 0;
            ++s;
        }
        if (s == m) break;
    }
    return out;
}

/// Independent oracle: visitation via the truncated series (1-g) sum (g P)^t mu.
inline Vector series_visitation(const Mdp& mdp, const Policy& pi, Index horizon) {
    const Matrix p = induced_transition(mdp, pi);
    Vector dist = mdp.mu;
    Vector total = Vector::Zero(mdp.num_states);
    double weight = 1.0 - mdp.gamma;
    for (Index t = 0; t < horizon; ++t) {
        total += weight * dist;
        dist = (dist.transpose() * p).transpose();
        weight *= mdp.gamma;
    }
    return total;
}

/// Independent oracle: Monte-Carlo discounted return; returns (mean, stderr).
inline std::pair<double, double> monte_carlo_return(const Mdp& mdp, const Policy& pi,
                                                    long episodes, Rng& rng) {
    const Index horizon =
        static_cast<Index>(std::ceil(std::log(1e-6) / std::log(mdp.gamma))) + 1;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long e = 0; e < episodes; ++e) {
        Index state = rng.categorical(mdp.mu);
        double value = 0.0;
        double discount = 1.0;
        for (Index t = 0; t < horizon; ++t) {
            const Index action = rng.categorical(pi.pi.row(state).transpose());
            value += discount * mdp.reward(state, action);
            discount *= mdp.gamma;
            state = rng.categorical(
                mdp.transition[static_cast<std::size_t>(state)].row(action).transpose());
        }
        sum += value;
        sum_sq += value * value;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double variance = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(variance / n)};
}

/// Midpoint quadrature for E[clamp(X, -1, 1)] with X ~ N(mean, sd^2).
inline double clamped_normal_mean(double mean, double sd, long bins = 200000) {
    const double lo = mean - 10.0 * sd;
    const double hi = mean + 10.0 * sd;
    const double h = (hi - lo) / static_cast<double>(bins);
    double total = 0.0;
    for (long i = 0; i < bins; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * h;
        const double density =
            std::exp(-0.5 * (x - mean) * (x - mean) / (sd * sd)) / (sd * std::sqrt(2.0 * M_PI));
        const double clamped = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
        total += clamped * density * h;
    }
    return total;
}

} // namespace rpy::testing
