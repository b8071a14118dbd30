#include "rpy/mdp.hpp"
#include "rpy/parity.hpp"
#include "rpy/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace rpy;
using namespace rpy::testing;

namespace {

// Deterministic chain s1 -> s2 -> s2 with a single action.
Mdp chain_mdp(double gamma, double reward_s1 = 0.0, double reward_s2 = 0.0) {
    Vector mu(2);
    mu << 1.0, 0.0;
    std::vector<Matrix> transition(2);
    transition[0] = Matrix(1, 2);
    transition[0] << 0.0, 1.0;
    transition[1] = Matrix(1, 2);
    transition[1] << 0.0, 1.0;
    Matrix reward(2, 1);
    reward << reward_s1, reward_s2;
    return Mdp(gamma, mu, transition, reward);
}

Mdp single_state_mdp(double gamma, double reward) {
    Vector mu(1);
    mu << 1.0;
    std::vector<Matrix> transition(1);
    transition[0] = Matrix::Ones(1, 1);
    Matrix r(1, 1);
    r << reward;
    return Mdp(gamma, mu, transition, r);
}

} // namespace

TEST_SUITE("mdp-core") {

TEST_CASE("construction validates stochasticity instead of renormalizing") {
    Vector mu(2);
    mu << 0.5, 0.5;
    std::vector<Matrix> transition(2);
    transition[0] = Matrix(1, 2);
    transition[0] << 0.4, 0.5; // sums to 0.9
    transition[1] = Matrix(1, 2);
    transition[1] << 0.0, 1.0;
    Matrix reward = Matrix::Zero(2, 1);
    CHECK_THROWS_AS(Mdp(0.9, mu, transition, reward), ValidationError);

    Vector bad_mu(2);
    bad_mu << 0.7, 0.4;
    transition[0] << 0.5, 0.5;
    CHECK_THROWS_AS(Mdp(0.9, bad_mu, transition, reward), ValidationError);
    CHECK_THROWS_AS(Mdp(1.0, mu, transition, reward), ValidationError);

    Matrix bad_policy(2, 2);
    bad_policy << 0.3, 0.3, 0.5, 0.5;
    CHECK_THROWS_AS(Policy{bad_policy}, ValidationError);
}

TEST_CASE("induced_transition on chains, mixtures, and absorbing states") {
    const Mdp chain = chain_mdp(0.9);
    const Policy pi = Policy::uniform(2, 1);
    Matrix expected(2, 2);
    expected << 0.0, 1.0, 0.0, 1.0;
    CHECK((induced_transition(chain, pi) - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Uniform mixture of two deterministic actions.
    Vector mu(2);
    mu << 1.0, 0.0;
    std::vector<Matrix> transition(2);
    transition[0] = Matrix(2, 2);
    transition[0] << 1.0, 0.0, 0.0, 1.0;
    transition[1] = Matrix(2, 2);
    transition[1] << 1.0, 0.0, 0.0, 1.0;
    const Mdp two_action(0.9, mu, transition, Matrix::Zero(2, 2));
    const Matrix p = induced_transition(two_action, Policy::uniform(2, 2));
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(0, 1) == doctest::Approx(0.5));

    // The absorbing counterexample pair induces the identity for any policy.
    const GroupPair pair = parity::prop1_counterexample(5.0, 0.9);
    Rng rng(7);
    for (int k = 0; k < 20; ++k) {
        const Matrix induced = induced_transition(pair.mdp0, random_policy(rng, 2, 2));
        CHECK((induced - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("value_function on named instances") {
    CHECK(value_function(single_state_mdp(0.9, 1.0), Policy::uniform(1, 1))[0] ==
          doctest::Approx(10.0).epsilon(1e-9));

    const GroupPair pair = parity::prop1_counterexample(5.0, 0.9);
    const Vector v = value_function(pair.mdp0, Policy::uniform(2, 2));
    CHECK(v[0] == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(0.0));

    const Mdp zero = single_state_mdp(0.5, 0.0);
    CHECK(value_function(zero, Policy::uniform(1, 1))[0] == doctest::Approx(0.0));
}

TEST_CASE("state_visitation on named instances") {
    CHECK(state_visitation(single_state_mdp(0.9, 0.0), Policy::uniform(1, 1))[0] ==
          doctest::Approx(1.0));

    const Vector visitation = state_visitation(chain_mdp(0.5), Policy::uniform(2, 1));
    CHECK(visitation[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(visitation[1] == doctest::Approx(0.5).epsilon(1e-9));

    const GroupPair pair = parity::prop1_counterexample(1.0, 0.9);
    const Vector absorbed = state_visitation(pair.mdp0, Policy::uniform(2, 2));
    CHECK(absorbed[0] == doctest::Approx(1.0));
    CHECK(absorbed[1] == doctest::Approx(0.0));
}

TEST_CASE("occupancy_measure splits visitation mass over actions") {
    Vector mu(1);
    mu << 1.0;
    std::vector<Matrix> transition(1);
    transition[0] = Matrix::Ones(2, 1);
    const Mdp two_action(0.9, mu, transition, Matrix::Zero(1, 2));
    const Matrix rho = occupancy_measure(two_action, Policy::uniform(1, 2));
    CHECK(rho(0, 0) == doctest::Approx(0.5));
    CHECK(rho(0, 1) == doctest::Approx(0.5));

    // Deterministic policy concentrates each row on one action.
    Rng rng(11);
    const Mdp mdp = random_mdp(rng, 4, 3, 0.9);
    const Policy det = Policy::deterministic(3, {2, 0, 1, 2});
    const Matrix rho_det = occupancy_measure(mdp, det);
    const Vector visitation = state_visitation(mdp, det);
    for (Index s = 0; s < 4; ++s) {
        CHECK(rho_det.row(s).sum() == doctest::Approx(visitation[s]).epsilon(1e-9));
        CHECK(rho_det.row(s).maxCoeff() == doctest::Approx(visitation[s]).epsilon(1e-9));
    }

    // All mass stays in the starting state's row for the absorbing pair.
    const GroupPair pair = parity::prop1_counterexample(1.0, 0.9);
    const Matrix rho_abs = occupancy_measure(pair.mdp0, random_policy(rng, 2, 2));
    CHECK(rho_abs.row(0).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rho_abs.row(1).sum() == doctest::Approx(0.0));
}

TEST_CASE("expected_return named instances") {
    CHECK(expected_return(single_state_mdp(0.9, 1.0), Policy::uniform(1, 1)) ==
          doctest::Approx(10.0).epsilon(1e-9));

    const GroupPair pair = parity::prop1_counterexample(5.0, 0.9);
    const Policy pi = Policy::uniform(2, 2);
    CHECK(expected_return(pair.mdp0, pi) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(expected_return(pair.mdp1, pi) == doctest::Approx(0.0));

    CHECK(expected_return(single_state_mdp(0.7, 0.0), Policy::uniform(1, 1)) ==
          doctest::Approx(0.0));
}

TEST_CASE("q_function named instances and consistency") {
    CHECK(q_function(single_state_mdp(0.9, 1.0), Policy::uniform(1, 1))(0, 0) ==
          doctest::Approx(10.0).epsilon(1e-9));
    CHECK(q_function(single_state_mdp(0.9, 0.0), Policy::uniform(1, 1))(0, 0) ==
          doctest::Approx(0.0));

    const GroupPair pair = parity::prop1_counterexample(5.0, 0.9);
    const Matrix q = q_function(pair.mdp0, Policy::uniform(2, 2));
    CHECK(q(0, 0) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(q(0, 1) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(q(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("property: Bellman residual, normalization, and return identity") {
    Rng rng(101);
    const double gammas[3] = {0.5, 0.9, 0.99};
    for (int trial = 0; trial < 1000; ++trial) {
        const Index m = 2 + rng.uniform_index(5);
        const Index n = 1 + rng.uniform_index(4);
        const double gamma = gammas[trial % 3];
        const Mdp mdp = random_mdp(rng, m, n, gamma);
        const Policy pi = random_policy(rng, m, n);

        const Vector v = value_function(mdp, pi);
        const Matrix p = induced_transition(mdp, pi);
        const Vector r = (pi.pi.array() * mdp.reward.array()).rowwise().sum();
        CHECK((v - (r + gamma * p * v)).cwiseAbs().maxCoeff() <= 1e-7);

        const Vector visitation = state_visitation(mdp, pi);
        CHECK(visitation.minCoeff() >= 0.0);
        CHECK(std::abs(visitation.sum() - 1.0) <= 1e-8);

        const Matrix rho = occupancy_measure(mdp, pi);
        CHECK(rho.minCoeff() >= 0.0);
        CHECK(std::abs(rho.sum() - 1.0) <= 1e-8);

        const double ret_mu = expected_return(mdp, pi);
        const double ret_occupancy = (rho.array() * mdp.reward.array()).sum() / (1.0 - gamma);
        CHECK(ret_mu == doctest::Approx(ret_occupancy).epsilon(1e-7));

        const Matrix q = q_function(mdp, pi);
        CHECK(((pi.pi.array() * q.array()).rowwise().sum().matrix() - v).cwiseAbs().maxCoeff() <=
              1e-7);
    }
}

TEST_CASE("property: visitation matches the truncated series") {
    Rng rng(102);
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = 2 + rng.uniform_index(5);
        const Index n = 1 + rng.uniform_index(3);
        const double gamma = trial % 2 == 0 ? 0.5 : 0.9;
        const Mdp mdp = random_mdp(rng, m, n, gamma);
        const Policy pi = random_policy(rng, m, n);
        const Index horizon = 60;
        const Vector exact = state_visitation(mdp, pi);
        const Vector series = series_visitation(mdp, pi, horizon);
        const double truncation = std::pow(gamma, static_cast<double>(horizon));
        CHECK((exact - series).cwiseAbs().sum() <= truncation + 1e-9);
    }
}

TEST_CASE("property: Monte-Carlo return agrees with the exact return") {
    Rng rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = 2 + rng.uniform_index(4);
        const Index n = 1 + rng.uniform_index(3);
        const Mdp mdp = random_mdp(rng, m, n, 0.9);
        const Policy pi = random_policy(rng, m, n);
        const auto [mc, stderr_mc] = monte_carlo_return(mdp, pi, 4000, rng);
        const double exact = expected_return(mdp, pi);
        CHECK(std::abs(mc - exact) <= 3.0 * stderr_mc + 1e-9);
    }
}

} // TEST_SUITE
