#include "rpy/fair_lp.hpp"

#include "rpy/parity.hpp"

#include <cmath>
#include <utility>

namespace rpy::fairlp {

namespace {

// Flow-balance coefficients for one group: row i gets
//   sum_a rho(s_i, a) - gamma sum_{s,a} T(s_i | s, a) rho(s, a).
// Variables for the group start at `offset`, laid out as s * n + a.
void fill_flow_rows(lp::LpProblem& p, const Mdp& mdp, Index offset, Index row_offset) {
    const Index m = mdp.num_states;
    const Index n = mdp.num_actions;
    for (Index i = 0; i < m; ++i) {
        for (Index a = 0; a < n; ++a) p.constraints(row_offset + i, offset + i * n + a) += 1.0;
        for (Index s = 0; s < m; ++s)
            for (Index a = 0; a < n; ++a)
                p.constraints(row_offset + i, offset + s * n + a) -=
                    mdp.gamma * mdp.transition[static_cast<std::size_t>(s)](a, i);
        p.senses[static_cast<std::size_t>(row_offset + i)] = lp::RowSense::Equal;
    }
}

Policy recover_policy(const Matrix& rho) {
    const Index m = rho.rows();
    const Index n = rho.cols();
    Matrix pi(m, n);
    for (Index s = 0; s < m; ++s) {
        const double mass = rho.row(s).sum();
        if (mass <= 1e-12) {
            pi.row(s).setConstant(1.0 / static_cast<double>(n));
        } else {
            pi.row(s) = rho.row(s).cwiseMax(0.0) / mass;
            pi.row(s) /= pi.row(s).sum();
        }
    }
    return Policy(std::move(pi));
}

lp::LpProblem single_group_occupancy_lp(const Mdp& mdp, bool maximize) {
    const Index m = mdp.num_states;
    const Index n = mdp.num_actions;
    lp::LpProblem p = lp::LpProblem::with_size(m, m * n);
    p.maximize = maximize;
    fill_flow_rows(p, mdp, 0, 0);
    p.rhs = mdp.mu;
    for (Index s = 0; s < m; ++s)
        for (Index a = 0; a < n; ++a) p.objective[s * n + a] = mdp.reward(s, a);
    return p;
}

double solve_return_lp(const Mdp& mdp, bool maximize) {
    const lp::LpOutcome out = lp::lp_solve(single_group_occupancy_lp(mdp, maximize));
    if (out.status != lp::LpStatus::Optimal)
        throw NumericalFailure("occupancy LP for a single group did not reach an optimum");
    return out.value;
}

} // namespace

lp::LpProblem build_fair_lp(const GroupPair& pair, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidParameter("build_fair_lp: epsilon must be nonnegative");
    const Mdp& m0 = pair.mdp0;
    const Mdp& m1 = pair.mdp1;
    const Index m = m0.num_states;
    const Index n = m0.num_actions;
    const Index mn = m * n;
    const Index b0_var = 2 * mn;
    const Index b1_var = 2 * mn + 1;

    lp::LpProblem p = lp::LpProblem::with_size(2 * m, 2 * mn + 2);

    for (Index s = 0; s < m; ++s)
        for (Index a = 0; a < n; ++a) {
            p.objective[s * n + a] = m0.reward(s, a);
            p.objective[mn + s * n + a] = m1.reward(s, a);
        }
    p.objective[b0_var] = -epsilon;
    p.objective[b1_var] = -epsilon;

    fill_flow_rows(p, m0, 0, 0);
    fill_flow_rows(p, m1, mn, m);
    // (b0 - b1) mu moved onto the left-hand side of each equality.
    for (Index i = 0; i < m; ++i) {
        p.constraints(i, b0_var) = -m0.mu[i];
        p.constraints(i, b1_var) = m0.mu[i];
        p.rhs[i] = pair.lambda * m0.mu[i];
        p.constraints(m + i, b0_var) = m1.mu[i];
        p.constraints(m + i, b1_var) = -m1.mu[i];
        p.rhs[m + i] = (1.0 - pair.lambda) * m1.mu[i];
    }
    return p;
}

FairLpSolution solve_fair(const GroupPair& pair, double epsilon) {
    const Index m = pair.mdp0.num_states;
    const Index n = pair.mdp0.num_actions;
    const Index mn = m * n;

    const lp::LpOutcome out = lp::lp_solve(build_fair_lp(pair, epsilon));

    FairLpSolution solution;
    solution.status = out.status;
    if (out.status != lp::LpStatus::Optimal) return solution;

    solution.objective = out.value;
    solution.rho0 = Matrix::Zero(m, n);
    solution.rho1 = Matrix::Zero(m, n);
    for (Index s = 0; s < m; ++s)
        for (Index a = 0; a < n; ++a) {
            solution.rho0(s, a) = out.solution[s * n + a];
            solution.rho1(s, a) = out.solution[mn + s * n + a];
        }
    solution.b0 = out.solution[2 * mn];
    solution.b1 = out.solution[2 * mn + 1];
    solution.pi0 = recover_policy(solution.rho0);
    solution.pi1 = recover_policy(solution.rho1);
    solution.achieved_disparity = parity::return_disparity(pair, solution.pi0, solution.pi1);
    return solution;
}

double optimal_return(const Mdp& mdp) { return solve_return_lp(mdp, true); }

double minimal_return(const Mdp& mdp) { return solve_return_lp(mdp, false); }

OptimaParityResult check_prop3(const GroupPair& pair, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidParameter("check_prop3: epsilon must be nonnegative");
    const Mdp& m0 = pair.mdp0;
    const Mdp& m1 = pair.mdp1;
    const Index m = m0.num_states;
    const Index n = m0.num_actions;
    const Index mn = m * n;

    const double eta0 = optimal_return(m0);
    const double eta1 = optimal_return(m1);

    // Alternative system over [rho0, rho1, c0, c1, b0, b1] >= 0:
    //   flow0_i = (c0 + b0 - b1) mu0_i          for all i
    //   flow1_i = (c1 + b1 - b0) mu1_i          for all i
    //   rho0.r0 + rho1.r1 - c0 eta0 - c1 eta1 - eps (b0 + b1) > 0
    // The system is a cone; normalize total mass to 1 and maximize the
    // strict row. A positive maximum is exactly a violating certificate.
    const Index c0_var = 2 * mn;
    const Index c1_var = 2 * mn + 1;
    const Index b0_var = 2 * mn + 2;
    const Index b1_var = 2 * mn + 3;
    const Index num_vars = 2 * mn + 4;

    lp::LpProblem p = lp::LpProblem::with_size(2 * m + 1, num_vars);
    fill_flow_rows(p, m0, 0, 0);
    fill_flow_rows(p, m1, mn, m);
    for (Index i = 0; i < m; ++i) {
        p.constraints(i, c0_var) = -m0.mu[i];
        p.constraints(i, b0_var) = -m0.mu[i];
        p.constraints(i, b1_var) = m0.mu[i];
        p.constraints(m + i, c1_var) = -m1.mu[i];
        p.constraints(m + i, b1_var) = -m1.mu[i];
        p.constraints(m + i, b0_var) = m1.mu[i];
    }
    p.constraints.row(2 * m).setOnes();
    p.rhs[2 * m] = 1.0;
    p.senses[static_cast<std::size_t>(2 * m)] = lp::RowSense::Equal;

    for (Index s = 0; s < m; ++s)
        for (Index a = 0; a < n; ++a) {
            p.objective[s * n + a] = m0.reward(s, a);
            p.objective[mn + s * n + a] = m1.reward(s, a);
        }
    p.objective[c0_var] = -eta0;
    p.objective[c1_var] = -eta1;
    p.objective[b0_var] = -epsilon;
    p.objective[b1_var] = -epsilon;

    const lp::LpOutcome out = lp::lp_solve(p);
    if (out.status != lp::LpStatus::Optimal)
        throw NumericalFailure("check_prop3: alternative LP did not reach an optimum");

    OptimaParityResult result;
    result.optimal_gap = std::abs(eta0 - eta1);
    result.alternative_margin = out.value;
    result.holds = out.value <= 1e-9;
    if (!result.holds) {
        result.has_certificate = true;
        result.certificate_rho0 = Matrix::Zero(m, n);
        result.certificate_rho1 = Matrix::Zero(m, n);
        for (Index s = 0; s < m; ++s)
            for (Index a = 0; a < n; ++a) {
                result.certificate_rho0(s, a) = out.solution[s * n + a];
                result.certificate_rho1(s, a) = out.solution[mn + s * n + a];
            }
        result.certificate_c0 = out.solution[c0_var];
        result.certificate_c1 = out.solution[c1_var];
        result.certificate_b0 = out.solution[b0_var];
        result.certificate_b1 = out.solution[b1_var];
    }
    return result;
}

} // namespace rpy::fairlp
