#pragma once

#include "rpy/types.hpp"

#include <limits>
#include <vector>

namespace rpy::lp {

enum class RowSense { LessEqual, Equal, GreaterEqual };

enum class LpStatus { Optimal, Infeasible, Unbounded };

/**
 * Linear program
 *
 *   max / min  objective . x
 *   s.t.       constraints.row(i) . x  (<= | = | >=)  rhs[i]
 *              x[j] >= lower_bounds[j]
 *
 * A lower bound of -infinity marks a free variable. Default bounds are 0.
 */
struct LpProblem {
    Vector objective;
    Matrix constraints;
    Vector rhs;
    std::vector<RowSense> senses;
    Vector lower_bounds;
    bool maximize = true;

    static constexpr double kFree = -std::numeric_limits<double>::infinity();

    /// Problem with n variables and no constraints yet, default bounds 0.
    static LpProblem with_size(Index num_rows, Index num_vars) {
        LpProblem p;
        p.objective = Vector::Zero(num_vars);
        p.constraints = Matrix::Zero(num_rows, num_vars);
        p.rhs = Vector::Zero(num_rows);
        p.senses.assign(static_cast<std::size_t>(num_rows), RowSense::LessEqual);
        p.lower_bounds = Vector::Zero(num_vars);
        return p;
    }
};

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vector solution;
};

/**
 * Two-phase dense simplex with Bland's anti-cycling rule.
 *
 * Deterministic for identical input. Feasibility tolerance 1e-7, pivot
 * threshold 1e-10. Equality rows are split into opposing inequalities,
 * finite lower bounds are shifted out and free variables split into
 * positive/negative parts before the tableau is built.
 */
LpOutcome lp_solve(const LpProblem& problem);

} // namespace rpy::lp
