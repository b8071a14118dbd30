#include "rpy/lp.hpp"

#include <algorithm>
#include <cmath>

namespace rpy::lp {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kPivotTol = 1e-10;

// x[j] = y[pos] - y[neg] + shift, with neg < 0 when the variable is not split.
struct VarMap {
    Index pos = -1;
    Index neg = -1;
    double shift = 0.0;
};

// Canonical form: max obj . y  s.t.  a y <= rhs,  y >= 0.
struct Canonical {
    Matrix a;
    Vector rhs;
    Vector obj;
    std::vector<VarMap> vars;
};

Canonical canonicalize(const LpProblem& p) {
    const Index n = p.objective.size();
    const Index m = p.constraints.rows();

    std::vector<VarMap> vars(static_cast<std::size_t>(n));
    Index cols = 0;
    for (Index j = 0; j < n; ++j) {
        auto& v = vars[static_cast<std::size_t>(j)];
        if (std::isinf(p.lower_bounds[j])) {
            v.pos = cols++;
            v.neg = cols++;
        } else {
            v.pos = cols++;
            v.shift = p.lower_bounds[j];
        }
    }

    Index rows = 0;
    for (RowSense s : p.senses) rows += (s == RowSense::Equal) ? 2 : 1;

    Canonical c;
    c.a = Matrix::Zero(rows, cols);
    c.rhs = Vector::Zero(rows);
    c.obj = Vector::Zero(cols);
    c.vars = std::move(vars);

    const double sign = p.maximize ? 1.0 : -1.0;
    for (Index j = 0; j < n; ++j) {
        const auto& v = c.vars[static_cast<std::size_t>(j)];
        c.obj[v.pos] = sign * p.objective[j];
        if (v.neg >= 0) c.obj[v.neg] = -sign * p.objective[j];
    }

    Index row = 0;
    for (Index i = 0; i < m; ++i) {
        // Right-hand side adjusted for the lower-bound shifts.
        double b = p.rhs[i];
        for (Index j = 0; j < n; ++j) b -= p.constraints(i, j) * c.vars[static_cast<std::size_t>(j)].shift;

        const auto emit = [&](double row_sign) {
            for (Index j = 0; j < n; ++j) {
                const auto& v = c.vars[static_cast<std::size_t>(j)];
                const double coef = row_sign * p.constraints(i, j);
                c.a(row, v.pos) = coef;
                if (v.neg >= 0) c.a(row, v.neg) = -coef;
            }
            c.rhs[row] = row_sign * b;
            ++row;
        };

        switch (p.senses[static_cast<std::size_t>(i)]) {
            case RowSense::LessEqual: emit(1.0); break;
            case RowSense::GreaterEqual: emit(-1.0); break;
            case RowSense::Equal:
                emit(1.0);
                emit(-1.0);
                break;
        }
    }
    return c;
}

/**
 * Dense tableau over columns [structural | slack | artificial].
 * The tableau rows always hold B^{-1} [A I] and B^{-1} b; reduced costs are
 * recomputed from the cost vector each iteration, which is simple and cheap
 * at the problem sizes this library targets.
 */
class Tableau {
  public:
    explicit Tableau(const Canonical& c) : num_struct_(c.a.cols()), num_rows_(c.a.rows()) {
        const Index m = num_rows_;
        const Index n = num_struct_;
        art_begin_ = n + m;

        Index num_art = 0;
        for (Index i = 0; i < m; ++i) num_art += (c.rhs[i] < 0.0) ? 1 : 0;

        tab_ = Matrix::Zero(m, n + m + num_art);
        rhs_ = Vector::Zero(m);
        basis_.resize(static_cast<std::size_t>(m));

        Index art = art_begin_;
        for (Index i = 0; i < m; ++i) {
            const double row_sign = (c.rhs[i] < 0.0) ? -1.0 : 1.0;
            tab_.row(i).head(n) = row_sign * c.a.row(i);
            tab_(i, n + i) = row_sign; // slack
            rhs_[i] = row_sign * c.rhs[i];
            if (row_sign < 0.0) {
                tab_(i, art) = 1.0;
                basis_[static_cast<std::size_t>(i)] = art++;
            } else {
                basis_[static_cast<std::size_t>(i)] = n + i;
            }
        }
        num_art_ = num_art;
    }

    bool has_artificials() const { return num_art_ > 0; }

    /// Phase 1: maximize -(sum of artificials); returns attained value.
    double run_phase1() {
        Vector cost = Vector::Zero(tab_.cols());
        cost.tail(num_art_).setConstant(-1.0);
        run(cost, /*allow_artificial=*/true);
        double value = 0.0;
        for (Index i = 0; i < num_rows_; ++i)
            if (basis_[static_cast<std::size_t>(i)] >= art_begin_) value -= rhs_[i];
        return value;
    }

    /// Pivot basic artificials out; drop rows that turn out redundant.
    void purge_artificials() {
        for (Index i = 0; i < num_rows_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < art_begin_) continue;
            Index enter = -1;
            for (Index j = 0; j < art_begin_; ++j) {
                if (std::abs(tab_(i, j)) > kPivotTol) {
                    enter = j;
                    break;
                }
            }
            if (enter >= 0) {
                pivot(i, enter);
            } else {
                drop_row(i);
                --i;
            }
        }
    }

    /// Phase 2 over the canonical objective; false when unbounded.
    bool run_phase2(const Vector& struct_obj) {
        Vector cost = Vector::Zero(tab_.cols());
        cost.head(num_struct_) = struct_obj;
        return run(cost, /*allow_artificial=*/false);
    }

    Vector structural_solution() const {
        Vector y = Vector::Zero(num_struct_);
        for (Index i = 0; i < num_rows_; ++i) {
            const Index b = basis_[static_cast<std::size_t>(i)];
            if (b < num_struct_) y[b] = rhs_[i];
        }
        return y;
    }

  private:
    bool run(const Vector& cost, bool allow_artificial) {
        const Index cols = allow_artificial ? tab_.cols() : art_begin_;
        for (;;) {
            // Reduced costs r_j = c_j - c_B . tab_col_j. Bland: pick the
            // smallest improving column index.
            Index enter = -1;
            for (Index j = 0; j < cols; ++j) {
                double r = cost[j];
                for (Index i = 0; i < num_rows_; ++i) r -= cost[basis_[static_cast<std::size_t>(i)]] * tab_(i, j);
                if (r > kFeasTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;

            Index leave = -1;
            double best_ratio = 0.0;
            for (Index i = 0; i < num_rows_; ++i) {
                const double denom = tab_(i, enter);
                if (denom <= kPivotTol) continue;
                const double ratio = rhs_[i] / denom;
                if (leave < 0 || ratio < best_ratio - kPivotTol ||
                    (std::abs(ratio - best_ratio) <= kPivotTol &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }

    void pivot(Index row, Index col) {
        const double inv = 1.0 / tab_(row, col);
        tab_.row(row) *= inv;
        rhs_[row] *= inv;
        for (Index i = 0; i < num_rows_; ++i) {
            if (i == row) continue;
            const double factor = tab_(i, col);
            if (factor == 0.0) continue;
            tab_.row(i) -= factor * tab_.row(row);
            rhs_[i] -= factor * rhs_[row];
        }
        // Clean tiny residue in the pivot column.
        for (Index i = 0; i < num_rows_; ++i) tab_(i, col) = (i == row) ? 1.0 : 0.0;
        basis_[static_cast<std::size_t>(row)] = col;
    }

    void drop_row(Index row) {
        const Index last = num_rows_ - 1;
        if (row != last) {
            tab_.row(row) = tab_.row(last);
            rhs_[row] = rhs_[last];
            basis_[static_cast<std::size_t>(row)] = basis_[static_cast<std::size_t>(last)];
        }
        tab_.conservativeResize(last, Eigen::NoChange);
        rhs_.conservativeResize(last);
        basis_.resize(static_cast<std::size_t>(last));
        num_rows_ = last;
    }

    Matrix tab_;
    Vector rhs_;
    std::vector<Index> basis_;
    Index num_struct_ = 0;
    Index num_rows_ = 0;
    Index art_begin_ = 0;
    Index num_art_ = 0;
};

void check_feasible(const LpProblem& p, const Vector& x) {
    const double scale = 1.0 + (p.rhs.size() > 0 ? p.rhs.cwiseAbs().maxCoeff() : 0.0);
    for (Index i = 0; i < p.constraints.rows(); ++i) {
        const double lhs = p.constraints.row(i) * x;
        const double b = p.rhs[i];
        const bool ok = [&] {
            switch (p.senses[static_cast<std::size_t>(i)]) {
                case RowSense::LessEqual: return lhs <= b + kFeasTol * scale;
                case RowSense::GreaterEqual: return lhs >= b - kFeasTol * scale;
                case RowSense::Equal: return std::abs(lhs - b) <= kFeasTol * scale;
            }
            return false;
        }();
        if (!ok) throw NumericalFailure("lp_solve: optimal point violates constraint row " + std::to_string(i));
    }
    for (Index j = 0; j < x.size(); ++j) {
        if (!std::isinf(p.lower_bounds[j]) && x[j] < p.lower_bounds[j] - kFeasTol)
            throw NumericalFailure("lp_solve: optimal point violates bound on variable " + std::to_string(j));
    }
}

} // namespace

LpOutcome lp_solve(const LpProblem& p) {
    const Index n = p.objective.size();
    if (p.constraints.cols() != n)
        throw DimensionMismatch("lp_solve: objective length must match constraint columns");
    if (p.constraints.rows() != p.rhs.size() ||
        p.rhs.size() != static_cast<Index>(p.senses.size()))
        throw DimensionMismatch("lp_solve: rhs/sense length must match constraint rows");
    if (p.lower_bounds.size() != n)
        throw DimensionMismatch("lp_solve: lower_bounds length must match variable count");
    if (!p.constraints.allFinite() || !p.rhs.allFinite() || !p.objective.allFinite())
        throw ValidationError("lp_solve: problem data must be finite");

    const Canonical canon = canonicalize(p);
    Tableau tableau(canon);

    LpOutcome out;
    if (tableau.has_artificials()) {
        const double phase1 = tableau.run_phase1();
        const double scale = 1.0 + canon.rhs.cwiseAbs().maxCoeff();
        if (phase1 < -kFeasTol * scale) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        tableau.purge_artificials();
    }
    if (!tableau.run_phase2(canon.obj)) {
        out.status = LpStatus::Unbounded;
        return out;
    }

    const Vector y = tableau.structural_solution();
    Vector x(n);
    for (Index j = 0; j < n; ++j) {
        const auto& v = canon.vars[static_cast<std::size_t>(j)];
        x[j] = y[v.pos] + v.shift;
        if (v.neg >= 0) x[j] -= y[v.neg];
    }
    check_feasible(p, x);

    out.status = LpStatus::Optimal;
    out.solution = std::move(x);
    out.value = p.objective.dot(out.solution);
    return out;
}

} // namespace rpy::lp
