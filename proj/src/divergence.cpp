#include "rpy/divergence.hpp"

#include "rpy/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rpy::divergence {

KernelSpec::KernelSpec(Vector bandwidths_in, Vector weights_in)
    : bandwidths(std::move(bandwidths_in)), weights(std::move(weights_in)) {
    if (bandwidths.size() == 0) throw InvalidParameter("KernelSpec: at least one bandwidth");
    if (bandwidths.minCoeff() <= 0.0) throw InvalidParameter("KernelSpec: bandwidths must be positive");
    if (weights.size() == 0)
        weights = Vector::Constant(bandwidths.size(), 1.0 / static_cast<double>(bandwidths.size()));
    if (weights.size() != bandwidths.size())
        throw DimensionMismatch("KernelSpec: one weight per bandwidth");
    if (weights.minCoeff() < 0.0) throw InvalidParameter("KernelSpec: weights must be nonnegative");
    const double total = weights.sum();
    if (!(total > 0.0)) throw InvalidParameter("KernelSpec: weights must not all vanish");
    weights /= total;
}

KernelSpec KernelSpec::default_mixture() {
    Vector b(8);
    b << 0.001, 0.005, 0.01, 0.05, 0.1, 1.0, 5.0, 10.0;
    return KernelSpec(b);
}

double KernelSpec::from_sq_dist(double sq_dist) const {
    double value = 0.0;
    for (Index k = 0; k < bandwidths.size(); ++k)
        value += weights[k] * std::exp(-sq_dist / (2.0 * bandwidths[k]));
    return value;
}

double KernelSpec::operator()(const Vector& x, const Vector& y) const {
    return from_sq_dist((x - y).squaredNorm());
}

double total_variation(const Vector& p, const Vector& q) {
    if (p.size() != q.size()) throw DimensionMismatch("total_variation: length mismatch");
    return 0.5 * (p - q).cwiseAbs().sum();
}

double policy_discrepancy(const Policy& pi0, const Policy& pi1, Index s) {
    if (pi0.pi.rows() != pi1.pi.rows() || pi0.pi.cols() != pi1.pi.cols())
        throw DimensionMismatch("policy_discrepancy: policies must share dimensions");
    if (s < 0 || s >= pi0.pi.rows()) throw IndexOutOfRange("policy_discrepancy: state index");
    return (pi0.pi.row(s) - pi1.pi.row(s)).cwiseAbs().sum();
}

double wasserstein1_discrete(const Vector& p, const Vector& q, const Matrix& cost) {
    const Index m = p.size();
    if (q.size() != m || cost.rows() != m || cost.cols() != m)
        throw DimensionMismatch("wasserstein1_discrete: dimension mismatch");
    for (Index i = 0; i < m; ++i) {
        if (std::abs(cost(i, i)) > 1e-12)
            throw ValidationError("wasserstein1_discrete: cost diagonal must be zero");
        for (Index j = 0; j < i; ++j) {
            if (std::abs(cost(i, j) - cost(j, i)) > 1e-12)
                throw ValidationError("wasserstein1_discrete: cost must be symmetric");
            if (cost(i, j) < 0.0)
                throw ValidationError("wasserstein1_discrete: cost must be nonnegative");
        }
    }

    // Coupling variables g(i,j) >= 0 with both marginals fixed; one marginal
    // row is redundant and handled by the solver's phase-1 cleanup.
    lp::LpProblem problem = lp::LpProblem::with_size(2 * m, m * m);
    problem.maximize = false;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            const Index var = i * m + j;
            problem.objective[var] = cost(i, j);
            problem.constraints(i, var) = 1.0;     // row marginal: sum_j g(i,j) = p_i
            problem.constraints(m + j, var) = 1.0; // col marginal: sum_i g(i,j) = q_j
        }
        problem.rhs[i] = p[i];
        problem.senses[static_cast<std::size_t>(i)] = lp::RowSense::Equal;
    }
    for (Index j = 0; j < m; ++j) {
        problem.rhs[m + j] = q[j];
        problem.senses[static_cast<std::size_t>(m + j)] = lp::RowSense::Equal;
    }

    const lp::LpOutcome outcome = lp::lp_solve(problem);
    if (outcome.status != lp::LpStatus::Optimal)
        throw NumericalFailure("wasserstein1_discrete: transport LP did not reach an optimum");
    return outcome.value;
}

double wasserstein1_empirical_1d(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw UnequalCounts("wasserstein1_empirical_1d: sample counts differ");
    if (x.size() == 0) throw UnequalCounts("wasserstein1_empirical_1d: empty samples");
    std::vector<double> xs(x.data(), x.data() + x.size());
    std::vector<double> ys(y.data(), y.data() + y.size());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) total += std::abs(xs[i] - ys[i]);
    return total / static_cast<double>(xs.size());
}

namespace {
void check_batches(const Matrix& h0, const Matrix& h1) {
    if (h0.cols() != h1.cols()) throw DimensionMismatch("mmd2: feature dimensions differ");
    if (h0.rows() < 2 || h1.rows() < 2)
        throw BatchTooSmall("mmd2: unbiased estimate needs at least two samples per batch");
}

// d k(x,y) / d x for the RBF mixture, given the difference x - y.
Vector kernel_grad(const KernelSpec& kernel, const Vector& diff) {
    const double sq = diff.squaredNorm();
    double coef = 0.0;
    for (Index k = 0; k < kernel.bandwidths.size(); ++k)
        coef += kernel.weights[k] * std::exp(-sq / (2.0 * kernel.bandwidths[k])) / kernel.bandwidths[k];
    return -coef * diff;
}
} // namespace

double mmd2_unbiased(const Matrix& h0, const Matrix& h1, const KernelSpec& kernel) {
    return mmd2_unbiased_with_grad(h0, h1, kernel, nullptr, nullptr);
}

double mmd2_unbiased_with_grad(const Matrix& h0, const Matrix& h1, const KernelSpec& kernel,
                               Matrix* grad_h0, Matrix* grad_h1) {
    check_batches(h0, h1);
    const Index n0 = h0.rows();
    const Index n1 = h1.rows();
    const double within0 = 1.0 / static_cast<double>(n0 * (n0 - 1));
    const double within1 = 1.0 / static_cast<double>(n1 * (n1 - 1));
    const double cross = 2.0 / static_cast<double>(n0 * n1);

    if (grad_h0) *grad_h0 = Matrix::Zero(n0, h0.cols());
    if (grad_h1) *grad_h1 = Matrix::Zero(n1, h1.cols());

    double value = 0.0;
    for (Index i = 0; i < n0; ++i) {
        for (Index j = i + 1; j < n0; ++j) {
            const Vector diff = h0.row(i) - h0.row(j);
            value += 2.0 * within0 * kernel.from_sq_dist(diff.squaredNorm());
            if (grad_h0) {
                const Vector g = kernel_grad(kernel, diff);
                grad_h0->row(i) += 2.0 * within0 * g;
                grad_h0->row(j) -= 2.0 * within0 * g;
            }
        }
    }
    for (Index i = 0; i < n1; ++i) {
        for (Index j = i + 1; j < n1; ++j) {
            const Vector diff = h1.row(i) - h1.row(j);
            value += 2.0 * within1 * kernel.from_sq_dist(diff.squaredNorm());
            if (grad_h1) {
                const Vector g = kernel_grad(kernel, diff);
                grad_h1->row(i) += 2.0 * within1 * g;
                grad_h1->row(j) -= 2.0 * within1 * g;
            }
        }
    }
    for (Index i = 0; i < n0; ++i) {
        for (Index j = 0; j < n1; ++j) {
            const Vector diff = h0.row(i) - h1.row(j);
            value -= cross * kernel.from_sq_dist(diff.squaredNorm());
            if (grad_h0 || grad_h1) {
                const Vector g = kernel_grad(kernel, diff);
                if (grad_h0) grad_h0->row(i) -= cross * g;
                if (grad_h1) grad_h1->row(j) += cross * g;
            }
        }
    }
    return value;
}

double mmd2_population(const Vector& p, const Vector& q, const Matrix& points,
                       const KernelSpec& kernel) {
    const Index m = points.rows();
    if (p.size() != m || q.size() != m)
        throw DimensionMismatch("mmd2_population: distributions must cover the point set");
    Matrix gram(m, m);
    for (Index i = 0; i < m; ++i) {
        gram(i, i) = kernel.from_sq_dist(0.0);
        for (Index j = i + 1; j < m; ++j) {
            const double k = kernel.from_sq_dist((points.row(i) - points.row(j)).squaredNorm());
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    const Vector d = p - q;
    const double value = d.dot(gram * d);
    if (value < -1e-12) throw NumericalFailure("mmd2_population: negative population value");
    return std::max(value, 0.0);
}

} // namespace rpy::divergence
