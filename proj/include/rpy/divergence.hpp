#pragma once

#include "rpy/mdp.hpp"
#include "rpy/types.hpp"

namespace rpy::divergence {

/**
 * Mixture of RBF kernels k(x,y) = sum_k w_k exp(-||x-y||^2 / (2 b_k)).
 *
 * The "bandwidth" b enters as the denominator 2b; mixture weights default to
 * equal and are normalized to sum to one.
 */
struct KernelSpec {
    Vector bandwidths;
    Vector weights;

    explicit KernelSpec(Vector bandwidths_in, Vector weights_in = Vector());

    /// The default eight-bandwidth mixture used for feature alignment.
    static KernelSpec default_mixture();

    double operator()(const Vector& x, const Vector& y) const;
    /// Kernel value from a squared distance.
    double from_sq_dist(double sq_dist) const;
};

/// Total variation distance, (1/2) ||p - q||_1.
double total_variation(const Vector& p, const Vector& q);

/// L1 distance between the two policies' action distributions at state s.
double policy_discrepancy(const Policy& pi0, const Policy& pi1, Index s);

/**
 * Exact Wasserstein-1 distance between discrete distributions, computed as
 * the optimal transport LP over all couplings. `cost` must be symmetric
 * with a zero diagonal and nonnegative entries.
 */
double wasserstein1_discrete(const Vector& p, const Vector& q, const Matrix& cost);

/// Empirical 1-D Wasserstein-1 for equally sized samples (sorted pairing).
double wasserstein1_empirical_1d(const Vector& x, const Vector& y);

/**
 * Unbiased squared-MMD estimate between sample batches (rows are samples).
 * May be negative; values are returned unclipped.
 */
double mmd2_unbiased(const Matrix& h0, const Matrix& h1, const KernelSpec& kernel);

/**
 * Unbiased squared-MMD together with its gradients with respect to the
 * sample rows. Used by the alignment trainer; grad pointers may be null.
 */
double mmd2_unbiased_with_grad(const Matrix& h0, const Matrix& h1, const KernelSpec& kernel,
                               Matrix* grad_h0, Matrix* grad_h1);

/// Exact population squared MMD between discrete distributions over `points` rows.
double mmd2_population(const Vector& p, const Vector& q, const Matrix& points,
                       const KernelSpec& kernel);

} // namespace rpy::divergence
