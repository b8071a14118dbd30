#include "rpy/divergence.hpp"
#include "rpy/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace rpy;
using namespace rpy::divergence;
using namespace rpy::testing;

namespace {

Matrix euclidean_metric(const Matrix& points) {
    Matrix cost(points.rows(), points.rows());
    for (Index i = 0; i < points.rows(); ++i)
        for (Index j = 0; j < points.rows(); ++j)
            cost(i, j) = (points.row(i) - points.row(j)).norm();
    return cost;
}

// CDF-difference oracle for W1 on the 1-D grid 0,1,...,m-1.
double grid_w1_oracle(const Vector& p, const Vector& q) {
    double total = 0.0;
    double cdf_gap = 0.0;
    for (Index i = 0; i + 1 < p.size(); ++i) {
        cdf_gap += p[i] - q[i];
        total += std::abs(cdf_gap);
    }
    return total;
}

} // namespace

TEST_SUITE("divergence") {

TEST_CASE("total_variation basics") {
    Vector p(2), q(2);
    p << 0.5, 0.5;
    q << 0.5, 0.5;
    CHECK(total_variation(p, q) == doctest::Approx(0.0));
    p << 1.0, 0.0;
    q << 0.0, 1.0;
    CHECK(total_variation(p, q) == doctest::Approx(1.0));
    p << 0.5, 0.5;
    q << 0.75, 0.25;
    CHECK(total_variation(p, q) == doctest::Approx(0.25));
    CHECK_THROWS_AS(total_variation(p, Vector::Ones(3) / 3.0), DimensionMismatch);
}

TEST_CASE("policy_discrepancy basics") {
    Matrix a(1, 2), b(1, 2);
    a << 0.6, 0.4;
    b << 0.4, 0.6;
    CHECK(policy_discrepancy(Policy(a), Policy(b), 0) == doctest::Approx(0.4));
    CHECK(policy_discrepancy(Policy(a), Policy(a), 0) == doctest::Approx(0.0));

    const Policy d0 = Policy::deterministic(2, {0});
    const Policy d1 = Policy::deterministic(2, {1});
    CHECK(policy_discrepancy(d0, d1, 0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(policy_discrepancy(d0, d1, 5), IndexOutOfRange);
}

TEST_CASE("wasserstein1_discrete on point masses and the 3-point path") {
    Matrix cost(2, 2);
    cost << 0.0, 1.0, 1.0, 0.0;
    Vector p(2), q(2);
    p << 1.0, 0.0;
    q << 0.0, 1.0;
    CHECK(wasserstein1_discrete(p, q, cost) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(wasserstein1_discrete(p, p, cost) == doctest::Approx(0.0));

    Matrix path(3, 3);
    path << 0, 1, 2, 1, 0, 1, 2, 1, 0;
    Vector p3(3), q3(3);
    p3 << 0.5, 0.5, 0.0;
    q3 << 0.0, 0.5, 0.5;
    CHECK(wasserstein1_discrete(p3, q3, path) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(wasserstein1_discrete(p3, q3, path) == doctest::Approx(grid_w1_oracle(p3, q3)));
}

TEST_CASE("wasserstein1_discrete matches the grid oracle on random pairs") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const Index m = 3 + rng.uniform_index(4);
        Matrix grid(m, m);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j) grid(i, j) = std::abs(double(i - j));
        const Vector p = rng.simplex_vector(m);
        const Vector q = rng.simplex_vector(m);
        CHECK(wasserstein1_discrete(p, q, grid) ==
              doctest::Approx(grid_w1_oracle(p, q)).epsilon(1e-7));
    }
}

TEST_CASE("wasserstein1_discrete equals total variation under the discrete metric") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const Index m = 2 + rng.uniform_index(5);
        const Matrix metric = Matrix::Ones(m, m) - Matrix::Identity(m, m);
        const Vector p = rng.simplex_vector(m);
        const Vector q = rng.simplex_vector(m);
        CHECK(wasserstein1_discrete(p, q, metric) ==
              doctest::Approx(total_variation(p, q)).epsilon(1e-7));
    }
}

TEST_CASE("wasserstein1_discrete obeys the triangle inequality") {
    Rng rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        const Index m = 3 + rng.uniform_index(3);
        Matrix points(m, 2);
        for (Index i = 0; i < m; ++i) points.row(i) = rng.normal_vector(2).transpose();
        const Matrix cost = euclidean_metric(points);
        const Vector p = rng.simplex_vector(m);
        const Vector q = rng.simplex_vector(m);
        const Vector r = rng.simplex_vector(m);
        const double pq = wasserstein1_discrete(p, q, cost);
        const double qr = wasserstein1_discrete(q, r, cost);
        const double pr = wasserstein1_discrete(p, r, cost);
        CHECK(pr <= pq + qr + 1e-7);
    }
}

TEST_CASE("wasserstein1_discrete validates the cost matrix") {
    Vector p(2), q(2);
    p << 0.5, 0.5;
    q << 0.5, 0.5;
    Matrix bad_diag(2, 2);
    bad_diag << 0.5, 1.0, 1.0, 0.0;
    CHECK_THROWS_AS(wasserstein1_discrete(p, q, bad_diag), ValidationError);
    Matrix asym(2, 2);
    asym << 0.0, 1.0, 2.0, 0.0;
    CHECK_THROWS_AS(wasserstein1_discrete(p, q, asym), ValidationError);
}

TEST_CASE("wasserstein1_empirical_1d sorted pairing") {
    Vector x(2), y(2);
    x << 0.0, 2.0;
    y << 1.0, 3.0;
    CHECK(wasserstein1_empirical_1d(x, y) == doctest::Approx(1.0));
    CHECK(wasserstein1_empirical_1d(x, x) == doctest::Approx(0.0));

    Vector a(1), b(1);
    a << 0.0;
    b << 5.0;
    CHECK(wasserstein1_empirical_1d(a, b) == doctest::Approx(5.0));
    CHECK_THROWS_AS(wasserstein1_empirical_1d(a, y), UnequalCounts);
}

TEST_CASE("mmd2_unbiased hand-computed values") {
    Vector bw(1);
    bw << 0.5;
    const KernelSpec kernel(bw);

    Matrix h0(2, 1), h1(2, 1);
    h0 << 0.0, 0.0;
    h1 << 1.0, 1.0;
    // Within-group kernels are 1, cross kernels are e^{-1}.
    const double expected = 1.0 + 1.0 - 2.0 * std::exp(-1.0);
    CHECK(mmd2_unbiased(h0, h1, kernel) == doctest::Approx(expected).epsilon(1e-12));

    // Identical distinct-row batches: cross term dominates, estimate <= 0.
    Rng rng(24);
    Matrix shared(6, 2);
    for (Index i = 0; i < 6; ++i) shared.row(i) = rng.normal_vector(2).transpose();
    const double same = mmd2_unbiased(shared, shared, kernel);
    CHECK(same <= 1e-12);

    // Direct re-evaluation of the estimator as an independent oracle.
    const Index n = shared.rows();
    double within = 0.0, cross = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const double k = kernel(shared.row(i).transpose(), shared.row(j).transpose());
            if (i != j) within += k;
            cross += k;
        }
    const double oracle = 2.0 * within / double(n * (n - 1)) - 2.0 * cross / double(n * n);
    CHECK(same == doctest::Approx(oracle).epsilon(1e-12));

    CHECK_THROWS_AS(mmd2_unbiased(Matrix::Zero(1, 1), h1, kernel), BatchTooSmall);
}

TEST_CASE("mmd2_unbiased is linear in the kernel mixture") {
    Rng rng(25);
    Matrix h0(8, 3), h1(9, 3);
    for (Index i = 0; i < 8; ++i) h0.row(i) = rng.normal_vector(3).transpose();
    for (Index i = 0; i < 9; ++i) h1.row(i) = (rng.normal_vector(3).array() + 0.5).transpose();

    Vector b1(1), b2(1), both(2);
    b1 << 0.2;
    b2 << 2.0;
    both << 0.2, 2.0;
    const double mixed = mmd2_unbiased(h0, h1, KernelSpec(both));
    const double mean_of_singles =
        0.5 * (mmd2_unbiased(h0, h1, KernelSpec(b1)) + mmd2_unbiased(h0, h1, KernelSpec(b2)));
    CHECK(mixed == doctest::Approx(mean_of_singles).epsilon(1e-12));
}

TEST_CASE("mmd2_population closed forms and symmetry") {
    Vector bw(1);
    bw << 0.5;
    const KernelSpec kernel(bw);
    Matrix points(2, 1);
    points << 0.0, 1.0;
    Vector p(2), q(2);
    p << 1.0, 0.0;
    q << 0.0, 1.0;
    CHECK(mmd2_population(p, q, points, kernel) ==
          doctest::Approx(2.0 - 2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(mmd2_population(p, p, points, kernel) == doctest::Approx(0.0));
    CHECK(mmd2_population(p, q, points, kernel) ==
          doctest::Approx(mmd2_population(q, p, points, kernel)));
}

TEST_CASE("property: every divergence is symmetric") {
    Rng rng(26);
    const KernelSpec kernel = KernelSpec::default_mixture();
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = 3 + rng.uniform_index(3);
        const Vector p = rng.simplex_vector(m);
        const Vector q = rng.simplex_vector(m);
        CHECK(std::abs(total_variation(p, q) - total_variation(q, p)) <= 1e-12);

        Matrix points(m, 2);
        for (Index i = 0; i < m; ++i) points.row(i) = rng.normal_vector(2).transpose();
        const Matrix cost = euclidean_metric(points);
        CHECK(std::abs(wasserstein1_discrete(p, q, cost) - wasserstein1_discrete(q, p, cost)) <=
              1e-9);
        CHECK(std::abs(mmd2_population(p, q, points, kernel) -
                       mmd2_population(q, p, points, kernel)) <= 1e-12);

        Matrix h0(5, 2), h1(5, 2);
        for (Index i = 0; i < 5; ++i) {
            h0.row(i) = rng.normal_vector(2).transpose();
            h1.row(i) = rng.normal_vector(2).transpose();
        }
        CHECK(std::abs(mmd2_unbiased(h0, h1, kernel) - mmd2_unbiased(h1, h0, kernel)) <= 1e-12);
    }
}

TEST_CASE("property: resampled unbiased MMD matches the population value") {
    Rng rng(27);
    const KernelSpec kernel = KernelSpec::default_mixture();
    // Two fixed discrete distributions over shared points.
    Matrix points(4, 2);
    points << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.5, 1.5;
    Vector p(4), q(4);
    p << 0.4, 0.3, 0.2, 0.1;
    q << 0.1, 0.2, 0.3, 0.4;
    const double population = mmd2_population(p, q, points, kernel);

    const int resamples = 200;
    const Index n = 200;
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < resamples; ++r) {
        Matrix h0(n, 2), h1(n, 2);
        for (Index i = 0; i < n; ++i) {
            h0.row(i) = points.row(rng.categorical(p));
            h1.row(i) = points.row(rng.categorical(q));
        }
        const double estimate = mmd2_unbiased(h0, h1, kernel);
        sum += estimate;
        sum_sq += estimate * estimate;
    }
    const double mean = sum / resamples;
    const double variance = std::max(0.0, sum_sq / resamples - mean * mean);
    const double stderr_mean = std::sqrt(variance / resamples);
    CHECK(std::abs(mean - population) <= 3.0 * stderr_mean + 1e-9);
}

} // TEST_SUITE
