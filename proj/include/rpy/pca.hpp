#pragma once

#include "rpy/types.hpp"

namespace rpy::pca {

struct PcaResult {
    Matrix components;         // num_components x dim, orthonormal rows
    Vector explained_variance; // eigenvalue per component
    Matrix projections;        // N x num_components
    Vector mean;
};

/**
 * Top principal components of the row-sample matrix via power iteration
 * with deflation. Components are sign-fixed so the first nonzero coordinate
 * is positive. Throws DegenerateData when the centered data has essentially
 * no variance.
 */
PcaResult principal_components(const Matrix& data, Index num_components,
                               double tolerance = 1e-9, Index max_iterations = 10000);

} // namespace rpy::pca
