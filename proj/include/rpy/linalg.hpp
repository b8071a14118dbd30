#pragma once

#include "rpy/types.hpp"

namespace rpy::linalg {

/**
 * Solve Ax = b for square A with partially pivoted LU.
 *
 * Throws SingularMatrix when the factorization produces a pivot below
 * 1e-12 in magnitude, and DimensionMismatch on shape errors.
 */
Vector lu_solve(const Matrix& a, const Vector& b);

/// Max-norm residual ||Ax - b||_inf, used by callers to audit solves.
double residual_inf(const Matrix& a, const Vector& x, const Vector& b);

} // namespace rpy::linalg
