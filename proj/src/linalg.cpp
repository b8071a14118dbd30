#include "rpy/linalg.hpp"

#include <Eigen/LU>

namespace rpy::linalg {

namespace {
constexpr double kPivotTol = 1e-12;
}

Vector lu_solve(const Matrix& a, const Vector& b) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("lu_solve: matrix must be square");
    if (a.rows() != b.size())
        throw DimensionMismatch("lu_solve: rhs length must match matrix size");
    if (!a.allFinite() || !b.allFinite())
        throw ValidationError("lu_solve: inputs must be finite");

    Eigen::PartialPivLU<Matrix> lu(a);
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < kPivotTol)
        throw SingularMatrix("lu_solve: pivot below tolerance, matrix is singular");
    return lu.solve(b);
}

double residual_inf(const Matrix& a, const Vector& x, const Vector& b) {
    return (a * x - b).cwiseAbs().maxCoeff();
}

} // namespace rpy::linalg
