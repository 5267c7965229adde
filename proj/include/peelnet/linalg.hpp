#pragma once

#include <Eigen/Dense>

#include "peelnet/errors.hpp"

namespace peelnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Shape-checked matrix product. A.cols() must equal B.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// Solve A x = b for symmetric positive definite A (Cholesky, falling back
/// to partial-pivot LU on round-off edge cases). The returned x satisfies
/// ||Ax - b|| <= 1e-10 * (1 + ||b||); a non-positive pivot or a residual
/// above that bound raises SingularMatrixError.
Vector solve_spd(const Matrix& a, const Vector& b);

/// Sum of the diagonal of a square matrix.
double trace(const Matrix& a);

/// Inverse of a symmetric positive definite matrix.
Matrix inverse_spd(const Matrix& a);

/// True when every entry is finite (no NaN/Inf).
bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

}  // namespace linalg
}  // namespace peelnet
