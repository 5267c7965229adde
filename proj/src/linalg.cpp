#include "peelnet/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <string>

namespace peelnet::linalg {

namespace {

std::string dims(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
    }
    return a * b;
}

Vector solve_spd(const Matrix& a, const Vector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw ShapeError("solve_spd: " + dims(a) + ", rhs " + std::to_string(b.size()));
    }
    if (!all_finite(a) || !all_finite(b)) {
        throw SingularMatrixError("solve_spd: non-finite input");
    }
    Vector x;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
        x = llt.solve(b);
    } else {
        // Round-off guard: pivoted LDLT tolerates pivots at the noise floor
        // but a genuinely negative pivot stays an error.
        Eigen::LDLT<Matrix> ldlt(a);
        const Vector d = ldlt.vectorD();
        const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
        if (ldlt.info() != Eigen::Success || d.minCoeff() < -1e-9 * scale) {
            throw SingularMatrixError("solve_spd: non-positive pivot");
        }
        x = ldlt.solve(b);
    }
    const double residual = (a * x - b).norm();
    if (!all_finite(x) || residual > 1e-10 * (1.0 + b.norm())) {
        throw SingularMatrixError("solve_spd: matrix not positive definite (residual " +
                                  std::to_string(residual) + ")");
    }
    return x;
}

double trace(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeError("trace: matrix is " + dims(a));
    }
    return a.trace();
}

Matrix inverse_spd(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeError("inverse_spd: matrix is " + dims(a));
    }
    if (!all_finite(a)) {
        throw SingularMatrixError("inverse_spd: non-finite input");
    }
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("inverse_spd: matrix not positive definite");
    }
    Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
    if (!all_finite(inv)) {
        throw SingularMatrixError("inverse_spd: non-finite inverse");
    }
    return inv;
}

bool all_finite(const Matrix& a) {
    return a.allFinite();
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

}  // namespace peelnet::linalg
