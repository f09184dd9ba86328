// scalar/matrix aliases, error type, superoperators and vectorization

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace flowlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;   // an algebra element
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    OutOfRange,
    Overflow,
    Divergence,
    Singular,
    Ambiguous,
    NotInner,
    NotAutomorphism,
    StepTooSmall,
    GrowthAlarm,
    Parse,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::OutOfRange: return "out_of_range";
        case ErrorKind::Overflow: return "overflow";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Singular: return "singular";
        case ErrorKind::Ambiguous: return "ambiguous";
        case ErrorKind::NotInner: return "not_inner";
        case ErrorKind::NotAutomorphism: return "not_automorphism";
        case ErrorKind::StepTooSmall: return "step_too_small";
        case ErrorKind::GrowthAlarm: return "growth_alarm";
        case ErrorKind::Parse: return "parse";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Linear map on dim×dim elements, stored as a dim²×dim² matrix acting on
// column-major vec(A).
struct SuperOp {
    int dim = 0;
    Matrix matrix;

    SuperOp() = default;
    SuperOp(int d, Matrix m) : dim(d), matrix(std::move(m)) {
        if (matrix.rows() != static_cast<Eigen::Index>(d) * d || matrix.cols() != matrix.rows())
            throw Error(ErrorKind::DimensionMismatch, "superoperator must be dim^2 x dim^2");
    }

    static SuperOp identity(int d) {
        return SuperOp(d, Matrix::Identity(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d));
    }
    static SuperOp zero(int d) {
        return SuperOp(d, Matrix::Zero(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(d) * d));
    }
};

inline Vector vec(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unvec(const Vector& v, int dim) {
    if (v.size() != static_cast<Eigen::Index>(dim) * dim)
        throw Error(ErrorKind::DimensionMismatch, "unvec: length is not dim^2");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

inline Matrix act(const SuperOp& s, const Matrix& a) {
    if (a.rows() != s.dim || a.cols() != s.dim)
        throw Error(ErrorKind::DimensionMismatch, "act: element/superoperator dimension mismatch");
    return unvec(s.matrix * vec(a), s.dim);
}

inline SuperOp compose(const SuperOp& outer, const SuperOp& inner) {
    if (outer.dim != inner.dim) throw Error(ErrorKind::DimensionMismatch, "compose: dimension mismatch");
    return SuperOp(outer.dim, outer.matrix * inner.matrix);
}

inline SuperOp operator+(const SuperOp& a, const SuperOp& b) {
    if (a.dim != b.dim) throw Error(ErrorKind::DimensionMismatch, "superop sum: dimension mismatch");
    return SuperOp(a.dim, a.matrix + b.matrix);
}

inline SuperOp operator-(const SuperOp& a, const SuperOp& b) {
    if (a.dim != b.dim) throw Error(ErrorKind::DimensionMismatch, "superop difference: dimension mismatch");
    return SuperOp(a.dim, a.matrix - b.matrix);
}

inline SuperOp operator*(Complex c, const SuperOp& a) { return SuperOp(a.dim, c * a.matrix); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// vec(X A Y) = (Yᵀ ⊗ X) vec(A)
inline SuperOp sandwich(const Matrix& left, const Matrix& right) {
    return SuperOp(static_cast<int>(left.rows()), kron(right.transpose(), left));
}

// B ↦ PB − BP
inline SuperOp ad(const Matrix& p) {
    const auto n = p.rows();
    const Matrix id = Matrix::Identity(n, n);
    return SuperOp(static_cast<int>(n), kron(id, p) - kron(p.transpose(), id));
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

inline Matrix matrix_unit(int dim, int i, int j) {
    Matrix e = Matrix::Zero(dim, dim);
    e(i, j) = 1.0;
    return e;
}

inline bool all_finite(const Matrix& a) {
    for (Eigen::Index k = 0; k < a.size(); ++k)
        if (!std::isfinite(a.data()[k].real()) || !std::isfinite(a.data()[k].imag())) return false;
    return true;
}

inline void require_same_dim(const Matrix& a, int dim, const char* where) {
    if (a.rows() != dim || a.cols() != dim)
        throw Error(ErrorKind::DimensionMismatch, std::string(where) + ": expected " + std::to_string(dim) + "x" +
                                                      std::to_string(dim) + " element");
}

}  // namespace flowlab
