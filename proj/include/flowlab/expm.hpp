// matrix exponential by scaling and squaring

#pragma once

#include "flowlab/core.hpp"

#include <cmath>

namespace flowlab {

namespace detail {
inline constexpr int kTaylorDegree = 13;
inline constexpr double kScaledNormTarget = 0.5;  // 0.5^14/14! < 1e-15
inline constexpr double kOverflowNorm = 700.0;
}  // namespace detail

// e^G via a degree-13 Taylor kernel on G/2^s, with s chosen from ‖G‖_F.
inline Matrix matrix_exponential(const Matrix& g) {
    if (g.rows() != g.cols()) throw Error(ErrorKind::DimensionMismatch, "matrix_exponential: non-square input");
    if (!all_finite(g)) throw Error(ErrorKind::InvalidArgument, "matrix_exponential: non-finite entries");
    const double fro = g.norm();
    if (fro > detail::kOverflowNorm)
        throw Error(ErrorKind::Overflow, "matrix_exponential: ||G||_F = " + std::to_string(fro) + " exceeds 700");

    int squarings = 0;
    if (fro > detail::kScaledNormTarget)
        squarings = static_cast<int>(std::ceil(std::log2(fro / detail::kScaledNormTarget)));
    const Matrix scaled = g / std::ldexp(1.0, squarings);

    const auto n = g.rows();
    const Matrix id = Matrix::Identity(n, n);
    // Horner: I + X(I + X/2(I + X/3(…)))
    Matrix result = id;
    for (int k = detail::kTaylorDegree; k >= 1; --k) result = id + (scaled * result) / static_cast<double>(k);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

}  // namespace flowlab
