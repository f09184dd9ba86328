// nest (block upper-triangular) algebras, norms, commutants

#pragma once

#include "flowlab/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace flowlab {

enum class NormKind { Spectral, Frobenius };
enum class SuperOpNormKind { FrobeniusInduced, SpectralSampled };

// Finite nest 0 = d₀ < d₁ < … < d_k = dim. The algebra is every A leaving each
// span{e₁…e_{d_m}} invariant, i.e. block upper-triangular with block sizes
// d_{m+1} − d_m.
class NestAlgebraSpec {
public:
    NestAlgebraSpec(int dim, std::vector<int> nest_dims, double membership_tol = 1e-10)
        : dim_(dim), nest_dims_(std::move(nest_dims)), membership_tol_(membership_tol) {
        if (dim_ < 1) throw Error(ErrorKind::InvalidArgument, "nest algebra dimension must be >= 1");
        if (nest_dims_.size() < 2 || nest_dims_.front() != 0 || nest_dims_.back() != dim_)
            throw Error(ErrorKind::InvalidArgument, "nest_dims must start at 0 and end at dim");
        for (std::size_t k = 1; k < nest_dims_.size(); ++k)
            if (nest_dims_[k] <= nest_dims_[k - 1])
                throw Error(ErrorKind::InvalidArgument, "nest_dims must be strictly increasing");
        if (membership_tol_ < 0.0) throw Error(ErrorKind::InvalidArgument, "membership_tol must be >= 0");

        block_of_.resize(static_cast<std::size_t>(dim_));
        for (std::size_t p = 0; p + 1 < nest_dims_.size(); ++p)
            for (int i = nest_dims_[p]; i < nest_dims_[p + 1]; ++i) block_of_[static_cast<std::size_t>(i)] = static_cast<int>(p);

        for (int j = 0; j < dim_; ++j)
            for (int i = 0; i < dim_; ++i)
                if (in_pattern(i, j)) pattern_.emplace_back(i, j);
    }

    int dim() const noexcept { return dim_; }
    const std::vector<int>& nest_dims() const noexcept { return nest_dims_; }
    double membership_tol() const noexcept { return membership_tol_; }

    bool in_pattern(int i, int j) const {
        return block_of_[static_cast<std::size_t>(i)] <= block_of_[static_cast<std::size_t>(j)];
    }

    // (row, col) of every matrix unit spanning the algebra, column-major order.
    const std::vector<std::pair<int, int>>& pattern() const noexcept { return pattern_; }

    // Dimension of the algebra as a complex linear space.
    int algebra_dim() const noexcept { return static_cast<int>(pattern_.size()); }

    std::vector<Matrix> basis() const {
        std::vector<Matrix> out;
        out.reserve(pattern_.size());
        for (auto [i, j] : pattern_) out.push_back(matrix_unit(dim_, i, j));
        return out;
    }

    // Index of each pattern entry inside vec(A).
    std::vector<Eigen::Index> pattern_vec_indices() const {
        std::vector<Eigen::Index> idx;
        idx.reserve(pattern_.size());
        for (auto [i, j] : pattern_) idx.push_back(static_cast<Eigen::Index>(j) * dim_ + i);
        return idx;
    }

    // Orthogonal projection onto the nest subspace span{e₁…e_{d_m}}.
    Matrix nest_projection(std::size_t m) const {
        Matrix q = Matrix::Zero(dim_, dim_);
        for (int i = 0; i < nest_dims_.at(m); ++i) q(i, i) = 1.0;
        return q;
    }

    std::string describe() const {
        std::string s = "(" + std::to_string(dim_) + ",[";
        for (std::size_t k = 0; k < nest_dims_.size(); ++k) s += (k ? "," : "") + std::to_string(nest_dims_[k]);
        return s + "])";
    }

private:
    int dim_;
    std::vector<int> nest_dims_;
    double membership_tol_;
    std::vector<int> block_of_;
    std::vector<std::pair<int, int>> pattern_;
};

inline NestAlgebraSpec build_nest_algebra(int dim, std::vector<int> nest_dims) {
    return NestAlgebraSpec(dim, std::move(nest_dims));
}

inline NestAlgebraSpec full_algebra(int dim) { return NestAlgebraSpec(dim, {0, dim}); }

inline NestAlgebraSpec upper_triangular_algebra(int dim) {
    std::vector<int> dims(static_cast<std::size_t>(dim) + 1);
    for (int k = 0; k <= dim; ++k) dims[static_cast<std::size_t>(k)] = k;
    return NestAlgebraSpec(dim, std::move(dims));
}

inline bool contains(const NestAlgebraSpec& spec, const Matrix& a, double tol) {
    require_same_dim(a, spec.dim(), "contains");
    for (int j = 0; j < spec.dim(); ++j)
        for (int i = 0; i < spec.dim(); ++i)
            if (!spec.in_pattern(i, j) && std::abs(a(i, j)) > tol) return false;
    return true;
}

// Uses the algebra's membership tolerance relative to ‖A‖_F.
inline bool contains(const NestAlgebraSpec& spec, const Matrix& a) {
    return contains(spec, a, spec.membership_tol() * std::max(1.0, a.norm()));
}

inline Matrix project(const NestAlgebraSpec& spec, const Matrix& a) {
    require_same_dim(a, spec.dim(), "project");
    Matrix out = a;
    for (int j = 0; j < spec.dim(); ++j)
        for (int i = 0; i < spec.dim(); ++i)
            if (!spec.in_pattern(i, j)) out(i, j) = 0.0;
    return out;
}

// Largest modulus outside the pattern.
inline double off_pattern_magnitude(const NestAlgebraSpec& spec, const Matrix& a) {
    double worst = 0.0;
    for (int j = 0; j < spec.dim(); ++j)
        for (int i = 0; i < spec.dim(); ++i)
            if (!spec.in_pattern(i, j)) worst = std::max(worst, std::abs(a(i, j)));
    return worst;
}

inline Matrix from_pattern_coefficients(const NestAlgebraSpec& spec, const Vector& coeffs) {
    Matrix out = Matrix::Zero(spec.dim(), spec.dim());
    const auto& pat = spec.pattern();
    for (std::size_t k = 0; k < pat.size(); ++k) out(pat[k].first, pat[k].second) = coeffs(static_cast<Eigen::Index>(k));
    return out;
}

inline Vector to_pattern_coefficients(const NestAlgebraSpec& spec, const Matrix& a) {
    const auto& pat = spec.pattern();
    Vector c(static_cast<Eigen::Index>(pat.size()));
    for (std::size_t k = 0; k < pat.size(); ++k) c(static_cast<Eigen::Index>(k)) = a(pat[k].first, pat[k].second);
    return c;
}

// Null space (right singular vectors with σ ≤ rel_tol·σ_max) of a dense matrix.
inline Matrix null_space(const Matrix& system, double rel_tol = 1e-10) {
    Eigen::BDCSVD<Matrix> svd(system, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double cutoff = rel_tol * std::max(1.0, smax);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > cutoff) ++rank;
    return svd.matrixV().rightCols(system.cols() - rank);
}

// Frobenius-orthonormal basis of {X ∈ 𝔅 : XA = AX for every A ∈ 𝔅}.
inline std::vector<Matrix> commutant_basis(const NestAlgebraSpec& spec) {
    const int n = spec.dim();
    const auto basis = spec.basis();
    const auto m = static_cast<Eigen::Index>(basis.size());
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    Matrix system = Matrix::Zero(m * nn, m);
    for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index k = 0; k < m; ++k)
            system.block(b * nn, k, nn, 1) = vec(commutator(basis[static_cast<std::size_t>(k)], basis[static_cast<std::size_t>(b)]));

    const Matrix ns = null_space(system);
    std::vector<Matrix> out;
    for (Eigen::Index c = 0; c < ns.cols(); ++c) out.push_back(from_pattern_coefficients(spec, ns.col(c)));
    return out;
}

inline double norm(const Matrix& a, NormKind kind) {
    if (kind == NormKind::Frobenius) return a.norm();
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

struct SampledNorm {
    double value = 0.0;
    int trials = 0;
};

// Lower bound on sup ‖S(A)‖₂/‖A‖₂. Each trial starts from a random unitary-ish
// element and ascends by A ← polar(S†(u v*)), where (u, v) is the top singular
// pair of S(A); that step never decreases ‖S(A)‖₂ on the unit ball.
inline SampledNorm spectral_sampled_norm(const SuperOp& s, int trials = 8, int ascent_steps = 25,
                                         std::uint64_t seed = 0x5eedULL) {
    const int n = s.dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Matrix adjoint = s.matrix.adjoint();
    SampledNorm best;

    auto polar_unitary = [](const Matrix& g) {
        Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
        return Matrix(svd.matrixU() * svd.matrixV().adjoint());
    };

    for (int trial = 0; trial < trials; ++trial) {
        Matrix a(n, n);
        if (trial == 0) {
            a = Matrix::Identity(n, n);
        } else {
            for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = Complex(gauss(rng), gauss(rng));
            a = polar_unitary(a);
        }
        for (int step = 0; step <= ascent_steps; ++step) {
            const Matrix image = act(s, a);
            Eigen::JacobiSVD<Matrix> svd(image, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const double ratio = svd.singularValues()(0) / norm(a, NormKind::Spectral);
            best.value = std::max(best.value, ratio);
            if (step == ascent_steps || svd.singularValues()(0) == 0.0) break;
            const Matrix uv = svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
            const Matrix g = unvec(adjoint * vec(uv), n);
            if (g.norm() == 0.0) break;
            a = polar_unitary(g);
        }
        ++best.trials;
    }
    return best;
}

inline double superop_norm(const SuperOp& s, SuperOpNormKind kind) {
    if (kind == SuperOpNormKind::SpectralSampled) return spectral_sampled_norm(s).value;
    Eigen::BDCSVD<Matrix> svd(s.matrix);
    return svd.singularValues()(0);
}

// Induced Frobenius norm of S restricted to the algebra's pattern subspace.
inline double superop_norm_on(const SuperOp& s, const NestAlgebraSpec& spec) {
    const auto idx = spec.pattern_vec_indices();
    Matrix cols(s.matrix.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = s.matrix.col(idx[k]);
    Eigen::BDCSVD<Matrix> svd(cols);
    return svd.singularValues()(0);
}

}  // namespace flowlab
