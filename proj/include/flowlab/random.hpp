// seeded generators for the property corpus

#pragma once

#include "flowlab/algebra.hpp"
#include "flowlab/core.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/expm.hpp"
#include "flowlab/flow.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace flowlab {

using Rng = std::mt19937_64;
inline constexpr const char* kRngName = "mt19937_64";

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Matrix random_matrix(Rng& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(n, n);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = Complex(gauss(rng), gauss(rng));
    return m;
}

inline Matrix random_hermitian(Rng& rng, int n) {
    const Matrix m = random_matrix(rng, n);
    return 0.5 * (m + m.adjoint());
}

inline Matrix scaled_to(const Matrix& m, double target) {
    const double f = m.norm();
    return f == 0.0 ? m : Matrix(m * (target / f));
}

// G = i(H + K): H Hermitian, K a general matrix carrying about 10% of the norm,
// so the flow is close to unitary but not exactly isometric.
inline Matrix random_base_generator(Rng& rng, int n, double max_norm = 1.5) {
    const Matrix h = scaled_to(random_hermitian(rng, n), 1.0);
    const Matrix k = scaled_to(random_matrix(rng, n), 0.1);
    return scaled_to(kI * (h + k), uniform(rng, 0.1, max_norm));
}

inline Matrix random_perturbation(Rng& rng, int n, double max_norm = 1.5) {
    return scaled_to(random_matrix(rng, n), uniform(rng, 0.1, max_norm));
}

inline Matrix random_in_algebra(Rng& rng, const NestAlgebraSpec& spec, double norm_value) {
    return scaled_to(project(spec, random_matrix(rng, spec.dim())), norm_value);
}

// Random nest on n points: each interior cut kept with probability 1/2.
inline NestAlgebraSpec random_nest(Rng& rng, int n) {
    std::vector<int> dims{0};
    for (int k = 1; k < n; ++k)
        if (uniform_int(rng, 0, 1) == 1) dims.push_back(k);
    dims.push_back(n);
    return NestAlgebraSpec(n, dims);
}

// A fast-oscillating coboundary u_t = z⁻¹ α_t(z) tabulated on knots of step
// 2^-10 over [−4, 4]. The base is Ad e^{tG} with G = i·diag(g): one small gap
// of 0.5 and every other gap ≥ 30, z = 1 + ε R.
struct RoughCocycle {
    FlowHandle flow;
    CocycleHandle u;
    Matrix z;
};

inline RoughCocycle make_rough_cocycle(Rng& rng, int n, double eps = 0.05) {
    std::vector<double> g(static_cast<std::size_t>(n));
    g[0] = 0.0;
    if (n > 1) g[1] = 0.5;
    for (int k = 2; k < n; ++k) g[static_cast<std::size_t>(k)] = g[static_cast<std::size_t>(k - 1)] + uniform(rng, 30.0, 40.0);
    if (n == 2) g[1] = uniform(rng, 30.0, 40.0);
    Matrix gen = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) gen(k, k) = kI * g[static_cast<std::size_t>(k)];
    const FlowHandle flow = FlowHandle::inner(gen);

    const Matrix z = Matrix::Identity(n, n) + scaled_to(random_matrix(rng, n), eps);
    const Matrix z_inv = z.inverse();
    const int knots = 8 * 1024;
    std::vector<double> times(static_cast<std::size_t>(knots) + 1);
    std::vector<Matrix> values(times.size());
    for (int k = 0; k <= knots; ++k) {
        const double t = -4.0 + std::ldexp(static_cast<double>(k), -10);
        times[static_cast<std::size_t>(k)] = t;
        // G diagonal: e^{tG} is the diagonal of phases
        Eigen::VectorXcd phase(n);
        for (int j = 0; j < n; ++j) phase(j) = std::exp(Complex(0.0, t * g[static_cast<std::size_t>(j)]));
        const Matrix moved = phase.asDiagonal() * z * phase.conjugate().asDiagonal();
        values[static_cast<std::size_t>(k)] = z_inv * moved;
    }
    return {flow, CocycleHandle::tabulated(std::move(times), std::move(values)), z};
}

}  // namespace flowlab
