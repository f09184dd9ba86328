// Gaussian mollification of flow orbits into analytic elements

#pragma once

#include "flowlab/core.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/quadrature.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace flowlab {

// ∫ e^{−nt²−ξt} dt = e^{ξ²/(4n)} √(π/n), by completing the square.
inline double gaussian_weight_integral(double n, double xi) {
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian_weight_integral: n must be positive");
    return std::exp(xi * xi / (4.0 * n)) * std::sqrt(std::numbers::pi / n);
}

// The same integral with the exponent written as ξ²/(4n²). Kept only so the
// quadrature oracle can show which of the two values the integral takes.
inline double gaussian_weight_integral_squared_n(double n, double xi) {
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian_weight_integral_squared_n: n must be positive");
    return std::exp(xi * xi / (4.0 * n * n)) * std::sqrt(std::numbers::pi / n);
}

// Adaptive-quadrature oracle for gaussian_weight_integral.
inline double gaussian_weight_integral_quadrature(double n, double xi, double tol = 1e-14) {
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian_weight_integral_quadrature: n must be positive");
    const double center = -xi / (2.0 * n);
    const double half = 12.0 / std::sqrt(n);  // e^{−144} beyond
    auto f = [n, xi](double t) { return std::exp(-n * t * t - xi * t); };
    return quad::adaptive_integrate(f, center - half, center, tol) + quad::adaptive_integrate(f, center, center + half, tol);
}

struct SmoothingResult {
    Matrix smoothed;
    double n = 0.0;
    double xi = 0.0;
    double quad_error_estimate = 0.0;
    double weight_integral = 0.0;
    int nodes_used = 0;
};

namespace detail {

inline constexpr double kHermiteCutoff = 8.0;  // weights beyond |s| = 8 are below e^{−64}

// (1/√π) Σ_k w_k e^{2i s_k y √n} f(center + s_k/√n), nodes with |s_k| > 8 dropped.
inline Matrix hermite_average(const std::function<Matrix(double)>& f, int dim, double n, double center, double y,
                              int nodes) {
    const quad::Rule gh = quad::gauss_hermite(nodes);
    const double root_n = std::sqrt(n);
    Matrix acc = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
        const double s = gh.nodes[k];
        if (std::abs(s) > kHermiteCutoff) continue;
        const Complex phase = y == 0.0 ? Complex(1.0) : std::exp(Complex(0.0, 2.0 * s * y * root_n));
        acc += (gh.weights[k] * phase) * f(center + s / root_n);
    }
    return acc / std::sqrt(std::numbers::pi);
}

}  // namespace detail

// A_n = √(n/π) ∫ α_t(A) e^{−nt²−ξt} dt by Gauss–Hermite in s = √n(t + ξ/(2n)):
// A_n = e^{ξ²/(4n)} (1/√π) Σ w_k α_{t(s_k)}(A). The estimate is the change when
// the node count doubles; the finer sum is returned.
inline SmoothingResult analytic_smooth(const FlowHandle& flow, const Matrix& a, double n, double xi, int nodes = 64) {
    require_same_dim(a, flow.dim(), "analytic_smooth");
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "analytic_smooth: n must be positive");
    if (nodes < 8) throw Error(ErrorKind::InvalidArgument, "analytic_smooth: nodes must be >= 8");
    if (std::abs(xi) > std::sqrt(n))
        throw Error(ErrorKind::GrowthAlarm, "analytic_smooth: |xi| = " + std::to_string(xi) + " exceeds sqrt(n) = " +
                                                std::to_string(std::sqrt(n)));
    auto orbit = [&](double t) { return eval_flow(flow, t, a); };
    const double center = -xi / (2.0 * n);
    const double lift = std::exp(xi * xi / (4.0 * n));

    const Matrix coarse = lift * detail::hermite_average(orbit, flow.dim(), n, center, 0.0, nodes);
    SmoothingResult out;
    out.smoothed = lift * detail::hermite_average(orbit, flow.dim(), n, center, 0.0, 2 * nodes);
    out.n = n;
    out.xi = xi;
    out.quad_error_estimate = (out.smoothed - coarse).norm();
    out.weight_integral = gaussian_weight_integral(n, xi);
    out.nodes_used = 2 * nodes;
    return out;
}

struct ProfileRow {
    double n = 0.0;
    double diff_frobenius = 0.0;  // ‖A_n − A‖_F
    double norm_frobenius = 0.0;  // ‖A_n‖_F
    double quad_error_estimate = 0.0;
};

inline std::vector<ProfileRow> smoothing_convergence_profile(const FlowHandle& flow, const Matrix& a,
                                                             const std::vector<double>& n_list, double xi,
                                                             int nodes = 64) {
    for (std::size_t k = 1; k < n_list.size(); ++k)
        if (!(n_list[k] > n_list[k - 1]))
            throw Error(ErrorKind::InvalidArgument, "smoothing_convergence_profile: n_list must be increasing");
    std::vector<ProfileRow> rows;
    rows.reserve(n_list.size());
    for (double n : n_list) {
        const SmoothingResult r = analytic_smooth(flow, a, n, xi, nodes);
        rows.push_back({n, (r.smoothed - a).norm(), r.smoothed.norm(), r.quad_error_estimate});
    }
    return rows;
}

// Entire extension of s ↦ α_s(A_n) from real-time data alone:
// f_n(z) = √(n/π) ∫ α_t(A) e^{−n(t−z)² − ξ(t−z)} dt. With c = z − ξ/(2n) = a + iy
// this is e^{ξ²/(4n) + ny²} (1/√π) Σ w_k e^{2i s_k y√n} α_{a + s_k/√n}(A).
inline Matrix mollified_orbit_extension(const FlowHandle& flow, const Matrix& a, double n, double xi, Complex z,
                                        int nodes = 64) {
    require_same_dim(a, flow.dim(), "mollified_orbit_extension");
    auto orbit = [&](double t) { return eval_flow(flow, t, a); };
    const Complex c = z - xi / (2.0 * n);
    const double lift = std::exp(xi * xi / (4.0 * n) + n * c.imag() * c.imag());
    return lift * detail::hermite_average(orbit, flow.dim(), n, c.real(), c.imag(), nodes);
}

// Max over ζ on the segment 0 → z (samples + 1 points) of ‖α_ζ(A_n) − f_n(ζ)‖_F,
// with α_ζ the complex-time inner flow. nodes = 0 reuses the smoothing's node
// count.
inline double analyticity_check(const FlowHandle& flow, const SmoothingResult& smoothed, const Matrix& a, Complex z,
                                int radius_samples = 8, int nodes = 0) {
    if (nodes == 0) nodes = smoothed.nodes_used;
    if (!flow.is_inner()) throw Error(ErrorKind::NotInner, "analyticity_check: flow must be inner");
    if (radius_samples < 0) throw Error(ErrorKind::InvalidArgument, "analyticity_check: radius_samples must be >= 0");
    double worst = 0.0;
    for (int k = 0; k <= radius_samples; ++k) {
        const Complex zeta = radius_samples == 0 ? z : z * (static_cast<double>(k) / radius_samples);
        const Matrix direct = eval_inner_complex(flow, zeta, smoothed.smoothed);
        const Matrix integral = mollified_orbit_extension(flow, a, smoothed.n, smoothed.xi, zeta, nodes);
        worst = std::max(worst, (direct - integral).norm());
    }
    return worst;
}

}  // namespace flowlab
