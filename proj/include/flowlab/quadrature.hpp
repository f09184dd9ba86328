// Gauss–Legendre / Gauss–Hermite rules and spectral cumulative integration

#pragma once

#include "flowlab/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace flowlab::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Legendre P_k(x) for k = 0..degree.
inline std::vector<double> legendre_values(int degree, double x) {
    std::vector<double> p(static_cast<std::size_t>(degree) + 1);
    p[0] = 1.0;
    if (degree >= 1) p[1] = x;
    for (int k = 2; k <= degree; ++k)
        p[static_cast<std::size_t>(k)] =
            ((2.0 * k - 1.0) * x * p[static_cast<std::size_t>(k - 1)] - (k - 1.0) * p[static_cast<std::size_t>(k - 2)]) / k;
    return p;
}

// m-point Gauss–Legendre on [−1, 1], ascending nodes.
inline Rule gauss_legendre(int m) {
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "gauss_legendre: need at least one node");
    // returns (P_m(x), P_m'(x))
    auto eval = [m](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= m; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair<double, double>{p1, m * (x * p1 - p0) / (x * x - 1.0)};
    };

    Rule r;
    r.nodes.assign(static_cast<std::size_t>(m), 0.0);
    r.weights.assign(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = eval(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = eval(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = -x;
        r.nodes[static_cast<std::size_t>(m - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(i)] = w;
        r.weights[static_cast<std::size_t>(m - 1 - i)] = w;
    }
    return r;
}

// W(k, j) = ∫_{−1}^{x_k} ℓ_j(x) dx, where ℓ_j is the Lagrange basis on the
// Gauss–Legendre nodes. Expands ℓ_j in Legendre polynomials (exact, since the
// rule integrates ℓ_j P_l exactly) and integrates term by term.
inline Eigen::MatrixXd cumulative_integration_matrix(const Rule& gl) {
    const int m = static_cast<int>(gl.nodes.size());
    std::vector<std::vector<double>> pn(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) pn[static_cast<std::size_t>(j)] = legendre_values(m, gl.nodes[static_cast<std::size_t>(j)]);

    Eigen::MatrixXd w(m, m);
    for (int k = 0; k < m; ++k) {
        const auto& pk = pn[static_cast<std::size_t>(k)];
        const double xk = gl.nodes[static_cast<std::size_t>(k)];
        // antiderivative from −1 of P_l evaluated at x_k
        std::vector<double> integral(static_cast<std::size_t>(m));
        integral[0] = xk + 1.0;
        for (int l = 1; l < m; ++l)
            integral[static_cast<std::size_t>(l)] = (pk[static_cast<std::size_t>(l + 1)] - pk[static_cast<std::size_t>(l - 1)]) / (2.0 * l + 1.0);
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            const auto& pj = pn[static_cast<std::size_t>(j)];
            for (int l = 0; l < m; ++l)
                acc += (2.0 * l + 1.0) / 2.0 * pj[static_cast<std::size_t>(l)] * integral[static_cast<std::size_t>(l)];
            w(k, j) = gl.weights[static_cast<std::size_t>(j)] * acc;
        }
    }
    return w;
}

// m-point Gauss–Hermite for ∫ f(s) e^{−s²} ds. Nodes are the eigenvalues of the
// Jacobi matrix; weights are 1/Σ_k p_k(x)² with p_k the orthonormal Hermite
// polynomials.
inline Rule gauss_hermite(int m) {
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "gauss_hermite: need at least one node");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int k = 1; k < m; ++k) sub(k - 1) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    Rule r;
    r.nodes.resize(static_cast<std::size_t>(m));
    r.weights.resize(static_cast<std::size_t>(m));
    const double p0 = std::pow(std::numbers::pi, -0.25);
    for (int k = 0; k < m; ++k) {
        const double x = eig.eigenvalues()(k);
        double prev = 0.0, cur = p0, sum = p0 * p0;
        for (int j = 0; j + 1 < m; ++j) {
            const double next = std::sqrt(2.0 / (j + 1)) * x * cur - std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
            prev = cur;
            cur = next;
            sum += cur * cur;
        }
        r.nodes[static_cast<std::size_t>(k)] = x;
        r.weights[static_cast<std::size_t>(k)] = 1.0 / sum;
    }
    // symmetrize against eigen-solver roundoff
    for (int k = 0; k < m / 2; ++k) {
        const auto a = static_cast<std::size_t>(k), b = static_cast<std::size_t>(m - 1 - k);
        const double x = 0.5 * (r.nodes[b] - r.nodes[a]);
        const double w = 0.5 * (r.weights[a] + r.weights[b]);
        r.nodes[a] = -x;
        r.nodes[b] = x;
        r.weights[a] = r.weights[b] = w;
    }
    if (m % 2 == 1) r.nodes[static_cast<std::size_t>(m / 2)] = 0.0;
    return r;
}

// Adaptive bisection on [a, b]: accept a panel when its 10- and 20-point
// Gauss–Legendre values agree to tol relative to the running total.
inline double adaptive_integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                                 int max_depth = 40) {
    const Rule coarse = gauss_legendre(10);
    const Rule fine = gauss_legendre(20);
    auto panel = [&f](const Rule& r, double lo, double hi) {
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double sum = 0.0;
        for (std::size_t k = 0; k < r.nodes.size(); ++k) sum += r.weights[k] * f(mid + half * r.nodes[k]);
        return half * sum;
    };
    const double scale = std::abs(panel(fine, a, b));
    std::function<double(double, double, int)> recurse = [&](double lo, double hi, int depth) -> double {
        const double c = panel(coarse, lo, hi);
        const double g = panel(fine, lo, hi);
        if (std::abs(g - c) <= tol * std::max(scale, 1e-300) || depth >= max_depth) return g;
        const double mid = 0.5 * (lo + hi);
        return recurse(lo, mid, depth + 1) + recurse(mid, hi, depth + 1);
    };
    return recurse(a, b, 0);
}

}  // namespace flowlab::quad
