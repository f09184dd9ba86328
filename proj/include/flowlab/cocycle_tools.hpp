// splitting a cocycle as u_t = w v_t α_t(w⁻¹) and
// differentiability diagnostics

#pragma once

#include "flowlab/core.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/smoothing.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace flowlab {

struct MollifiedSimilarity {
    Matrix w;
    double quad_error_estimate = 0.0;
    int nodes_used = 0;
};

// w = √(n/π) ∫ u_t e^{−nt²} dt by Gauss–Hermite, doubling the node count until
// the sum settles to 1e-13 relative (at most 512 nodes).
inline MollifiedSimilarity mollified_similarity_detailed(const CocycleHandle& u, double n, int nodes = 64) {
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "mollified_similarity: n must be positive");
    if (nodes < 8) throw Error(ErrorKind::InvalidArgument, "mollified_similarity: nodes must be >= 8");
    auto path = [&u](double t) { return u.eval(t); };
    MollifiedSimilarity out;
    Matrix w = detail::hermite_average(path, u.dim(), n, 0.0, 0.0, nodes);
    for (;;) {
        const int finer = 2 * nodes;
        Matrix refined = detail::hermite_average(path, u.dim(), n, 0.0, 0.0, finer);
        out.quad_error_estimate = (refined - w).norm();
        w = std::move(refined);
        nodes = finer;
        if (out.quad_error_estimate <= 1e-13 * w.norm() || nodes >= 512) break;
    }
    Eigen::JacobiSVD<Matrix> svd(w);
    if (svd.singularValues().minCoeff() <= 1e-8)
        throw Error(ErrorKind::Singular, "mollified_similarity: w is singular at n = " + std::to_string(n) + "; increase n");
    out.w = std::move(w);
    out.nodes_used = nodes;
    return out;
}

inline Matrix mollified_similarity(const CocycleHandle& u, double n, int nodes = 64) {
    return mollified_similarity_detailed(u, n, nodes).w;
}

// v_t = w⁻¹ u_t α_t(w); a cocycle for every invertible w.
inline CocycleHandle similar_cocycle(const Matrix& w, const CocycleHandle& u, const FlowHandle& flow) {
    if (u.dim() != flow.dim()) throw Error(ErrorKind::DimensionMismatch, "similar_cocycle: cocycle/flow dimension mismatch");
    return CocycleHandle::similar(w, u, flow);
}

struct DifferentiabilityEstimate {
    Matrix derivative;           // central difference at the finest step
    double stability = 0.0;      // max pairwise distance among the last three estimates
    std::vector<Matrix> estimates;
};

inline DifferentiabilityEstimate differentiability_estimate(const CocycleHandle& u, double t0,
                                                            const std::vector<double>& h_list) {
    if (h_list.empty()) throw Error(ErrorKind::InvalidArgument, "differentiability_estimate: empty h_list");
    for (std::size_t k = 0; k < h_list.size(); ++k) {
        if (!(h_list[k] > 0.0)) throw Error(ErrorKind::InvalidArgument, "differentiability_estimate: steps must be positive");
        if (k > 0 && !(h_list[k] < h_list[k - 1]))
            throw Error(ErrorKind::InvalidArgument, "differentiability_estimate: h_list must be decreasing");
    }
    DifferentiabilityEstimate out;
    for (double h : h_list) out.estimates.push_back((u.eval(t0 + h) - u.eval(t0 - h)) / (2.0 * h));
    const std::size_t first = out.estimates.size() > 3 ? out.estimates.size() - 3 : 0;
    for (std::size_t a = first; a < out.estimates.size(); ++a)
        for (std::size_t b = a + 1; b < out.estimates.size(); ++b)
            out.stability = std::max(out.stability, (out.estimates[a] - out.estimates[b]).norm());
    out.derivative = out.estimates.back();
    return out;
}

struct ThresholdSearch {
    bool found = false;
    double n = 0.0;
    double norm_w_minus_1 = 0.0;
    std::vector<std::pair<double, double>> trail;  // (n, ‖w(n) − 1‖_F) for every n tried
};

// Smallest n in n_start·2^k (k ≥ 0, n ≤ n_max) with ‖w(n) − 1‖_F < eps.
inline ThresholdSearch similarity_threshold_search(const CocycleHandle& u, double eps, double n_start = 4.0,
                                                   double n_max = 1e6, int nodes = 64) {
    if (!(eps > 0.0) || !(n_start > 0.0))
        throw Error(ErrorKind::InvalidArgument, "similarity_threshold_search: eps and n_start must be positive");
    ThresholdSearch out;
    const Matrix id = Matrix::Identity(u.dim(), u.dim());
    for (double n = n_start; n <= n_max; n *= 2.0) {
        double gap = 0.0;
        try {
            gap = (mollified_similarity(u, n, nodes) - id).norm();
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Singular) throw;
            out.trail.emplace_back(n, std::numeric_limits<double>::infinity());
            continue;
        }
        out.trail.emplace_back(n, gap);
        if (gap < eps) {
            out.found = true;
            out.n = n;
            out.norm_w_minus_1 = gap;
            break;
        }
    }
    return out;
}

}  // namespace flowlab
