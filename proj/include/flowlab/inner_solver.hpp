// similarities implementing automorphisms, inner solutions
// of derivations, generator extraction and relating two flows

#pragma once

#include "flowlab/algebra.hpp"
#include "flowlab/core.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/expm.hpp"
#include "flowlab/flow.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace flowlab {

enum class SimilarityGauge { UnitTopLeft, DetOne };

inline const char* to_string(SimilarityGauge g) { return g == SimilarityGauge::UnitTopLeft ? "unit_top_left" : "det_one"; }

struct BoundCheck {
    double lhs = 0.0;                 // min_λ ‖λT − I‖_F
    double rhs = 0.0;                 // 4‖σ − id‖, frobenius_induced on the algebra
    double lhs_spectral = 0.0;        // same λ, spectral norm
    double rhs_spectral_sampled = 0.0;  // 4‖σ − id‖, spectral_sampled
    double best_scale_re = 1.0, best_scale_im = 0.0;
};

struct SimilaritySolution {
    Matrix T;
    double residual = 0.0;
    SimilarityGauge normalization = SimilarityGauge::UnitTopLeft;
    std::optional<BoundCheck> bound_check;
    double null_gap = 0.0;  // second-smallest / largest singular value of the stacked system
};

struct DerivationSolution {
    Matrix P;
    double residual = 0.0;
    const char* gauge = "trace_free";
    // max over basis E and t ∈ {0.5, 1} of the flow reconstruction error; NaN when not verified
    double flow_mismatch = std::numeric_limits<double>::quiet_NaN();
    // relate_flows only: ‖α_t(E) − e^{tP}β_t(E)e^{−tP}‖, informative when P does not commute with β
    double literal_mismatch = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Columns of a superoperator's left factor restricted to the pattern unknowns.
inline Matrix pattern_columns(const Matrix& full, const std::vector<Eigen::Index>& idx) {
    Matrix out(full.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = full.col(idx[k]);
    return out;
}

// Largest off-pattern entry of S(E) over basis E, relative to 1 + ‖S(E)‖_F.
inline double invariance_defect(const SuperOp& s, const NestAlgebraSpec& spec) {
    double worst = 0.0;
    for (const auto& e : spec.basis()) {
        const Matrix img = act(s, e);
        worst = std::max(worst, off_pattern_magnitude(spec, img) / (1.0 + img.norm()));
    }
    return worst;
}

// max over basis pairs of ‖S(E_a E_b) − S(E_a)S(E_b)‖_F, relative to the image size.
inline double multiplicativity_defect(const SuperOp& s, const NestAlgebraSpec& spec) {
    const auto basis = spec.basis();
    std::vector<Matrix> images;
    images.reserve(basis.size());
    for (const auto& e : basis) images.push_back(act(s, e));
    double worst = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a)
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const Matrix lhs = act(s, basis[a] * basis[b]);
            const Matrix rhs = images[a] * images[b];
            worst = std::max(worst, (lhs - rhs).norm() / (1.0 + images[a].norm() * images[b].norm()));
        }
    return worst;
}

// max over basis pairs of ‖D(E_a E_b) − D(E_a)E_b − E_a D(E_b)‖_F, relative to ‖D‖.
inline double leibniz_defect(const SuperOp& d, const NestAlgebraSpec& spec) {
    const auto basis = spec.basis();
    std::vector<Matrix> images;
    images.reserve(basis.size());
    double scale = 1.0;
    for (const auto& e : basis) {
        images.push_back(act(d, e));
        scale = std::max(scale, images.back().norm());
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a)
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const Matrix lhs = act(d, basis[a] * basis[b]);
            const Matrix rhs = images[a] * basis[b] + basis[a] * images[b];
            worst = std::max(worst, (lhs - rhs).norm() / scale);
        }
    return worst;
}

}  // namespace detail

// Finds T in the algebra with σ(E)T = TE for every basis element E, so that
// σ = Ad T on the algebra. T spans the one-dimensional null space of the stacked
// system (the commutant is scalar), then is fixed by the gauge.
inline SimilaritySolution automorphism_similarity(const SuperOp& sigma, const NestAlgebraSpec& spec) {
    if (sigma.dim != spec.dim()) throw Error(ErrorKind::DimensionMismatch, "automorphism_similarity: dimension mismatch");
    if (!all_finite(sigma.matrix)) throw Error(ErrorKind::InvalidArgument, "automorphism_similarity: non-finite sigma");
    const double inv = detail::invariance_defect(sigma, spec);
    if (inv > 1e-9)
        throw Error(ErrorKind::NotAutomorphism,
                    "automorphism_similarity: sigma leaves the algebra (off-pattern " + std::to_string(inv) + ")");
    const double mult = detail::multiplicativity_defect(sigma, spec);
    if (mult > 1e-8)
        throw Error(ErrorKind::NotAutomorphism,
                    "automorphism_similarity: sigma is not multiplicative (defect " + std::to_string(mult) + ")");

    const int n = spec.dim();
    const auto basis = spec.basis();
    const auto idx = spec.pattern_vec_indices();
    const auto m = static_cast<Eigen::Index>(basis.size());
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    const Matrix id = Matrix::Identity(n, n);

    Matrix system(m * nn, m);
    for (Eigen::Index b = 0; b < m; ++b) {
        const Matrix& e = basis[static_cast<std::size_t>(b)];
        // vec(σ(E)T − TE) = (I ⊗ σ(E) − Eᵀ ⊗ I) vec(T)
        const Matrix op = kron(id, act(sigma, e)) - kron(e.transpose(), id);
        system.middleRows(b * nn, nn) = detail::pattern_columns(op, idx);
    }

    Eigen::BDCSVD<Matrix> svd(system, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = std::max(sv(0), 1e-300);
    SimilaritySolution out;
    out.null_gap = m > 1 ? sv(m - 2) / smax : 1.0;
    if (m > 1 && out.null_gap <= 1e-8)
        throw Error(ErrorKind::Ambiguous, "automorphism_similarity: null space has dimension > 1 (commutant not trivial?)");

    Matrix t = from_pattern_coefficients(spec, svd.matrixV().col(m - 1));
    if (std::abs(t(0, 0)) >= 1e-8) {
        t /= t(0, 0);
        out.normalization = SimilarityGauge::UnitTopLeft;
    } else {
        const Complex det = t.determinant();
        if (std::abs(det) == 0.0) throw Error(ErrorKind::Singular, "automorphism_similarity: null vector is singular");
        t /= std::pow(det, 1.0 / n);
        out.normalization = SimilarityGauge::DetOne;
    }

    double res = 0.0;
    for (const auto& e : basis) res = std::max(res, (act(sigma, e) * t - t * e).norm() / (1.0 + t.norm()));
    out.residual = res;
    if (res > 1e-6)
        throw Error(ErrorKind::NotAutomorphism, "automorphism_similarity: residual " + std::to_string(res) + " > 1e-6");

    Eigen::JacobiSVD<Matrix> tsvd(t);
    if (tsvd.singularValues().minCoeff() <= 1e-10) throw Error(ErrorKind::Singular, "automorphism_similarity: T is singular");

    const SuperOp diff = sigma - SuperOp::identity(n);
    const double dist = superop_norm_on(diff, spec);
    if (dist < 1.0) {
        BoundCheck bc;
        const Complex lambda = std::conj(t.trace()) / t.squaredNorm();
        const Matrix scaled = lambda * t - id;
        bc.lhs = scaled.norm();
        bc.rhs = 4.0 * dist;
        bc.lhs_spectral = norm(scaled, NormKind::Spectral);
        bc.rhs_spectral_sampled = 4.0 * spectral_sampled_norm(diff).value;
        bc.best_scale_re = lambda.real();
        bc.best_scale_im = lambda.imag();
        out.bound_check = bc;
    }
    out.T = std::move(t);
    return out;
}

// Least-squares P in the algebra with D(E) = PE − EP on the basis, trace-free.
inline DerivationSolution inner_derivation_solve(const SuperOp& d, const NestAlgebraSpec& spec) {
    if (d.dim != spec.dim()) throw Error(ErrorKind::DimensionMismatch, "inner_derivation_solve: dimension mismatch");
    if (!all_finite(d.matrix)) throw Error(ErrorKind::InvalidArgument, "inner_derivation_solve: non-finite D");
    const double inv = detail::invariance_defect(d, spec);
    if (inv > 1e-9)
        throw Error(ErrorKind::InvalidArgument,
                    "inner_derivation_solve: D leaves the algebra (off-pattern " + std::to_string(inv) + ")");
    const double leib = detail::leibniz_defect(d, spec);
    if (leib > 1e-7)
        throw Error(ErrorKind::InvalidArgument,
                    "inner_derivation_solve: D is not a derivation (Leibniz defect " + std::to_string(leib) + ")");

    const int n = spec.dim();
    const auto basis = spec.basis();
    const auto idx = spec.pattern_vec_indices();
    const auto m = static_cast<Eigen::Index>(basis.size());
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    const Matrix id = Matrix::Identity(n, n);

    Matrix system(m * nn, m);
    Vector rhs(m * nn);
    for (Eigen::Index b = 0; b < m; ++b) {
        const Matrix& e = basis[static_cast<std::size_t>(b)];
        // vec(PE − EP) = (Eᵀ ⊗ I − I ⊗ E) vec(P)
        const Matrix op = kron(e.transpose(), id) - kron(id, e);
        system.middleRows(b * nn, nn) = detail::pattern_columns(op, idx);
        rhs.segment(b * nn, nn) = vec(act(d, e));
    }

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(system);
    cod.setThreshold(1e-12);
    Matrix p = from_pattern_coefficients(spec, cod.solve(rhs));
    p -= (p.trace() / static_cast<double>(n)) * id;

    DerivationSolution out;
    double res = 0.0;
    for (const auto& e : basis) res = std::max(res, (act(d, e) - commutator(p, e)).norm() / (1.0 + p.norm()));
    out.residual = res;
    if (res > 1e-6)
        throw Error(ErrorKind::NotInner, "inner_derivation_solve: residual " + std::to_string(res) + " > 1e-6");
    out.P = std::move(p);
    return out;
}

namespace detail {

inline double inner_reconstruction_mismatch(const FlowHandle& flow, const Matrix& p, const NestAlgebraSpec& spec) {
    double worst = 0.0;
    for (double t : {0.5, 1.0}) {
        const Matrix fwd = matrix_exponential(t * p);
        const Matrix bwd = matrix_exponential(-t * p);
        for (const auto& e : spec.basis()) worst = std::max(worst, (eval_flow(flow, t, e) - fwd * e * bwd).norm());
    }
    return worst;
}

}  // namespace detail

// generator_superop → inner_derivation_solve, then checks α_t = Ad e^{tP} at t ∈ {0.5, 1}.
inline DerivationSolution extract_flow_generator(const FlowHandle& flow, const NestAlgebraSpec& spec, double h_step = 1e-2) {
    DerivationSolution sol = inner_derivation_solve(generator_superop(flow, h_step), spec);
    sol.flow_mismatch = detail::inner_reconstruction_mismatch(flow, sol.P, spec);
    return sol;
}

// P with δ_A = δ_B + ad P. Verified as an inner perturbation: α_t is β
// perturbed by −iP (so that i·ad(−iP) = ad P). The literal e^{tP}β_t e^{−tP}
// agrees only when P commutes with β's generator; that gap is reported alone.
inline DerivationSolution relate_flows(const FlowHandle& flow_a, const FlowHandle& flow_b, const NestAlgebraSpec& spec,
                                       double h_step = 1e-2) {
    if (flow_a.dim() != flow_b.dim()) throw Error(ErrorKind::DimensionMismatch, "relate_flows: dimension mismatch");
    const SuperOp diff = generator_superop(flow_a, h_step) - generator_superop(flow_b, h_step);
    DerivationSolution sol = inner_derivation_solve(diff, spec);

    PerturbOptions opt;
    opt.method = flow_b.is_inner() ? PerturbMethod::ClosedForm : PerturbMethod::Ode;
    const Matrix q = -kI * sol.P;
    double cocycle_form = 0.0, literal = 0.0;
    for (double t : {0.5, 1.0}) {
        const Matrix fwd = matrix_exponential(t * sol.P);
        const Matrix bwd = matrix_exponential(-t * sol.P);
        for (const auto& e : spec.basis()) {
            const Matrix target = eval_flow(flow_a, t, e);
            cocycle_form = std::max(cocycle_form, (target - perturbed_flow_eval(flow_b, q, t, e, opt)).norm());
            literal = std::max(literal, (target - fwd * eval_flow(flow_b, t, e) * bwd).norm());
        }
    }
    sol.flow_mismatch = cocycle_form;
    sol.literal_mismatch = literal;
    return sol;
}

// t ↦ σ∘α_t∘σ⁻¹
inline FlowHandle conjugate_flow(const SuperOp& sigma, const SuperOp& sigma_inv, const FlowHandle& flow) {
    if (sigma.dim != flow.dim() || sigma_inv.dim != flow.dim())
        throw Error(ErrorKind::DimensionMismatch, "conjugate_flow: dimension mismatch");
    const double gap = (compose(sigma, sigma_inv).matrix - SuperOp::identity(sigma.dim).matrix).norm();
    if (!(gap <= 1e-10 * std::max(1.0, sigma.matrix.norm() * sigma_inv.matrix.norm())))
        throw Error(ErrorKind::Singular, "conjugate_flow: sigma_inv is not the inverse of sigma");
    return FlowHandle::conjugated(sigma, sigma_inv, flow);
}

// σ = Ad S on an inner flow Ad e^{tG} gives the inner flow Ad e^{tSGS⁻¹}.
inline FlowHandle conjugate_flow(const Matrix& s, const FlowHandle& flow) {
    require_same_dim(s, flow.dim(), "conjugate_flow");
    Eigen::JacobiSVD<Matrix> svd(s);
    if (svd.singularValues().minCoeff() <= 1e-12) throw Error(ErrorKind::Singular, "conjugate_flow: S is singular");
    const Matrix s_inv = s.inverse();
    if (flow.is_inner()) return FlowHandle::inner(s * flow.as_inner().generator * s_inv);
    return conjugate_flow(sandwich(s, s_inv), sandwich(s_inv, s), flow);
}

// Basis of every derivation of the algebra, as superoperators acting on the
// pattern subspace (zero on off-pattern units): null space of the Leibniz
// constraints D(E_aE_b) = D(E_a)E_b + E_aD(E_b) over pattern coefficients.
inline std::vector<SuperOp> derivation_space_basis(const NestAlgebraSpec& spec) {
    const int n = spec.dim();
    const auto& pat = spec.pattern();
    const auto basis = spec.basis();
    const auto idx = spec.pattern_vec_indices();
    const auto m = static_cast<Eigen::Index>(pat.size());
    // position of each pattern unit in the pattern list
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n) * n, -1);
    for (Eigen::Index k = 0; k < m; ++k) slot[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = k;

    // unknown d(a, b): coefficient of E_a in D(E_b), column index b*m + a
    auto var = [m](Eigen::Index a, Eigen::Index b) { return b * m + a; };
    Matrix system = Matrix::Zero(m * m * m, m * m);
    Eigen::Index row_block = 0;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b, ++row_block) {
            // constraint rows indexed by output coefficient c (pattern-valued identities)
            const auto [ia, ja] = pat[static_cast<std::size_t>(a)];
            const auto [ib, jb] = pat[static_cast<std::size_t>(b)];
            const Eigen::Index r0 = row_block * m;
            // D(E_aE_b): E_aE_b = E_{ia,jb} if ja == ib
            if (ja == ib) {
                const Eigen::Index prod = slot[static_cast<std::size_t>(jb * n + ia)];
                for (Eigen::Index c = 0; c < m; ++c) system(r0 + c, var(c, prod)) += 1.0;
            }
            // − D(E_a)E_b: Σ_c d(c,a) E_c E_b, E_cE_b = E_{ic,jb} when jc == ib
            for (Eigen::Index c = 0; c < m; ++c) {
                const auto [ic, jc] = pat[static_cast<std::size_t>(c)];
                if (jc == ib) {
                    const Eigen::Index out = slot[static_cast<std::size_t>(jb * n + ic)];
                    system(r0 + out, var(c, a)) -= 1.0;
                }
                // − E_aD(E_b): Σ_c d(c,b) E_a E_c, E_aE_c = E_{ia,jc} when ja == ic
                if (ja == ic) {
                    const Eigen::Index out = slot[static_cast<std::size_t>(jc * n + ia)];
                    system(r0 + out, var(c, b)) -= 1.0;
                }
            }
        }

    const Matrix ns = null_space(system);
    std::vector<SuperOp> out;
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    for (Eigen::Index c = 0; c < ns.cols(); ++c) {
        Matrix s = Matrix::Zero(nn, nn);
        for (Eigen::Index b = 0; b < m; ++b)
            for (Eigen::Index a = 0; a < m; ++a)
                s(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) = ns(var(a, b), c);
        out.emplace_back(n, std::move(s));
    }
    return out;
}

// Random combination of the derivation basis with complex Gaussian coefficients.
inline SuperOp sample_derivation(const std::vector<SuperOp>& basis, std::mt19937_64& rng) {
    if (basis.empty()) throw Error(ErrorKind::InvalidArgument, "sample_derivation: empty basis");
    std::normal_distribution<double> gauss(0.0, 1.0);
    SuperOp d = SuperOp::zero(basis.front().dim);
    for (const auto& b : basis) d.matrix += Complex(gauss(rng), gauss(rng)) * b.matrix;
    return d;
}

}  // namespace flowlab
