// one-parameter automorphism groups: evaluation, superoperators,
// generators and growth bounds

#pragma once

#include "flowlab/algebra.hpp"
#include "flowlab/core.hpp"
#include "flowlab/expm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace flowlab {

enum class PerturbMethod { Dyson, Ode, ClosedForm };

inline const char* to_string(PerturbMethod m) {
    switch (m) {
        case PerturbMethod::Dyson: return "dyson";
        case PerturbMethod::Ode: return "ode";
        case PerturbMethod::ClosedForm: return "closed_form";
    }
    return "unknown";
}

struct PerturbOptions {
    PerturbMethod method = PerturbMethod::Ode;
    int ode_steps = 2000;
    int dyson_order = 20;
    int dyson_nodes = 32;
};

struct GrowthBound {
    double M = 1.0;
    double xi = 0.0;

    double at(double t) const { return M * std::exp(xi * std::abs(t)); }
};

// Value-semantic handle to an immutable flow description. Copies share the
// underlying node.
class FlowHandle {
public:
    struct Inner {
        Matrix generator;  // α_t = Ad e^{tG}
    };
    struct Perturbed;
    struct Tabulated {
        std::vector<double> times;
        std::vector<SuperOp> superops;
    };
    struct Conjugated;

    enum class Kind { Inner, Perturbed, Tabulated, Conjugated };

    static FlowHandle inner(Matrix generator);
    static FlowHandle identity(int dim) { return inner(Matrix::Zero(dim, dim)); }
    static FlowHandle perturbed(FlowHandle base, Matrix perturbation, PerturbOptions options = {});
    static FlowHandle tabulated(std::vector<double> times, std::vector<SuperOp> superops);
    static FlowHandle conjugated(SuperOp sigma, SuperOp sigma_inv, FlowHandle base);

    int dim() const noexcept { return dim_; }
    Kind kind() const;
    bool is_inner() const { return kind() == Kind::Inner; }

    const Inner& as_inner() const;
    const Perturbed& as_perturbed() const;
    const Tabulated& as_tabulated() const;
    const Conjugated& as_conjugated() const;

private:
    struct Node;
    explicit FlowHandle(std::shared_ptr<const Node> node, int dim) : node_(std::move(node)), dim_(dim) {}

    std::shared_ptr<const Node> node_;
    int dim_ = 0;
};

struct FlowHandle::Perturbed {
    FlowHandle base;
    Matrix perturbation;  // generator becomes δ + i·ad P
    PerturbOptions options;
};

struct FlowHandle::Conjugated {
    SuperOp sigma;
    SuperOp sigma_inv;
    FlowHandle base;  // t ↦ σ∘α_t∘σ⁻¹
};

struct FlowHandle::Node {
    std::variant<Inner, Perturbed, Tabulated, Conjugated> v;
};

inline FlowHandle FlowHandle::inner(Matrix generator) {
    if (generator.rows() != generator.cols() || generator.rows() < 1)
        throw Error(ErrorKind::InvalidArgument, "inner flow generator must be a non-empty square matrix");
    if (!all_finite(generator)) throw Error(ErrorKind::InvalidArgument, "inner flow generator has non-finite entries");
    const int d = static_cast<int>(generator.rows());
    return FlowHandle(std::make_shared<const Node>(Node{Inner{std::move(generator)}}), d);
}

inline FlowHandle FlowHandle::perturbed(FlowHandle base, Matrix perturbation, PerturbOptions options) {
    require_same_dim(perturbation, base.dim(), "perturbed flow");
    if (options.method == PerturbMethod::ClosedForm && !base.is_inner())
        throw Error(ErrorKind::InvalidArgument, "closed_form perturbation requires an inner base flow");
    const int d = base.dim();
    return FlowHandle(
        std::make_shared<const Node>(Node{Perturbed{std::move(base), std::move(perturbation), options}}), d);
}

inline FlowHandle FlowHandle::tabulated(std::vector<double> times, std::vector<SuperOp> superops) {
    if (times.empty() || times.size() != superops.size())
        throw Error(ErrorKind::InvalidArgument, "tabulated flow needs matching non-empty times and superoperators");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw Error(ErrorKind::InvalidArgument, "tabulated flow times must increase");
    const int d = superops.front().dim;
    for (const auto& s : superops)
        if (s.dim != d) throw Error(ErrorKind::DimensionMismatch, "tabulated flow superoperators differ in dim");
    return FlowHandle(std::make_shared<const Node>(Node{Tabulated{std::move(times), std::move(superops)}}), d);
}

inline FlowHandle FlowHandle::conjugated(SuperOp sigma, SuperOp sigma_inv, FlowHandle base) {
    const int d = base.dim();
    if (sigma.dim != d || sigma_inv.dim != d) throw Error(ErrorKind::DimensionMismatch, "conjugated flow dimension mismatch");
    return FlowHandle(
        std::make_shared<const Node>(Node{Conjugated{std::move(sigma), std::move(sigma_inv), std::move(base)}}), d);
}

inline FlowHandle::Kind FlowHandle::kind() const { return static_cast<Kind>(node_->v.index()); }

inline const FlowHandle::Inner& FlowHandle::as_inner() const {
    if (const auto* p = std::get_if<Inner>(&node_->v)) return *p;
    throw Error(ErrorKind::InvalidArgument, "flow is not inner");
}
inline const FlowHandle::Perturbed& FlowHandle::as_perturbed() const {
    if (const auto* p = std::get_if<Perturbed>(&node_->v)) return *p;
    throw Error(ErrorKind::InvalidArgument, "flow is not perturbed");
}
inline const FlowHandle::Tabulated& FlowHandle::as_tabulated() const {
    if (const auto* p = std::get_if<Tabulated>(&node_->v)) return *p;
    throw Error(ErrorKind::InvalidArgument, "flow is not tabulated");
}
inline const FlowHandle::Conjugated& FlowHandle::as_conjugated() const {
    if (const auto* p = std::get_if<Conjugated>(&node_->v)) return *p;
    throw Error(ErrorKind::InvalidArgument, "flow is not conjugated");
}

// Defined in dyson.hpp: u_t^P of the base flow by the chosen method.
inline Matrix perturbation_cocycle(const FlowHandle& base, const Matrix& p, double t, const PerturbOptions& options);

namespace detail {

inline SuperOp interpolate_tabulated(const FlowHandle::Tabulated& tab, double t) {
    const auto& ts = tab.times;
    if (t < ts.front() || t > ts.back())
        throw Error(ErrorKind::OutOfRange, "tabulated flow evaluated at t = " + std::to_string(t) + " outside [" +
                                               std::to_string(ts.front()) + ", " + std::to_string(ts.back()) + "]");
    auto hi = std::lower_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(hi - ts.begin());
    if (*hi == t) return tab.superops[k];
    const double lam = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return SuperOp(tab.superops[k].dim, (1.0 - lam) * tab.superops[k - 1].matrix + lam * tab.superops[k].matrix);
}

}  // namespace detail

inline Matrix eval_flow(const FlowHandle& flow, double t, const Matrix& a);

inline SuperOp flow_superoperator(const FlowHandle& flow, double t) {
    switch (flow.kind()) {
        case FlowHandle::Kind::Inner: {
            const Matrix& g = flow.as_inner().generator;
            return sandwich(matrix_exponential(t * g), matrix_exponential(-t * g));
        }
        case FlowHandle::Kind::Perturbed: {
            const auto& p = flow.as_perturbed();
            const Matrix u = perturbation_cocycle(p.base, p.perturbation, t, p.options);
            return compose(sandwich(u, u.inverse()), flow_superoperator(p.base, t));
        }
        case FlowHandle::Kind::Tabulated: return detail::interpolate_tabulated(flow.as_tabulated(), t);
        case FlowHandle::Kind::Conjugated: {
            const auto& c = flow.as_conjugated();
            return compose(c.sigma, compose(flow_superoperator(c.base, t), c.sigma_inv));
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown flow kind");
}

inline Matrix eval_flow(const FlowHandle& flow, double t, const Matrix& a) {
    require_same_dim(a, flow.dim(), "eval_flow");
    switch (flow.kind()) {
        case FlowHandle::Kind::Inner: {
            const Matrix& g = flow.as_inner().generator;
            return matrix_exponential(t * g) * a * matrix_exponential(-t * g);
        }
        case FlowHandle::Kind::Perturbed: {
            const auto& p = flow.as_perturbed();
            const Matrix u = perturbation_cocycle(p.base, p.perturbation, t, p.options);
            return u * eval_flow(p.base, t, a) * u.inverse();
        }
        case FlowHandle::Kind::Tabulated: return act(detail::interpolate_tabulated(flow.as_tabulated(), t), a);
        case FlowHandle::Kind::Conjugated: {
            const auto& c = flow.as_conjugated();
            return act(c.sigma, eval_flow(c.base, t, act(c.sigma_inv, a)));
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown flow kind");
}

// Inner flows extend to complex time: α_z(A) = e^{zG} A e^{−zG}.
inline Matrix eval_inner_complex(const FlowHandle& flow, Complex z, const Matrix& a) {
    if (!flow.is_inner()) throw Error(ErrorKind::NotInner, "complex-time evaluation needs an inner flow");
    const Matrix& g = flow.as_inner().generator;
    require_same_dim(a, flow.dim(), "eval_inner_complex");
    return matrix_exponential(z * g) * a * matrix_exponential(-z * g);
}

// (α_h − α_{−h})/2h refined once by Richardson with h/2. A third level at h/4
// detects cancellation: in the truncation regime successive differences shrink
// by ~4, under roundoff they grow.
inline SuperOp generator_superop(const FlowHandle& flow, double h_step) {
    if (!(h_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "generator_superop: h_step must be positive");
    auto central = [&](double h) {
        return SuperOp(flow.dim(), (flow_superoperator(flow, h).matrix - flow_superoperator(flow, -h).matrix) / (2.0 * h));
    };
    const SuperOp d1 = central(h_step);
    const SuperOp d2 = central(h_step / 2.0);
    const SuperOp d4 = central(h_step / 4.0);
    const double e1 = (d1.matrix - d2.matrix).norm();
    const double e2 = (d2.matrix - d4.matrix).norm();
    const double scale = 1.0 + d2.matrix.norm();
    if (e2 > 2.0 * e1 && e2 > 1e-11 * scale)
        throw Error(ErrorKind::StepTooSmall, "generator_superop: refinement increased the difference (" +
                                                 std::to_string(e1) + " -> " + std::to_string(e2) + "), h_step too small");
    return SuperOp(flow.dim(), (4.0 * d2.matrix - d1.matrix) / 3.0);
}

// Exact generator where the flow structure gives it.
inline SuperOp exact_generator(const FlowHandle& flow) {
    switch (flow.kind()) {
        case FlowHandle::Kind::Inner: return ad(flow.as_inner().generator);
        case FlowHandle::Kind::Perturbed: {
            const auto& p = flow.as_perturbed();
            return exact_generator(p.base) + kI * ad(p.perturbation);
        }
        case FlowHandle::Kind::Conjugated: {
            const auto& c = flow.as_conjugated();
            return compose(c.sigma, compose(exact_generator(c.base), c.sigma_inv));
        }
        case FlowHandle::Kind::Tabulated: break;
    }
    throw Error(ErrorKind::InvalidArgument, "tabulated flows have no exact generator");
}

namespace detail {

// Logarithmic norm μ(D) = λ_max((D + D†)/2) for the Euclidean norm on vec,
// i.e. the Frobenius norm on elements: ‖e^{τD}‖ ≤ e^{τ μ(D)} for τ ≥ 0.
inline double log_norm(const Matrix& d) {
    const Matrix herm = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(herm, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

}  // namespace detail

// Fits ‖α_t‖ ≤ M e^{ξ|t|} (frobenius_induced) on the grid:
// ξ = max_{t≠0} log‖α_t‖/|t| clipped at 0, plus 1e-6; M = max(1, ‖α_t‖e^{−ξ|t|}).
// Between neighbouring grid points M additionally covers the growth allowed by
// the generator's logarithmic norm, so the bound also holds off-grid inside the
// grid's hull (tabulated flows: grid points only).
inline GrowthBound growth_bound(const FlowHandle& flow, std::vector<double> grid) {
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "growth_bound: empty grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> norms(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        norms[k] = superop_norm(flow_superoperator(flow, grid[k]), SuperOpNormKind::FrobeniusInduced);

    double xi = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid[k] != 0.0) xi = std::max(xi, std::log(norms[k]) / std::abs(grid[k]));
    xi += 1e-6;

    double m = 1.0;
    for (std::size_t k = 0; k < grid.size(); ++k) m = std::max(m, norms[k] * std::exp(-xi * std::abs(grid[k])));

    if (flow.kind() != FlowHandle::Kind::Tabulated && grid.size() > 1) {
        const SuperOp gen = exact_generator(flow);
        const double mu_fwd = std::max(0.0, detail::log_norm(gen.matrix));
        const double mu_bwd = std::max(0.0, detail::log_norm(-gen.matrix));
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double a = grid[k], b = grid[k + 1];
            // left bound N_a e^{μ₊(t−a)}, right bound N_b e^{μ₋(b−t)}; their minimum peaks where they cross
            double cross = a;
            const double denom = mu_fwd + mu_bwd;
            if (denom > 0.0) {
                cross = (std::log(norms[k + 1] / norms[k]) + mu_fwd * a + mu_bwd * b) / denom;
                cross = std::clamp(cross, a, b);
            }
            const double peak = std::min(norms[k] * std::exp(mu_fwd * (cross - a)), norms[k + 1] * std::exp(mu_bwd * (b - cross)));
            const double nearest = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
            m = std::max(m, peak * std::exp(-xi * nearest));
        }
    }
    return GrowthBound{m, xi};
}

// Uniform grid helper: count+1 points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> g(static_cast<std::size_t>(count) + 1);
    for (int k = 0; k <= count; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / count;
    return g;
}

}  // namespace flowlab

#include "flowlab/dyson.hpp"
