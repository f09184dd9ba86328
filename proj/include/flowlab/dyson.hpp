// the perturbation cocycle u_t^P (time-ordered series, RK4, closed
// form), cocycle handles, cocycle defects and the perturbation distance bounds

#pragma once

#include "flowlab/flow.hpp"
#include "flowlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace flowlab {

namespace detail {

// Walks s ↦ α_s(P) along s = start + k·step. Inner flows propagate e^{sG} by
// repeated multiplication, refreshed periodically from a direct exponential.
class OrbitStepper {
public:
    OrbitStepper(const FlowHandle& flow, const Matrix& p, double start, double step)
        : flow_(flow), p_(p), start_(start), step_(step) {
        if (flow_.is_inner()) {
            g_ = flow_.as_inner().generator;
            fwd_step_ = matrix_exponential(step_ * g_);
            bwd_step_ = matrix_exponential(-step_ * g_);
            reset();
        }
    }

    Matrix current() const {
        if (flow_.is_inner()) return fwd_ * p_ * bwd_;
        return eval_flow(flow_, start_ + static_cast<double>(index_) * step_, p_);
    }

    void advance() {
        ++index_;
        if (!flow_.is_inner()) return;
        if (index_ % kRefresh == 0) {
            reset();
        } else {
            fwd_ = fwd_ * fwd_step_;
            bwd_ = bwd_step_ * bwd_;
        }
    }

private:
    static constexpr long kRefresh = 64;

    void reset() {
        const double s = start_ + static_cast<double>(index_) * step_;
        fwd_ = matrix_exponential(s * g_);
        bwd_ = matrix_exponential(-s * g_);
    }

    const FlowHandle& flow_;
    const Matrix& p_;
    double start_;
    double step_;
    long index_ = 0;
    Matrix g_, fwd_step_, bwd_step_, fwd_, bwd_;
};

// Σ_{k>order} x^k/k!
inline double exponential_tail(double x, int order) {
    if (x <= 0.0) return 0.0;
    double log_term = (order + 1) * std::log(x) - std::lgamma(order + 2.0);
    double sum = 0.0;
    for (int k = order + 1; k < order + 100000; ++k) {
        const double term = std::exp(log_term);
        sum += term;
        if (k > x && term <= 1e-17 * sum) break;
        log_term += std::log(x) - std::log(k + 1.0);
    }
    return sum;
}

}  // namespace detail

// u_t^P = e^{it(h+P)} e^{−ith} for the inner base flow Ad e^{ith}.
inline Matrix closed_form_cocycle(const Matrix& h, const Matrix& p, double t) {
    require_same_dim(p, static_cast<int>(h.rows()), "closed_form_cocycle");
    return matrix_exponential((kI * t) * (h + p)) * matrix_exponential((-kI * t) * h);
}

// Classical RK4 for du/dt = i u α_t(P), u₀ = 1, with `steps` uniform steps on [0, t].
inline Matrix ode_cocycle(const FlowHandle& flow, const Matrix& p, double t, int steps) {
    require_same_dim(p, flow.dim(), "ode_cocycle");
    if (steps < 1) throw Error(ErrorKind::InvalidArgument, "ode_cocycle: steps must be >= 1");
    const int n = flow.dim();
    Matrix u = Matrix::Identity(n, n);
    if (t == 0.0) return u;
    const double h = t / steps;
    detail::OrbitStepper orbit(flow, p, 0.0, h / 2.0);
    Matrix q0 = kI * orbit.current();
    for (int k = 0; k < steps; ++k) {
        orbit.advance();
        const Matrix qm = kI * orbit.current();
        orbit.advance();
        const Matrix q1 = kI * orbit.current();
        const Matrix k1 = u * q0;
        const Matrix k2 = (u + (h / 2.0) * k1) * qm;
        const Matrix k3 = (u + (h / 2.0) * k2) * qm;
        const Matrix k4 = (u + h * k3) * q1;
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        q0 = q1;
    }
    return u;
}

struct DysonResult {
    Matrix u;
    int truncation_order = 0;
    double tail_bound = 0.0;
    double quadrature_budget = 0.0;
    int nodes_used = 0;  // Gauss–Legendre nodes per panel in the returned sum
};

namespace detail {

// Partial Dyson sum through `order`: T_n(t) = ∫₀ᵗ T_{n−1}(s) iα_s(P) ds,
// collocated on composite Gauss–Legendre panels over τ = s/t ∈ [0, 1].
inline Matrix dyson_partial_sum(const FlowHandle& flow, const Matrix& p, double t, int order, int nodes, int panels,
                                double divergence_cap) {
    const int n = flow.dim();
    const quad::Rule gl = quad::gauss_legendre(nodes);
    const Eigen::MatrixXd cumulative = quad::cumulative_integration_matrix(gl);
    const double width = 1.0 / panels;

    const std::size_t total = static_cast<std::size_t>(panels) * static_cast<std::size_t>(nodes);
    std::vector<Matrix> q(total);
    for (int pi = 0; pi < panels; ++pi)
        for (int j = 0; j < nodes; ++j) {
            const double tau = width * (pi + 0.5 * (gl.nodes[static_cast<std::size_t>(j)] + 1.0));
            q[static_cast<std::size_t>(pi * nodes + j)] = (kI * t) * eval_flow(flow, t * tau, p);
        }

    Matrix u = Matrix::Identity(n, n);
    std::vector<Matrix> prev(total, Matrix::Identity(n, n));
    std::vector<Matrix> f(total);
    std::vector<Matrix> cur(total);
    for (int level = 1; level <= order; ++level) {
        for (std::size_t k = 0; k < total; ++k) f[k] = prev[k] * q[k];
        Matrix running = Matrix::Zero(n, n);
        for (int pi = 0; pi < panels; ++pi) {
            const std::size_t base = static_cast<std::size_t>(pi * nodes);
            for (int k = 0; k < nodes; ++k) {
                Matrix acc = Matrix::Zero(n, n);
                for (int l = 0; l < nodes; ++l) acc += cumulative(k, l) * f[base + static_cast<std::size_t>(l)];
                cur[base + static_cast<std::size_t>(k)] = running + (width / 2.0) * acc;
            }
            Matrix full = Matrix::Zero(n, n);
            for (int l = 0; l < nodes; ++l) full += gl.weights[static_cast<std::size_t>(l)] * f[base + static_cast<std::size_t>(l)];
            running += (width / 2.0) * full;
        }
        u += running;
        if (!(u.norm() <= divergence_cap))
            throw Error(ErrorKind::Divergence, "dyson_cocycle: partial sum exceeded e^{2|t| M_t ||P||} at order " +
                                                   std::to_string(level));
        std::swap(prev, cur);
    }
    return u;
}

}  // namespace detail

// Time-ordered series through `order`, with the tail certified by `bound`:
// ‖n-th term‖_F ≤ (|t| M_t ‖P‖_F)^n / n!, M_t = M e^{ξ|t|}. The quadrature
// budget is the change under node doubling, repeated until it is below 1e-10
// relative (or 256 nodes per panel).
inline DysonResult dyson_cocycle(const FlowHandle& flow, const Matrix& p, double t, int order, int nodes_per_level,
                                 const GrowthBound& bound) {
    require_same_dim(p, flow.dim(), "dyson_cocycle");
    if (order < 0) throw Error(ErrorKind::InvalidArgument, "dyson_cocycle: order must be >= 0");
    if (nodes_per_level < 2) throw Error(ErrorKind::InvalidArgument, "dyson_cocycle: nodes_per_level must be >= 2");
    const int n = flow.dim();
    DysonResult out;
    out.truncation_order = order;
    out.nodes_used = nodes_per_level;
    const double x = std::abs(t) * bound.at(t) * p.norm();
    out.tail_bound = detail::exponential_tail(x, order);
    if (t == 0.0 || order == 0 || p.norm() == 0.0) {
        out.u = Matrix::Identity(n, n);
        return out;
    }

    const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * std::abs(t))));
    const double cap = std::sqrt(static_cast<double>(n)) * std::exp(2.0 * x);
    int nodes = nodes_per_level;
    Matrix u = detail::dyson_partial_sum(flow, p, t, order, nodes, panels, cap);
    for (;;) {
        const int finer = 2 * nodes;
        Matrix refined = detail::dyson_partial_sum(flow, p, t, order, finer, panels, cap);
        out.quadrature_budget = (refined - u).norm();
        u = std::move(refined);
        nodes = finer;
        if (out.quadrature_budget <= 1e-10 * u.norm() || nodes >= 256) break;
    }
    out.u = std::move(u);
    out.nodes_used = nodes;
    return out;
}

// Certifies the growth bound on a 20-interval grid over [0, t] first.
inline DysonResult dyson_cocycle(const FlowHandle& flow, const Matrix& p, double t, int order = 20,
                                 int nodes_per_level = 32) {
    const GrowthBound gb = growth_bound(flow, linspace(std::min(0.0, t), std::max(0.0, t), 20));
    return dyson_cocycle(flow, p, t, order, nodes_per_level, gb);
}

inline Matrix perturbation_cocycle(const FlowHandle& base, const Matrix& p, double t, const PerturbOptions& options) {
    switch (options.method) {
        case PerturbMethod::Ode: return ode_cocycle(base, p, t, options.ode_steps);
        case PerturbMethod::Dyson: return dyson_cocycle(base, p, t, options.dyson_order, options.dyson_nodes).u;
        case PerturbMethod::ClosedForm: {
            const Matrix h = -kI * base.as_inner().generator;
            return closed_form_cocycle(h, p, t);
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown perturbation method");
}

// α_t^P(B) = u_t α_t(B) u_t⁻¹
inline Matrix perturbed_flow_eval(const FlowHandle& flow, const Matrix& p, double t, const Matrix& b,
                                  const PerturbOptions& options = {}) {
    const Matrix u = perturbation_cocycle(flow, p, t, options);
    Eigen::JacobiSVD<Matrix> svd(u);
    if (svd.singularValues().minCoeff() <= 1e-10)
        throw Error(ErrorKind::Singular, "perturbed_flow_eval: cocycle value is numerically singular");
    return u * eval_flow(flow, t, b) * u.inverse();
}

inline Matrix perturbed_flow_eval(const FlowHandle& flow, const Matrix& p, double t, const Matrix& b, PerturbMethod method) {
    PerturbOptions opt;
    opt.method = method;
    return perturbed_flow_eval(flow, p, t, b, opt);
}

// t ↦ u_t with provenance.
class CocycleHandle {
public:
    struct ClosedForm {
        Matrix h, p;
    };
    struct Dyson {
        FlowHandle flow;
        Matrix p;
        int order;
        int nodes;
    };
    struct Ode {
        FlowHandle flow;
        Matrix p;
        int steps;
    };
    struct Tabulated {
        std::vector<double> times;
        std::vector<Matrix> values;
    };
    struct Similar;

    enum class Kind { ClosedForm, Dyson, Ode, Tabulated, Similar };

    static CocycleHandle closed_form(Matrix h, Matrix p);
    static CocycleHandle dyson(FlowHandle flow, Matrix p, int order = 20, int nodes = 32);
    static CocycleHandle ode(FlowHandle flow, Matrix p, int steps = 2000);
    static CocycleHandle tabulated(std::vector<double> times, std::vector<Matrix> values);
    static CocycleHandle similar(Matrix w, CocycleHandle base, FlowHandle flow);
    static CocycleHandle from_perturbation(const FlowHandle& flow, const Matrix& p, const PerturbOptions& options);

    int dim() const noexcept { return dim_; }
    Kind kind() const;
    Matrix eval(double t) const;

    const Similar& as_similar() const;
    const Tabulated& as_tabulated() const;

private:
    struct Node;
    CocycleHandle(std::shared_ptr<const Node> node, int dim) : node_(std::move(node)), dim_(dim) {}
    std::shared_ptr<const Node> node_;
    int dim_ = 0;
};

// v_t = w⁻¹ u_t α_t(w)
struct CocycleHandle::Similar {
    Matrix w;
    Matrix w_inv;
    CocycleHandle base;
    FlowHandle flow;
};

struct CocycleHandle::Node {
    std::variant<ClosedForm, Dyson, Ode, Tabulated, Similar> v;
};

inline CocycleHandle CocycleHandle::closed_form(Matrix h, Matrix p) {
    require_same_dim(p, static_cast<int>(h.rows()), "closed_form cocycle");
    const int d = static_cast<int>(h.rows());
    return CocycleHandle(std::make_shared<const Node>(Node{ClosedForm{std::move(h), std::move(p)}}), d);
}

inline CocycleHandle CocycleHandle::dyson(FlowHandle flow, Matrix p, int order, int nodes) {
    require_same_dim(p, flow.dim(), "dyson cocycle");
    const int d = flow.dim();
    return CocycleHandle(std::make_shared<const Node>(Node{Dyson{std::move(flow), std::move(p), order, nodes}}), d);
}

inline CocycleHandle CocycleHandle::ode(FlowHandle flow, Matrix p, int steps) {
    require_same_dim(p, flow.dim(), "ode cocycle");
    const int d = flow.dim();
    return CocycleHandle(std::make_shared<const Node>(Node{Ode{std::move(flow), std::move(p), steps}}), d);
}

inline CocycleHandle CocycleHandle::tabulated(std::vector<double> times, std::vector<Matrix> values) {
    if (times.empty() || times.size() != values.size())
        throw Error(ErrorKind::InvalidArgument, "tabulated cocycle needs matching non-empty times and values");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw Error(ErrorKind::InvalidArgument, "tabulated cocycle times must increase");
    const int d = static_cast<int>(values.front().rows());
    for (const auto& v : values) require_same_dim(v, d, "tabulated cocycle");
    return CocycleHandle(std::make_shared<const Node>(Node{Tabulated{std::move(times), std::move(values)}}), d);
}

inline CocycleHandle CocycleHandle::similar(Matrix w, CocycleHandle base, FlowHandle flow) {
    require_same_dim(w, base.dim(), "similar cocycle");
    Eigen::JacobiSVD<Matrix> svd(w);
    if (svd.singularValues().minCoeff() <= 1e-12) throw Error(ErrorKind::Singular, "similar cocycle: w is singular");
    Matrix w_inv = w.inverse();
    const int d = base.dim();
    return CocycleHandle(
        std::make_shared<const Node>(Node{Similar{std::move(w), std::move(w_inv), std::move(base), std::move(flow)}}), d);
}

inline CocycleHandle CocycleHandle::from_perturbation(const FlowHandle& flow, const Matrix& p, const PerturbOptions& options) {
    switch (options.method) {
        case PerturbMethod::Ode: return ode(flow, p, options.ode_steps);
        case PerturbMethod::Dyson: return dyson(flow, p, options.dyson_order, options.dyson_nodes);
        case PerturbMethod::ClosedForm: return closed_form(-kI * flow.as_inner().generator, p);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown perturbation method");
}

inline CocycleHandle::Kind CocycleHandle::kind() const { return static_cast<Kind>(node_->v.index()); }

inline const CocycleHandle::Similar& CocycleHandle::as_similar() const {
    if (const auto* s = std::get_if<Similar>(&node_->v)) return *s;
    throw Error(ErrorKind::InvalidArgument, "cocycle is not a similarity transform");
}

inline const CocycleHandle::Tabulated& CocycleHandle::as_tabulated() const {
    if (const auto* s = std::get_if<Tabulated>(&node_->v)) return *s;
    throw Error(ErrorKind::InvalidArgument, "cocycle is not tabulated");
}

inline Matrix CocycleHandle::eval(double t) const {
    return std::visit(
        [t](const auto& c) -> Matrix {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ClosedForm>) {
                return closed_form_cocycle(c.h, c.p, t);
            } else if constexpr (std::is_same_v<T, Dyson>) {
                return dyson_cocycle(c.flow, c.p, t, c.order, c.nodes).u;
            } else if constexpr (std::is_same_v<T, Ode>) {
                return ode_cocycle(c.flow, c.p, t, c.steps);
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                const auto& ts = c.times;
                if (t < ts.front() || t > ts.back())
                    throw Error(ErrorKind::OutOfRange, "tabulated cocycle evaluated at t = " + std::to_string(t));
                auto hi = std::lower_bound(ts.begin(), ts.end(), t);
                const auto k = static_cast<std::size_t>(hi - ts.begin());
                if (*hi == t) return c.values[k];
                const double lam = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
                return (1.0 - lam) * c.values[k - 1] + lam * c.values[k];
            } else {
                return c.w_inv * c.base.eval(t) * eval_flow(c.flow, t, c.w);
            }
        },
        node_->v);
}

struct CocycleDefect {
    double t_first = 0.0;  // ‖u_{s+t} − u_t α_t(u_s)‖_F
    double s_first = 0.0;  // ‖u_{s+t} − u_s α_s(u_t)‖_F

    double max() const { return std::max(t_first, s_first); }
};

inline CocycleDefect cocycle_defect(const FlowHandle& flow, const CocycleHandle& u, double s, double t) {
    if (flow.dim() != u.dim()) throw Error(ErrorKind::DimensionMismatch, "cocycle_defect: flow/cocycle dimension mismatch");
    const Matrix us = u.eval(s);
    const Matrix ut = u.eval(t);
    const Matrix ust = u.eval(s + t);
    CocycleDefect d;
    d.t_first = (ust - ut * eval_flow(flow, t, us)).norm();
    d.s_first = (ust - us * eval_flow(flow, s, ut)).norm();
    return d;
}

struct DistanceBounds {
    double lhs_flow = 0.0;      // sup_{‖B‖_F=1} ‖α_t^P(B) − α_t(B)‖_F
    double lhs_cocycle = 0.0;   // ‖u_t^P − 1‖_F
    double rhs = 0.0;           // M e^{ξ|t|}(e^{M|t|‖P‖_F} − 1)
};

inline DistanceBounds perturbation_distance_bounds(const FlowHandle& flow, const Matrix& p, double t,
                                                   const GrowthBound& bound, const PerturbOptions& options = {}) {
    const int n = flow.dim();
    const Matrix u = perturbation_cocycle(flow, p, t, options);
    DistanceBounds out;
    out.lhs_cocycle = (u - Matrix::Identity(n, n)).norm();
    const SuperOp base = flow_superoperator(flow, t);
    const SuperOp pert = compose(sandwich(u, u.inverse()), base);
    out.lhs_flow = superop_norm(pert - base, SuperOpNormKind::FrobeniusInduced);
    out.rhs = bound.at(t) * std::expm1(bound.M * std::abs(t) * p.norm());
    return out;
}

}  // namespace flowlab
