// randomized property sweeps over every module, with a coverage
// manifest of the operations each sweep exercises

#pragma once

#include "flowlab/algebra.hpp"
#include "flowlab/cocycle_tools.hpp"
#include "flowlab/core.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/expm.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/inner_solver.hpp"
#include "flowlab/random.hpp"
#include "flowlab/report.hpp"
#include "flowlab/scenario.hpp"
#include "flowlab/smoothing.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace flowlab {

struct VerifyLevel {
    std::string name;
    int max_dim = 3;
    int cases = 50;
};

inline VerifyLevel verify_level(const std::string& name) {
    if (name == "quick") return {"quick", 3, 50};
    if (name == "full") return {"full", 6, 1000};
    throw Error(ErrorKind::InvalidArgument, "unknown verify level \"" + name + "\" (expected quick or full)");
}

inline const std::vector<std::string> kOperations{
    "build_nest_algebra", "contains", "project", "commutant_basis", "norm", "superop_norm",
    "matrix_exponential", "eval_flow", "flow_superoperator", "growth_bound", "generator_superop",
    "dyson_cocycle", "ode_cocycle", "closed_form_cocycle", "perturbed_flow_eval", "cocycle_defect",
    "perturbation_distance_bounds", "automorphism_similarity", "inner_derivation_solve",
    "extract_flow_generator", "relate_flows", "conjugate_flow", "gaussian_weight_integral", "analytic_smooth",
    "smoothing_convergence_profile", "analyticity_check", "mollified_similarity", "similar_cocycle",
    "differentiability_estimate", "run_scenario", "verify_suite"};

struct PropertyOutcome {
    std::string module;
    std::string property;
    int cases = 0;
    int failures = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::string first_failure;

    bool pass() const { return failures == 0 && cases > 0; }
};

// One case's result: the residual compared against the tolerance, plus any
// side condition that must hold regardless of the residual.
struct Check {
    Check() = default;
    Check(double r, bool pass = true, std::string why = {}) : residual(r), ok(pass), note(std::move(why)) {}

    double residual = 0.0;
    bool ok = true;
    std::string note;
};

struct PropertyContext {
    Rng& rng;
    const VerifyLevel& level;
    std::filesystem::path scratch;  // for properties that write files
};

struct PropertyDef {
    std::string module;
    std::string property;
    double tolerance;
    std::vector<std::string> ops;
    int cases;  // 0: use level.cases
    std::function<Check(PropertyContext&, int case_index)> run;
};

namespace props {

inline int pick_dim(Rng& rng, int lo, int hi) { return uniform_int(rng, lo, std::max(lo, hi)); }

inline Matrix invertible_near_identity(Rng& rng, int n, double spread) {
    return Matrix::Identity(n, n) + scaled_to(random_matrix(rng, n), spread);
}

inline double grid_defect(const FlowHandle& flow, const std::function<Matrix(double)>& u, double half_width, int points) {
    std::map<double, Matrix> cache;
    auto at = [&](double t) -> const Matrix& {
        auto it = cache.find(t);
        if (it == cache.end()) it = cache.emplace(t, u(t)).first;
        return it->second;
    };
    const auto grid = linspace(-half_width, half_width, points - 1);
    double worst = 0.0;
    for (double s : grid)
        for (double t : grid) {
            const Matrix& ust = at(s + t);
            worst = std::max(worst, (ust - at(t) * eval_flow(flow, t, at(s))).norm());
            worst = std::max(worst, (ust - at(s) * eval_flow(flow, s, at(t))).norm());
        }
    return worst;
}

// algebra_core ---------------------------------------------------------------

inline Check project_laws(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 1, c.level.max_dim));
    const int n = spec.dim();
    const Matrix a = random_matrix(c.rng, n), b = random_matrix(c.rng, n);
    const Complex z(uniform(c.rng, -2, 2), uniform(c.rng, -2, 2));
    const Matrix pa = project(spec, a);
    double r = (project(spec, pa) - pa).norm();
    r = std::max(r, (project(spec, a + z * b) - pa - z * project(spec, b)).norm() / (1.0 + a.norm() + b.norm()));
    return {r, contains(spec, pa, 0.0), "projection left the algebra"};
}

inline Check pattern_closed(PropertyContext& c, int) {
    const auto nest = random_nest(c.rng, pick_dim(c.rng, 1, c.level.max_dim));
    const auto spec = build_nest_algebra(nest.dim(), nest.nest_dims());
    const int n = spec.dim();
    const auto& pattern = spec.pattern();
    for (const auto& [i, j] : pattern)
        for (const auto& [k, l] : pattern) {
            const Matrix prod = matrix_unit(n, i, j) * matrix_unit(n, k, l);
            if (prod.norm() != 0.0 && !contains(spec, prod, 0.0)) return {1.0, false, "product left the pattern"};
        }
    return {0.0, contains(spec, Matrix::Identity(n, n), 0.0), "identity not in algebra"};
}

inline Check commutant_scalar(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 1, c.level.max_dim));
    const auto basis = commutant_basis(spec);
    if (basis.size() != 1) return {std::numeric_limits<double>::infinity(), false, "commutant dimension " + std::to_string(basis.size())};
    const Matrix& x = basis.front();
    const int n = spec.dim();
    return {(x - (x.trace() / static_cast<double>(n)) * Matrix::Identity(n, n)).norm() / x.norm()};
}

inline Check norm_submultiplicative(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const Matrix a = random_matrix(c.rng, n), b = random_matrix(c.rng, n);
    double r = 0.0;
    for (auto kind : {NormKind::Frobenius, NormKind::Spectral}) {
        const double bound = norm(a, kind) * norm(b, kind);
        r = std::max(r, (norm(a * b, kind) - bound) / bound);
    }
    return {std::max(r, 0.0)};
}

inline Check sampled_norm_bracket(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const SuperOp s = sandwich(random_matrix(c.rng, n), random_matrix(c.rng, n)) + ad(random_matrix(c.rng, n));
    const double sampled = superop_norm(s, SuperOpNormKind::SpectralSampled);
    const double frob = superop_norm(s, SuperOpNormKind::FrobeniusInduced);
    const Matrix id = Matrix::Identity(n, n);
    const double at_identity = norm(act(s, id), NormKind::Spectral);
    const double over = (sampled - frob * std::sqrt(static_cast<double>(n))) / frob;
    const double under = (at_identity - sampled) / frob;
    return {std::max({over, under, 0.0})};
}

// flow_engine ----------------------------------------------------------------

inline Check expm_identities(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 1, c.level.max_dim);
    const Matrix g = scaled_to(random_matrix(c.rng, n), uniform(c.rng, 0.0, 3.0));
    const Matrix e = matrix_exponential(g);
    const Matrix half = matrix_exponential(0.5 * g);
    double r = (e * matrix_exponential(-g) - Matrix::Identity(n, n)).norm();
    r = std::max(r, (half * half - e).norm() / e.norm());
    // nilpotent generator: series terminates
    Matrix nil = Matrix::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) nil(k, k + 1) = Complex(uniform(c.rng, -1, 1), uniform(c.rng, -1, 1));
    Matrix exact = Matrix::Identity(n, n), term = Matrix::Identity(n, n);
    for (int k = 1; k < n; ++k) {
        term = term * nil / static_cast<double>(k);
        exact += term;
    }
    r = std::max(r, (matrix_exponential(nil) - exact).norm() / exact.norm());
    return {r};
}

inline Check group_law(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 2.0));
    const double s = uniform(c.rng, -2, 2), t = uniform(c.rng, -2, 2);
    const Matrix a = random_matrix(c.rng, n);
    double r = (eval_flow(flow, s, eval_flow(flow, t, a)) - eval_flow(flow, s + t, a)).norm() / a.norm();
    const Matrix via_superop = act(flow_superoperator(flow, t), a);
    r = std::max(r, (via_superop - eval_flow(flow, t, a)).norm() / a.norm());
    return {r};
}

inline Check automorphism_law(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 2.0));
    const double t = uniform(c.rng, -2, 2);
    const Matrix a = random_matrix(c.rng, n), b = random_matrix(c.rng, n);
    const Matrix at = eval_flow(flow, t, a), bt = eval_flow(flow, t, b);
    return {(eval_flow(flow, t, a * b) - at * bt).norm() / (at.norm() * bt.norm())};
}

inline Check generator_leibniz(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 2.0));
    const SuperOp d = generator_superop(flow, 1e-2);
    const Matrix a = random_matrix(c.rng, n), b = random_matrix(c.rng, n);
    const double scale = a.norm() * b.norm() * std::max(1.0, d.matrix.norm());
    return {(act(d, a * b) - act(d, a) * b - a * act(d, b)).norm() / scale};
}

inline Check growth_bound_refined(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    Matrix g = random_base_generator(c.rng, n, 2.0);
    if (uniform_int(c.rng, 0, 3) == 0) {  // strongly non-normal case
        g = Matrix::Zero(n, n);
        for (int k = 0; k + 1 < n; ++k) g(k, k + 1) = uniform(c.rng, 0.5, 1.5);
    }
    const FlowHandle flow = FlowHandle::inner(g);
    const GrowthBound gb = growth_bound(flow, linspace(-2.0, 2.0, 40));
    double worst = 0.0;
    for (double t : linspace(-2.0, 2.0, 400)) {
        const double actual = superop_norm(flow_superoperator(flow, t), SuperOpNormKind::FrobeniusInduced);
        worst = std::max(worst, actual - gb.at(t));
    }
    return {std::max(worst, 0.0)};
}

inline Check nest_invariance(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, c.level.max_dim));
    const FlowHandle flow = FlowHandle::inner(random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 2.0)));
    const Matrix a = random_in_algebra(c.rng, spec, 1.0);
    const Matrix moved = eval_flow(flow, uniform(c.rng, -2, 2), a);
    return {off_pattern_magnitude(spec, moved) / moved.norm(), contains(spec, moved, 1e-9), "flow left the algebra"};
}

// dyson_perturbation ---------------------------------------------------------

struct PerturbCase {
    FlowHandle flow;
    Matrix h;
    Matrix p;
};

inline PerturbCase perturb_case(Rng& rng, int max_dim) {
    const int n = pick_dim(rng, 2, std::min(5, max_dim));
    const Matrix g = random_base_generator(rng, n);
    return {FlowHandle::inner(g), Matrix(-kI * g), random_perturbation(rng, n)};
}

inline Check method_agreement(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const GrowthBound gb = growth_bound(pc.flow, linspace(-2.0, 2.0, 40));
    const double t = uniform(c.rng, -2, 2);
    const Matrix dy = dyson_cocycle(pc.flow, pc.p, t, 20, 32, gb).u;
    const Matrix ode = ode_cocycle(pc.flow, pc.p, t, 2000);
    const Matrix cf = closed_form_cocycle(pc.h, pc.p, t);
    return {std::max({(dy - ode).norm(), (dy - cf).norm(), (ode - cf).norm()})};
}

inline Check cocycle_law(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const double ode = grid_defect(pc.flow, [&](double t) { return ode_cocycle(pc.flow, pc.p, t, 2000); }, 2.0, 9);
    const double cf = grid_defect(pc.flow, [&](double t) { return closed_form_cocycle(pc.h, pc.p, t); }, 2.0, 9);
    // Dyson at order 20 is checked where every argument stays in [−2, 2].
    const CocycleHandle dy = CocycleHandle::dyson(pc.flow, pc.p, 20, 32);
    double dyson = 0.0;
    for (double s : linspace(-1.0, 1.0, 4))
        for (double t : linspace(-1.0, 1.0, 4)) dyson = std::max(dyson, cocycle_defect(pc.flow, dy, s, t).max());
    return {std::max({ode, cf, dyson})};
}

inline Check distance_bound(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const GrowthBound gb = growth_bound(pc.flow, linspace(-2.0, 2.0, 40));
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto b = perturbation_distance_bounds(pc.flow, pc.p, uniform(c.rng, -2, 2), gb);
        worst = std::max(worst, b.lhs_cocycle - b.rhs);
    }
    return {std::max(worst, 0.0)};
}

inline Check derivative_at_zero(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const int n = pc.flow.dim();
    const Matrix id = Matrix::Identity(n, n);
    const double h = 1e-4;
    auto slope = [&](double step) { return Matrix((ode_cocycle(pc.flow, pc.p, step, 200) - id) / step); };
    const Matrix richardson = 2.0 * slope(h / 2) - slope(h);
    return {(richardson - kI * pc.p).norm()};
}

inline Check generator_shift(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const FlowHandle pert = FlowHandle::perturbed(pc.flow, pc.p, {});
    const SuperOp shift = generator_superop(pert, 5e-3) - generator_superop(pc.flow, 5e-3);
    return {(shift - kI * ad(pc.p)).matrix.norm()};
}

inline Check perturbed_flow_closed_form(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const int n = pc.flow.dim();
    const double t = uniform(c.rng, -2, 2);
    const Matrix b = random_matrix(c.rng, n);
    // Ad e^{t(G + iP)} is the perturbed flow of the inner flow Ad e^{tG}
    const Matrix g = pc.flow.as_inner().generator + kI * pc.p;
    const Matrix expected = matrix_exponential(t * g) * b * matrix_exponential(-t * g);
    double r = 0.0;
    for (auto m : {PerturbMethod::Ode, PerturbMethod::ClosedForm})
        r = std::max(r, (perturbed_flow_eval(pc.flow, pc.p, t, b, m) - expected).norm() / expected.norm());
    return {r};
}

inline Check nest_preservation(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, std::min(5, c.level.max_dim)));
    const FlowHandle flow = FlowHandle::inner(random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 1.5)));
    const Matrix p = random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 1.5));
    const Matrix b = random_in_algebra(c.rng, spec, 1.0);
    const double t = uniform(c.rng, -2, 2);
    const Matrix u = ode_cocycle(flow, p, t, 2000);
    const Matrix moved = perturbed_flow_eval(flow, p, t, b, PerturbMethod::Ode);
    const double r = std::max(off_pattern_magnitude(spec, u) / u.norm(), off_pattern_magnitude(spec, moved) / moved.norm());
    return {r, contains(spec, u, 1e-9) && contains(spec, moved, 1e-9), "left the algebra"};
}

// inner_solver ---------------------------------------------------------------

inline Check similarity_bound(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, c.level.max_dim));
    const Matrix x = random_in_algebra(c.rng, spec, uniform(c.rng, 0.01, 0.3));
    const SuperOp sigma = sandwich(matrix_exponential(x), matrix_exponential(-x));
    const SimilaritySolution sol = automorphism_similarity(sigma, spec);
    if (!sol.bound_check) return {sol.residual, false, "distance to identity not below 1"};
    return {sol.residual, sol.bound_check->lhs <= sol.bound_check->rhs, "scaled ‖T − 1‖ exceeded 4‖σ − id‖"};
}

inline Check derivations_inner(PropertyContext& c, int) {
    static thread_local std::map<std::string, std::vector<SuperOp>> bases;
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, std::min(4, c.level.max_dim)));
    auto it = bases.find(spec.describe());
    if (it == bases.end()) it = bases.emplace(spec.describe(), derivation_space_basis(spec)).first;
    const SuperOp d = sample_derivation(it->second, c.rng);
    return {inner_derivation_solve(d, spec).residual};
}

inline Check extract_round_trip(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, c.level.max_dim));
    const int n = spec.dim();
    const Matrix p0 = random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 1.5));
    const DerivationSolution sol = extract_flow_generator(FlowHandle::inner(p0), spec);
    const Matrix trace_free = p0 - (p0.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
    return {(sol.P - trace_free).norm(), sol.flow_mismatch <= 1e-6, "flow reconstruction mismatch above 1e-6"};
}

inline Check relate_antisymmetry(PropertyContext& c, int) {
    const auto spec = random_nest(c.rng, pick_dim(c.rng, 2, c.level.max_dim));
    const FlowHandle a = FlowHandle::inner(random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 1.5)));
    const FlowHandle b = FlowHandle::inner(random_in_algebra(c.rng, spec, uniform(c.rng, 0.1, 1.5)));
    const DerivationSolution ab = relate_flows(a, b, spec), ba = relate_flows(b, a, spec);
    return {(ab.P + ba.P).norm(), ab.flow_mismatch <= 1e-6 && ba.flow_mismatch <= 1e-6,
            "reconjugation mismatch above 1e-6"};
}

inline Check conjugation_laws(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n));
    const Matrix s = invertible_near_identity(c.rng, n, 0.3);
    const Matrix s_inv = s.inverse();
    const FlowHandle as_inner = conjugate_flow(s, flow);
    const FlowHandle as_superop = conjugate_flow(sandwich(s, s_inv), sandwich(s_inv, s), flow);
    const double t = uniform(c.rng, -1, 1), u = uniform(c.rng, -1, 1);
    const Matrix a = random_matrix(c.rng, n);
    double r = (eval_flow(as_inner, t, a) - eval_flow(as_superop, t, a)).norm() / a.norm();
    r = std::max(r, (eval_flow(as_superop, t, eval_flow(as_superop, u, a)) - eval_flow(as_superop, t + u, a)).norm() / a.norm());
    return {r};
}

// smoothing ------------------------------------------------------------------

inline Check weight_integral_oracle(PropertyContext& c, int) {
    const double n = std::exp(uniform(c.rng, std::log(0.5), std::log(100.0)));
    const double xi = uniform(c.rng, -3, 3);
    const double closed = gaussian_weight_integral(n, xi);
    return {std::abs(gaussian_weight_integral_quadrature(n, xi) - closed) / closed};
}

inline Check smoothing_linearity(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 2.0));
    const Matrix a = random_matrix(c.rng, n), b = random_matrix(c.rng, n);
    const double m = uniform(c.rng, 1.0, 100.0), xi = uniform(c.rng, -1, 1);
    const Matrix sum = analytic_smooth(flow, a + b, m, xi).smoothed;
    return {(sum - analytic_smooth(flow, a, m, xi).smoothed - analytic_smooth(flow, b, m, xi).smoothed).norm() / (a.norm() + b.norm())};
}

// ξ = 0 branch on unitary flows (the only ones whose certified exponent is 0);
// ξ > 0 branch on near-unitary flows with the certified exponent as mollifier ξ.
inline Check smoothing_norm_bound(PropertyContext& c, int index) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const double m = std::exp(uniform(c.rng, std::log(1.0), std::log(100.0)));
    const double reach = detail::kHermiteCutoff / std::sqrt(m) + 2.0;
    const Matrix a = random_matrix(c.rng, n);
    if (index % 2 == 0) {
        const FlowHandle flow = FlowHandle::inner(kI * scaled_to(random_hermitian(c.rng, n), uniform(c.rng, 0.1, 2.0)));
        const GrowthBound gb = growth_bound(flow, linspace(-reach, reach, 80));
        const double an = analytic_smooth(flow, a, m, 0.0).smoothed.norm();
        return {std::max(0.0, an / (gb.M * a.norm()) - 1.0)};
    }
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 1.0));
    const GrowthBound gb = growth_bound(flow, linspace(-reach, reach, 80));
    const double xi = std::min(gb.xi, std::sqrt(m));
    const double an = analytic_smooth(flow, a, m, xi).smoothed.norm();
    return {std::max(0.0, an / (2.0 * gb.M * std::exp(xi * xi / m) * a.norm()) - 1.0)};
}

inline Check smoothing_convergence(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, std::min(4, c.level.max_dim));
    const Matrix g = scaled_to(random_matrix(c.rng, n), uniform(c.rng, 0.1, 2.0));
    const Matrix a = random_matrix(c.rng, n);
    const auto rows = smoothing_convergence_profile(FlowHandle::inner(g), a, {1e4}, 0.0);
    return {rows.front().diff_frobenius / a.norm()};
}

inline Check intertwining(PropertyContext& c, int) {
    const int n = pick_dim(c.rng, 2, c.level.max_dim);
    const FlowHandle flow = FlowHandle::inner(random_base_generator(c.rng, n, 1.5));
    const Matrix a = random_matrix(c.rng, n);
    const double m = uniform(c.rng, 4.0, 100.0);
    const SmoothingResult sm = analytic_smooth(flow, a, m, 0.0);
    return {analyticity_check(flow, sm, a, Complex(uniform(c.rng, -1, 1), 0.0), 4) / a.norm()};
}

// cocycle_tools --------------------------------------------------------------

inline Check similar_cocycle_law(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const CocycleHandle u = CocycleHandle::closed_form(pc.h, pc.p);
    const Matrix w = invertible_near_identity(c.rng, pc.flow.dim(), 0.3);
    const CocycleHandle v = similar_cocycle(w, u, pc.flow);
    const double defect = grid_defect(pc.flow, [&](double t) { return v.eval(t); }, 2.0, 9);
    const double t = uniform(c.rng, -2, 2);
    const double round_trip = (w * v.eval(t) * eval_flow(pc.flow, t, w.inverse()) - u.eval(t)).norm();
    return {defect, round_trip <= 1e-9, "w v α(w⁻¹) round trip above 1e-9"};
}

inline Check rough_decomposition(PropertyContext& c, int) {
    const auto rc = make_rough_cocycle(c.rng, pick_dim(c.rng, 2, std::min(4, c.level.max_dim)));
    const std::vector<double> h_list{0.125, 0.0625, 0.03125, 0.015625};
    const Matrix w = mollified_similarity(rc.u, 20.0);
    const CocycleHandle v = similar_cocycle(w, rc.u, rc.flow);
    const Matrix w_inv = w.inverse();
    double defect = 0.0, round_trip = 0.0;
    for (double s : linspace(-1.0, 1.0, 4))
        for (double t : linspace(-1.0, 1.0, 4)) defect = std::max(defect, cocycle_defect(rc.flow, v, s, t).max());
    for (double t : linspace(-1.0, 1.0, 8))
        round_trip = std::max(round_trip, (w * v.eval(t) * eval_flow(rc.flow, t, w_inv) - rc.u.eval(t)).norm());
    const double stab_u = differentiability_estimate(rc.u, 0.0, h_list).stability;
    const double stab_v = differentiability_estimate(v, 0.0, h_list).stability;
    const bool ok = stab_v <= stab_u / 10.0 && round_trip <= 1e-9;
    return {defect, ok, "stability " + format_number(stab_v) + " vs " + format_number(stab_u) + ", round trip " + format_number(round_trip)};
}

inline Check similarity_threshold(PropertyContext& c, int) {
    const auto rc = make_rough_cocycle(c.rng, pick_dim(c.rng, 2, std::min(4, c.level.max_dim)));
    const ThresholdSearch search = similarity_threshold_search(rc.u, 0.01, 4.0, 65536.0);
    return {search.found ? search.norm_w_minus_1 : std::numeric_limits<double>::infinity(), search.found,
            "no n up to 65536 brought ‖w − 1‖ below 0.01"};
}

inline Check loop_closure(PropertyContext& c, int) {
    const auto pc = perturb_case(c.rng, c.level.max_dim);
    const CocycleHandle u = CocycleHandle::closed_form(pc.h, pc.p);
    const CocycleHandle v = similar_cocycle(invertible_near_identity(c.rng, pc.flow.dim(), 0.3), u, pc.flow);
    const Matrix slope = differentiability_estimate(v, 0.0, {4e-4, 2e-4, 1e-4}).derivative;
    const Matrix p0 = -kI * slope;  // slope = iP₀
    double worst = 0.0;
    for (double t : {-1.0, -0.5, 0.5, 1.0}) worst = std::max(worst, (ode_cocycle(pc.flow, p0, t, 2000) - v.eval(t)).norm());
    return {worst};
}

// cli_harness ----------------------------------------------------------------

inline const char* kSelfCheckScenario = R"({
  "name": "self_check",
  "seed": 3,
  "algebra": {"dim": 2, "nest_dims": [0, 1, 2]},
  "flow": {"type": "inner", "generator": [[[0, 1], 0], [0, 0]]},
  "perturbation": [[0, 1], [0, 0]],
  "time_grid": [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2],
  "element": [[0, 1], [0, 0]],
  "smoothing": {"n_list": [1, 10, 100, 1000]},
  "relate": {"flow": {"type": "inner", "generator": [[[0, -0.5], 0.3], [0, [0, 0.2]]]}},
  "decompose": {"n_list": [20]},
  "tasks": ["perturb", "verify_cocycle", "bounds", "extract", "relate", "smooth", "decompose", "suite"]
})";

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the built-in scenario twice and compares every output byte; also checks
// CSV headers against the documented columns.
inline Check scenario_determinism(PropertyContext& c, int) {
    const Scenario sc = parse_scenario(kSelfCheckScenario);
    const auto dir_a = c.scratch / "scenario_a", dir_b = c.scratch / "scenario_b";
    const Report ra = run_scenario(sc, dir_a);
    const Report rb = run_scenario(sc, dir_b);
    const std::map<std::string, const std::vector<std::string>*> headers{
        {"perturb", &csv_columns::kCocycle}, {"verify_cocycle", &csv_columns::kCocycle}, {"bounds", &csv_columns::kCocycle},
        {"extract", &csv_columns::kInner},   {"relate", &csv_columns::kInner},           {"suite", &csv_columns::kInner},
        {"smooth", &csv_columns::kSmooth},   {"decompose", &csv_columns::kDecompose}};
    double worst = 0.0;
    for (const auto& t : ra.tasks) worst = std::max(worst, t.max_residual);
    for (const auto& [task, cols] : headers) {
        const std::string a = slurp(dir_a / (task + ".csv"));
        if (a != slurp(dir_b / (task + ".csv"))) return {worst, false, task + ".csv differs between runs"};
        std::string expected;
        for (std::size_t k = 0; k < cols->size(); ++k) expected += (k ? "," : "") + (*cols)[k];
        if (a.substr(0, a.find('\n')) != expected) return {worst, false, task + ".csv header mismatch"};
    }
    if (slurp(dir_a / "summary.json") != slurp(dir_b / "summary.json")) return {worst, false, "summary differs"};
    return {worst, ra.pass(), "self-check scenario failed"};
}

}  // namespace props

inline std::vector<PropertyDef> property_registry() {
    using namespace props;
    return {
        {"algebra_core", "project_linear_idempotent", 1e-13, {"project", "contains"}, 0, project_laws},
        {"algebra_core", "pattern_closed_under_products", 0.5, {"build_nest_algebra", "contains"}, 0, pattern_closed},
        {"algebra_core", "commutant_is_scalar", 1e-10, {"commutant_basis"}, 0, commutant_scalar},
        {"algebra_core", "norm_submultiplicative", 1e-13, {"norm"}, 0, norm_submultiplicative},
        {"algebra_core", "sampled_norm_bracket", 1e-12, {"superop_norm"}, 0, sampled_norm_bracket},
        {"flow_engine", "expm_identities", 1e-12, {"matrix_exponential"}, 0, expm_identities},
        {"flow_engine", "group_law", 1e-9, {"eval_flow", "flow_superoperator"}, 0, group_law},
        {"flow_engine", "automorphism_law", 1e-9, {"eval_flow"}, 0, automorphism_law},
        {"flow_engine", "generator_is_derivation", 1e-7, {"generator_superop"}, 0, generator_leibniz},
        {"flow_engine", "growth_bound_refined_grid", 1e-6, {"growth_bound", "flow_superoperator"}, 0, growth_bound_refined},
        {"flow_engine", "nest_invariance", 1e-9, {"eval_flow", "contains"}, 0, nest_invariance},
        {"dyson_perturbation", "method_agreement", 1e-7, {"dyson_cocycle", "ode_cocycle", "closed_form_cocycle"}, 0, method_agreement},
        {"dyson_perturbation", "cocycle_law_9x9", 1e-8, {"cocycle_defect", "ode_cocycle", "closed_form_cocycle", "dyson_cocycle"}, 0, cocycle_law},
        {"dyson_perturbation", "distance_bound", 0.0, {"perturbation_distance_bounds", "growth_bound"}, 0, distance_bound},
        {"dyson_perturbation", "derivative_at_zero", 1e-6, {"ode_cocycle"}, 0, derivative_at_zero},
        {"dyson_perturbation", "generator_shift", 1e-6, {"generator_superop", "perturbed_flow_eval"}, 0, generator_shift},
        {"dyson_perturbation", "perturbed_flow_closed_form", 1e-8, {"perturbed_flow_eval"}, 0, perturbed_flow_closed_form},
        {"dyson_perturbation", "nest_preservation", 1e-9, {"ode_cocycle", "perturbed_flow_eval", "contains"}, 0, nest_preservation},
        {"inner_solver", "similarity_bound", 1e-8, {"automorphism_similarity"}, 0, similarity_bound},
        {"inner_solver", "derivations_are_inner", 1e-8, {"inner_derivation_solve"}, 0, derivations_inner},
        {"inner_solver", "extract_round_trip", 1e-7, {"extract_flow_generator"}, 0, extract_round_trip},
        {"inner_solver", "relate_antisymmetry", 1e-8, {"relate_flows"}, 0, relate_antisymmetry},
        {"inner_solver", "conjugation_laws", 1e-10, {"conjugate_flow"}, 0, conjugation_laws},
        {"smoothing", "weight_integral_oracle", 1e-12, {"gaussian_weight_integral"}, 0, weight_integral_oracle},
        {"smoothing", "linearity", 1e-10, {"analytic_smooth"}, 0, smoothing_linearity},
        {"smoothing", "norm_bound", 1e-9, {"analytic_smooth", "growth_bound"}, 0, smoothing_norm_bound},
        {"smoothing", "convergence_at_1e4", 0.01, {"smoothing_convergence_profile"}, 0, smoothing_convergence},
        {"smoothing", "intertwining", 1e-8, {"analyticity_check"}, 0, intertwining},
        {"cocycle_tools", "similar_cocycle_law", 1e-8, {"similar_cocycle"}, 0, similar_cocycle_law},
        {"cocycle_tools", "rough_decomposition", 1e-8, {"mollified_similarity", "similar_cocycle", "differentiability_estimate"}, 0, rough_decomposition},
        {"cocycle_tools", "similarity_threshold", 0.01, {"mollified_similarity"}, 10, similarity_threshold},
        {"cocycle_tools", "loop_closure", 1e-6, {"differentiability_estimate", "ode_cocycle"}, 0, loop_closure},
        {"cli_harness", "scenario_determinism", 1e-7, {"run_scenario"}, 1, scenario_determinism},
    };
}

inline PropertyOutcome run_property(const PropertyDef& def, std::uint64_t seed, std::size_t index, const VerifyLevel& level,
                                    const std::filesystem::path& scratch) {
    // Each property owns a stream derived from (seed, index) so sweeps stay
    // independent of one another.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    Rng rng(seq);
    PropertyContext ctx{rng, level, scratch};
    PropertyOutcome out;
    out.module = def.module;
    out.property = def.property;
    out.tolerance = def.tolerance;
    const int cases = def.cases > 0 ? def.cases : level.cases;
    for (int k = 0; k < cases; ++k) {
        ++out.cases;
        Check check;
        try {
            check = def.run(ctx, k);
        } catch (const Error& e) {
            check = {std::numeric_limits<double>::infinity(), false, e.what()};
        }
        if (std::isfinite(check.residual)) out.max_residual = std::max(out.max_residual, check.residual);
        const bool pass = check.ok && check.residual <= def.tolerance;
        if (!pass) {
            if (out.failures == 0) {
                out.first_failure = "case " + std::to_string(k) + ": ";
                out.first_failure += check.ok ? "residual " + format_number(check.residual) : check.note;
            }
            ++out.failures;
        }
    }
    return out;
}

// Runs every property at the given level, writing verify.csv, coverage.json
// and summary.json into out_dir.
inline Report verify_suite(std::uint64_t seed, const VerifyLevel& level, const std::filesystem::path& out_dir,
                           bool timing = false) {
    std::filesystem::create_directories(out_dir);
    const auto scratch = out_dir / "scratch";
    std::filesystem::create_directories(scratch);

    Report report;
    report.scenario = "verify_" + level.name;
    report.seed = seed;
    Table table(csv_columns::kVerify);
    std::map<std::string, std::set<std::string>> coverage;
    for (const auto& op : kOperations) coverage[op];
    coverage["verify_suite"].insert("verify_suite");

    const auto registry = property_registry();
    for (std::size_t k = 0; k < registry.size(); ++k) {
        const auto& def = registry[k];
        const auto start = std::chrono::steady_clock::now();
        const PropertyOutcome po = run_property(def, seed, k, level, scratch);
        const std::string name = po.module + "/" + po.property;
        table.add_row({po.module, po.property, cell(po.cases), cell(po.failures), cell(po.max_residual), cell(po.tolerance),
                       cell(po.pass())});
        TaskOutcome outcome;
        outcome.task = name;
        outcome.pass = po.pass();
        outcome.max_residual = po.max_residual;
        outcome.csv = "verify.csv";
        outcome.error = po.first_failure;
        if (timing)
            outcome.wall_time_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report.tasks.push_back(std::move(outcome));
        for (const auto& op : def.ops) coverage[op].insert(name);
    }
    std::filesystem::remove_all(scratch);

    Json manifest;
    manifest["level"] = level.name;
    manifest["seed"] = seed;
    Json ops = Json::object();
    Json uncovered = Json::array();
    for (const auto& [op, users] : coverage) {
        ops[op] = Json(std::vector<std::string>(users.begin(), users.end()));
        if (users.empty()) uncovered.push_back(op);
    }
    manifest["operations"] = std::move(ops);
    manifest["uncovered"] = uncovered;
    write_file_atomic(out_dir / "verify.csv", table.to_csv());
    write_file_atomic(out_dir / "coverage.json", manifest.dump(2) + "\n");

    report.extra["level"] = level.name;
    report.extra["coverage"] = "coverage.json";
    report.extra["uncovered_operations"] = uncovered;
    write_summary(report, out_dir);
    return report;
}

}  // namespace flowlab
