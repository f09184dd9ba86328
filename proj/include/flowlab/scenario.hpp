// declarative JSON scenarios: parsing, task execution, reports

#pragma once

#include "flowlab/algebra.hpp"
#include "flowlab/cocycle_tools.hpp"
#include "flowlab/core.hpp"
#include "flowlab/dyson.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/inner_solver.hpp"
#include "flowlab/matrix_io.hpp"
#include "flowlab/random.hpp"
#include "flowlab/report.hpp"
#include "flowlab/smoothing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace flowlab {

inline const std::vector<std::string> kScenarioTasks{"perturb", "verify_cocycle", "bounds", "extract",
                                                     "relate",  "smooth",         "decompose", "suite"};

struct Tolerances {
    double agreement = 1e-7;       // pairwise cocycle discrepancy between methods
    double defect = 1e-8;          // cocycle law
    double residual = 1e-6;        // inner solver residuals
    double reconstruction = 1e-6;  // flow reconstruction at t ∈ {0.5, 1}
    double quadrature = 1e-8;      // smoothing quadrature estimate, relative to 1 + ‖A‖
    double roundtrip = 1e-9;       // w v_t α_t(w⁻¹) against u_t

    static const std::map<std::string, double Tolerances::*>& fields() {
        static const std::map<std::string, double Tolerances::*> f{
            {"agreement", &Tolerances::agreement},   {"defect", &Tolerances::defect},
            {"residual", &Tolerances::residual},     {"reconstruction", &Tolerances::reconstruction},
            {"quadrature", &Tolerances::quadrature}, {"roundtrip", &Tolerances::roundtrip}};
        return f;
    }
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    int dim = 0;
    std::vector<int> nest_dims;
    Json flow_json;
    std::optional<Matrix> perturbation;
    std::vector<double> time_grid;
    Tolerances tolerances;
    std::vector<std::string> tasks;
    PerturbOptions options;                 // method used by verify_cocycle, bounds, decompose
    std::vector<PerturbMethod> methods;     // perturb: empty means every applicable method
    std::optional<Matrix> element;          // smooth
    std::vector<double> smooth_n_list;      // smooth
    std::optional<double> smooth_xi;        // smooth; defaults to the certified growth exponent
    int smooth_nodes = 64;
    std::optional<Json> relate_flow_json;   // relate
    std::vector<double> decompose_n_list{10.0, 20.0, 40.0};
    std::vector<double> h_list{0.125, 0.0625, 0.03125, 0.015625};
    double h_step = 1e-2;                   // extract, relate

    NestAlgebraSpec spec() const { return NestAlgebraSpec(dim, nest_dims); }
};

namespace detail {

inline Error field_error(const std::string& field, const std::string& why) {
    return Error(ErrorKind::Parse, "field '" + field + "': " + why);
}

inline double number_field(const Json& j, const std::string& field) {
    if (!j.is_number()) throw field_error(field, "must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw field_error(field, "must be finite");
    return x;
}

inline std::vector<double> number_list(const Json& j, const std::string& field) {
    if (!j.is_array()) throw field_error(field, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number_field(j[k], field + "[" + std::to_string(k) + "]"));
    return out;
}

inline PerturbMethod parse_method(const Json& j, const std::string& field) {
    if (!j.is_string()) throw field_error(field, "must be one of \"dyson\", \"ode\", \"closed_form\"");
    const auto s = j.get<std::string>();
    if (s == "dyson") return PerturbMethod::Dyson;
    if (s == "ode") return PerturbMethod::Ode;
    if (s == "closed_form") return PerturbMethod::ClosedForm;
    throw field_error(field, "unknown method \"" + s + "\" (expected dyson, ode or closed_form)");
}

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw field_error(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

}  // namespace detail

// { "type": "inner", "generator": M } | { "type": "perturbed", "base": F, "P": M, "method": m }
inline FlowHandle flow_from_json(const Json& j, const std::string& field, int dim) {
    using detail::field_error;
    if (!j.is_object()) throw field_error(field, "flow description must be an object");
    if (!j.contains("type") || !j["type"].is_string()) throw field_error(field + ".type", "missing or not a string");
    const auto type = j["type"].get<std::string>();
    if (type == "inner") {
        detail::reject_unknown_keys(j, {"type", "generator"}, field);
        if (!j.contains("generator")) throw field_error(field + ".generator", "required for inner flows");
        Matrix g = matrix_from_json(j["generator"], field + ".generator");
        if (g.rows() != dim) throw field_error(field + ".generator", "dimension differs from algebra.dim");
        return FlowHandle::inner(std::move(g));
    }
    if (type == "perturbed") {
        detail::reject_unknown_keys(j, {"type", "base", "P", "method"}, field);
        if (!j.contains("base")) throw field_error(field + ".base", "required for perturbed flows");
        if (!j.contains("P")) throw field_error(field + ".P", "required for perturbed flows");
        FlowHandle base = flow_from_json(j["base"], field + ".base", dim);
        Matrix p = matrix_from_json(j["P"], field + ".P");
        if (p.rows() != dim) throw field_error(field + ".P", "dimension differs from algebra.dim");
        PerturbOptions opt;
        if (j.contains("method")) opt.method = detail::parse_method(j["method"], field + ".method");
        if (opt.method == PerturbMethod::ClosedForm && !base.is_inner())
            throw field_error(field + ".method", "closed_form needs an inner base flow");
        return FlowHandle::perturbed(std::move(base), std::move(p), opt);
    }
    throw field_error(field + ".type", "unknown flow type \"" + type + "\" (expected inner or perturbed)");
}

inline Scenario scenario_from_json(const Json& j) {
    using detail::field_error;
    if (!j.is_object()) throw field_error("<root>", "config must be a JSON object");
    detail::reject_unknown_keys(j,
                                {"name", "seed", "algebra", "flow", "perturbation", "time_grid", "tolerances", "tasks",
                                 "method", "methods", "element", "smoothing", "relate", "decompose", "h_list", "h_step"},
                                "");
    Scenario sc;
    if (!j.contains("name") || !j["name"].is_string()) throw field_error("name", "required string");
    sc.name = j["name"].get<std::string>();
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw field_error("seed", "must be a non-negative integer");
        sc.seed = j["seed"].get<std::uint64_t>();
    }

    if (!j.contains("algebra") || !j["algebra"].is_object()) throw field_error("algebra", "required object {dim, nest_dims}");
    const Json& alg = j["algebra"];
    detail::reject_unknown_keys(alg, {"dim", "nest_dims"}, "algebra");
    if (!alg.contains("dim") || !alg["dim"].is_number_integer()) throw field_error("algebra.dim", "required integer");
    sc.dim = alg["dim"].get<int>();
    if (sc.dim < 1 || sc.dim > 32) throw field_error("algebra.dim", "must be in [1, 32]");
    if (alg.contains("nest_dims")) {
        if (!alg["nest_dims"].is_array()) throw field_error("algebra.nest_dims", "must be an integer array");
        for (const auto& d : alg["nest_dims"]) {
            if (!d.is_number_integer()) throw field_error("algebra.nest_dims", "must be an integer array");
            sc.nest_dims.push_back(d.get<int>());
        }
    } else {
        sc.nest_dims = {0, sc.dim};
    }
    try {
        (void)sc.spec();
    } catch (const Error& e) {
        throw field_error("algebra.nest_dims", e.what());
    }

    if (!j.contains("flow")) throw field_error("flow", "required");
    sc.flow_json = j["flow"];
    (void)flow_from_json(sc.flow_json, "flow", sc.dim);

    if (j.contains("perturbation")) {
        sc.perturbation = matrix_from_json(j["perturbation"], "perturbation");
        if (sc.perturbation->rows() != sc.dim) throw field_error("perturbation", "dimension differs from algebra.dim");
    }

    if (j.contains("time_grid")) sc.time_grid = detail::number_list(j["time_grid"], "time_grid");
    for (std::size_t k = 1; k < sc.time_grid.size(); ++k)
        if (!(sc.time_grid[k] > sc.time_grid[k - 1]))
            throw field_error("time_grid", "must be sorted strictly ascending (entry " + std::to_string(k) + ")");

    if (j.contains("tolerances")) {
        if (!j["tolerances"].is_object()) throw field_error("tolerances", "must be an object of numbers");
        const auto& fields = Tolerances::fields();
        for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
            auto f = fields.find(it.key());
            if (f == fields.end()) throw field_error("tolerances." + it.key(), "unknown tolerance");
            const double v = detail::number_field(it.value(), "tolerances." + it.key());
            if (!(v > 0.0)) throw field_error("tolerances." + it.key(), "must be positive");
            sc.tolerances.*(f->second) = v;
        }
    }

    if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty())
        throw field_error("tasks", "required non-empty array of task names");
    for (std::size_t k = 0; k < j["tasks"].size(); ++k) {
        const Json& t = j["tasks"][k];
        const std::string where = "tasks[" + std::to_string(k) + "]";
        if (!t.is_string()) throw field_error(where, "must be a string");
        const auto name = t.get<std::string>();
        if (std::find(kScenarioTasks.begin(), kScenarioTasks.end(), name) == kScenarioTasks.end())
            throw field_error(where, "unknown task \"" + name + "\"");
        sc.tasks.push_back(name);
    }

    if (j.contains("method")) sc.options.method = detail::parse_method(j["method"], "method");
    if (j.contains("methods")) {
        if (!j["methods"].is_array()) throw field_error("methods", "must be an array");
        for (std::size_t k = 0; k < j["methods"].size(); ++k)
            sc.methods.push_back(detail::parse_method(j["methods"][k], "methods[" + std::to_string(k) + "]"));
    }
    if (j.contains("element")) {
        sc.element = matrix_from_json(j["element"], "element");
        if (sc.element->rows() != sc.dim) throw field_error("element", "dimension differs from algebra.dim");
    }
    if (j.contains("smoothing")) {
        const Json& s = j["smoothing"];
        if (!s.is_object()) throw field_error("smoothing", "must be an object");
        detail::reject_unknown_keys(s, {"n_list", "xi", "nodes"}, "smoothing");
        if (s.contains("n_list")) sc.smooth_n_list = detail::number_list(s["n_list"], "smoothing.n_list");
        if (s.contains("xi")) sc.smooth_xi = detail::number_field(s["xi"], "smoothing.xi");
        if (s.contains("nodes")) {
            if (!s["nodes"].is_number_integer() || s["nodes"].get<int>() < 8)
                throw field_error("smoothing.nodes", "must be an integer >= 8");
            sc.smooth_nodes = s["nodes"].get<int>();
        }
    }
    if (j.contains("relate")) {
        const Json& r = j["relate"];
        if (!r.is_object() || !r.contains("flow")) throw field_error("relate.flow", "required flow description");
        detail::reject_unknown_keys(r, {"flow"}, "relate");
        sc.relate_flow_json = r["flow"];
        (void)flow_from_json(*sc.relate_flow_json, "relate.flow", sc.dim);
    }
    if (j.contains("decompose")) {
        const Json& d = j["decompose"];
        if (!d.is_object()) throw field_error("decompose", "must be an object");
        detail::reject_unknown_keys(d, {"n_list"}, "decompose");
        if (d.contains("n_list")) sc.decompose_n_list = detail::number_list(d["n_list"], "decompose.n_list");
    }
    if (j.contains("h_list")) sc.h_list = detail::number_list(j["h_list"], "h_list");
    if (j.contains("h_step")) {
        sc.h_step = detail::number_field(j["h_step"], "h_step");
        if (!(sc.h_step > 0.0)) throw field_error("h_step", "must be positive");
    }

    // per-task requirements
    for (const auto& t : sc.tasks) {
        if (t == "perturb" || t == "verify_cocycle" || t == "bounds" || t == "decompose") {
            if (!sc.perturbation) throw field_error("perturbation", "required by task \"" + t + "\"");
            if (sc.time_grid.empty()) throw field_error("time_grid", "required by task \"" + t + "\"");
        }
        if (t == "smooth") {
            if (!sc.element) throw field_error("element", "required by task \"smooth\"");
            if (sc.smooth_n_list.empty()) throw field_error("smoothing.n_list", "required by task \"smooth\"");
            for (std::size_t k = 0; k < sc.smooth_n_list.size(); ++k) {
                if (!(sc.smooth_n_list[k] > 0.0)) throw field_error("smoothing.n_list", "entries must be positive");
                if (k > 0 && !(sc.smooth_n_list[k] > sc.smooth_n_list[k - 1]))
                    throw field_error("smoothing.n_list", "must be increasing");
            }
        }
        if (t == "relate" && !sc.relate_flow_json) throw field_error("relate.flow", "required by task \"relate\"");
        if (t == "decompose")
            for (double n : sc.decompose_n_list)
                if (!(n > 0.0)) throw field_error("decompose.n_list", "entries must be positive");
    }
    return sc;
}

// Parses text, reporting JSON syntax errors by line and column.
inline Scenario parse_scenario(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < stop; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Parse, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

struct TaskTable {
    Table table;
    bool pass = true;
    double max_residual = 0.0;
};

namespace tasks {

// Cached cocycle values per method, so that defects over the grid reuse evaluations.
class CocycleCache {
public:
    CocycleCache(const FlowHandle& flow, const Matrix& p, PerturbMethod method, const GrowthBound& bound)
        : flow_(flow), p_(p), method_(method), bound_(bound) {}

    const Matrix& at(double t) {
        auto it = values_.find(t);
        if (it != values_.end()) return it->second;
        Matrix u;
        switch (method_) {
            case PerturbMethod::Dyson: u = dyson_cocycle(flow_, p_, t, 20, 32, bound_).u; break;
            case PerturbMethod::Ode: u = ode_cocycle(flow_, p_, t, 2000); break;
            case PerturbMethod::ClosedForm: u = closed_form_cocycle(-kI * flow_.as_inner().generator, p_, t); break;
        }
        return values_.emplace(t, std::move(u)).first->second;
    }

private:
    const FlowHandle& flow_;
    const Matrix& p_;
    PerturbMethod method_;
    GrowthBound bound_;
    std::map<double, Matrix> values_;
};

inline GrowthBound scenario_bound(const FlowHandle& flow, const std::vector<double>& grid) {
    double reach = 0.0;
    for (double t : grid) reach = std::max(reach, std::abs(t));
    if (reach == 0.0) reach = 1.0;
    return growth_bound(flow, linspace(-reach, reach, 40));
}

// Rows for perturb / verify_cocycle / bounds. The defect at t is the max over s
// in the grid with s + t inside the grid's hull.
inline TaskTable cocycle_rows(const Scenario& sc, const std::string& task) {
    const FlowHandle flow = flow_from_json(sc.flow_json, "flow", sc.dim);
    const Matrix& p = *sc.perturbation;
    const GrowthBound gb = scenario_bound(flow, sc.time_grid);
    const double lo = sc.time_grid.front(), hi = sc.time_grid.back();

    std::vector<PerturbMethod> methods;
    if (task == "perturb") {
        methods = sc.methods;
        if (methods.empty()) {
            methods = {PerturbMethod::Dyson, PerturbMethod::Ode};
            if (flow.is_inner()) methods.push_back(PerturbMethod::ClosedForm);
        }
    } else {
        methods = {sc.options.method};
    }
    for (auto m : methods)
        if (m == PerturbMethod::ClosedForm && !flow.is_inner())
            throw Error(ErrorKind::InvalidArgument, "closed_form needs an inner flow");

    std::vector<CocycleCache> caches;
    for (auto m : methods) caches.emplace_back(flow, p, m, gb);

    TaskTable out{Table(csv_columns::kCocycle)};
    const Matrix id = Matrix::Identity(sc.dim, sc.dim);
    for (double t : sc.time_grid) {
        double spread = 0.0;
        for (std::size_t a = 0; a < caches.size(); ++a)
            for (std::size_t b = a + 1; b < caches.size(); ++b)
                spread = std::max(spread, (caches[a].at(t) - caches[b].at(t)).norm());
        for (std::size_t k = 0; k < methods.size(); ++k) {
            auto& cache = caches[k];
            const Matrix ut = cache.at(t);
            double defect = 0.0;
            for (double s : sc.time_grid) {
                if (s + t < lo || s + t > hi) continue;
                const Matrix us = cache.at(s);
                const Matrix ust = cache.at(s + t);
                defect = std::max(defect, (ust - ut * eval_flow(flow, t, us)).norm());
                defect = std::max(defect, (ust - us * eval_flow(flow, s, ut)).norm());
            }
            const double lhs = (ut - id).norm();
            const double rhs = gb.at(t) * std::expm1(gb.M * std::abs(t) * p.norm());
            bool pass = true;
            double residual = 0.0;
            if (task == "perturb") {
                pass = spread <= sc.tolerances.agreement;
                residual = spread;
            } else if (task == "verify_cocycle") {
                pass = defect <= sc.tolerances.defect;
                residual = defect;
            } else {
                pass = lhs <= rhs;
                residual = std::max(0.0, lhs - rhs);
            }
            out.pass = out.pass && pass;
            out.max_residual = std::max(out.max_residual, residual);
            out.table.add_row({cell(t), to_string(methods[k]), cell(ut.norm()), cell(defect), cell(lhs), cell(rhs), cell(pass)});
        }
    }
    return out;
}

inline TaskTable extract_rows(const Scenario& sc) {
    const FlowHandle flow = flow_from_json(sc.flow_json, "flow", sc.dim);
    const NestAlgebraSpec spec = sc.spec();
    const DerivationSolution sol = extract_flow_generator(flow, spec, sc.h_step);
    TaskTable out{Table(csv_columns::kInner)};
    const bool pass = sol.residual <= sc.tolerances.residual && sol.flow_mismatch <= sc.tolerances.reconstruction;
    out.table.add_row({spec.describe(), "extract_flow_generator", cell(sol.residual), cell(sol.flow_mismatch),
                       cell(sc.tolerances.reconstruction), sol.gauge, cell(pass)});
    out.pass = pass;
    out.max_residual = std::max(sol.residual, sol.flow_mismatch);
    return out;
}

inline TaskTable relate_rows(const Scenario& sc) {
    const FlowHandle a = flow_from_json(sc.flow_json, "flow", sc.dim);
    const FlowHandle b = flow_from_json(*sc.relate_flow_json, "relate.flow", sc.dim);
    const NestAlgebraSpec spec = sc.spec();
    const DerivationSolution ab = relate_flows(a, b, spec, sc.h_step);
    const DerivationSolution ba = relate_flows(b, a, spec, sc.h_step);
    TaskTable out{Table(csv_columns::kInner)};
    const bool pass_ab = ab.residual <= sc.tolerances.residual && ab.flow_mismatch <= sc.tolerances.reconstruction;
    out.table.add_row({spec.describe(), "relate_flows", cell(ab.residual), cell(ab.flow_mismatch),
                       cell(sc.tolerances.reconstruction), ab.gauge, cell(pass_ab)});
    const double anti = (ab.P + ba.P).norm();
    const bool pass_anti = anti <= 1e-8;
    out.table.add_row({spec.describe(), "relate_flows_antisymmetry", cell(anti), cell(anti), cell(1e-8), ab.gauge,
                       cell(pass_anti)});
    out.pass = pass_ab && pass_anti;
    out.max_residual = std::max({ab.residual, ab.flow_mismatch, anti});
    return out;
}

// Inner-solver checks on the scenario's algebra with seeded random inputs.
inline TaskTable suite_rows(const Scenario& sc) {
    const NestAlgebraSpec spec = sc.spec();
    Rng rng(sc.seed);
    TaskTable out{Table(csv_columns::kInner)};
    auto add = [&](const std::string& op, double residual, double lhs, double rhs, const std::string& gauge, bool pass) {
        out.table.add_row({spec.describe(), op, cell(residual), cell(lhs), cell(rhs), gauge, cell(pass)});
        out.pass = out.pass && pass;
        out.max_residual = std::max(out.max_residual, residual);
    };

    const auto comm = commutant_basis(spec);
    const Matrix id = Matrix::Identity(sc.dim, sc.dim);
    double scalar_gap = 0.0;
    for (const auto& x : comm) scalar_gap = std::max(scalar_gap, (x - (x.trace() / static_cast<double>(sc.dim)) * id).norm());
    add("commutant_basis", scalar_gap, static_cast<double>(comm.size()), 1.0, "none", comm.size() == 1 && scalar_gap <= 1e-10);

    const Matrix x = random_in_algebra(rng, spec, 0.1);
    const SuperOp sigma = sandwich(matrix_exponential(x), matrix_exponential(-x));
    const SimilaritySolution sim = automorphism_similarity(sigma, spec);
    const double lhs = sim.bound_check ? sim.bound_check->lhs : std::nan("");
    const double rhs = sim.bound_check ? sim.bound_check->rhs : std::nan("");
    add("automorphism_similarity", sim.residual, lhs, rhs, to_string(sim.normalization),
        sim.residual <= 1e-8 && (!sim.bound_check || lhs <= rhs));

    SuperOp d = SuperOp::zero(sc.dim);
    std::string op = "inner_derivation_solve";
    if (spec.algebra_dim() <= 20) {
        d = sample_derivation(derivation_space_basis(spec), rng);
    } else {
        d = ad(random_in_algebra(rng, spec, 1.0));  // Leibniz null space too large to sample densely
        op += "_ad_sample";
    }
    const DerivationSolution der = inner_derivation_solve(d, spec);
    add(op, der.residual, der.residual, 1e-8, der.gauge, der.residual <= 1e-8);
    return out;
}

inline TaskTable smooth_rows(const Scenario& sc) {
    const FlowHandle flow = flow_from_json(sc.flow_json, "flow", sc.dim);
    const Matrix& a = *sc.element;
    double xi = 0.0;
    if (sc.smooth_xi) {
        xi = *sc.smooth_xi;
    } else {
        xi = growth_bound(flow, linspace(-2.0, 2.0, 40)).xi;
    }
    const auto rows = smoothing_convergence_profile(flow, a, sc.smooth_n_list, xi, sc.smooth_nodes);
    TaskTable out{Table(csv_columns::kSmooth)};
    const double allowed = sc.tolerances.quadrature * (1.0 + a.norm());
    for (const auto& r : rows) {
        out.table.add_row({cell(r.n), cell(r.diff_frobenius), cell(r.norm_frobenius), cell(r.quad_error_estimate)});
        out.pass = out.pass && r.quad_error_estimate <= allowed;
        out.max_residual = std::max(out.max_residual, r.quad_error_estimate);
    }
    return out;
}

inline TaskTable decompose_rows(const Scenario& sc) {
    const FlowHandle flow = flow_from_json(sc.flow_json, "flow", sc.dim);
    PerturbOptions opt = sc.options;
    if (flow.is_inner()) opt.method = PerturbMethod::ClosedForm;
    const CocycleHandle u = CocycleHandle::from_perturbation(flow, *sc.perturbation, opt);
    const double lo = sc.time_grid.front(), hi = sc.time_grid.back();
    const double stab_u = differentiability_estimate(u, 0.0, sc.h_list).stability;

    TaskTable out{Table(csv_columns::kDecompose)};
    for (double n : sc.decompose_n_list) {
        const Matrix w = mollified_similarity(u, n);
        const CocycleHandle v = similar_cocycle(w, u, flow);
        const Matrix w_inv = w.inverse();
        double defect = 0.0, roundtrip = 0.0;
        std::map<double, Matrix> vs;
        auto v_at = [&](double t) -> const Matrix& {
            auto it = vs.find(t);
            if (it == vs.end()) it = vs.emplace(t, v.eval(t)).first;
            return it->second;
        };
        for (double t : sc.time_grid) {
            roundtrip = std::max(roundtrip, (w * v_at(t) * eval_flow(flow, t, w_inv) - u.eval(t)).norm());
            for (double s : sc.time_grid) {
                if (s + t < lo || s + t > hi) continue;
                defect = std::max(defect, (v_at(s + t) - v_at(t) * eval_flow(flow, t, v_at(s))).norm());
            }
        }
        const double stab_v = differentiability_estimate(v, 0.0, sc.h_list).stability;
        const bool pass = defect <= sc.tolerances.defect && roundtrip <= sc.tolerances.roundtrip;
        out.table.add_row({cell(n), cell((w - Matrix::Identity(sc.dim, sc.dim)).norm()), cell(stab_u), cell(stab_v),
                           cell(defect), cell(pass)});
        out.pass = out.pass && pass;
        out.max_residual = std::max({out.max_residual, defect, roundtrip});
    }
    return out;
}

inline TaskTable run_task(const Scenario& sc, const std::string& task) {
    if (task == "perturb" || task == "verify_cocycle" || task == "bounds") return cocycle_rows(sc, task);
    if (task == "extract") return extract_rows(sc);
    if (task == "relate") return relate_rows(sc);
    if (task == "smooth") return smooth_rows(sc);
    if (task == "decompose") return decompose_rows(sc);
    if (task == "suite") return suite_rows(sc);
    throw Error(ErrorKind::InvalidArgument, "unknown task " + task);
}

}  // namespace tasks

// Runs every task in order, writing <task>.csv and summary.json into out_dir.
// A task that throws is recorded as failed and the run continues.
inline Report run_scenario(const Scenario& sc, const std::filesystem::path& out_dir, bool timing = false) {
    std::filesystem::create_directories(out_dir);
    Report report;
    report.scenario = sc.name;
    report.seed = sc.seed;
    for (const auto& task : sc.tasks) {
        TaskOutcome outcome;
        outcome.task = task;
        const auto start = std::chrono::steady_clock::now();
        try {
            const TaskTable tt = tasks::run_task(sc, task);
            outcome.pass = tt.pass;
            outcome.max_residual = tt.max_residual;
            outcome.csv = task + ".csv";
            write_file_atomic(out_dir / outcome.csv, tt.table.to_csv());
        } catch (const Error& e) {
            outcome.pass = false;
            outcome.max_residual = std::nan("");
            outcome.error = e.what();
        }
        if (timing)
            outcome.wall_time_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report.tasks.push_back(std::move(outcome));
    }
    write_summary(report, out_dir);
    return report;
}

inline Report run_scenario(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                           bool timing = false) {
    return run_scenario(load_scenario(config_path), out_dir, timing);
}

}  // namespace flowlab
