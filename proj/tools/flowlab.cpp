// flowlab command-line front end.
// Exit codes: 0 all pass, 1 a task or property failed, 2 usage or parse error.

#include "flowlab/flowlab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

int finish(const flowlab::Report& report, const std::filesystem::path& out) {
    int passed = 0;
    for (const auto& t : report.tasks) {
        if (t.pass) ++passed;
        if (!t.pass) {
            std::cout << "FAIL " << t.task;
            if (!t.error.empty()) std::cout << ": " << t.error;
            std::cout << "\n";
        }
    }
    std::cout << report.scenario << ": " << passed << "/" << report.tasks.size() << " passed, summary at "
              << (out / "summary.json").string() << "\n";
    return report.pass() ? kExitPass : kExitFail;
}

flowlab::Json parse_json_flag(const std::string& text, const std::string& flag) {
    try {
        return flowlab::Json::parse(text);
    } catch (const flowlab::Json::parse_error& e) {
        throw flowlab::Error(flowlab::ErrorKind::Parse, "--" + flag + ": " + e.what());
    }
}

// Flags shared by the single-task shortcuts; they fill the same fields a
// config file would.
struct ShortcutFlags {
    std::string name;
    std::uint64_t seed = 0;
    int dim = 0;
    std::string nest_dims;
    std::string generator;
    std::string out;
    bool timing = false;

    void attach(CLI::App* cmd, const std::string& default_name) {
        name = default_name;
        cmd->add_option("--name", name, "scenario name recorded in the report");
        cmd->add_option("--seed", seed, "seed for randomized inputs");
        cmd->add_option("--dim", dim, "matrix dimension")->required();
        cmd->add_option("--nest-dims", nest_dims, "nest as JSON array, e.g. [0,1,2] (default: full algebra)");
        cmd->add_option("--generator", generator, "flow generator G as a JSON matrix literal (flow = Ad e^{tG})")->required();
        cmd->add_option("--out", out, "output directory")->required();
        cmd->add_flag("--timing", timing, "record wall_time_ms per task");
    }

    flowlab::Json base() const {
        flowlab::Json j;
        j["name"] = name;
        j["seed"] = seed;
        j["algebra"]["dim"] = dim;
        if (!nest_dims.empty()) j["algebra"]["nest_dims"] = parse_json_flag(nest_dims, "nest-dims");
        j["flow"] = {{"type", "inner"}, {"generator", parse_json_flag(generator, "generator")}};
        return j;
    }
};

int run_config(const flowlab::Json& config, const std::string& out, bool timing) {
    const flowlab::Scenario sc = flowlab::scenario_from_json(config);
    return finish(flowlab::run_scenario(sc, out, timing), out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlab: flows, cocycle perturbations and smoothing on nest algebras"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool timing = false;
    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_flag("--timing", timing, "record wall_time_ms per task");

    std::string level = "quick";
    std::uint64_t seed = 1;
    auto* verify = app.add_subcommand("verify", "run the randomized property sweeps");
    verify->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--seed", seed, "corpus seed");
    verify->add_option("--out", out_dir, "output directory")->required();
    verify->add_flag("--timing", timing, "record wall_time_ms per property");

    ShortcutFlags perturb_flags;
    std::string perturbation, time_grid, methods;
    auto* perturb = app.add_subcommand("perturb", "cocycle method agreement for one (flow, P) pair");
    perturb_flags.attach(perturb, "perturb");
    perturb->add_option("--perturbation", perturbation, "P as a JSON matrix literal")->required();
    perturb->add_option("--time-grid", time_grid, "sorted JSON array of times")->required();
    perturb->add_option("--methods", methods, "JSON array from dyson, ode, closed_form (default: all applicable)");

    ShortcutFlags smooth_flags;
    std::string element, n_list;
    double xi = 0.0;
    int nodes = 64;
    auto* smooth = app.add_subcommand("smooth", "Gaussian smoothing convergence profile");
    smooth_flags.attach(smooth, "smooth");
    smooth->add_option("--element", element, "A as a JSON matrix literal")->required();
    smooth->add_option("--n-list", n_list, "increasing JSON array of n values")->required();
    auto* xi_opt = smooth->add_option("--xi", xi, "mollifier exponent (default: certified growth exponent)");
    smooth->add_option("--nodes", nodes, "Gauss-Hermite nodes before doubling");

    ShortcutFlags extract_flags;
    double h_step = 1e-2;
    auto* extract = app.add_subcommand("extract", "recover the inner generator of a flow");
    extract_flags.attach(extract, "extract");
    extract->add_option("--h-step", h_step, "finite-difference step for the generator");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run) {
            const flowlab::Scenario sc = flowlab::load_scenario(config_path);
            return finish(flowlab::run_scenario(sc, out_dir, timing), out_dir);
        }
        if (*verify) {
            const auto report = flowlab::verify_suite(seed, flowlab::verify_level(level), out_dir, timing);
            return finish(report, out_dir);
        }
        if (*perturb) {
            auto j = perturb_flags.base();
            j["perturbation"] = parse_json_flag(perturbation, "perturbation");
            j["time_grid"] = parse_json_flag(time_grid, "time-grid");
            if (!methods.empty()) j["methods"] = parse_json_flag(methods, "methods");
            j["tasks"] = {"perturb"};
            return run_config(j, perturb_flags.out, perturb_flags.timing);
        }
        if (*smooth) {
            auto j = smooth_flags.base();
            j["element"] = parse_json_flag(element, "element");
            j["smoothing"]["n_list"] = parse_json_flag(n_list, "n-list");
            j["smoothing"]["nodes"] = nodes;
            if (*xi_opt) j["smoothing"]["xi"] = xi;
            j["tasks"] = {"smooth"};
            return run_config(j, smooth_flags.out, smooth_flags.timing);
        }
        if (*extract) {
            auto j = extract_flags.base();
            j["h_step"] = h_step;
            j["tasks"] = {"extract"};
            return run_config(j, extract_flags.out, extract_flags.timing);
        }
    } catch (const flowlab::Error& e) {
        std::cerr << "flowlab: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "flowlab: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
