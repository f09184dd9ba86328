#include "flowlab/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace flowlab;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = FLOWLAB_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("flowlab_test_scenario_" + name);
    fs::remove_all(dir);
    return dir;
}

Json diagonal_shift_json() { return Json::parse(slurp(kConfigs / "diagonal_shift.json")); }

// runs parse and returns the message of the expected Parse error
std::string parse_error(const Json& j) {
    try {
        (void)scenario_from_json(j);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "expected a parse error";
    return {};
}

}  // namespace

TEST(ScenarioParse, ShippedConfigsLoad) {
    for (const char* name : {"minimal.json", "diagonal_shift.json", "tour.json"}) EXPECT_NO_THROW(load_scenario(kConfigs / name)) << name;
}

TEST(ScenarioParse, DefaultsApplied) {
    const Scenario sc = load_scenario(kConfigs / "minimal.json");
    EXPECT_EQ(sc.name, "minimal");
    EXPECT_EQ(sc.seed, 1u);
    EXPECT_EQ(sc.tolerances.defect, 1e-8);
    EXPECT_EQ(sc.tolerances.agreement, 1e-7);
    EXPECT_EQ(sc.options.method, PerturbMethod::Ode);
}

TEST(ScenarioParse, UnsortedGridNamesTheField) {
    try {
        (void)load_scenario(kConfigs / "unsorted_grid.json");
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("time_grid"), std::string::npos) << e.what();
    }
}

TEST(ScenarioParse, MissingRequiredFields) {
    for (const char* field : {"name", "algebra", "flow", "tasks"}) {
        Json j = diagonal_shift_json();
        j.erase(field);
        EXPECT_NE(parse_error(j).find(field), std::string::npos) << field;
    }
}

TEST(ScenarioParse, TaskRequirementsChecked) {
    Json j = diagonal_shift_json();
    j.erase("perturbation");
    EXPECT_NE(parse_error(j).find("perturbation"), std::string::npos);
    j = diagonal_shift_json();
    j["tasks"] = {"smooth"};
    EXPECT_NE(parse_error(j).find("element"), std::string::npos);
    j = diagonal_shift_json();
    j["tasks"] = {"relate"};
    EXPECT_NE(parse_error(j).find("relate.flow"), std::string::npos);
}

TEST(ScenarioParse, UnknownKeysRejected) {
    Json j = diagonal_shift_json();
    j["tolerance"] = 1e-3;
    EXPECT_NE(parse_error(j).find("tolerance"), std::string::npos);
    j = diagonal_shift_json();
    j["tolerances"] = {{"defekt", 1e-3}};
    EXPECT_NE(parse_error(j).find("tolerances.defekt"), std::string::npos);
    j = diagonal_shift_json();
    j["tasks"] = {"perturb", "wobble"};
    EXPECT_NE(parse_error(j).find("tasks[1]"), std::string::npos);
}

TEST(ScenarioParse, BadMatricesAndDimensions) {
    Json j = diagonal_shift_json();
    j["perturbation"] = Json::parse("[[0, 1], [0]]");
    EXPECT_NE(parse_error(j).find("perturbation"), std::string::npos);
    j = diagonal_shift_json();
    j["perturbation"] = Json::parse("[[0, 1, 0], [0, 0, 0], [0, 0, 0]]");
    EXPECT_NE(parse_error(j).find("perturbation"), std::string::npos);
    j = diagonal_shift_json();
    j["flow"]["generator"] = Json::parse("[[\"a\", 0], [0, 0]]");
    EXPECT_NE(parse_error(j).find("flow.generator"), std::string::npos);
    j = diagonal_shift_json();
    j["algebra"]["nest_dims"] = Json::parse("[0, 2, 1]");
    EXPECT_NE(parse_error(j).find("algebra.nest_dims"), std::string::npos);
    j = diagonal_shift_json();
    j["tolerances"] = {{"defect", -1.0}};
    EXPECT_NE(parse_error(j).find("tolerances.defect"), std::string::npos);
}

TEST(ScenarioParse, SyntaxErrorReportsLineAndColumn) {
    const std::string text = "{\n  \"name\": \"x\",\n  \"seed\": ,\n}";
    try {
        (void)parse_scenario(text);
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(ScenarioParse, MissingFileIsAnError) {
    EXPECT_THROW(load_scenario(kConfigs / "no_such_file.json"), Error);
}

TEST(ScenarioRun, MinimalPasses) {
    const fs::path out = scratch("minimal");
    const Report r = run_scenario(kConfigs / "minimal.json", out);
    EXPECT_TRUE(r.pass());
    ASSERT_EQ(r.tasks.size(), 1u);
    EXPECT_EQ(r.tasks[0].max_residual, 0.0);
    EXPECT_TRUE(fs::exists(out / "verify_cocycle.csv"));
    EXPECT_TRUE(fs::exists(out / "summary.json"));
    fs::remove_all(out);
}

TEST(ScenarioRun, DiagonalShiftMethodsAgree) {
    const fs::path out = scratch("diagonal_shift");
    const Report r = run_scenario(kConfigs / "diagonal_shift.json", out);
    EXPECT_TRUE(r.pass());
    ASSERT_EQ(r.tasks.size(), 3u);
    EXPECT_EQ(r.tasks[0].task, "perturb");
    EXPECT_LT(r.tasks[0].max_residual, 1e-7);
    EXPECT_EQ(first_line(slurp(out / "perturb.csv")), "t,method,norm_u_frobenius,cocycle_defect_max,lhs_cocycle,rhs_bound,pass");
    fs::remove_all(out);
}

TEST(ScenarioRun, TourHeadersAndPass) {
    const fs::path out = scratch("tour");
    const Report r = run_scenario(kConfigs / "tour.json", out);
    for (const auto& t : r.tasks) EXPECT_TRUE(t.pass) << t.task << " " << t.error;
    EXPECT_EQ(first_line(slurp(out / "extract.csv")), "spec,op,residual,lhs,rhs,gauge,pass");
    EXPECT_EQ(first_line(slurp(out / "smooth.csv")), "n,diff_frobenius,norm_frobenius,quad_error_estimate");
    EXPECT_EQ(first_line(slurp(out / "decompose.csv")), "n,norm_w_minus_1,stability_u,stability_v,defect_v,pass");
    fs::remove_all(out);
}

TEST(ScenarioRun, ByteIdenticalAcrossRuns) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    (void)run_scenario(kConfigs / "diagonal_shift.json", a);
    (void)run_scenario(kConfigs / "diagonal_shift.json", b);
    for (const char* f : {"perturb.csv", "verify_cocycle.csv", "bounds.csv", "summary.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(ScenarioRun, FailingTaskRecordedAndRunContinues) {
    Json j = diagonal_shift_json();
    // closed_form needs an inner flow; build a perturbed base so the first task throws
    j["flow"] = Json::parse(R"({"type": "perturbed", "base": {"type": "inner", "generator": [[[0, 1], 0], [0, 0]]},
                                "P": [[0, 0], [0, 0]]})");
    j["methods"] = {"closed_form"};
    j["tasks"] = {"perturb", "verify_cocycle"};
    const fs::path out = scratch("failing");
    const Report r = run_scenario(scenario_from_json(j), out);
    ASSERT_EQ(r.tasks.size(), 2u);
    EXPECT_FALSE(r.tasks[0].pass);
    EXPECT_FALSE(r.tasks[0].error.empty());
    EXPECT_TRUE(r.tasks[1].pass) << r.tasks[1].error;
    EXPECT_FALSE(r.pass());
    const Json summary = Json::parse(slurp(out / "summary.json"));
    EXPECT_FALSE(summary["pass"].get<bool>());
    EXPECT_TRUE(summary["tasks"][0].contains("error"));
    fs::remove_all(out);
}

TEST(ScenarioRun, ToleranceViolationFails) {
    Json j = diagonal_shift_json();
    j["tolerances"] = {{"defect", 1e-30}};
    j["tasks"] = {"verify_cocycle"};
    const fs::path out = scratch("tight");
    const Report r = run_scenario(scenario_from_json(j), out);
    EXPECT_FALSE(r.pass());
    EXPECT_TRUE(r.tasks[0].error.empty());
    fs::remove_all(out);
}

TEST(Report, SummaryFields) {
    const fs::path out = scratch("summary");
    (void)run_scenario(kConfigs / "minimal.json", out);
    const Json s = Json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(s["schema"], "flowlab.report/1");
    EXPECT_EQ(s["rng"], "mt19937_64");
    ASSERT_EQ(s["tasks"].size(), 1u);
    const Json& t = s["tasks"][0];
    for (const char* key : {"scenario", "task", "pass", "max_residual", "wall_time_ms"}) EXPECT_TRUE(t.contains(key)) << key;
    EXPECT_TRUE(t["wall_time_ms"].is_null());
    fs::remove_all(out);
}

TEST(Report, TimingRecordedWhenAsked) {
    const fs::path out = scratch("timing");
    const Report r = run_scenario(kConfigs / "minimal.json", out, true);
    ASSERT_TRUE(r.tasks[0].wall_time_ms.has_value());
    EXPECT_GE(*r.tasks[0].wall_time_ms, 0.0);
    fs::remove_all(out);
}

TEST(Report, NumbersRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(format_number(x)), x);
    EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Report, TableRejectsRaggedRows) {
    Table t({"a", "b"});
    EXPECT_THROW(t.add_row({"1"}), Error);
    t.add_row({"1", "2"});
    EXPECT_EQ(t.to_csv(), "a,b\n1,2\n");
}
