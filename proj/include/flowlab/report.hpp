// per-task CSV tables, summary.json and atomic file output

#pragma once

#include "flowlab/core.hpp"
#include "flowlab/matrix_io.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace flowlab {

inline constexpr const char* kReportSchema = "flowlab.report/1";

namespace csv_columns {
inline const std::vector<std::string> kCocycle{"t", "method", "norm_u_frobenius", "cocycle_defect_max", "lhs_cocycle",
                                              "rhs_bound", "pass"};
inline const std::vector<std::string> kInner{"spec", "op", "residual", "lhs", "rhs", "gauge", "pass"};
inline const std::vector<std::string> kSmooth{"n", "diff_frobenius", "norm_frobenius", "quad_error_estimate"};
inline const std::vector<std::string> kDecompose{"n", "norm_w_minus_1", "stability_u", "stability_v", "defect_v", "pass"};
inline const std::vector<std::string> kVerify{"module", "property", "cases", "failures", "max_residual", "tolerance", "pass"};
}  // namespace csv_columns

class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    // Cells are strings already; numbers go through cell().
    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw Error(ErrorKind::InvalidArgument, "table row has " + std::to_string(row.size()) + " cells, header has " +
                                                        std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

    std::string to_csv() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k) out += ',';
                out += cells[k];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double x) { return format_number(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(bool x) { return x ? "true" : "false"; }

// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct TaskOutcome {
    std::string task;
    bool pass = false;
    double max_residual = 0.0;
    std::optional<double> wall_time_ms;  // only recorded when timing is requested
    std::string csv;                     // file name inside the output directory, empty if none
    std::string error;                   // non-empty when the task threw
};

struct Report {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<TaskOutcome> tasks;
    Json extra = Json::object();  // command-specific fields (coverage, level, ...)

    bool pass() const {
        for (const auto& t : tasks)
            if (!t.pass) return false;
        return true;
    }
};

inline Json report_to_json(const Report& r) {
    Json tasks = Json::array();
    for (const auto& t : r.tasks) {
        Json j;
        j["scenario"] = r.scenario;
        j["task"] = t.task;
        j["pass"] = t.pass;
        j["max_residual"] = t.max_residual;
        j["wall_time_ms"] = t.wall_time_ms ? Json(*t.wall_time_ms) : Json(nullptr);
        if (!t.csv.empty()) j["csv"] = t.csv;
        if (!t.error.empty()) j["error"] = t.error;
        tasks.push_back(std::move(j));
    }
    Json out;
    out["schema"] = kReportSchema;
    out["scenario"] = r.scenario;
    out["seed"] = r.seed;
    out["rng"] = "mt19937_64";
    out["pass"] = r.pass();
    out["tasks"] = std::move(tasks);
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it) out[it.key()] = it.value();
    return out;
}

inline void write_summary(const Report& r, const std::filesystem::path& dir) {
    write_file_atomic(dir / "summary.json", report_to_json(r).dump(2) + "\n");
}

}  // namespace flowlab
