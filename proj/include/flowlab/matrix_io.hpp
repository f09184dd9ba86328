// JSON matrix literals and number formatting for reports

#pragma once

#include "flowlab/core.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>

namespace flowlab {

using Json = nlohmann::json;

// Array of rows; each entry a real number or [re, im]. `field` names the
// location for error messages.
inline Matrix matrix_from_json(const Json& j, const std::string& field) {
    auto fail = [&field](const std::string& why) { return Error(ErrorKind::Parse, "field '" + field + "': " + why); };
    if (!j.is_array() || j.empty()) throw fail("matrix literal must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw fail("row 0 must be a non-empty array");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    if (rows != cols) throw fail("matrix must be square, got " + std::to_string(rows) + "x" + std::to_string(cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw fail("row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const Json& e = row[static_cast<std::size_t>(k)];
            const std::string where = "entry [" + std::to_string(i) + "][" + std::to_string(k) + "]";
            if (e.is_number()) {
                m(i, k) = e.get<double>();
            } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
                m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
            } else {
                throw fail(where + " must be a number or [re, im]");
            }
        }
    }
    if (!all_finite(m)) throw fail("entries must be finite");
    return m;
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            const Complex z = m(i, k);
            if (z.imag() == 0.0)
                row.push_back(z.real());
            else
                row.push_back(Json::array({z.real(), z.imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Shortest round-trip-safe text for CSV cells.
inline std::string format_number(double x) {
    char buf[32];
    double back = 0.0;
    for (int digits = 6; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, x);
        if (std::sscanf(buf, "%lf", &back) == 1 && back == x) break;
    }
    return buf;
}

}  // namespace flowlab
