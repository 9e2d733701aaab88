#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "kleinlab/rng.hpp"

namespace kleinlab {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// N-indexed experiment profiles with reproducible serialization: fixed column
// order, fixed float formatting, metadata up front
struct DiagnosticsTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // column-major, equal lengths
    std::vector<std::pair<std::string, std::string>> verdicts;

    void add_meta(std::string k, std::string v) { meta.emplace_back(std::move(k), std::move(v)); }

    size_t add_column(std::string name) {
        columns.push_back(std::move(name));
        data.emplace_back();
        return columns.size() - 1;
    }

    void add_verdict(std::string k, std::string v) {
        verdicts.emplace_back(std::move(k), std::move(v));
    }

    size_t rows() const { return data.empty() ? 0 : data.front().size(); }

    std::string to_csv() const {
        std::string out;
        for (const auto& [k, v] : meta) out += "# " + k + " = " + v + "\n";
        for (const auto& [k, v] : verdicts) out += "# verdict " + k + " = " + v + "\n";
        for (size_t c = 0; c < columns.size(); ++c) {
            out += columns[c];
            out += c + 1 < columns.size() ? ',' : '\n';
        }
        for (size_t r = 0; r < rows(); ++r) {
            for (size_t c = 0; c < columns.size(); ++c) {
                out += fmt_double(data[c][r]);
                out += c + 1 < columns.size() ? ',' : '\n';
            }
        }
        return out;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [k, v] : meta) m[k] = v;
        j["meta"] = m;
        nlohmann::ordered_json cols = nlohmann::ordered_json::object();
        for (size_t c = 0; c < columns.size(); ++c) cols[columns[c]] = data[c];
        j["columns"] = cols;
        nlohmann::ordered_json verd = nlohmann::ordered_json::object();
        for (const auto& [k, v] : verdicts) verd[k] = v;
        j["verdicts"] = verd;
        return j;
    }
};

}  // namespace kleinlab
