#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smtlog/bench/bench.hpp"

namespace smtlog::bench {

inline constexpr const char* kCsvHeader =
    "graph_id,strategy,order,checks,asserts,pushes,pops,cache_hits,sat,unsat,"
    "unknown,solver_wall_ns,total_wall_ns,mean_common_prefix";

namespace detail {

inline std::string csv_quote(const std::string& field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_mean(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace detail

inline std::string row_to_csv(const RunRow& r) {
    std::string out;
    out += detail::csv_quote(r.graph_id);
    out += ',';
    out += strategy_name(r.strategy);
    out += ',';
    out += dl::order_name(r.order);
    for (uint64_t v : {r.checks, r.asserts, r.pushes, r.pops, r.cache_hits, r.sat,
                       r.unsat, r.unknown, r.solver_wall_ns, r.total_wall_ns}) {
        out += ',';
        out += std::to_string(v);
    }
    out += ',';
    out += detail::format_mean(r.mean_common_prefix);
    return out;
}

inline std::string render_csv(const std::vector<RunRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const RunRow& r : rows) {
        out += row_to_csv(r);
        out += '\n';
    }
    return out;
}

/// Header plus one RFC-4180 line per row, LF endings.
inline void emit_csv(const std::vector<RunRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << render_csv(rows);
    if (!out) throw Error("failed writing '" + path + "'");
}

// -- parsing (round-trip checks and downstream tooling) ----------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

} // namespace detail

inline std::vector<RunRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw Error("unexpected CSV header");
    std::vector<RunRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 14) throw Error("malformed CSV row");
        RunRow r;
        r.graph_id = f[0];
        r.strategy = f[1] == "naive"  ? Strategy::Naive
                     : f[1] == "pp"   ? Strategy::PP
                                      : Strategy::CSA;
        r.order = f[2] == "dfs" ? dl::IssueOrder::Dfs : dl::IssueOrder::Bfs;
        r.checks = std::stoull(f[3]);
        r.asserts = std::stoull(f[4]);
        r.pushes = std::stoull(f[5]);
        r.pops = std::stoull(f[6]);
        r.cache_hits = std::stoull(f[7]);
        r.sat = std::stoull(f[8]);
        r.unsat = std::stoull(f[9]);
        r.unknown = std::stoull(f[10]);
        r.solver_wall_ns = std::stoull(f[11]);
        r.total_wall_ns = std::stoull(f[12]);
        r.mean_common_prefix = std::stod(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace smtlog::bench
