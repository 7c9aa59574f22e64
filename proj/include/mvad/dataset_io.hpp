#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mvad/graph.hpp"

// Dataset directory layout:
//   meta.json            {"n": int, "views": [D_1, ..., D_K], "directed": false}
//   edges.tsv            "u\tv" per line, 0-indexed, u < v
//   view_<k>.csv         n rows of D_k comma-separated floats, no header
//   labels.csv           optional; n rows of "flag,kind"
namespace mvad::io {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("failed to format double");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DatasetError(where + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DatasetError(where + ": cannot parse integer '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DatasetError("cannot open " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot open " + p.string() + " for writing");
    out << contents;
    if (!out) throw DatasetError("write failed for " + p.string());
}

inline std::string matrix_to_csv(const Matrix& m) {
    std::string s;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) s += ',';
            s += format_double(m(r, c));
        }
        s += '\n';
    }
    return s;
}

inline void save_dataset(const MultiViewGraph& g, const std::filesystem::path& dir) {
    g.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DatasetError("cannot create directory " + dir.string() + ": " + ec.message());

    nlohmann::ordered_json meta;
    meta["n"] = g.node_count();
    meta["views"] = g.view_dims();
    meta["directed"] = false;
    write_file(dir / "meta.json", meta.dump(2) + "\n");

    std::string edges;
    for (std::size_t u = 0; u < g.node_count(); ++u)
        for (std::size_t v = u + 1; v < g.node_count(); ++v)
            if (g.has_edge(u, v)) edges += std::to_string(u) + '\t' + std::to_string(v) + '\n';
    write_file(dir / "edges.tsv", edges);

    for (std::size_t k = 0; k < g.view_count(); ++k)
        write_file(dir / ("view_" + std::to_string(k) + ".csv"), matrix_to_csv(g.views[k]));

    const auto labels_path = dir / "labels.csv";
    if (g.labels) {
        std::string s;
        for (AnomalyKind k : *g.labels) {
            s += is_anomalous(k) ? "1," : "0,";
            s += to_string(k);
            s += '\n';
        }
        write_file(labels_path, s);
    } else {
        std::filesystem::remove(labels_path, ec);
    }
}

/// Loads and validates a dataset. Non-fatal issues (e.g. edges listed as
/// u > v, duplicates) are appended to `warnings`, or printed to stderr when
/// `warnings` is null.
inline MultiViewGraph load_dataset(const std::filesystem::path& dir,
                                   std::vector<std::string>* warnings = nullptr) {
    auto warn = [&](std::string msg) {
        if (warnings) {
            warnings->push_back(std::move(msg));
        } else {
            std::cerr << "warning: " << msg << '\n';
        }
    };

    const auto meta_path = dir / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw DatasetError("missing file " + meta_path.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(meta_path.string() + ": " + e.what());
    }
    if (!meta.contains("n") || !meta["n"].is_number_integer() || meta["n"].get<long long>() < 1) {
        throw DatasetError(meta_path.string() + ": \"n\" must be a positive integer");
    }
    if (!meta.contains("views") || !meta["views"].is_array() || meta["views"].empty()) {
        throw DatasetError(meta_path.string() + ": \"views\" must be a non-empty array");
    }
    if (meta.value("directed", false)) {
        throw DatasetError(meta_path.string() + ": directed graphs are not supported");
    }
    const auto n = meta["n"].get<std::size_t>();
    std::vector<std::size_t> dims;
    for (const auto& d : meta["views"]) {
        if (!d.is_number_integer() || d.get<long long>() < 1) {
            throw DatasetError(meta_path.string() + ": view dimensions must be positive integers");
        }
        dims.push_back(d.get<std::size_t>());
    }

    MultiViewGraph g;
    g.adjacency = Matrix(n, n);
    const auto edges_path = dir / "edges.tsv";
    const auto edge_lines = read_lines(edges_path);
    for (std::size_t li = 0; li < edge_lines.size(); ++li) {
        const std::string where = edges_path.string() + ":" + std::to_string(li + 1);
        if (edge_lines[li].empty()) continue;
        const auto parts = split(edge_lines[li], '\t');
        if (parts.size() != 2) throw DatasetError(where + ": expected \"u<TAB>v\"");
        const long long u = parse_int(parts[0], where);
        const long long v = parse_int(parts[1], where);
        for (long long id : {u, v}) {
            if (id < 0 || static_cast<std::size_t>(id) >= n) {
                throw DatasetError(where + ": node id out of range (" + std::to_string(id) +
                                   " not in [0, " + std::to_string(n) + "))");
            }
        }
        if (u == v) throw DatasetError(where + ": self-loop on node " + std::to_string(u));
        if (u > v) warn(where + ": edge listed as u > v; treating as undirected");
        if (g.has_edge(u, v)) warn(where + ": duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
        g.set_edge(u, v);
    }

    for (std::size_t k = 0; k < dims.size(); ++k) {
        const auto path = dir / ("view_" + std::to_string(k) + ".csv");
        const auto lines = read_lines(path);
        if (lines.size() != n) {
            throw DatasetError(path.string() + ": view row count mismatch (" +
                               std::to_string(lines.size()) + " rows, expected " +
                               std::to_string(n) + ")");
        }
        Matrix x(n, dims[k]);
        for (std::size_t r = 0; r < n; ++r) {
            const std::string where = path.string() + ":" + std::to_string(r + 1);
            const auto cells = split(lines[r], ',');
            if (cells.size() != dims[k]) {
                throw DatasetError(where + ": expected " + std::to_string(dims[k]) + " values, got " +
                                   std::to_string(cells.size()));
            }
            for (std::size_t c = 0; c < dims[k]; ++c) x(r, c) = parse_double(cells[c], where);
        }
        g.views.push_back(std::move(x));
    }

    const auto labels_path = dir / "labels.csv";
    if (std::filesystem::exists(labels_path)) {
        const auto lines = read_lines(labels_path);
        if (lines.size() != n) {
            throw DatasetError(labels_path.string() + ": label row count mismatch (" +
                               std::to_string(lines.size()) + " rows, expected " +
                               std::to_string(n) + ")");
        }
        std::vector<AnomalyKind> labels;
        for (std::size_t r = 0; r < n; ++r) {
            const std::string where = labels_path.string() + ":" + std::to_string(r + 1);
            const auto cells = split(lines[r], ',');
            if (cells.size() != 2) throw DatasetError(where + ": expected \"flag,kind\"");
            const long long flag = parse_int(cells[0], where);
            if (flag != 0 && flag != 1) throw DatasetError(where + ": flag must be 0 or 1");
            AnomalyKind kind;
            try {
                kind = parse_anomaly_kind(cells[1]);
            } catch (const GraphError& e) {
                throw DatasetError(where + ": " + e.what());
            }
            if ((flag == 1) != is_anomalous(kind)) {
                throw DatasetError(where + ": flag " + std::to_string(flag) +
                                   " inconsistent with kind '" + std::string(cells[1]) + "'");
            }
            labels.push_back(kind);
        }
        g.labels = std::move(labels);
    }

    try {
        g.validate();
    } catch (const GraphError& e) {
        throw DatasetError(dir.string() + ": " + e.what());
    }
    return g;
}

}  // namespace mvad::io
