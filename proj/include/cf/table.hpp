#pragma once

#include <cstdio>

#include <json.hpp>

#include "cf/experiments.hpp"

namespace cf {

inline constexpr const char* kVersion = "1.0.0";

/// A finished result table plus the metadata (command, version, config echo)
/// that suffices to reproduce it exactly.
struct OutputTable {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;
    nlohmann::json metadata;
};

/// 17 significant digits: lossless double -> text -> double round trip.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_cell(const nlohmann::json& c) {
    if (c.is_number_float())
        return format_real(c.get<double>());
    if (c.is_boolean())
        return c.get<bool>() ? "1" : "0";
    if (c.is_string())
        return csv_escape(c.get<std::string>());
    return c.dump();  // integers and anything exotic
}

}  // namespace detail

/// RFC 4180 serialization: CRLF records, quoted fields where needed,
/// uniform field count. Metadata is carried by the JSON form only.
inline std::string to_csv(const OutputTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i)
            out += ',';
        out += detail::csv_escape(t.header[i]);
    }
    out += "\r\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
            throw std::logic_error("ragged table row");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ',';
            out += detail::csv_cell(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

/// JSON serialization; the embedded config object can be fed back through
/// --config to reproduce the identical table.
inline std::string to_json(const OutputTable& t) {
    nlohmann::json doc = t.metadata;
    doc["columns"] = t.header;
    doc["rows"] = t.rows;
    return doc.dump(2) + "\n";
}

inline OutputTable table_from_rows(const std::vector<SummaryRow>& rows,
                                   nlohmann::json metadata) {
    OutputTable t;
    t.header = {"users",  "relays",    "power",  "group_size", "statistic",
                "mean",   "std_error", "trials", "solver"};
    t.rows.reserve(rows.size());
    for (const SummaryRow& r : rows)
        t.rows.push_back({r.users, r.relays, r.power, r.group_size, r.statistic, r.mean,
                          r.std_error, r.trials, r.solver});
    t.metadata = std::move(metadata);
    return t;
}

}  // namespace cf
