#pragma once
#ifndef SDLM_IO_HPP
#define SDLM_IO_HPP

// File formats: panel and geometry CSV ingestion/emission, chain CSV with a
// JSON sidecar, parameter JSON, latent-path archives and tidy summary CSVs.

#include "sdlm/error.hpp"
#include "sdlm/mcmc.hpp"
#include "sdlm/model.hpp"
#include "sdlm/predict.hpp"
#include "sdlm/smoother.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sdlm::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV primitives

/// One CSV record split into trimmed fields. Double-quoted fields may
/// contain commas; "" inside quotes is a literal quote.
inline std::vector<std::string> split_csv_line(const std::string& line, long line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
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
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? cur : std::string());
            if (!was_quoted) {
                const auto b = cur.find_first_not_of(" \t");
                const auto e = cur.find_last_not_of(" \t");
                out.back() = b == std::string::npos ? "" : cur.substr(b, e - b + 1);
            }
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    if (was_quoted) {
        out.push_back(cur);
    } else {
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
    }
    return out;
}

/// Non-blank lines of a stream with their 1-based line numbers.
inline std::vector<std::pair<long, std::string>> read_lines(std::istream& in) {
    std::vector<std::pair<long, std::string>> lines;
    std::string s;
    long n = 0;
    while (std::getline(in, s)) {
        ++n;
        if (!s.empty() && s.back() == '\r') s.pop_back();
        if (n == 1 && s.size() >= 3 && s.compare(0, 3, "\xEF\xBB\xBF") == 0) s.erase(0, 3);
        if (s.find_first_not_of(" \t") == std::string::npos) continue;
        lines.emplace_back(n, s);
    }
    return lines;
}

inline double parse_number(const std::string& field, long line_no, const std::string& what) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    if (!field.empty() && *b == '+') ++b;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v))
        throw ParseError("cannot parse " + what + " '" + field + "' as a number", line_no);
    return v;
}

inline bool is_missing_token(const std::string& f) {
    if (f.empty()) return true;
    std::string l;
    for (char c : f) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return l == "na" || l == "nan";
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// ---------------------------------------------------------------------------
// Panel CSV: time,zone_1,...,zone_nz

struct PanelLoad {
    PanelData panel;
    std::vector<std::string> warnings;
};

/// Parses a panel. Empty cells (and NA/NaN) are missing; exact zeros are
/// also treated as missing and reported in `warnings`.
inline PanelLoad read_panel_csv(std::istream& in, const std::string& source = "panel") {
    const auto lines = read_lines(in);
    if (lines.empty()) throw ParseError("empty panel file: " + source);
    const auto header = split_csv_line(lines[0].second, lines[0].first);
    if (header.size() < 2) throw ParseError("panel header needs a time column and at least one zone column", lines[0].first);
    std::set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty()) throw ParseError("empty zone id in panel header (column " + std::to_string(j + 1) + ")", lines[0].first);
        if (!seen.insert(header[j]).second) throw ParseError("duplicate zone id '" + header[j] + "' in panel header", lines[0].first);
    }
    if (lines.size() < 2) throw ParseError("panel has a header but no data rows: " + source, lines[0].first);

    const auto nz = static_cast<Eigen::Index>(header.size() - 1);
    const auto n = static_cast<Eigen::Index>(lines.size() - 1);
    PanelLoad out;
    PanelData& p = out.panel;
    p.zone_ids.assign(header.begin() + 1, header.end());
    p.values = Matrix::Constant(n, nz, std::numeric_limits<double>::quiet_NaN());
    p.observed = BoolMatrix::Constant(n, nz, false);
    std::vector<double> times(static_cast<std::size_t>(n));
    long zeros = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [line_no, text] = lines[static_cast<std::size_t>(i + 1)];
        const auto f = split_csv_line(text, line_no);
        if (f.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()), line_no);
        times[static_cast<std::size_t>(i)] = parse_number(f[0], line_no, "time");
        if (i > 0 && !(times[static_cast<std::size_t>(i)] > times[static_cast<std::size_t>(i - 1)]))
            throw ParseError("times must be strictly increasing", line_no);
        for (Eigen::Index j = 0; j < nz; ++j) {
            const std::string& cell = f[static_cast<std::size_t>(j + 1)];
            if (is_missing_token(cell)) continue;
            const double v = parse_number(cell, line_no, "value for zone " + p.zone_ids[static_cast<std::size_t>(j)]);
            if (v == 0.0) {
                ++zeros;
                continue;
            }
            p.values(i, j) = v;
            p.observed(i, j) = true;
        }
    }
    p.grid = TimeGrid::from_times(std::move(times));
    if (zeros > 0)
        out.warnings.push_back(std::to_string(zeros) + " zero value" + (zeros == 1 ? "" : "s") + " in " + source +
                               " treated as missing");
    for (Eigen::Index j = 0; j < nz; ++j)
        if (!p.observed.col(j).any())
            out.warnings.push_back("zone " + p.zone_ids[static_cast<std::size_t>(j)] + " has no observed values");
    return out;
}

inline PanelLoad read_panel_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_panel_csv(in, path.string());
}

inline void write_panel_csv(std::ostream& out, const PanelData& p) {
    out << "time";
    for (const auto& id : p.zone_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
        out << format_number(p.grid.times()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
            out << ',';
            if (p.observed(i, j)) out << format_number(p.values(i, j));
        }
        out << '\n';
    }
}

inline void write_panel_file(const std::filesystem::path& path, const PanelData& p) {
    auto out = open_output(path);
    write_panel_csv(out, p);
}

// ---------------------------------------------------------------------------
// Geometry CSV: zone_id,lon,lat  or a labelled square distance matrix

inline ZoneGeometry read_geometry_csv(std::istream& in, const std::string& source = "geometry") {
    const auto lines = read_lines(in);
    if (lines.empty()) throw ParseError("empty geometry file: " + source);
    const auto header = split_csv_line(lines[0].second, lines[0].first);
    auto lower = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    const bool coordinate_form =
        header.size() == 3 && lower(header[0]) == "zone_id" && lower(header[1]) == "lon" && lower(header[2]) == "lat";
    if (coordinate_form) {
        std::vector<std::string> ids;
        std::vector<Coordinate> coords;
        for (std::size_t r = 1; r < lines.size(); ++r) {
            const auto& [line_no, text] = lines[r];
            const auto f = split_csv_line(text, line_no);
            if (f.size() != 3) throw ParseError("expected zone_id,lon,lat", line_no);
            if (f[0].empty()) throw ParseError("empty zone id", line_no);
            const double lon = parse_number(f[1], line_no, "longitude");
            const double lat = parse_number(f[2], line_no, "latitude");
            if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 360.0)
                throw ParseError("coordinate out of range for zone " + f[0], line_no);
            ids.push_back(f[0]);
            coords.push_back({lon, lat});
        }
        if (ids.empty()) throw ParseError("geometry has no zones: " + source);
        if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
            throw ParseError("duplicate zone id in " + source);
        return ZoneGeometry::from_coordinates(std::move(ids), std::move(coords));
    }

    if (header.size() < 2) throw ParseError("geometry header must be zone_id,lon,lat or a labelled distance matrix", lines[0].first);
    const std::vector<std::string> ids(header.begin() + 1, header.end());
    const auto nz = static_cast<Eigen::Index>(ids.size());
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
        throw ParseError("duplicate zone id in distance matrix header", lines[0].first);
    if (static_cast<Eigen::Index>(lines.size()) - 1 != nz)
        throw ParseError("distance matrix has " + std::to_string(lines.size() - 1) + " rows for " + std::to_string(nz) +
                         " zones: " + source);
    Matrix d(nz, nz);
    for (Eigen::Index i = 0; i < nz; ++i) {
        const auto& [line_no, text] = lines[static_cast<std::size_t>(i + 1)];
        const auto f = split_csv_line(text, line_no);
        if (static_cast<Eigen::Index>(f.size()) != nz + 1)
            throw ParseError("expected " + std::to_string(nz + 1) + " fields, found " + std::to_string(f.size()), line_no);
        if (f[0] != ids[static_cast<std::size_t>(i)])
            throw ParseError("row label '" + f[0] + "' does not match column label '" + ids[static_cast<std::size_t>(i)] + "'", line_no);
        for (Eigen::Index j = 0; j < nz; ++j) d(i, j) = parse_number(f[static_cast<std::size_t>(j + 1)], line_no, "distance");
    }
    return ZoneGeometry::from_distances(ids, std::move(d));
}

inline ZoneGeometry read_geometry_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_geometry_csv(in, path.string());
}

inline void write_geometry_csv(std::ostream& out, const ZoneGeometry& g) {
    if (g.coordinates()) {
        out << "zone_id,lon,lat\n";
        for (std::size_t j = 0; j < g.size(); ++j)
            out << g.zone_ids()[j] << ',' << format_number((*g.coordinates())[j].lon) << ','
                << format_number((*g.coordinates())[j].lat) << '\n';
        return;
    }
    out << "zone_id";
    for (const auto& id : g.zone_ids()) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < g.distances().rows(); ++i) {
        out << g.zone_ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < g.distances().cols(); ++j) out << ',' << format_number(g.distances()(i, j));
        out << '\n';
    }
}

inline void write_geometry_file(const std::filesystem::path& path, const ZoneGeometry& g) {
    auto out = open_output(path);
    write_geometry_csv(out, g);
}

// ---------------------------------------------------------------------------
// Matrices with a header row (chains)

struct LabelledMatrix {
    std::vector<std::string> names;
    Matrix values;
};

inline void write_labelled_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& values) {
    for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
    out << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index k = 0; k < values.cols(); ++k) out << (k ? "," : "") << format_number(values(r, k));
        out << '\n';
    }
}

inline LabelledMatrix read_labelled_csv(std::istream& in, const std::string& source) {
    const auto lines = read_lines(in);
    if (lines.empty()) throw ParseError("empty file: " + source);
    LabelledMatrix m;
    m.names = split_csv_line(lines[0].second, lines[0].first);
    m.values.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(m.names.size()));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_csv_line(lines[r].second, lines[r].first);
        if (f.size() != m.names.size())
            throw ParseError("expected " + std::to_string(m.names.size()) + " fields, found " + std::to_string(f.size()), lines[r].first);
        for (std::size_t k = 0; k < f.size(); ++k)
            m.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(k)) = parse_number(f[k], lines[r].first, m.names[k]);
    }
    return m;
}

inline LabelledMatrix read_labelled_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_labelled_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json to_json(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(std::move(row));
    }
    return a;
}

inline json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json to_json(const McmcConfig& c) {
    json j;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["step_scale"] = c.step_scale;
    j["target_acceptance"] = c.target_acceptance;
    j["adapt"] = c.adapt;
    j["seed"] = c.seed;
    j["proposal_cov"] = c.proposal_cov ? to_json(*c.proposal_cov) : json(nullptr);
    return j;
}

/// Chain metadata sidecar.
inline json chain_sidecar(const ChainOutput& chain, const std::vector<std::string>& names) {
    json j;
    j["seed"] = chain.config.seed;
    j["parameters"] = names;
    j["kept_draws"] = chain.draws.rows();
    j["accepted"] = chain.accepted;
    j["proposed"] = chain.proposed;
    j["acceptance_rate"] = chain.acceptance_rate;
    j["burn_in_acceptance_rate"] = chain.burn_in_acceptance_rate;
    j["final_step_scale"] = chain.final_step_scale;
    j["config"] = to_json(chain.config);
    return j;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(what + " must be an array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError(what + " must be an array of rows");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = vector_from_json(j[i], what);
        if (row.size() != m.cols()) throw ValidationError(what + " has ragged rows");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

inline json to_json(const JointStaticParams& p) {
    json j;
    j["V"] = to_json(p.obs_var);
    j["W"] = to_json(p.sys_var);
    j["theta1"] = to_json(p.theta1);
    j["theta2"] = to_json(p.theta2);
    j["eta1"] = {{"sigma", p.eta1.sigma}, {"phi", p.eta1.phi}};
    j["eta2"] = {{"sigma", p.eta2.sigma}, {"phi", p.eta2.phi}};
    j["eta3"] = {{"sigma", p.eta3.sigma}, {"phi", p.eta3.phi}};
    j["init_mean"] = to_json(p.init_mean);
    j["init_var"] = to_json(p.init_var);
    return j;
}

/// Reads joint parameters. init_mean / init_var default to the prior's
/// level initialisation when absent.
inline JointStaticParams joint_params_from_json(const json& j, const PriorSpec& priors = {}) {
    static const std::set<std::string> known{"V", "W", "theta1", "theta2", "eta1", "eta2", "eta3", "init_mean", "init_var"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ValidationError("unknown parameter key '" + k + "'");
    for (const char* k : {"V", "W", "theta1", "theta2", "eta1", "eta2", "eta3"})
        if (!j.contains(k)) throw ValidationError(std::string("parameters are missing '") + k + "'");
    JointStaticParams p;
    p.obs_var = vector_from_json(j["V"], "V");
    p.sys_var = vector_from_json(j["W"], "W");
    p.theta1 = vector_from_json(j["theta1"], "theta1");
    p.theta2 = vector_from_json(j["theta2"], "theta2");
    auto eta = [&](const char* key) {
        const json& e = j[key];
        if (!e.is_object() || !e.contains("sigma") || !e.contains("phi") || !e["sigma"].is_number() || !e["phi"].is_number())
            throw ValidationError(std::string(key) + " must be {\"sigma\": number, \"phi\": number}");
        return KernelParams{e["sigma"].get<double>(), e["phi"].get<double>()};
    };
    p.eta1 = eta("eta1");
    p.eta2 = eta("eta2");
    p.eta3 = eta("eta3");
    set_initial_level(p, priors);
    if (j.contains("init_mean")) p.init_mean = vector_from_json(j["init_mean"], "init_mean");
    if (j.contains("init_var")) p.init_var = matrix_from_json(j["init_var"], "init_var");
    if (auto v = p.violations(); !v.empty()) throw ValidationError(std::move(v));
    return p;
}

inline json to_json(const SingleZoneParams& p) {
    json j;
    j["V"] = p.obs_var;
    j["W"] = to_json(Vector(p.sys_var));
    j["init_mean"] = to_json(Vector(p.init_mean));
    j["init_var"] = to_json(Matrix(p.init_var));
    return j;
}

inline SingleZoneParams single_params_from_json(const json& j) {
    static const std::set<std::string> known{"V", "W", "init_mean", "init_var"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ValidationError("unknown parameter key '" + k + "'");
    SingleZoneParams p;
    if (!j.contains("V") || !j["V"].is_number()) throw ValidationError("single-zone parameters need a numeric 'V'");
    p.obs_var = j["V"].get<double>();
    const Vector W = vector_from_json(j.at("W"), "W");
    if (W.size() != 3) throw ValidationError("single-zone W must have 3 entries");
    p.sys_var = W;
    if (j.contains("init_mean")) {
        const Vector m = vector_from_json(j["init_mean"], "init_mean");
        if (m.size() != 3) throw ValidationError("single-zone init_mean must have 3 entries");
        p.init_mean = m;
    }
    if (j.contains("init_var")) {
        const Matrix c = matrix_from_json(j["init_var"], "init_var");
        if (c.rows() != 3 || c.cols() != 3) throw ValidationError("single-zone init_var must be 3x3");
        p.init_var = c;
    }
    return p;
}

inline json to_json(const PriorSpec& p) {
    return {{"precision_shape", p.precision_shape}, {"precision_rate", p.precision_rate},
            {"log_sigma_mean", p.log_sigma_mean},   {"log_sigma_sd", p.log_sigma_sd},
            {"log_phi_mean", p.log_phi_mean},       {"log_phi_sd", p.log_phi_sd},
            {"gp_mean1", p.gp_mean1},               {"gp_mean2", p.gp_mean2},
            {"level_init_mean", p.level_init_mean}, {"level_init_var", p.level_init_var}};
}

inline PriorSpec priors_from_json(const json& j) {
    PriorSpec p;
    const std::pair<const char*, double*> fields[] = {
        {"precision_shape", &p.precision_shape}, {"precision_rate", &p.precision_rate},
        {"log_sigma_mean", &p.log_sigma_mean},   {"log_sigma_sd", &p.log_sigma_sd},
        {"log_phi_mean", &p.log_phi_mean},       {"log_phi_sd", &p.log_phi_sd},
        {"gp_mean1", &p.gp_mean1},               {"gp_mean2", &p.gp_mean2},
        {"level_init_mean", &p.level_init_mean}, {"level_init_var", &p.level_init_var}};
    for (const auto& [k, v] : j.items()) {
        bool found = false;
        for (const auto& [name, target] : fields)
            if (k == name) {
                if (!v.is_number()) throw ValidationError("priors." + k + " must be a number");
                *target = v.get<double>();
                found = true;
            }
        if (!found) throw ValidationError("unknown prior key '" + k + "'");
    }
    if (auto v = p.violations(); !v.empty()) throw ValidationError(std::move(v));
    return p;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

inline json read_json_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        // byte offset only; convert to a line number
        std::ifstream again(path);
        long line = 1;
        std::size_t pos = 0;
        char c;
        while (pos + 1 < e.byte && again.get(c)) {
            if (c == '\n') ++line;
            ++pos;
        }
        throw ParseError(path.string() + ": " + e.what(), line);
    }
}

// ---------------------------------------------------------------------------
// Draw archives and summaries

/// Latent paths as `draw,time,<column>,value`; the first time is t_0.
inline void write_paths_csv(std::ostream& out, const std::vector<LatentPath>& paths, const TimeGrid& grid,
                            const std::vector<std::string>& columns, const std::string& column_label = "zone") {
    out << "draw,time," << column_label << ",value\n";
    for (std::size_t r = 0; r < paths.size(); ++r) {
        const Matrix& s = paths[r].states;
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const double t = i == 0 ? grid.origin_time() : grid.times()[static_cast<std::size_t>(i - 1)];
            for (Eigen::Index j = 0; j < s.cols(); ++j)
                out << r << ',' << format_number(t) << ',' << columns[static_cast<std::size_t>(j)] << ','
                    << format_number(s(i, j)) << '\n';
        }
    }
}

/// `time,zone,mean,lo,hi` in time-major order.
inline void write_interval_csv(std::ostream& out, const std::vector<double>& times, const std::vector<std::string>& zones,
                               const IntervalSummary& s) {
    out << "time,zone,mean,lo,hi\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = 0; j < zones.size(); ++j) {
            const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
            out << format_number(times[i]) << ',' << zones[j] << ',' << format_number(s.mean(a, b)) << ','
                << format_number(s.lo(a, b)) << ',' << format_number(s.hi(a, b)) << '\n';
        }
}

/// `time,zone,draw,value`.
inline void write_draws_csv(std::ostream& out, const std::vector<double>& times, const std::vector<std::string>& zones,
                            const std::vector<Matrix>& draws) {
    out << "time,zone,draw,value\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = 0; j < zones.size(); ++j)
            for (std::size_t r = 0; r < draws.size(); ++r)
                out << format_number(times[i]) << ',' << zones[j] << ',' << r << ','
                    << format_number(draws[r](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
}

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Posterior mean and equal-tailed interval of each column.
inline std::vector<ParameterSummary> summarize_columns(const std::vector<std::string>& names, const Matrix& draws,
                                                       double lower = 0.025, double upper = 0.975) {
    std::vector<ParameterSummary> out;
    for (Eigen::Index k = 0; k < draws.cols(); ++k) {
        std::vector<double> col(draws.col(k).data(), draws.col(k).data() + draws.rows());
        out.push_back({names[static_cast<std::size_t>(k)], draws.col(k).mean(), quantile(col, lower), quantile(col, upper)});
    }
    return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<ParameterSummary>& rows) {
    out << "parameter,mean,lo,hi\n";
    for (const auto& r : rows)
        out << r.name << ',' << format_number(r.mean) << ',' << format_number(r.lo) << ',' << format_number(r.hi) << '\n';
}

/// Fixed-width text table: parameter, posterior mean, 95% interval.
inline void write_summary_table(std::ostream& out, const std::vector<ParameterSummary>& rows, const std::string& title) {
    std::size_t width = 9;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    out << title << '\n';
    out << std::left << std::setw(static_cast<int>(width) + 2) << "Parameter" << std::right << std::setw(10) << "Mean"
        << "   95% CI\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& r : rows)
        out << std::left << std::setw(static_cast<int>(width) + 2) << r.name << std::right << std::setw(10) << r.mean
            << "   (" << r.lo << ", " << r.hi << ")\n";
    out << std::defaultfloat << std::setprecision(6);
}

/// `zone,single_rmse,joint_rmse`.
inline void write_compare_csv(std::ostream& out, const std::vector<std::string>& zones, const Vector& single,
                              const Vector& joint) {
    out << "zone,single_rmse,joint_rmse\n";
    for (std::size_t j = 0; j < zones.size(); ++j)
        out << zones[j] << ',' << format_number(single(static_cast<Eigen::Index>(j))) << ','
            << format_number(joint(static_cast<Eigen::Index>(j))) << '\n';
}

} // namespace sdlm::io

#endif
