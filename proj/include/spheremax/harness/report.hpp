#ifndef SPHEREMAX_HARNESS_REPORT_HPP
#define SPHEREMAX_HARNESS_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spheremax/fit.hpp"
#include "spheremax/harness/config.hpp"

namespace spheremax::harness {

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip text for a double (locale independent).
inline std::string num(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    return buf;
}

inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

/// JSON numbers cannot carry inf / nan.
inline nlohmann::json jnum(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return num(v);
}

struct Column {
    std::string name;
    std::string unit;  // "1" for dimensionless
};

/// One pass/fail threshold.
struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  // "<=", ">=", "<", ">", "=="
    double threshold = 0.0;
    bool pass = false;
};

inline Check check(std::string name, double value, std::string relation, double threshold)
{
    bool ok = false;
    if (relation == "<=") {
        ok = value <= threshold;
    } else if (relation == "<") {
        ok = value < threshold;
    } else if (relation == ">=") {
        ok = value >= threshold;
    } else if (relation == ">") {
        ok = value > threshold;
    } else if (relation == "==") {
        ok = value == threshold;
    } else {
        throw std::invalid_argument("check: unknown relation " + relation);
    }
    return {std::move(name), value, std::move(relation), threshold, ok};
}

/// A named log-log series for the plot (and the fit, when present).
struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (log2 x, log2 y)
    bool has_fit = false;
    FitReport fit;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<Column> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<Check> checks;
    std::vector<Series> series;
    nlohmann::json summary = nlohmann::json::object();

    void add_row(std::vector<std::string> row)
    {
        if (row.size() != columns.size()) {
            throw std::logic_error("ExperimentResult: row width does not match schema of " + experiment);
        }
        rows.push_back(std::move(row));
    }

    Check& add_check(std::string name, double value, std::string relation, double threshold)
    {
        checks.push_back(check(std::move(name), value, std::move(relation), threshold));
        return checks.back();
    }

    void add_fit(std::string name, FitReport fit)
    {
        Series s{std::move(name), fit.points, true, std::move(fit)};
        series.push_back(std::move(s));
    }

    [[nodiscard]] bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
};

inline std::string to_csv(const ExperimentResult& r, std::uint64_t hash)
{
    std::ostringstream os;
    os << "# spheremax-csv v" << kSchemaVersion << " experiment=" << r.experiment << " config_hash=" << hex64(hash)
       << '\n';
    os << "# units:";
    for (const auto& c : r.columns) {
        os << ' ' << c.name << '[' << c.unit << ']';
    }
    os << '\n';
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        os << (i ? "," : "") << r.columns[i].name;
    }
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << row[i];
        }
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json fit_json(const FitReport& f)
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [x, y] : f.points) {
        pts.push_back({jnum(x), jnum(y)});
    }
    return {{"slope", jnum(f.slope)},
            {"intercept", jnum(f.intercept)},
            {"r_squared", jnum(f.r_squared)},
            {"points", pts},
            {"config_hash", hex64(f.config_hash)}};
}

inline nlohmann::json to_json(const ExperimentResult& r, const ResolvedConfig& cfg)
{
    const std::uint64_t hash = config_hash(cfg);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"value", jnum(c.value)},
                          {"relation", c.relation},
                          {"threshold", jnum(c.threshold)},
                          {"pass", c.pass}});
    }
    nlohmann::json fits = nlohmann::json::object();
    for (const auto& s : r.series) {
        if (s.has_fit) {
            FitReport f = s.fit;
            f.config_hash = hash;
            fits[s.name] = fit_json(f);
        }
    }
    return {{"schema_version", kSchemaVersion},
            {"experiment", r.experiment},
            {"config", to_json(cfg)},
            {"config_hash", hex64(hash)},
            {"checks", checks},
            {"fits", fits},
            {"summary", r.summary},
            {"passed", r.passed()}};
}

/// Log-log plot: points per series plus the fitted line where present.
inline std::string to_svg(const ExperimentResult& r)
{
    constexpr double W = 640.0;
    constexpr double H = 420.0;
    constexpr double pad = 56.0;
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    for (const auto& s : r.series) {
        for (const auto& [x, y] : s.points) {
            if (std::isfinite(x) && std::isfinite(y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
        }
    }
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << r.experiment << "</text>\n";
    if (!(x1 > x0)) {
        os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no log-log data</text>\n</svg>\n";
        return os.str();
    }
    if (!(y1 > y0)) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    const auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
    const auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
    os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - pad + 16 << "\" text-anchor=\"middle\">" << num(std::round(xv * 100) / 100) << "</text>\n";
        os << "<text x=\"" << pad - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(std::round(yv * 100) / 100) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">log2 x</text>\n";
    os << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2 << ")\" text-anchor=\"middle\">log2 y</text>\n";
    for (std::size_t i = 0; i < r.series.size(); ++i) {
        const auto& s = r.series[i];
        const char* col = colours[i % std::size(colours)];
        for (const auto& [x, y] : s.points) {
            if (std::isfinite(x) && std::isfinite(y)) {
                os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
            }
        }
        if (s.has_fit && !s.points.empty()) {
            const double a = s.points.front().first;
            const double b = s.points.back().first;
            os << "<line x1=\"" << num(px(a)) << "\" y1=\"" << num(py(s.fit.intercept + s.fit.slope * a)) << "\" x2=\""
               << num(px(b)) << "\" y2=\"" << num(py(s.fit.intercept + s.fit.slope * b)) << "\" stroke=\"" << col
               << "\"/>\n";
        }
        os << "<text x=\"" << W - pad - 4 << "\" y=\"" << pad + 14 * static_cast<double>(i) << "\" text-anchor=\"end\" fill=\"" << col
           << "\">" << s.name;
        if (s.has_fit) {
            os << " (slope " << num(std::round(s.fit.slope * 1000) / 1000) << ")";
        }
        os << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace spheremax::harness

#endif  // SPHEREMAX_HARNESS_REPORT_HPP
