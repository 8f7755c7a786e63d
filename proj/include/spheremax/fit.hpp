#ifndef SPHEREMAX_FIT_HPP
#define SPHEREMAX_FIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spheremax {

/// Ordinary least-squares line through (log2 x, log2 y).
struct FitReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  // (log2 x, log2 y)
    std::uint64_t config_hash = 0;
};

inline FitReport fit_loglog(std::span<const std::pair<double, double>> data)
{
    if (data.size() < 3) {
        throw std::invalid_argument("fit_loglog: need at least 3 points");
    }
    FitReport report;
    report.points.reserve(data.size());
    for (const auto& [x, y] : data) {
        if (!(x > 0.0) || !(y > 0.0)) {
            throw std::invalid_argument("fit_loglog: coordinates must be positive");
        }
        report.points.emplace_back(std::log2(x), std::log2(y));
    }
    const double count = static_cast<double>(report.points.size());
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [lx, ly] : report.points) {
        mx += lx;
        my += ly;
    }
    mx /= count;
    my /= count;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& [lx, ly] : report.points) {
        sxx += (lx - mx) * (lx - mx);
        sxy += (lx - mx) * (ly - my);
        syy += (ly - my) * (ly - my);
    }
    if (sxx <= 1e-24 * std::max(1.0, mx * mx)) {
        throw std::invalid_argument("fit_loglog: abscissae are degenerate");
    }
    report.slope = sxy / sxx;
    report.intercept = my - report.slope * mx;
    double ss_res = 0.0;
    for (const auto& [lx, ly] : report.points) {
        const double r = ly - (report.intercept + report.slope * lx);
        ss_res += r * r;
    }
    report.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return report;
}

inline FitReport fit_loglog(const std::vector<std::pair<double, double>>& data)
{
    return fit_loglog(std::span<const std::pair<double, double>>(data));
}

}  // namespace spheremax

#endif  // SPHEREMAX_FIT_HPP
