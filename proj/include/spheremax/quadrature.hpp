#ifndef SPHEREMAX_QUADRATURE_HPP
#define SPHEREMAX_QUADRATURE_HPP

// One-dimensional quadrature building blocks: Gauss-Legendre rules of any
// order, adaptive Gauss-Kronrod with error reporting, and pairwise sums.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spheremax {

/// Thrown when a refinement loop exhausts its budget without meeting tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace))
    {
    }
    [[nodiscard]] const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int order)
    {
        if (order < 1) {
            throw std::invalid_argument("GaussLegendre: order must be >= 1");
        }
        const auto n = static_cast<std::size_t>(order);
        nodes.assign(n, 0.0);
        weights.assign(n, 2.0);
        if (order == 1) {
            return;
        }
        // P_n(x) and P_n'(x) by the three-term recurrence
        const auto legendre = [order](double x) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            return std::pair{p1, order * (x * p1 - p0) / (x * x - 1.0)};
        };
        for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (order + 0.5));
            for (int iter = 0; iter < 100; ++iter) {
                const auto [p, dp] = legendre(x);
                const double dx = p / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) {
                    break;
                }
            }
            const double dp = legendre(x).second;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
    }

    /// Applies the rule on [a, b].
    template <class F>
    double integrate(F&& f, double a, double b) const
    {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            sum += weights[i] * f(mid + half * nodes[i]);
        }
        return sum * half;
    }
};

/// Adaptive 15-point Gauss-Kronrod on [a, b] (endpoints are never evaluated).
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10, unsigned max_depth = 20)
{
    if (a == b) {
        return {};
    }
    double error = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, max_depth, rel_tol, &error, &l1);
    return {value, error};
}

/// Integrates over consecutive panels [breaks[i], breaks[i+1]].
template <class F>
QuadResult integrate_panels(F&& f, std::span<const double> breaks, double rel_tol = 1e-10, unsigned max_depth = 20)
{
    QuadResult total;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const QuadResult part = integrate_adaptive(f, breaks[i], breaks[i + 1], rel_tol, max_depth);
        total.value += part.value;
        total.error += part.error;
    }
    return total;
}

/// Pairwise (cascade) summation in a fixed tree order.
inline double pairwise_sum(std::span<const double> values)
{
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace spheremax

#endif  // SPHEREMAX_QUADRATURE_HPP
