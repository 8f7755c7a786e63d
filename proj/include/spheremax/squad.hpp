#ifndef SPHEREMAX_SQUAD_HPP
#define SPHEREMAX_SQUAD_HPP

// Quadrature on unit spheres S^{d-1} in R^d.
//
//  * Monte Carlo with Philox substreams per fixed-size shard.
//  * Change of variables: S^{2n-1} as the ball B_n in y (|y| = sin t) times a
//    sphere of radius cos t in z, weight sin^{n-1} t cos^{n-1} t.
//  * Hemisphere graph: S^{d-1} as two graphs over B_{d-1}, |w| = sin t,
//    weight sin^{d-2} t.
//
// Product rules are exact parameterisations for S^0, S^1, S^2 and recurse
// through the same split S^{a+b-1} ~ [0, pi/2] x S^{a-1} x S^{b-1} above.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "spheremax/parallel.hpp"
#include "spheremax/quadrature.hpp"
#include "spheremax/random.hpp"
#include "spheremax/specfn.hpp"

namespace spheremax::squad {

/// Materialised nodes and weights on S^{d-1}.
struct PointSet {
    int d = 0;
    std::vector<double> coords;  // size() * d, node-major
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
    [[nodiscard]] std::span<const double> node(std::size_t i) const
    {
        return {coords.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

/// Product rule on S^{d-1}. `res` is the Gauss-Legendre order of each
/// polar factor; circles use 2 * res trapezoid nodes.
inline PointSet sphere_points(int d, int res)
{
    if (d < 1) {
        throw std::invalid_argument("sphere_points: d must be >= 1");
    }
    if (res < 1) {
        throw std::invalid_argument("sphere_points: resolution must be >= 1");
    }
    PointSet ps;
    ps.d = d;
    if (d == 1) {
        ps.coords = {-1.0, 1.0};
        ps.weights = {1.0, 1.0};
        return ps;
    }
    if (d == 2) {
        const int m = 2 * res;
        for (int k = 0; k < m; ++k) {
            const double a = 2.0 * std::numbers::pi * k / m;
            ps.coords.push_back(std::cos(a));
            ps.coords.push_back(std::sin(a));
            ps.weights.push_back(2.0 * std::numbers::pi / m);
        }
        return ps;
    }
    if (d == 3) {
        const GaussLegendre gl(res);
        const int m = 2 * res;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double c = gl.nodes[i];
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int k = 0; k < m; ++k) {
                const double a = 2.0 * std::numbers::pi * k / m;
                ps.coords.push_back(s * std::cos(a));
                ps.coords.push_back(s * std::sin(a));
                ps.coords.push_back(c);
                ps.weights.push_back(gl.weights[i] * 2.0 * std::numbers::pi / m);
            }
        }
        return ps;
    }
    const int a = d / 2;
    const int b = d - a;
    const PointSet left = sphere_points(a, res);
    const PointSet right = sphere_points(b, res);
    const GaussLegendre gl(res);
    const double half = std::numbers::pi / 4.0;
    ps.coords.reserve(gl.nodes.size() * left.size() * right.size() * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = half + half * gl.nodes[i];
        const double s = std::sin(t);
        const double c = std::cos(t);
        const double wt = half * gl.weights[i] * std::pow(s, a - 1) * std::pow(c, b - 1);
        for (std::size_t p = 0; p < left.size(); ++p) {
            for (std::size_t q = 0; q < right.size(); ++q) {
                for (double x : left.node(p)) {
                    ps.coords.push_back(s * x);
                }
                for (double x : right.node(q)) {
                    ps.coords.push_back(c * x);
                }
                ps.weights.push_back(wt * left.weights[p] * right.weights[q]);
            }
        }
    }
    return ps;
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Uniform point on S^{d-1}: normalised isotropic Gaussian.
inline void sample_sphere(std::span<double> out, RandomStream& rng)
{
    if (out.empty()) {
        throw std::invalid_argument("sample_sphere: d must be >= 1");
    }
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& x : out) {
            x = rng.normal();
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : out) {
        x *= inv;
    }
}

inline std::vector<double> sample_sphere(int d, RandomStream& rng)
{
    if (d < 1) {
        throw std::invalid_argument("sample_sphere: d must be >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(d));
    sample_sphere(out, rng);
    return out;
}

template <class T>
struct McResult {
    T value{};
    double standard_error = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kShardSize = 4096;

namespace detail {

template <class T>
double abs2(const T& x)
{
    if constexpr (std::is_floating_point_v<T>) {
        return x * x;
    } else {
        return std::norm(x);
    }
}

template <class T>
struct Moments {
    double count = 0.0;
    T mean{};
    double m2 = 0.0;  // sum |x - mean|^2

    void add(const T& x)
    {
        count += 1.0;
        const T delta = x - mean;
        mean += delta / count;
        if constexpr (std::is_floating_point_v<T>) {
            m2 += delta * (x - mean);
        } else {
            m2 += std::real(std::conj(delta) * (x - mean));
        }
    }
    // Chan et al. pairwise merge
    static Moments merge(const Moments& a, const Moments& b)
    {
        if (a.count == 0.0) {
            return b;
        }
        if (b.count == 0.0) {
            return a;
        }
        Moments out;
        out.count = a.count + b.count;
        const T delta = b.mean - a.mean;
        out.mean = a.mean + delta * (b.count / out.count);
        out.m2 = a.m2 + b.m2 + abs2(delta) * a.count * b.count / out.count;
        return out;
    }
};

template <class T>
Moments<T> merge_tree(std::span<const Moments<T>> parts)
{
    if (parts.size() == 1) {
        return parts[0];
    }
    const std::size_t half = parts.size() / 2;
    return Moments<T>::merge(merge_tree(parts.first(half)), merge_tree(parts.subspan(half)));
}

}  // namespace detail

/// Monte Carlo integral of F over S^{d-1}: surface measure times the sample
/// mean, with its standard error. Shard k of kShardSize samples draws from
/// Philox stream (seed, k), so the result is independent of worker count.
template <class F>
auto integrate_mc(int d, F&& f, std::size_t samples, std::uint64_t seed, unsigned workers = 0)
{
    using T = std::decay_t<decltype(f(std::span<const double>{}))>;
    if (d < 1) {
        throw std::invalid_argument("integrate_mc: d must be >= 1");
    }
    if (samples == 0) {
        throw std::invalid_argument("integrate_mc: need at least one sample");
    }
    const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
    std::vector<detail::Moments<T>> parts(shards);
    parallel_for(
        shards,
        [&](std::size_t k) {
            RandomStream rng(seed, k);
            std::vector<double> x(static_cast<std::size_t>(d));
            const std::size_t count = std::min(kShardSize, samples - k * kShardSize);
            detail::Moments<T> m;
            for (std::size_t i = 0; i < count; ++i) {
                sample_sphere(x, rng);
                m.add(f(std::span<const double>(x)));
            }
            parts[k] = m;
        },
        workers);
    const auto total = detail::merge_tree<T>(parts);
    const double area = specfn::sphere_area(d);
    McResult<T> out;
    out.samples = samples;
    out.value = total.mean * area;
    out.standard_error =
        samples > 1 ? area * std::sqrt(total.m2 / (total.count - 1.0) / total.count) : 0.0;
    return out;
}

/// |a - b| <= 3 SE, with a 1e-12 relative floor for zero-variance integrands.
template <class T>
bool within_mc_error(const T& estimate, double standard_error, const T& reference, double sigmas = 3.0)
{
    const double diff = std::abs(estimate - reference);
    return diff <= sigmas * standard_error + 1e-12 * std::abs(reference);
}

// ---------------------------------------------------------------------------
// Deterministic rules

struct Resolution {
    int outer = 12;  ///< Gauss-Legendre order in the splitting angle
    int inner = 6;   ///< resolution of the factor sphere rules

    [[nodiscard]] Resolution doubled() const { return {2 * outer, 2 * inner}; }
};

struct RefineOptions {
    Resolution start{};
    double rel_tol = 1e-7;
    double abs_tol = 1e-13;
    int max_doublings = 3;
};

namespace detail {

template <class T>
T pairwise(std::span<const T> v)
{
    if (v.size() <= 8) {
        T s{};
        for (const T& x : v) {
            s += x;
        }
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise(v.first(half)) + pairwise(v.subspan(half));
}

// One evaluation of the change-of-variables rule on S^{2n-1}.
template <class F>
auto cov_once(int n, const F& f, Resolution res, unsigned workers)
{
    using T = std::decay_t<decltype(f(std::span<const double>{}, std::span<const double>{}))>;
    const PointSet ball_dirs = sphere_points(n, res.inner);
    const PointSet fibre = sphere_points(n, res.inner);
    const GaussLegendre gl(res.outer);
    const double half = std::numbers::pi / 4.0;
    std::vector<T> parts(gl.nodes.size());
    parallel_for(
        gl.nodes.size(),
        [&](std::size_t i) {
            const double t = half + half * gl.nodes[i];
            const double s = std::sin(t);
            const double c = std::cos(t);
            std::vector<double> y(static_cast<std::size_t>(n));
            std::vector<double> z(static_cast<std::size_t>(n));
            std::vector<T> rows(ball_dirs.size());
            for (std::size_t p = 0; p < ball_dirs.size(); ++p) {
                const auto w = ball_dirs.node(p);
                for (int k = 0; k < n; ++k) {
                    y[static_cast<std::size_t>(k)] = s * w[static_cast<std::size_t>(k)];
                }
                T row{};
                for (std::size_t q = 0; q < fibre.size(); ++q) {
                    const auto v = fibre.node(q);
                    for (int k = 0; k < n; ++k) {
                        z[static_cast<std::size_t>(k)] = c * v[static_cast<std::size_t>(k)];
                    }
                    row += fibre.weights[q] * f(std::span<const double>(y), std::span<const double>(z));
                }
                rows[p] = ball_dirs.weights[p] * row;
            }
            parts[i] = half * gl.weights[i] * std::pow(s, n - 1) * std::pow(c, n - 1) *
                       pairwise<T>(std::span<const T>(rows));
        },
        workers);
    return pairwise<T>(std::span<const T>(parts));
}

// One evaluation of the hemisphere-graph rule on S^{2n-1}.
template <class F>
auto hemigraph_once(int n, const F& f, Resolution res, unsigned workers)
{
    using T = std::decay_t<decltype(f(std::span<const double>{}, std::span<const double>{}))>;
    const int d = 2 * n;
    const PointSet base = sphere_points(d - 1, res.inner);
    const GaussLegendre gl(res.outer);
    const double half = std::numbers::pi / 4.0;
    std::vector<T> parts(gl.nodes.size());
    parallel_for(
        gl.nodes.size(),
        [&](std::size_t i) {
            const double t = half + half * gl.nodes[i];
            const double s = std::sin(t);
            const double c = std::cos(t);
            std::vector<double> x(static_cast<std::size_t>(d));
            const auto nn = static_cast<std::size_t>(n);
            const std::span<const double> y(x.data(), nn);
            const std::span<const double> z(x.data() + nn, nn);
            std::vector<T> rows(base.size());
            for (std::size_t p = 0; p < base.size(); ++p) {
                const auto w = base.node(p);
                for (int k = 0; k < d - 1; ++k) {
                    x[static_cast<std::size_t>(k)] = s * w[static_cast<std::size_t>(k)];
                }
                x.back() = c;
                T value = f(y, z);
                x.back() = -c;
                value += f(y, z);
                rows[p] = base.weights[p] * value;
            }
            parts[i] = half * gl.weights[i] * std::pow(s, d - 2) * pairwise<T>(std::span<const T>(rows));
        },
        workers);
    return pairwise<T>(std::span<const T>(parts));
}

template <class T>
double magnitude(const T& x)
{
    return std::abs(x);
}

template <class Once>
auto refine(const char* who, Once once, const RefineOptions& opt)
{
    Resolution res = opt.start;
    auto value = once(res);
    std::vector<double> trace{magnitude(value)};
    for (int k = 0; k < opt.max_doublings; ++k) {
        res = res.doubled();
        const auto next = once(res);
        trace.push_back(magnitude(next));
        const double change = magnitude(next - value);
        value = next;
        if (change <= opt.rel_tol * magnitude(next) + opt.abs_tol) {
            return value;
        }
    }
    throw ConvergenceError(std::string(who) + ": resolution doubling did not converge", trace);
}

}  // namespace detail

/// Integral over S^{2n-1} of F(y, z), y, z in R^n, by the change-of-variables
/// rule, doubling resolution until two successive values agree.
template <class F>
auto integrate_cov(int n, const F& f, const RefineOptions& opt = {}, unsigned workers = 0)
{
    if (n < 1) {
        throw std::invalid_argument("integrate_cov: n must be >= 1");
    }
    return detail::refine(
        "integrate_cov", [&](Resolution r) { return detail::cov_once(n, f, r, workers); }, opt);
}

/// Single evaluation at a fixed resolution (no refinement).
template <class F>
auto integrate_cov_fixed(int n, const F& f, Resolution res, unsigned workers = 0)
{
    if (n < 1) {
        throw std::invalid_argument("integrate_cov: n must be >= 1");
    }
    return detail::cov_once(n, f, res, workers);
}

/// Integral over S^{2n-1} of F(y, z) through the two hemisphere graphs over B_{2n-1}.
template <class F>
auto integrate_hemigraph(int n, const F& f, const RefineOptions& opt = {}, unsigned workers = 0)
{
    if (n < 1) {
        throw std::invalid_argument("integrate_hemigraph: n must be >= 1");
    }
    return detail::refine(
        "integrate_hemigraph", [&](Resolution r) { return detail::hemigraph_once(n, f, r, workers); }, opt);
}

template <class F>
auto integrate_hemigraph_fixed(int n, const F& f, Resolution res, unsigned workers = 0)
{
    if (n < 1) {
        throw std::invalid_argument("integrate_hemigraph: n must be >= 1");
    }
    return detail::hemigraph_once(n, f, res, workers);
}

// ---------------------------------------------------------------------------
// SphereRule: a uniform handle over the three methods

class SphereRule {
public:
    enum class Method { MonteCarlo, ChangeOfVariables, HemisphereGraph };

    static SphereRule monte_carlo(int d, std::size_t samples, std::uint64_t seed)
    {
        if (d < 1 || samples == 0) {
            throw std::invalid_argument("SphereRule::monte_carlo: need d >= 1 and samples > 0");
        }
        SphereRule rule(d, Method::MonteCarlo);
        rule.points_.d = d;
        rule.points_.coords.resize(samples * static_cast<std::size_t>(d));
        rule.points_.weights.assign(samples, specfn::sphere_area(d) / static_cast<double>(samples));
        const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
        for (std::size_t k = 0; k < shards; ++k) {
            RandomStream rng(seed, k);
            const std::size_t count = std::min(kShardSize, samples - k * kShardSize);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t idx = k * kShardSize + i;
                sample_sphere(std::span<double>(rule.points_.coords.data() + idx * static_cast<std::size_t>(d),
                                                static_cast<std::size_t>(d)),
                              rng);
            }
        }
        return rule;
    }

    /// Product rule on S^{d-1}, d even, split as y, z in R^{d/2}.
    static SphereRule change_of_variables(int d, int outer, int inner)
    {
        if (d < 2 || d % 2 != 0) {
            throw std::invalid_argument("SphereRule::change_of_variables: d must be even and >= 2");
        }
        SphereRule rule(d, Method::ChangeOfVariables);
        const int n = d / 2;
        const PointSet dirs = sphere_points(n, inner);
        const GaussLegendre gl(outer);
        const double half = std::numbers::pi / 4.0;
        rule.points_.d = d;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double t = half + half * gl.nodes[i];
            const double s = std::sin(t);
            const double c = std::cos(t);
            const double wt = half * gl.weights[i] * std::pow(s, n - 1) * std::pow(c, n - 1);
            for (std::size_t p = 0; p < dirs.size(); ++p) {
                for (std::size_t q = 0; q < dirs.size(); ++q) {
                    for (double x : dirs.node(p)) {
                        rule.points_.coords.push_back(s * x);
                    }
                    for (double x : dirs.node(q)) {
                        rule.points_.coords.push_back(c * x);
                    }
                    rule.points_.weights.push_back(wt * dirs.weights[p] * dirs.weights[q]);
                }
            }
        }
        return rule;
    }

    static SphereRule hemisphere_graph(int d, int resolution)
    {
        if (d < 2) {
            throw std::invalid_argument("SphereRule::hemisphere_graph: d must be >= 2");
        }
        SphereRule rule(d, Method::HemisphereGraph);
        const PointSet base = sphere_points(d - 1, resolution);
        const GaussLegendre gl(2 * resolution);
        const double half = std::numbers::pi / 4.0;
        rule.points_.d = d;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double t = half + half * gl.nodes[i];
            const double s = std::sin(t);
            const double c = std::cos(t);
            const double wt = half * gl.weights[i] * std::pow(s, d - 2);
            for (double sign : {1.0, -1.0}) {
                for (std::size_t p = 0; p < base.size(); ++p) {
                    for (double x : base.node(p)) {
                        rule.points_.coords.push_back(s * x);
                    }
                    rule.points_.coords.push_back(sign * c);
                    rule.points_.weights.push_back(wt * base.weights[p]);
                }
            }
        }
        return rule;
    }

    [[nodiscard]] int dimension() const { return d_; }
    [[nodiscard]] Method method() const { return method_; }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] std::span<const double> node(std::size_t i) const { return points_.node(i); }
    [[nodiscard]] double weight(std::size_t i) const { return points_.weights[i]; }
    [[nodiscard]] const PointSet& points() const { return points_; }

    [[nodiscard]] double total_weight() const { return pairwise_sum(points_.weights); }

    /// Weighted sum of F over the nodes (pairwise reduction).
    template <class F>
    auto integrate(const F& f) const
    {
        using T = std::decay_t<decltype(f(std::span<const double>{}))>;
        std::vector<T> terms(size());
        for (std::size_t i = 0; i < size(); ++i) {
            terms[i] = points_.weights[i] * f(node(i));
        }
        return detail::pairwise<T>(std::span<const T>(terms));
    }

private:
    SphereRule(int d, Method m) : d_(d), method_(m) {}

    int d_;
    Method method_;
    PointSet points_;
};

}  // namespace spheremax::squad

#endif  // SPHEREMAX_SQUAD_HPP
