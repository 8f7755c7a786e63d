#ifndef SPHEREMAX_CEX_HPP
#define SPHEREMAX_CEX_HPP

// Counterexample family for the bilinear spherical maximal function.
//
//   f(y) = |y|^{-n/p1} (log 1/|y|)^{-2/p1} on 0 < |y| <= cutoff_f
//   g(y) = |y|^{-n/p2} (log 1/|y|)^{-2/p2} on 0 < |y| <= cutoff_g
//
// and the average M_{sqrt2 R}(f, g)(R e1) over S^{2n-1}, which localises to
// y, z near e1 / sqrt2. All singular integrals are taken in variables where
// the integrand is smooth: w = 1 / log(1/s) for the radial singularities and
// a hyperbolic substitution for the inner circle integral.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spheremax/fit.hpp"
#include "spheremax/parallel.hpp"
#include "spheremax/quadrature.hpp"
#include "spheremax/specfn.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace spheremax::cex {

enum class Which { F, G };

struct CexPair {
    int n = 1;
    double p1 = 2.0;
    double p2 = 2.0;
    double cutoff_f = 0.5;
    double cutoff_g = 0.5;

    /// Standard pair: cutoff_f = 1/2 for n = 1, 1/100 for n >= 2; cutoff_g = 1/2.
    static CexPair make(int n, double p1, double p2)
    {
        if (n < 1) {
            throw std::invalid_argument("CexPair: n must be >= 1");
        }
        if (!(p1 >= 1.0) || !(p2 >= 1.0)) {
            throw std::invalid_argument("CexPair: exponents must be >= 1");
        }
        return {n, p1, p2, n == 1 ? 0.5 : 0.01, 0.5};
    }

    /// Symmetric pair with target exponent p (p1 = p2 = 2p).
    static CexPair symmetric(int n, double p) { return make(n, 2.0 * p, 2.0 * p); }

    [[nodiscard]] double p() const { return 1.0 / (1.0 / p1 + 1.0 / p2); }
    [[nodiscard]] double threshold() const { return n / (2.0 * n - 1.0); }
    [[nodiscard]] double exponent(Which w) const { return w == Which::F ? p1 : p2; }
    [[nodiscard]] double cutoff(Which w) const { return w == Which::F ? cutoff_f : cutoff_g; }
};

/// log of r^{-n/q} (log 1/r)^{-2/q} given log r < 0.
inline double log_profile(double log_r, int n, double q) { return -(n / q) * log_r - (2.0 / q) * std::log(-log_r); }

/// Radial profile at |y| = r (+inf at r = 0, 0 outside the support).
inline double profile(const CexPair& pair, Which which, double r)
{
    if (r == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (r > pair.cutoff(which)) {
        return 0.0;
    }
    return std::exp(log_profile(std::log(r), pair.n, pair.exponent(which)));
}

inline double eval_cex(const CexPair& pair, Which which, std::span<const double> y)
{
    if (y.size() != static_cast<std::size_t>(pair.n)) {
        throw std::invalid_argument("eval_cex: point has the wrong dimension");
    }
    double r2 = 0.0;
    for (double v : y) {
        r2 += v * v;
    }
    return profile(pair, which, std::sqrt(r2));
}

/// \int_{shell} |f|^q over 2^{-k-1} < |y| <= min(2^{-k}, cutoff), for k = 0..k_max.
/// Computed in w = 1/log(1/r), where the radial integrand is smooth.
inline std::vector<double> lp_shells(const CexPair& pair, Which which, int k_max)
{
    const double q = pair.exponent(which);
    const double omega = specfn::sphere_area(pair.n);
    std::vector<double> out;
    for (int k = 0; k <= k_max; ++k) {
        const double hi = std::min(std::ldexp(1.0, -k), pair.cutoff(which));
        const double lo = std::ldexp(1.0, -k - 1);
        if (hi <= lo) {
            out.push_back(0.0);
            continue;
        }
        // r^{-n} (log 1/r)^{-2} r^{n-1} dr = (log 1/r)^{-2} dr / r = dw
        const auto integrand = [&](double w) {
            const double log_r = -1.0 / w;
            const double val = std::exp(q * log_profile(log_r, pair.n, q) + pair.n * log_r);
            return omega * val / (w * w);
        };
        // 1e-12 sits below Gauss-Kronrod's own error floor on the far shells
        out.push_back(integrate_adaptive(integrand, -1.0 / std::log(lo), -1.0 / std::log(hi), 1e-10).value);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Integrands on S^{2n-1}

/// F(y, z) = f(R e1 - sqrt2 R y) g(R e1 - sqrt2 R z): the average at R e1.
inline double sphere_integrand(const CexPair& pair, double R, std::span<const double> y, std::span<const double> z)
{
    const int n = pair.n;
    double dy = 0.0;
    double dz = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = i == 0 ? R : 0.0;
        const auto ui = static_cast<std::size_t>(i);
        dy += (e - std::sqrt(2.0) * R * y[ui]) * (e - std::sqrt(2.0) * R * y[ui]);
        dz += (e - std::sqrt(2.0) * R * z[ui]) * (e - std::sqrt(2.0) * R * z[ui]);
    }
    const double a = profile(pair, Which::F, std::sqrt(dy));
    if (a == 0.0) {
        return 0.0;
    }
    const double b = profile(pair, Which::G, std::sqrt(dz));
    return a * b;
}

/// n = 1 reduced integrand in y (arc through (y, sqrt(1 - y^2))), weight 1/z included.
inline double reduced_integrand_1d(const CexPair& pair, double R, double y)
{
    const double z = std::sqrt(1.0 - y * y);
    return profile(pair, Which::F, R * std::abs(1.0 - std::sqrt(2.0) * y)) *
           profile(pair, Which::G, R * std::abs(1.0 - std::sqrt(2.0) * z)) / z;
}

// ---------------------------------------------------------------------------
// n = 1

namespace detail {

inline void require_scale(double R)
{
    if (!(R >= 100.0)) {
        throw std::invalid_argument("cex_average: R must be >= 100 for the support to localise");
    }
}

inline void require_converged(const QuadResult& q, const char* who, double rel = 1e-4)
{
    if (!std::isfinite(q.value) || q.error > rel * std::abs(q.value) + 1e-300) {
        throw ConvergenceError(std::string(who) + ": adaptive quadrature did not reach tolerance",
                               {q.value, q.error});
    }
}

// Side of u = 1 - sqrt2 y (sign +1 or -1). Radial parameter s = R |u| in
// [s_lo, s_hi]; w = 1/log(1/s). Returns \int f g dy / z over that side.
inline QuadResult n1_side(const CexPair& pair, double R, int sign, double s_lo)
{
    // g support: |1 - sqrt2 z| <= cutoff_g / R, solved exactly for u
    const double c = pair.cutoff_g / R;
    const double edge = sign > 0 ? 1.0 - std::sqrt(1.0 - 2.0 * c - c * c) : std::sqrt(1.0 + 2.0 * c - c * c) - 1.0;
    const double u_hi = std::min(pair.cutoff_f / R, edge);
    const double s_hi = R * u_hi;
    if (!(s_hi > s_lo)) {
        return {};
    }
    const double w_lo = s_lo > 0.0 ? -1.0 / std::log(s_lo) : 0.0;
    const double w_hi = -1.0 / std::log(s_hi);
    const auto integrand = [&](double w) {
        const double log_s = -1.0 / w;
        const double u = sign * std::exp(log_s) / R;
        const double root_term = std::sqrt(1.0 + 2.0 * u - u * u);
        // |1 - sqrt2 z| / |u|, stable for tiny u
        const double q = (2.0 - u) / (1.0 + root_term);
        const double log_sg = log_s + std::log(q);
        const double z = root_term / std::sqrt(2.0);
        const double log_val = log_profile(log_s, 1, pair.p1) + log_profile(log_sg, 1, pair.p2) + log_s -
                               2.0 * std::log(w);
        // dy = du / sqrt2, |du| = |u| dw / w^2
        return std::exp(log_val) / (R * std::sqrt(2.0) * z);
    };
    return integrate_adaptive(integrand, w_lo, w_hi, 1e-10, 25);
}

}  // namespace detail

/// M_{sqrt2 R}(f, g)(R) for n = 1, excluding radial parameter R|1 - sqrt2 y| < s_min.
inline double cex_average_1d(const CexPair& pair, double R, double s_min = 0.0)
{
    detail::require_scale(R);
    const QuadResult plus = detail::n1_side(pair, R, +1, s_min);
    const QuadResult minus = detail::n1_side(pair, R, -1, s_min);
    const QuadResult total{plus.value + minus.value, plus.error + minus.error};
    detail::require_converged(total, "cex_average (n=1)");
    return total.value;
}

// ---------------------------------------------------------------------------
// n = 2

namespace detail {

// \int over the circle |z| = r_y of g(|R e1 - sqrt2 R z|) d sigma(z), divided by r_y.
// delta = R |1 - rho| is the closest approach, rho = sqrt2 r_y.
inline double circle_over_ry(const CexPair& pair, double R, double rho, double delta)
{
    const double cg = pair.cutoff_g;
    if (!(delta < cg)) {
        return 0.0;
    }
    const double v_max = std::acosh(cg / delta);
    const double scale = 2.0 * R * std::sqrt(rho);
    const auto integrand = [&](double v) {
        const double sin_half = delta * std::sinh(v) / scale;
        if (!(sin_half < 1.0)) {
            return 0.0;
        }
        const double cos_half = std::sqrt((1.0 - sin_half) * (1.0 + sin_half));
        const double log_D = std::log(delta) + v + std::log1p(std::exp(-2.0 * v)) - std::numbers::ln2;
        return std::exp(log_profile(log_D, 2, pair.p2) + log_D) / (R * std::sqrt(rho) * cos_half);
    };
    // both signs of alpha
    return 2.0 * integrate_adaptive(integrand, 0.0, v_max, 1e-9, 20).value;
}

// Outer integral in w = 1/log(1/s) for n = 2. Below w0 the radius s is
// near underflow; there the integrand is k w + O(w^2) and the tail is added
// in closed form.
template <class F>
QuadResult outer_in_w(const F& integrand, double w_lo, double w_hi, double w0 = 1.0 / 700.0, double rel_tol = 1e-7)
{
    const double start = std::max(w_lo, w0);
    QuadResult q = integrate_adaptive(integrand, start, w_hi, rel_tol, 15);
    if (w_lo < w0) {
        q.value += integrand(w0) * (w0 * w0 - w_lo * w_lo) / (2.0 * w0);
    }
    return q;
}

struct Polar2 {
    double rho;
    double delta;
};

// State at psi = psi* + d, where cos psi* = -s / (2R). With
// dc = cos psi - cos psi* = -2 sin(psi* + d/2) sin(d/2) (no cancellation):
//   rho^2 = 1 - 2 s dc / R,  delta = R |1 - rho| = 2 s |dc| / (1 + rho).
inline Polar2 polar_state(double R, double s, double psi_star, double d)
{
    const double dc = -2.0 * std::sin(psi_star + 0.5 * d) * std::sin(0.5 * d);
    const double rho = std::sqrt(1.0 - 2.0 * s * dc / R);
    return {rho, 2.0 * s * std::abs(dc) / (1.0 + rho)};
}

inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule()
{
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    return rule;
}

// \int_0^pi of the circle integral over psi at fixed s. The integrand has an
// inverse-square-root singularity at psi*; tanh-sinh on [0, psi*] and
// [psi*, pi] handles it, and its endpoint complement gives psi - psi* exactly.
inline double angular_n2(const CexPair& pair, double R, double s)
{
    const double psi_star = std::acos(-s / (2.0 * R));
    const auto at = [&](double d) {
        const Polar2 st = polar_state(R, s, psi_star, d);
        return st.delta > 0.0 ? circle_over_ry(pair, R, st.rho, st.delta) : 0.0;
    };
    const auto left = [&](double psi, double xc) { return at(xc > 0.0 ? -xc : psi - psi_star); };
    const auto right = [&](double psi, double xc) { return at(xc < 0.0 ? -xc : psi - psi_star); };
    auto& ts = tanh_sinh_rule();
    return ts.integrate(left, 0.0, psi_star, 1e-9) + ts.integrate(right, psi_star, std::numbers::pi, 1e-9);
}

}  // namespace detail

/// M_{sqrt2 R}(f, g)(R e1) for n = 2 via the change-of-variables integral:
/// y = (e1 + a / R) / sqrt2 with a = s (cos psi, sin psi), dy = s ds dpsi / (2 R^2),
/// weight 1 / r_y, inner circle |z| = r_y.
inline double cex_average_2d(const CexPair& pair, double R, double s_min = 0.0)
{
    detail::require_scale(R);
    if (s_min >= pair.cutoff_f) {
        return 0.0;
    }
    const double w_lo = s_min > 0.0 ? -1.0 / std::log(s_min) : 0.0;
    const double w_hi = -1.0 / std::log(pair.cutoff_f);
    const auto integrand = [&](double w) {
        const double log_s = -1.0 / w;
        const double s = std::exp(log_s);
        // f(s) s ds = f(s) s^2 dw / w^2
        const double weight = std::exp(log_profile(log_s, 2, pair.p1) + 2.0 * log_s) / (w * w);
        return weight * 2.0 * detail::angular_n2(pair, R, s) / (2.0 * R * R);
    };
    const QuadResult q = detail::outer_in_w(integrand, w_lo, w_hi);
    detail::require_converged(q, "cex_average (n=2)");
    return q.value;
}

/// Same average at x = R (cos phi, sin phi): the outer (s, psi) integral runs
/// in absolute Cartesian coordinates (no reduction to e1).
inline double cex_average_2d_rotated(const CexPair& pair, double R, double phi)
{
    detail::require_scale(R);
    const double ux = std::cos(phi);
    const double uy = std::sin(phi);
    const double x0 = R * ux;
    const double x1 = R * uy;
    const double cg = pair.cutoff_g;

    // inner: \int g(|x - sqrt2 R z|) dgamma over the circle |z| = r_y (arclength / r_y), rho = sqrt2 r_y
    const auto inner = [&](double rho, double delta) {
        if (!(delta < cg) || !(delta > 0.0)) {
            return 0.0;
        }
        // full circle in z, so its angle off is measured from the direction of x;
        // from a fixed axis it would cost ~1e-16 R of cancellation in D
        const double zr = R * rho;
        // off = 2 asin(delta sinh(v) / (2 sqrt(R zr))) flattens the peak of width ~delta / R
        const double scale = 2.0 * std::sqrt(R * zr);
        const double v_max = std::acosh(cg / delta);
        const auto in_v = [&](double v) {
            const double e2 = std::exp(-2.0 * v);
            // delta sinh v without overflow at tiny delta
            const double sh = std::exp(std::log(delta) + v - std::numbers::ln2) * (1.0 - e2) / scale;
            if (!(sh < 1.0)) {
                return 0.0;
            }
            // D = delta cosh v at off = 2 asin(sh); d off / dv = 2 D / (scale cos(off / 2))
            const double log_D = std::log(delta) + v + std::log1p(e2) - std::numbers::ln2;
            if (!(log_D < std::log(cg))) {
                return 0.0;
            }
            const double cos_half = std::sqrt((1.0 - sh) * (1.0 + sh));
            return 4.0 * std::exp(log_profile(log_D, 2, pair.p2) + log_D) / (scale * cos_half);
        };
        return integrate_adaptive(in_v, 0.0, v_max, 1e-9, 20).value;
    };

    // outer: a = sqrt2 R y - x in absolute polar coordinates (s, psi)
    const auto ring = [&](double s) {
        // psi = centre + d with centre a singular direction
        const auto at = [&](double centre, double d) {
            const double psi = centre + d;
            const detail::Polar2 near = detail::polar_state(R, s, centre - phi, d);
            if (near.delta < 1e-7) {
                // Cartesian r_y has ~1e-16 R of cancellation; below this delta it is noise
                return inner(near.rho, near.delta);
            }
            const double y0 = (x0 + s * std::cos(psi)) / (std::sqrt(2.0) * R);
            const double y1 = (x1 + s * std::sin(psi)) / (std::sqrt(2.0) * R);
            const double rho = std::sqrt(2.0) * std::sqrt(1.0 - y0 * y0 - y1 * y1);
            return inner(rho, R * std::abs(1.0 - rho));
        };
        // singular directions: |x + a| = R
        const double off = std::acos(-s / (2.0 * R));
        const double p_lo = phi - off;
        const double p_hi = phi + off;
        double total = 0.0;
        thread_local boost::math::quadrature::tanh_sinh<double> ts(8);
        const auto around = [&](double centre, double left_len, double right_len) {
            const auto l = [&](double psi, double xc) { return at(centre, xc > 0.0 ? -xc : psi - centre); };
            const auto r = [&](double psi, double xc) { return at(centre, xc < 0.0 ? -xc : psi - centre); };
            return ts.integrate(l, centre - left_len, centre, 1e-6) +
                   ts.integrate(r, centre, centre + right_len, 1e-6);
        };
        const double gap = std::numbers::pi - off;
        total += around(p_lo, gap, off);
        total += around(p_hi, off, gap);
        return total;
    };
    const auto integrand = [&](double w) {
        const double log_s = -1.0 / w;
        const double s = std::exp(log_s);
        const double weight = std::exp(log_profile(log_s, 2, pair.p1) + 2.0 * log_s) / (w * w);
        return weight * ring(s) / (2.0 * R * R);
    };
    // g is evaluated pointwise here, so keep s above ~1e-140
    const QuadResult q = detail::outer_in_w(integrand, 0.0, -1.0 / std::log(pair.cutoff_f), 1.0 / 320.0, 1e-5);
    detail::require_converged(q, "cex_average (rotated)");
    return q.value;
}

// ---------------------------------------------------------------------------
// Lower-bound chain and dispatch

/// The explicit lower-bound integral of the construction.
///   n = 1:  2 R^{-1} \int_0^{1/100} t^{-1/p} (log 1/t)^{-2/p} dt
///   n >= 2: R^{1-2n} omega_{n-1} \int_0^{1/100} r^{-n/p+2n-2} (-log r)^{-2/p} dr
/// (absolute constants dropped). Returns +inf when the integral diverges.
inline double lower_bound_chain(const CexPair& pair, double R, double r_min = 0.0)
{
    detail::require_scale(R);
    const int n = pair.n;
    const double p = pair.p();
    const double power = n == 1 ? -1.0 / p : -n / p + 2.0 * n - 2.0;
    if (power < -1.0 && r_min == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (r_min >= 0.01) {
        return 0.0;
    }
    // r^{power} (-log r)^{-2/p} dr, r = e^{-1/w}, dr = r dw / w^2
    const auto integrand = [&](double w) {
        const double log_r = -1.0 / w;
        return std::exp((power + 1.0) * log_r + (2.0 / p) * std::log(w)) / (w * w);
    };
    const double w_lo = r_min > 0.0 ? -1.0 / std::log(r_min) : 0.0;
    const double integral = integrate_adaptive(integrand, w_lo, -1.0 / std::log(0.01), 1e-12).value;
    if (n == 1) {
        return 2.0 / R * integral;
    }
    return std::pow(R, 1.0 - 2.0 * n) * specfn::sphere_area(n) * integral;
}

/// M_{sqrt2 R}(f, g)(R e1): full reduced integral for n <= 2, lower-bound
/// chain for n >= 3.
inline double cex_average(const CexPair& pair, double R)
{
    switch (pair.n) {
    case 1: return cex_average_1d(pair, R);
    case 2: return cex_average_2d(pair, R);
    default: return lower_bound_chain(pair, R);
    }
}

/// Truncated average excluding the singular set at radial parameter < s_min.
inline double cex_average_truncated(const CexPair& pair, double R, double s_min)
{
    switch (pair.n) {
    case 1: return cex_average_1d(pair, R, s_min);
    case 2: return cex_average_2d(pair, R, s_min);
    default: return lower_bound_chain(pair, R, s_min);
    }
}

/// Log-log fit of cex_average against R.
inline FitReport growth_floor(const CexPair& pair, std::span<const double> R_list)
{
    if (R_list.size() < 5) {
        throw std::invalid_argument("growth_floor: need at least 5 radii");
    }
    if (R_list.front() < 1024.0) {
        throw std::invalid_argument("growth_floor: radii must be >= 2^10");
    }
    std::vector<std::pair<double, double>> pts(R_list.size());
    parallel_for(R_list.size(), [&](std::size_t i) { pts[i] = {R_list[i], cex_average(pair, R_list[i])}; });
    return fit_loglog(pts);
}

struct DivergenceProbe {
    std::vector<double> cutoffs;
    std::vector<double> values;
    bool increasing = false;
    double growth = 0.0;           ///< last / first
    double gap_ratio = 0.0;        ///< last gap / first gap
    double last_gap = 0.0;
    bool diverges = false;         ///< growth > 10, increasing, gap_ratio > 10
    bool cauchy = false;           ///< last gap < 1e-6 relative
};

/// Truncated averages with radial cutoff delta = 2^{-k}, k = k_min..k_max.
inline DivergenceProbe divergence_probe(const CexPair& pair, double R, int k_min = 4, int k_max = 20)
{
    if (k_max <= k_min + 1) {
        throw std::invalid_argument("divergence_probe: need at least three cutoffs");
    }
    DivergenceProbe probe;
    for (int k = k_min; k <= k_max; ++k) {
        probe.cutoffs.push_back(std::ldexp(1.0, -k));
    }
    probe.values.resize(probe.cutoffs.size());
    parallel_for(probe.cutoffs.size(),
                 [&](std::size_t i) { probe.values[i] = cex_average_truncated(pair, R, probe.cutoffs[i]); });
    probe.increasing = true;
    for (std::size_t i = 1; i < probe.values.size(); ++i) {
        if (!(probe.values[i] > probe.values[i - 1])) {
            probe.increasing = false;
        }
    }
    const std::size_t m = probe.values.size();
    probe.growth = probe.values.back() / probe.values.front();
    const double first_gap = probe.values[1] - probe.values[0];
    probe.last_gap = probe.values[m - 1] - probe.values[m - 2];
    probe.gap_ratio = first_gap != 0.0 ? probe.last_gap / first_gap : std::numeric_limits<double>::infinity();
    probe.diverges = probe.increasing && probe.growth > 10.0 && probe.gap_ratio > 10.0;
    probe.cauchy = std::abs(probe.last_gap) < 1e-6 * std::abs(probe.values.back());
    return probe;
}

// ---------------------------------------------------------------------------
// Monotonicity lemma

/// F(x) = x^{r1} (log x)^{-r2}, x > 1.
inline double lemma_F(double x, double r1, double r2) { return std::pow(x, r1) * std::pow(std::log(x), -r2); }

/// Threshold above which F is increasing: F'/F = (r1 log x - r2) / (x log x).
inline double monotone_since(double r1, double r2)
{
    if (!(r1 > 0.0) || r2 < 0.0) {
        throw std::invalid_argument("monotone_since: need r1 > 0, r2 >= 0");
    }
    return std::exp(r2 / r1);
}

/// C' in s^{-r1}(log 1/s)^{-r2} <= C' t^{-r1}(log 1/t)^{-r2} for t <= C s <= 1/10:
/// C^{r1} from rescaling, times F(10)/F(x0) if F dips on [10, x0].
inline double lemma_constant(double C, double r1, double r2)
{
    if (!(C >= 1.0)) {
        throw std::invalid_argument("lemma_constant: C must be >= 1");
    }
    const double x0 = monotone_since(r1, r2);
    const double dip = x0 > 10.0 ? lemma_F(10.0, r1, r2) / lemma_F(x0, r1, r2) : 1.0;
    return std::pow(C, r1) * std::max(1.0, dip);
}

}  // namespace spheremax::cex

#endif  // SPHEREMAX_CEX_HPP
