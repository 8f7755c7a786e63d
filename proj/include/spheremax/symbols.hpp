#ifndef SPHEREMAX_SYMBOLS_HPP
#define SPHEREMAX_SYMBOLS_HPP

// Radial bilinear symbols built from the surface-measure transform on
// S^{2n-1}: smooth dyadic cutoffs, the Littlewood-Paley pieces m_j, their
// diagonal / off-diagonal split, and the Euler-derivative symbols
// (xi, eta) . grad m. Every profile depends on (xi, eta) only through
// u = |xi| and v = |eta|.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spheremax/parallel.hpp"
#include "spheremax/quadrature.hpp"
#include "spheremax/specfn.hpp"

namespace spheremax::symbols {

namespace detail {

inline double glue(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double glue_deriv(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

}  // namespace detail

/// Smooth radial cutoff: 1 on [0, 1], 0 on [2, inf), strictly decreasing between.
inline double phi0(double s)
{
    if (s <= 1.0) {
        return 1.0;
    }
    if (s >= 2.0) {
        return 0.0;
    }
    const double a = detail::glue(2.0 - s);
    const double b = detail::glue(s - 1.0);
    return a / (a + b);
}

inline double phi0_deriv(double s)
{
    if (s <= 1.0 || s >= 2.0) {
        return 0.0;
    }
    const double a = detail::glue(2.0 - s);
    const double b = detail::glue(s - 1.0);
    const double da = -detail::glue_deriv(2.0 - s);
    const double db = detail::glue_deriv(s - 1.0);
    const double sum = a + b;
    return (da * b - a * db) / (sum * sum);
}

/// Dyadic annulus cutoff phi0(s) - phi0(2s), supported in [1/2, 2].
inline double phi(double s) { return phi0(s) - phi0(2.0 * s); }

inline double phi_deriv(double s) { return phi0_deriv(s) - 2.0 * phi0_deriv(2.0 * s); }

/// Even window on the real line: 1 on [eps-1, 1-eps], 0 outside [-1, 1].
inline double rho(double u, double epsilon)
{
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("rho: epsilon must lie in (0, 1/2)");
    }
    // phi0(2 - t) is the smooth step from 0 (t <= 0) to 1 (t >= 1)
    return phi0(2.0 - (1.0 - std::abs(u)) / epsilon);
}

enum class Kind {
    Full,              ///< m = dsigma_hat on S^{2n-1}
    Piece,             ///< m_j (m_0 uses phi0)
    Diagonal,          ///< m_j^1 = m_j rho(log2(u/v) / j)
    OffDiagonal,       ///< m_j^2 = m_j - m_j^1
    EulerPiece,        ///< (xi, eta) . grad m_j
    EulerDiagonal,     ///< (xi, eta) . grad m_j^1
    EulerOffDiagonal,  ///< (xi, eta) . grad m_j^2
};

inline const char* to_string(Kind k)
{
    switch (k) {
    case Kind::Full: return "m";
    case Kind::Piece: return "m_j";
    case Kind::Diagonal: return "m_j^1";
    case Kind::OffDiagonal: return "m_j^2";
    case Kind::EulerPiece: return "~m_j";
    case Kind::EulerDiagonal: return "~m_j^1";
    case Kind::EulerOffDiagonal: return "~m_j^2";
    }
    return "?";
}

/// A bilinear multiplier sigma(xi, eta) on R^n x R^n represented by its
/// reduced profile s(u, v). Immutable; evaluation is thread-safe.
class RadialBilinearSymbol {
public:
    static constexpr double kDefaultEpsilon = 0.1;

    RadialBilinearSymbol(int n, int j, Kind kind, double epsilon = kDefaultEpsilon)
        : n_(n), j_(j), kind_(kind), epsilon_(epsilon)
    {
        if (n < 1) {
            throw std::invalid_argument("RadialBilinearSymbol: n must be >= 1");
        }
        if (!(epsilon > 0.0 && epsilon < 0.5)) {
            throw std::invalid_argument("RadialBilinearSymbol: epsilon must lie in (0, 1/2)");
        }
        if (kind == Kind::Piece && j < 0) {
            throw std::invalid_argument("RadialBilinearSymbol: m_j needs j >= 0");
        }
        if (kind != Kind::Full && kind != Kind::Piece && j < 1) {
            throw std::invalid_argument(std::string("RadialBilinearSymbol: ") + to_string(kind) +
                                        " needs j >= 1");
        }
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int j() const { return j_; }
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] bool compact() const { return kind_ != Kind::Full; }
    [[nodiscard]] bool euler() const
    {
        return kind_ == Kind::EulerPiece || kind_ == Kind::EulerDiagonal || kind_ == Kind::EulerOffDiagonal;
    }

    /// Support in |(xi, eta)|: [r_min, r_max]. Infinite for the full symbol.
    [[nodiscard]] double r_min() const
    {
        return (kind_ == Kind::Full || j_ == 0) ? 0.0 : std::ldexp(1.0, j_ - 1);
    }
    [[nodiscard]] double r_max() const
    {
        if (kind_ == Kind::Full) {
            return std::numeric_limits<double>::infinity();
        }
        return j_ == 0 ? 2.0 : std::ldexp(1.0, j_ + 1);
    }

    /// Radial part: dsigma_hat times the dyadic cutoff, or r d/dr of it for Euler kinds.
    [[nodiscard]] double radial(double r) const
    {
        const int d = 2 * n_;
        if (kind_ == Kind::Full) {
            return specfn::dsigma_hat(d, r);
        }
        if (j_ == 0) {
            if (euler()) {
                return r > 0.0 ? r * (specfn::dsigma_hat_deriv(d, r) * phi0(r) +
                                      specfn::dsigma_hat(d, r) * phi0_deriv(r))
                               : 0.0;
            }
            return specfn::dsigma_hat(d, r) * phi0(r);
        }
        if (r <= r_min() || r >= r_max()) {
            return 0.0;
        }
        const double scale = std::ldexp(1.0, -j_);
        if (!euler()) {
            return specfn::dsigma_hat(d, r) * phi(scale * r);
        }
        return r * (specfn::dsigma_hat_deriv(d, r) * phi(scale * r) +
                    specfn::dsigma_hat(d, r) * scale * phi_deriv(scale * r));
    }

    /// rho((1/j) log2(u/v)); log2(u/v) is 0-homogeneous, so the Euler
    /// operator passes through this factor.
    [[nodiscard]] double diagonal_window(double u, double v) const
    {
        if (u == 0.0 && v == 0.0) {
            return 1.0;
        }
        if (u == 0.0 || v == 0.0) {
            return 0.0;
        }
        return rho(std::log2(u / v) / j_, epsilon_);
    }

    /// Angular factor: the profile is radial(r) * angular(u, v).
    [[nodiscard]] double angular(double u, double v) const
    {
        switch (kind_) {
        case Kind::Diagonal:
        case Kind::EulerDiagonal:
            return diagonal_window(std::abs(u), std::abs(v));
        case Kind::OffDiagonal:
        case Kind::EulerOffDiagonal:
            return 1.0 - diagonal_window(std::abs(u), std::abs(v));
        default:
            return 1.0;
        }
    }

    /// Profile s(u, v) with u = |xi|, v = |eta|.
    [[nodiscard]] double operator()(double u, double v) const
    {
        u = std::abs(u);
        v = std::abs(v);
        const double r = std::hypot(u, v);
        const double base = radial(r);
        switch (kind_) {
        case Kind::Full:
        case Kind::Piece:
        case Kind::EulerPiece:
            return base;
        case Kind::Diagonal:
        case Kind::EulerDiagonal:
            return base == 0.0 ? 0.0 : base * diagonal_window(u, v);
        case Kind::OffDiagonal:
        case Kind::EulerOffDiagonal:
            return base == 0.0 ? 0.0 : base - base * diagonal_window(u, v);
        }
        return 0.0;
    }

    /// sigma(xi, eta) for explicit vectors in R^n.
    [[nodiscard]] double at(std::span<const double> xi, std::span<const double> eta) const
    {
        if (xi.size() != static_cast<std::size_t>(n_) || eta.size() != static_cast<std::size_t>(n_)) {
            throw std::invalid_argument("RadialBilinearSymbol::at: vectors must have length n");
        }
        double uu = 0.0;
        double vv = 0.0;
        for (int i = 0; i < n_; ++i) {
            uu += xi[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
            vv += eta[static_cast<std::size_t>(i)] * eta[static_cast<std::size_t>(i)];
        }
        return (*this)(std::sqrt(uu), std::sqrt(vv));
    }

private:
    int n_;
    int j_;
    Kind kind_;
    double epsilon_;
};

inline RadialBilinearSymbol make_symbol(int n, int j, Kind kind, double epsilon = RadialBilinearSymbol::kDefaultEpsilon)
{
    return {n, j, kind, epsilon};
}

// ---------------------------------------------------------------------------
// Norm estimation

/// Derivative orders for the 2n coordinates (xi_1..xi_n, eta_1..eta_n).
using Multiindex = std::vector<int>;

/// Multiindex with a single first-order derivative in coordinate `axis`.
inline Multiindex partial(int n, int axis, int order = 1)
{
    Multiindex alpha(static_cast<std::size_t>(2 * n), 0);
    alpha.at(static_cast<std::size_t>(axis)) = order;
    return alpha;
}

struct SupEstimate {
    double value = 0.0;
    double at_u = 0.0;
    double at_v = 0.0;
    int levels = 0;
    std::vector<double> trace;
};

namespace detail {

struct ProfileDerivs {
    double s, su, sv, suu, svv, suv;
};

// Central differences of the profile, extended evenly across u = 0 and v = 0.
template <class Profile>
ProfileDerivs profile_derivs(const Profile& s, double u, double v, int order)
{
    constexpr double h1 = 1e-4;
    constexpr double h2 = 1e-3;
    ProfileDerivs d{};
    d.s = s(u, v);
    if (order >= 1) {
        d.su = (s(std::abs(u + h1), v) - s(std::abs(u - h1), v)) / (2.0 * h1);
        d.sv = (s(u, std::abs(v + h1)) - s(u, std::abs(v - h1))) / (2.0 * h1);
    }
    if (order >= 2) {
        d.suu = (s(std::abs(u + h2), v) - 2.0 * d.s + s(std::abs(u - h2), v)) / (h2 * h2);
        d.svv = (s(u, std::abs(v + h2)) - 2.0 * d.s + s(u, std::abs(v - h2))) / (h2 * h2);
        d.suv = (s(std::abs(u + h2), std::abs(v + h2)) - s(std::abs(u + h2), std::abs(v - h2)) -
                 s(std::abs(u - h2), std::abs(v + h2)) + s(std::abs(u - h2), std::abs(v - h2))) /
                (4.0 * h2 * h2);
    }
    return d;
}

// sup over unit directions of |d^alpha sigma| at a point with |xi| = u, |eta| = v.
inline double directional_sup(const ProfileDerivs& d, int n, int xi_order, int eta_order, bool xi_same,
                              bool eta_same, double u, double v)
{
    const auto radial_over = [](double first, double second, double w) {
        // s_w / w, replaced by its limit s_ww near the axis
        return w < 1e-2 ? second : first / w;
    };
    if (xi_order == 0 && eta_order == 0) {
        return std::abs(d.s);
    }
    if (xi_order == 1 && eta_order == 0) {
        return std::abs(d.su);
    }
    if (xi_order == 0 && eta_order == 1) {
        return std::abs(d.sv);
    }
    if (xi_order == 1 && eta_order == 1) {
        return std::abs(d.suv);
    }
    const bool on_xi = xi_order == 2;
    const double second = on_xi ? d.suu : d.svv;
    const double first_over = radial_over(on_xi ? d.su : d.sv, second, on_xi ? u : v);
    const bool same = on_xi ? xi_same : eta_same;
    if (same) {
        return n == 1 ? std::abs(second) : std::max(std::abs(second), std::abs(first_over));
    }
    return 0.5 * std::abs(second - first_over);
}

}  // namespace detail

/// Estimates sup |d^alpha sigma| over the support annulus of a compactly
/// supported symbol, for |alpha| <= 2.
///
/// The 2n-variable derivative is rebuilt from the profile by the chain rule
/// through u = |xi|, v = |eta| and maximised over directions in closed form.
/// The (r, log2(u/v)) grid is doubled until the estimate changes by < 5%.
inline SupEstimate sup_norm_partial(const RadialBilinearSymbol& sym, const Multiindex& alpha, unsigned workers = 0)
{
    const int n = sym.n();
    if (alpha.size() != static_cast<std::size_t>(2 * n)) {
        throw std::invalid_argument("sup_norm_partial: multiindex must have 2n entries");
    }
    if (!sym.compact()) {
        throw std::invalid_argument("sup_norm_partial: symbol must be compactly supported");
    }
    int xi_order = 0;
    int eta_order = 0;
    int xi_axes = 0;
    int eta_axes = 0;
    for (int i = 0; i < 2 * n; ++i) {
        const int a = alpha[static_cast<std::size_t>(i)];
        if (a < 0) {
            throw std::invalid_argument("sup_norm_partial: negative derivative order");
        }
        if (a > 0) {
            (i < n ? xi_axes : eta_axes) += 1;
        }
        (i < n ? xi_order : eta_order) += a;
    }
    if (xi_order + eta_order > 2) {
        throw std::invalid_argument("sup_norm_partial: derivative order above 2 is unsupported");
    }
    const int order = xi_order + eta_order;
    const bool xi_same = xi_axes <= 1;
    const bool eta_same = eta_axes <= 1;

    const double r_lo = sym.r_min();
    const double r_hi = sym.r_max();
    const double span_lambda = sym.j() + 8.0;

    SupEstimate est;
    double previous = -1.0;
    constexpr int kMaxLevels = 6;
    for (int level = 0; level < kMaxLevels; ++level) {
        const auto n_r = static_cast<std::size_t>(std::ceil(8.0 * (r_hi - r_lo)) * (1 << level)) + 1;
        const std::size_t n_lambda = (std::size_t{32} << level) + 1;
        // angles: the two axes plus log2(u/v) uniformly in [-span, span]
        std::vector<double> cos_t;
        std::vector<double> sin_t;
        cos_t.reserve(n_lambda + 2);
        sin_t.reserve(n_lambda + 2);
        cos_t.push_back(1.0);
        sin_t.push_back(0.0);
        cos_t.push_back(0.0);
        sin_t.push_back(1.0);
        for (std::size_t k = 0; k < n_lambda; ++k) {
            const double lambda = -span_lambda + 2.0 * span_lambda * static_cast<double>(k) / (n_lambda - 1);
            const double theta = std::atan(std::exp2(-lambda));
            cos_t.push_back(std::cos(theta));
            sin_t.push_back(std::sin(theta));
        }
        struct RowMax {
            double value = 0.0;
            double u = 0.0;
            double v = 0.0;
        };
        std::vector<RowMax> rows(n_r);
        parallel_for(
            n_r,
            [&](std::size_t i) {
                const double r = r_lo + (r_hi - r_lo) * static_cast<double>(i) / static_cast<double>(n_r - 1);
                RowMax best;
                for (std::size_t k = 0; k < cos_t.size(); ++k) {
                    const double u = r * cos_t[k];
                    const double v = r * sin_t[k];
                    const auto d = detail::profile_derivs(sym, u, v, order);
                    const double val =
                        detail::directional_sup(d, n, xi_order, eta_order, xi_same, eta_same, u, v);
                    if (val > best.value) {
                        best = {val, u, v};
                    }
                }
                rows[i] = best;
            },
            workers);
        RowMax best;
        for (const auto& row : rows) {
            if (row.value > best.value) {
                best = row;
            }
        }
        est.value = best.value;
        est.at_u = best.u;
        est.at_v = best.v;
        est.levels = level + 1;
        est.trace.push_back(best.value);
        if (previous >= 0.0 && std::abs(best.value - previous) <= 0.05 * best.value) {
            return est;
        }
        previous = best.value;
    }
    throw ConvergenceError("sup_norm_partial: grid refinement did not settle within 5%", est.trace);
}

/// L2 norm over R^{2n} of a profile supported in r_lo <= |(xi, eta)| <= r_hi:
///   omega_{n-1}^2 \int\int |s(u,v)|^2 u^{n-1} v^{n-1} du dv,
/// computed in polar variables (r, lambda = log2(u/v)) with nested adaptive
/// Gauss-Kronrod on unit-width r panels. `lambda_breaks` lists interior
/// breakpoints in lambda where the profile changes character.
template <class Profile>
double l2_norm_profile(int n, const Profile& s, double r_lo, double r_hi, std::vector<double> lambda_breaks = {},
                       double rel_tol = 1e-6)
{
    if (!std::isfinite(r_hi) || !(r_hi > r_lo) || r_lo < 0.0) {
        throw std::invalid_argument("l2_norm: profile must have compact radial support");
    }
    const double lambda_span = 64.0 / n + (lambda_breaks.empty() ? 0.0 : std::abs(lambda_breaks.back()));
    std::vector<double> breaks{-lambda_span};
    std::sort(lambda_breaks.begin(), lambda_breaks.end());
    for (double b : lambda_breaks) {
        if (b > -lambda_span && b < lambda_span) {
            breaks.push_back(b);
        }
    }
    breaks.push_back(lambda_span);

    const auto angular = [&](double r) {
        const auto integrand = [&](double lambda) {
            const double theta = std::atan(std::exp2(-lambda));
            const double c = std::cos(theta);
            const double sn = std::sin(theta);
            const double val = s(r * c, r * sn);
            return val * val * std::pow(c * sn, n) * std::numbers::ln2;
        };
        return integrate_panels(integrand, breaks, 0.1 * rel_tol).value;
    };

    const auto panels = static_cast<std::size_t>(std::ceil(r_hi - r_lo));
    std::vector<double> part(panels);
    parallel_for(panels, [&](std::size_t p) {
        const double a = r_lo + static_cast<double>(p);
        const double b = std::min(r_hi, a + 1.0);
        const auto radial = [&](double r) { return std::pow(r, 2 * n - 1) * angular(r); };
        part[p] = integrate_adaptive(radial, a, b, rel_tol, 12).value;
    });
    const double omega = specfn::sphere_area(n);
    const double integral = pairwise_sum(part);
    return omega * std::sqrt(std::max(0.0, integral));
}

/// L2 norm over R^{2n} of a compactly supported symbol. The profile is
/// radial(r) * angular(lambda), so the polar integral splits into two 1-D
/// integrals.
inline double l2_norm(const RadialBilinearSymbol& sym, double rel_tol = 1e-8)
{
    if (!sym.compact()) {
        throw std::invalid_argument("l2_norm: the full symbol is not compactly supported");
    }
    const int n = sym.n();
    std::vector<double> breaks;
    const double span = 64.0 / n + sym.j();
    if (sym.kind() != Kind::Piece && sym.kind() != Kind::EulerPiece) {
        const double j = sym.j();
        const double inner = (1.0 - sym.epsilon()) * j;
        breaks = {-span, -j, -inner, inner, j, span};
    } else {
        breaks = {-span, -4.0, 4.0, span};
    }
    const auto angular = [&](double lambda) {
        const double theta = std::atan(std::exp2(-lambda));
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        const double a = sym.angular(c, sn);
        return a * a * std::pow(c * sn, n) * std::numbers::ln2;
    };
    const double angular_part = integrate_panels(angular, breaks, rel_tol).value;

    const double r_lo = sym.r_min();
    const auto panels = static_cast<std::size_t>(std::ceil(sym.r_max() - r_lo));
    std::vector<double> part(panels);
    parallel_for(panels, [&](std::size_t p) {
        const double a = r_lo + static_cast<double>(p);
        const double b = std::min(sym.r_max(), a + 1.0);
        const auto radial = [&](double r) {
            const double val = sym.radial(r);
            return val * val * std::pow(r, 2 * n - 1);
        };
        part[p] = integrate_adaptive(radial, a, b, rel_tol, 12).value;
    });
    const double omega = specfn::sphere_area(n);
    return omega * std::sqrt(std::max(0.0, pairwise_sum(part) * angular_part));
}

}  // namespace spheremax::symbols

#endif  // SPHEREMAX_SYMBOLS_HPP
