#ifndef SPHEREMAX_SPECFN_HPP
#define SPHEREMAX_SPECFN_HPP

// Bessel functions of the first kind and the Fourier transform of surface
// measure on spheres.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace spheremax::specfn {

/// Gamma function. Backed by std::tgamma (about 1 ulp on the positive axis).
inline double gamma(double x) { return std::tgamma(x); }

/// Surface measure of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(int d)
{
    if (d < 1) {
        throw std::invalid_argument("sphere_area: dimension must be >= 1");
    }
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / gamma(0.5 * d);
}

namespace detail {

constexpr double kSeriesLimit = 12.0;

inline void check_args(double nu, double x)
{
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw std::domain_error("bessel: order must be finite and >= 0");
    }
    if (!(x >= 0.0)) {
        throw std::domain_error("bessel: argument must be >= 0");
    }
}

// 1 / (2^nu Gamma(nu + 1)), i.e. the x -> 0 limit of J_nu(x) / x^nu.
inline double scaled_leading(double nu)
{
    if (nu + 1.0 < 150.0) {
        return 1.0 / (std::pow(2.0, nu) * gamma(nu + 1.0));
    }
    return std::exp(-nu * std::numbers::ln2 - std::lgamma(nu + 1.0));
}

// J_nu(x) / x^nu by its power series.
inline double series_scaled(double nu, double x)
{
    const double q = -0.25 * x * x;
    double term = scaled_leading(nu);
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (k * (nu + k));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum) && k > 0.5 * x) {
            break;
        }
    }
    return sum;
}

// Hankel threshold: above it the large-argument expansion reaches double
// precision before its terms start to grow.
inline double hankel_limit(double nu) { return std::max(30.0, 2.0 * nu * nu); }

inline double hankel(double nu, double x)
{
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * x);
        if (k >= 8 && std::abs(term) > std::abs(prev)) {
            break;
        }
        // a_k / x^k enters P with sign (-1)^{k/2} for even k and Q with
        // sign (-1)^{(k-1)/2} for odd k.
        const double signed_term = ((k / 2) % 2 == 0) ? term : -term;
        if (k % 2 == 0) {
            p += signed_term;
        } else {
            q += signed_term;
        }
        if (k >= 8 && std::abs(term) < 1e-17) {
            break;
        }
        prev = term;
    }
    const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Miller backward recurrence normalized by
//   sum_i (mu + 2i) Gamma(mu + i) / i! J_{mu + 2i}(x) = (x/2)^mu,
// where nu = mu + m with mu in [0, 1).
inline double miller(double nu, double x)
{
    const double m_real = std::floor(nu);
    const double mu = nu - m_real;
    const int m = static_cast<int>(m_real);
    const double top = std::max(static_cast<double>(m), x);
    int start = static_cast<int>(top + 20.0 + 10.0 * std::cbrt(top));
    if (start % 2 != 0) {
        ++start;
    }

    const int half = start / 2;
    std::vector<double> weight(static_cast<std::size_t>(half) + 1);
    weight[0] = gamma(mu + 1.0);
    double g = gamma(mu + 1.0);  // Gamma(mu + i) / i! at i = 1
    for (int i = 1; i <= half; ++i) {
        if (i > 1) {
            g *= (mu + i - 1.0) / i;
        }
        weight[static_cast<std::size_t>(i)] = (mu + 2.0 * i) * g;
    }

    double j_next = 0.0;    // J_{mu + k + 1}
    double j_cur = 1e-30;   // J_{mu + k}
    double norm = 0.0;
    double wanted = 0.0;
    for (int k = start; k >= 0; --k) {
        if (k % 2 == 0) {
            norm += weight[static_cast<std::size_t>(k / 2)] * j_cur;
        }
        if (k == m) {
            wanted = j_cur;
        }
        if (k == 0) {
            break;
        }
        const double j_prev = 2.0 * (mu + k) / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if (std::abs(j_cur) > 1e200) {
            j_cur *= 1e-200;
            j_next *= 1e-200;
            norm *= 1e-200;
            wanted *= 1e-200;
        }
    }
    return wanted * std::pow(0.5 * x, mu) / norm;
}

}  // namespace detail

/// J_nu(x) for real nu >= 0 and x >= 0.
///
/// Power series for x < 12, Miller backward recurrence up to
/// max(30, 2 nu^2), and the Hankel expansion beyond.
inline double bessel_j(double nu, double x)
{
    detail::check_args(nu, x);
    if (x == 0.0) {
        return nu == 0.0 ? 1.0 : 0.0;
    }
    if (x < detail::kSeriesLimit) {
        return detail::series_scaled(nu, x) * std::pow(x, nu);
    }
    if (x < detail::hankel_limit(nu)) {
        return detail::miller(nu, x);
    }
    return detail::hankel(nu, x);
}

/// J_nu(x) / x^nu, continuous at x = 0 with value 1 / (2^nu Gamma(nu+1)).
inline double bessel_j_scaled(double nu, double x)
{
    detail::check_args(nu, x);
    if (x < detail::kSeriesLimit) {
        return detail::series_scaled(nu, x);
    }
    return bessel_j(nu, x) / std::pow(x, nu);
}

/// Fourier transform of surface measure on S^{d-1}, as a function of |xi|:
///   2 pi J_{(d-2)/2}(2 pi r) / r^{(d-2)/2}.
/// At r = 0 this is the total measure 2 pi^{d/2} / Gamma(d/2).
inline double dsigma_hat(int d, double r)
{
    if (d < 2) {
        throw std::invalid_argument("dsigma_hat: ambient dimension must be >= 2");
    }
    if (!(r >= 0.0)) {
        throw std::domain_error("dsigma_hat: radius must be >= 0");
    }
    const double nu = 0.5 * (d - 2);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return two_pi * std::pow(two_pi, nu) * bessel_j_scaled(nu, two_pi * r);
}

/// Radial derivative of dsigma_hat(d, .). Uses d/dx [J_nu(x)/x^nu] = -J_{nu+1}(x)/x^nu,
/// which gives  d/dr dsigma_hat(d, r) = -2 pi r dsigma_hat(d + 2, r).
inline double dsigma_hat_deriv(int d, double r)
{
    if (d < 2) {
        throw std::invalid_argument("dsigma_hat_deriv: ambient dimension must be >= 2");
    }
    if (!(r > 0.0)) {
        throw std::domain_error("dsigma_hat_deriv: radius must be > 0");
    }
    return -2.0 * std::numbers::pi * r * dsigma_hat(d + 2, r);
}

}  // namespace spheremax::specfn

#endif  // SPHEREMAX_SPECFN_HPP
