#ifndef SPHEREMAX_BILOP_HPP
#define SPHEREMAX_BILOP_HPP

// Bilinear spherical averages on periodic grids.
//
//   A_t(f, g)(x) = \int_{S^{2n-1}} f(x - t y) g(x - t z) dsigma(y, z)
//
// Two independent realisations: direct sphere quadrature of point-evaluable
// f, g (average_quad), and the bilinear Fourier multiplier with symbol
// sigma(t xi, t eta) summed over all frequency pairs (average_mult). On a grid
// the latter is the exact sphere average of the trigonometric interpolants.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "spheremax/grid.hpp"
#include "spheremax/parallel.hpp"
#include "spheremax/random.hpp"
#include "spheremax/specfn.hpp"
#include "spheremax/squad.hpp"
#include "spheremax/symbols.hpp"

namespace spheremax::bilop {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Test functions

/// Analytic test function on R^n.
struct TestFunction {
    enum class Kind { Gaussian, Bump, ModulatedBump };

    Kind kind = Kind::Gaussian;
    std::vector<double> center;
    double width = 1.0;  ///< Gaussian sd, or bump radius
    double amplitude = 1.0;
    std::vector<double> frequency;  ///< modulation (ModulatedBump only)

    static TestFunction gaussian(std::vector<double> c, double w, double a = 1.0)
    {
        return {Kind::Gaussian, std::move(c), w, a, {}};
    }
    static TestFunction bump(std::vector<double> c, double radius, double a = 1.0)
    {
        return {Kind::Bump, std::move(c), radius, a, {}};
    }
    static TestFunction modulated_bump(std::vector<double> c, double radius, std::vector<double> nu, double a = 1.0)
    {
        return {Kind::ModulatedBump, std::move(c), radius, a, std::move(nu)};
    }

    [[nodiscard]] int n() const { return static_cast<int>(center.size()); }

    [[nodiscard]] double radial(double r) const
    {
        if (kind == Kind::Gaussian) {
            return amplitude * std::exp(-0.5 * r * r / (width * width));
        }
        const double q = r / width;
        if (q >= 1.0) {
            return 0.0;
        }
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - q * q));
    }

    double operator()(std::span<const double> x) const
    {
        double r2 = 0.0;
        double phase = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) {
            const double d = x[i] - center[i];
            r2 += d * d;
            if (kind == Kind::ModulatedBump) {
                phase += frequency[i] * d;
            }
        }
        const double base = radial(std::sqrt(r2));
        return kind == Kind::ModulatedBump ? base * std::cos(2.0 * std::numbers::pi * phase) : base;
    }

    /// Continuous Fourier transform \int f(x) e^{-2 pi i x.xi} dx (Gaussian only).
    [[nodiscard]] cplx fourier(std::span<const double> xi) const
    {
        if (kind != Kind::Gaussian) {
            throw std::logic_error("TestFunction::fourier: closed form only for Gaussians");
        }
        double k2 = 0.0;
        double phase = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) {
            k2 += xi[i] * xi[i];
            phase += center[i] * xi[i];
        }
        const double s2 = width * width;
        const double mag = amplitude * std::pow(2.0 * std::numbers::pi * s2, 0.5 * n()) *
                           std::exp(-2.0 * std::numbers::pi * std::numbers::pi * s2 * k2);
        return mag * std::polar(1.0, -2.0 * std::numbers::pi * phase);
    }

    /// Closed-form L^2(R^n) norm (Gaussian only).
    [[nodiscard]] double l2_norm() const
    {
        if (kind != Kind::Gaussian) {
            throw std::logic_error("TestFunction::l2_norm: closed form only for Gaussians");
        }
        return std::abs(amplitude) * std::pow(std::numbers::pi * width * width, 0.25 * n());
    }

    /// Largest |f| on the boundary of the fundamental cell [0, L)^n.
    [[nodiscard]] double boundary_magnitude(double L) const
    {
        double gap = std::numeric_limits<double>::infinity();
        for (double c : center) {
            gap = std::min({gap, c, L - c});
        }
        return std::abs(radial(std::max(0.0, gap)));
    }

    [[nodiscard]] GridFunction on_grid(std::size_t N, double L) const
    {
        return GridFunction::sample(n(), N, L, *this);
    }
};

/// Functions must be < 1e-10 where the fundamental cell wraps.
inline void require_periodizable(const TestFunction& f, double L, double tol = 1e-10)
{
    if (f.boundary_magnitude(L) >= tol) {
        throw std::invalid_argument("test function does not decay to < 1e-10 at the cell boundary; enlarge L");
    }
}

/// Random draws from one test-function kind, centred near L/2.
struct TestFunctionFamily {
    int n = 1;
    double L = 1.0;
    TestFunction::Kind kind = TestFunction::Kind::Gaussian;

    TestFunction draw(RandomStream& rng) const
    {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (double& x : c) {
            x = L * (0.45 + 0.1 * rng.uniform());
        }
        switch (kind) {
        case TestFunction::Kind::Gaussian: {
            const double w = L * (1.0 / 48.0 + (1.0 / 24.0 - 1.0 / 48.0) * rng.uniform());
            return TestFunction::gaussian(std::move(c), w);
        }
        case TestFunction::Kind::Bump: {
            const double r = L * (0.1 + 0.2 * rng.uniform());
            return TestFunction::bump(std::move(c), r);
        }
        case TestFunction::Kind::ModulatedBump: {
            const double r = L * (0.1 + 0.2 * rng.uniform());
            std::vector<double> nu(static_cast<std::size_t>(n));
            for (double& v : nu) {
                v = (2.0 * rng.uniform() - 1.0) * 8.0 / L;
            }
            return TestFunction::modulated_bump(std::move(c), r, std::move(nu));
        }
        }
        return {};
    }
};

// ---------------------------------------------------------------------------
// Quadrature path

/// A_t(f, g)(x) by a sphere rule on S^{2n-1}; f, g point-evaluable.
template <class F, class G>
auto average_quad(const F& f, const G& g, std::span<const double> x, double t, const squad::SphereRule& rule)
{
    if (!(t > 0.0)) {
        throw std::invalid_argument("average_quad: t must be positive");
    }
    const std::size_t n = x.size();
    if (rule.dimension() != static_cast<int>(2 * n)) {
        throw std::invalid_argument("average_quad: rule must live on S^{2n-1}");
    }
    std::vector<double> a(n);
    std::vector<double> b(n);
    return rule.integrate([&](std::span<const double> w) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = x[i] - t * w[i];
            b[i] = x[i] - t * w[n + i];
        }
        return f(std::span<const double>(a)) * g(std::span<const double>(b));
    });
}

/// Point-evaluable view of a grid function (periodic multilinear interpolation).
inline auto interpolant(const GridFunction& h)
{
    return [&h](std::span<const double> x) { return h.interpolate(x); };
}

// ---------------------------------------------------------------------------
// Multiplier path

template <class S>
concept RadialProfile = requires(const S& s, double u, double v) {
    { s(u, v) } -> std::convertible_to<double>;
};

template <class S>
concept VectorSymbol = requires(const S& s, std::span<const double> a, std::span<const double> b) {
    { s(a, b) } -> std::convertible_to<cplx>;
};

/// Fourier data of a pair (f, g) shared across many symbols and radii.
class BilinearEngine {
public:
    BilinearEngine(const GridFunction& f, const GridFunction& g, unsigned workers = 0)
        : n_(f.n()), N_(f.N()), L_(f.L()), workers_(workers), F_(f.coefficients()), G_(g.coefficients())
    {
        if (!f.same_grid(g)) {
            throw std::invalid_argument("bilinear operator: f and g live on different grids");
        }
        const std::size_t count = F_.size();
        axis_.assign(count * static_cast<std::size_t>(n_), 0);
        norm_class_.assign(count, 0);
        std::map<long, std::size_t> classes;
        std::vector<std::size_t> idx(static_cast<std::size_t>(n_));
        for (std::size_t k = 0; k < count; ++k) {
            f.multi_index(k, idx);
            long q = 0;
            for (int a = 0; a < n_; ++a) {
                axis_[k * static_cast<std::size_t>(n_) + static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)];
                const long s = f.signed_frequency(idx[static_cast<std::size_t>(a)]);
                q += s * s;
            }
            classes.emplace(q, 0);
        }
        std::size_t c = 0;
        for (auto& [q, id] : classes) {
            id = c++;
            class_norm_.push_back(std::sqrt(static_cast<double>(q)));
        }
        for (std::size_t k = 0; k < count; ++k) {
            long q = 0;
            for (int a = 0; a < n_; ++a) {
                const long s = f.signed_frequency(axis_[k * static_cast<std::size_t>(n_) + static_cast<std::size_t>(a)]);
                q += s * s;
            }
            norm_class_[k] = classes.at(q);
        }
        for (std::size_t k = 0; k < count; ++k) {
            if (F_[k] != cplx{}) {
                active_.push_back(k);
            }
        }
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] std::size_t N() const { return N_; }
    [[nodiscard]] double L() const { return L_; }
    /// Largest |xi| (physical units) on the grid.
    [[nodiscard]] double max_frequency() const { return class_norm_.back() / L_; }

    /// Output spectrum: H_m = sum_k F_k G_{m-k} sigma(t k / L, t (m-k) / L).
    template <class Sym>
    std::vector<cplx> spectrum(const Sym& sym, double t) const
    {
        if (!(t > 0.0)) {
            throw std::invalid_argument("average_mult: t must be positive");
        }
        const std::size_t count = F_.size();
        std::vector<cplx> out(count);
        if constexpr (RadialProfile<Sym>) {
            const std::size_t C = class_norm_.size();
            std::vector<double> table(C * C);
            parallel_for(
                C,
                [&](std::size_t a) {
                    const double u = t * class_norm_[a] / L_;
                    for (std::size_t b = 0; b < C; ++b) {
                        table[a * C + b] = sym(u, t * class_norm_[b] / L_);
                    }
                },
                workers_);
            accumulate(out, [&](std::size_t k, std::size_t l) {
                return table[norm_class_[k] * C + norm_class_[l]];
            });
        } else {
            static_assert(VectorSymbol<Sym>, "symbol must be sigma(u, v) or sigma(xi, eta)");
            accumulate(out, [&](std::size_t k, std::size_t l) {
                std::vector<double> xi(static_cast<std::size_t>(n_));
                std::vector<double> eta(static_cast<std::size_t>(n_));
                for (int a = 0; a < n_; ++a) {
                    const auto ua = static_cast<std::size_t>(a);
                    xi[ua] = t * static_cast<double>(signed_axis(k, a)) / L_;
                    eta[ua] = t * static_cast<double>(signed_axis(l, a)) / L_;
                }
                return cplx(sym(std::span<const double>(xi), std::span<const double>(eta)));
            });
        }
        return out;
    }

    template <class Sym>
    GridFunction apply(const Sym& sym, double t) const
    {
        return GridFunction::from_coefficients(n_, N_, L_, spectrum(sym, t));
    }

private:
    [[nodiscard]] long signed_axis(std::size_t k, int a) const
    {
        const std::size_t v = axis_[k * static_cast<std::size_t>(n_) + static_cast<std::size_t>(a)];
        return v < N_ / 2 ? static_cast<long>(v) : static_cast<long>(v) - static_cast<long>(N_);
    }

    template <class Weight>
    void accumulate(std::vector<cplx>& out, const Weight& weight) const
    {
        const auto nn = static_cast<std::size_t>(n_);
        parallel_for(
            out.size(),
            [&](std::size_t m) {
                cplx acc{};
                for (std::size_t k : active_) {
                    std::size_t l = 0;
                    for (std::size_t a = 0; a < nn; ++a) {
                        l = l * N_ + (axis_[m * nn + a] + N_ - axis_[k * nn + a]) % N_;
                    }
                    if (G_[l] == cplx{}) {
                        continue;
                    }
                    acc += F_[k] * G_[l] * weight(k, l);
                }
                out[m] = acc;
            },
            workers_);
    }

    int n_;
    std::size_t N_;
    double L_;
    unsigned workers_;
    std::vector<cplx> F_;
    std::vector<cplx> G_;
    std::vector<std::size_t> axis_;
    std::vector<std::size_t> norm_class_;
    std::vector<double> class_norm_;
    std::vector<std::size_t> active_;
};

/// T_{sigma, t}(f, g) on the grid of f and g.
template <class Sym>
GridFunction average_mult(const Sym& sym, const GridFunction& f, const GridFunction& g, double t, unsigned workers = 0)
{
    return BilinearEngine(f, g, workers).apply(sym, t);
}

/// The symbol of A_t itself: dsigma_hat on S^{2n-1}.
inline symbols::RadialBilinearSymbol full_symbol(int n) { return {n, 0, symbols::Kind::Full}; }

// ---------------------------------------------------------------------------
// t grids

/// Geometric grid t_min * ratio^k up to t_max (inclusive within rounding).
inline std::vector<double> geometric_grid(double t_min, double t_max, double ratio)
{
    if (!(t_min > 0.0) || !(t_max >= t_min) || !(ratio > 1.0)) {
        throw std::invalid_argument("geometric_grid: need 0 < t_min <= t_max and ratio > 1");
    }
    std::vector<double> ts;
    const double steps = std::log(t_max / t_min) / std::log(ratio);
    const auto count = static_cast<std::size_t>(std::floor(steps + 1e-9)) + 1;
    ts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        ts.push_back(t_min * std::pow(ratio, static_cast<double>(k)));
    }
    return ts;
}

/// Default grid: ratio 2^{1/16} over [2^-6, 2^6] grid spacings.
inline std::vector<double> default_t_grid(std::size_t N, double L)
{
    const double h = L / static_cast<double>(N);
    return geometric_grid(std::ldexp(h, -6), std::ldexp(h, 6), std::exp2(1.0 / 16.0));
}

inline void check_t_grid(std::span<const double> ts, const char* who)
{
    if (ts.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty t grid");
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] > 0.0) || (i > 0 && !(ts[i] > ts[i - 1]))) {
            throw std::invalid_argument(std::string(who) + ": t grid must be positive and increasing");
        }
    }
}

// ---------------------------------------------------------------------------
// Maximal operators and square functions

/// sup over t in t_grid of |T_{sigma, t}(f, g)| pointwise.
template <class Sym>
GridFunction maximal(const GridFunction& f, const GridFunction& g, const Sym& sym, std::span<const double> t_grid,
                     unsigned workers = 0)
{
    check_t_grid(t_grid, "maximal");
    const BilinearEngine engine(f, g, workers);
    GridFunction out(f.n(), f.N(), f.L());
    for (double t : t_grid) {
        const GridFunction a = engine.apply(sym, t);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::max(out[i].real(), std::abs(a[i]));
        }
    }
    return out;
}

/// sup over t of |dsigma_hat(2n, t|xi|) applied to |f||.
inline GridFunction linear_max(const GridFunction& f, std::span<const double> t_grid)
{
    check_t_grid(t_grid, "linear_max");
    const int n = f.n();
    const std::vector<cplx> F = f.abs().coefficients();
    std::vector<double> freq(F.size());
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < F.size(); ++k) {
        f.multi_index(k, idx);
        double q = 0.0;
        for (std::size_t a : idx) {
            const auto s = static_cast<double>(f.signed_frequency(a));
            q += s * s;
        }
        freq[k] = std::sqrt(q) / f.L();
    }
    GridFunction out(n, f.N(), f.L());
    std::vector<cplx> H(F.size());
    for (double t : t_grid) {
        for (std::size_t k = 0; k < F.size(); ++k) {
            H[k] = F[k] * specfn::dsigma_hat(2 * n, t * freq[k]);
        }
        const GridFunction a = GridFunction::from_coefficients(n, f.N(), f.L(), H);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::max(out[i].real(), std::abs(a[i]));
        }
    }
    return out;
}

enum class SquareVariant { G, GTilde };

/// Trapezoid weights in log t.
inline std::vector<double> log_weights(std::span<const double> ts)
{
    std::vector<double> w(ts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double h = std::log(ts[i + 1] / ts[i]);
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

/// (sum_s |T_{j,s}(f, g)|^2 dlog s)^{1/2} with symbol m_j^2 (G) or ~m_j^2 (GTilde).
inline GridFunction square_function(const GridFunction& f, const GridFunction& g, int j, SquareVariant variant,
                                    std::span<const double> t_grid, double epsilon = symbols::RadialBilinearSymbol::kDefaultEpsilon,
                                    unsigned workers = 0)
{
    if (j < 1) {
        throw std::invalid_argument("square_function: j must be >= 1");
    }
    check_t_grid(t_grid, "square_function");
    const symbols::RadialBilinearSymbol sym(
        f.n(), j, variant == SquareVariant::G ? symbols::Kind::OffDiagonal : symbols::Kind::EulerOffDiagonal, epsilon);
    const BilinearEngine engine(f, g, workers);
    const std::vector<double> w = log_weights(t_grid);
    std::vector<double> acc(f.size(), 0.0);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const GridFunction a = engine.apply(sym, t_grid[i]);
        for (std::size_t p = 0; p < acc.size(); ++p) {
            acc[p] += std::norm(a[p]) * w[i];
        }
    }
    GridFunction out(f.n(), f.N(), f.L());
    for (std::size_t p = 0; p < acc.size(); ++p) {
        out[p] = std::sqrt(acc[p]);
    }
    return out;
}

/// t range over which m_j(t xi, t eta) can touch the grid's frequencies.
inline std::pair<double, double> active_t_range(int j, std::size_t N, double L, int n)
{
    const double k_max = std::sqrt(2.0 * n) * static_cast<double>(N / 2);
    return {std::ldexp(L, j - 1) / k_max, std::ldexp(L, j + 1)};
}

// ---------------------------------------------------------------------------
// Norms

inline double lp_norm(const GridFunction& h, double p)
{
    if (std::isinf(p) && p > 0.0) {
        return h.max_abs();
    }
    if (!(p > 0.0)) {
        throw std::invalid_argument("lp_norm: p must be positive");
    }
    std::vector<double> terms(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        terms[i] = std::pow(std::abs(h[i]), p);
    }
    return std::pow(pairwise_sum(terms) * h.cell_volume(), 1.0 / p);
}

struct OpnormProbe {
    double lower_bound = 0.0;
    std::size_t best_trial = 0;
    std::vector<double> ratios;
};

/// max over sampled pairs of ||op(f, g)||_p / (||f||_{p1} ||g||_{p2}).
/// Trial i draws f then g from Philox stream (seed, i).
inline OpnormProbe opnorm_lower(const std::function<GridFunction(const GridFunction&, const GridFunction&)>& op,
                                double p1, double p2, double p, const TestFunctionFamily& family, std::size_t N,
                                std::size_t trials, std::uint64_t seed)
{
    if (trials < 1) {
        throw std::invalid_argument("opnorm_lower: need at least one trial");
    }
    OpnormProbe probe;
    for (std::size_t i = 0; i < trials; ++i) {
        RandomStream rng(seed, i);
        const TestFunction tf = family.draw(rng);
        const TestFunction tg = family.draw(rng);
        const GridFunction f = tf.on_grid(N, family.L);
        const GridFunction g = tg.on_grid(N, family.L);
        const double denom = lp_norm(f, p1) * lp_norm(g, p2);
        const double ratio = denom > 0.0 ? lp_norm(op(f, g), p) / denom : 0.0;
        probe.ratios.push_back(ratio);
        if (ratio > probe.lower_bound) {
            probe.lower_bound = ratio;
            probe.best_trial = i;
        }
    }
    return probe;
}

/// Pointwise product, the multiplier sigma = 1.
inline GridFunction pointwise_product(const GridFunction& f, const GridFunction& g)
{
    if (!f.same_grid(g)) {
        throw std::invalid_argument("pointwise_product: grids differ");
    }
    GridFunction out(f.n(), f.N(), f.L());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f[i] * g[i];
    }
    return out;
}

}  // namespace spheremax::bilop

#endif  // SPHEREMAX_BILOP_HPP
