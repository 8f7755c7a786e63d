#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "json.hpp"
#include "spheremax/bilop.hpp"
#include "spheremax/random.hpp"
#include "spheremax/specfn.hpp"
#include "spheremax/squad.hpp"

using namespace spheremax;
using namespace spheremax::bilop;

namespace {

double omega(int d) { return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0); }

double max_diff(const GridFunction& a, const GridFunction& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

GridFunction constant(int n, std::size_t N, double L, double c)
{
    return GridFunction::sample(n, N, L, [c](std::span<const double>) { return c; });
}

// e^{2 pi i k.x / L}
GridFunction mode(int n, std::size_t N, double L, std::vector<long> k)
{
    GridFunction g(n, N, L);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.position(i, x);
        double ph = 0.0;
        for (int a = 0; a < n; ++a) {
            ph += static_cast<double>(k[static_cast<std::size_t>(a)]) * x[static_cast<std::size_t>(a)] / L;
        }
        g[i] = std::polar(1.0, 2.0 * std::numbers::pi * ph);
    }
    return g;
}

const auto one_symbol = [](double, double) { return 1.0; };

}  // namespace

TEST(GridFunction, RoundTripAndConvention)
{
    RandomStream rng(61, 0);
    for (int n : {1, 2}) {
        const std::size_t N = n == 1 ? 256 : 32;
        GridFunction g(n, N, 3.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = {rng.uniform() - 0.5, rng.uniform() - 0.5};
        }
        const auto back = GridFunction::from_coefficients(n, N, 3.0, g.coefficients());
        EXPECT_LT(max_diff(g, back), 1e-12 * g.max_abs());
    }
    // frequency index k means xi = k / L, including negative indices
    const auto m = mode(1, 16, 2.0, {-3});
    const auto c = m.coefficients();
    EXPECT_NEAR(std::abs(c[13] - 1.0), 0.0, 1e-14);
    EXPECT_EQ(m.signed_frequency(13), -3);
    EXPECT_THROW(GridFunction(1, 12, 1.0), std::invalid_argument);
    EXPECT_THROW(GridFunction(1, 16, 0.0), std::invalid_argument);
}

TEST(GridFunction, SamplingMatchesEvaluatorAtNodes)
{
    const auto tf = TestFunction::modulated_bump({1.1, 0.9}, 0.6, {2.0, -1.0});
    const auto g = tf.on_grid(32, 2.0);
    std::vector<double> x(2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.position(i, x);
        ASSERT_EQ(g[i].real(), tf(x));
        ASSERT_EQ(g[i].imag(), 0.0);
    }
}

TEST(GridFunction, SerialisationRoundTrip)
{
    RandomStream rng(62, 0);
    GridFunction g(2, 8, 1.75);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = {rng.uniform(), -rng.uniform()};
    }
    const auto dir = std::filesystem::temp_directory_path() / "spheremax_grid_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "g.bin").string();
    g.save(path);
    const auto h = GridFunction::load(path);
    ASSERT_TRUE(h.same_grid(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(h[i], g[i]);
    }
    EXPECT_EQ(std::filesystem::file_size(path), 24u + 16u * g.size());
    std::ifstream js(path + ".json");
    const auto meta = nlohmann::json::parse(js);
    EXPECT_EQ(meta["n"], 2);
    EXPECT_EQ(meta["N"], 8);
    EXPECT_EQ(meta["L"], 1.75);
    std::filesystem::remove_all(dir);
}

TEST(TestFunctions, GaussianFourierAndNorm)
{
    // closed-form transform against a direct Riemann sum (spectrally accurate for Gaussians)
    const auto tf = TestFunction::gaussian({0.3}, 0.4, 2.0);
    for (double xi : {0.0, 0.5, 1.3}) {
        std::complex<double> s{};
        const double h = 0.01;
        for (int i = -1000; i <= 1000; ++i) {
            const double x = 0.3 + i * h;
            s += tf(std::span<const double>(&x, 1)) * std::polar(1.0, -2.0 * std::numbers::pi * x * xi) * h;
        }
        EXPECT_LT(std::abs(s - tf.fourier(std::span<const double>(&xi, 1))), 1e-12);
    }
    EXPECT_THROW((void)TestFunction::bump({0.0}, 1.0).fourier(std::vector<double>{0.0}), std::logic_error);
}

TEST(TestFunctions, Periodization)
{
    EXPECT_NO_THROW(require_periodizable(TestFunction::gaussian({8.0}, 0.5), 16.0));
    EXPECT_THROW(require_periodizable(TestFunction::gaussian({8.0}, 2.0), 16.0), std::invalid_argument);
    EXPECT_NO_THROW(require_periodizable(TestFunction::bump({1.0, 1.0}, 0.9), 2.0));
    EXPECT_THROW(require_periodizable(TestFunction::bump({0.5, 1.0}, 0.9), 2.0), std::invalid_argument);
}

TEST(AverageQuad, Examples)
{
    const auto one = [](std::span<const double>) { return 1.0; };
    for (int n : {1, 2}) {
        const auto rule = squad::SphereRule::hemisphere_graph(2 * n, 12);
        const std::vector<double> x(static_cast<std::size_t>(n), 0.7);
        for (double t : {0.01, 1.0, 30.0}) {
            EXPECT_NEAR(average_quad(one, one, x, t, rule), omega(2 * n), 1e-10 * omega(2 * n));
        }
        const auto tf = TestFunction::gaussian(x, 0.5);
        const double small = average_quad(tf, tf, x, 1e-3, rule);
        EXPECT_NEAR(small / omega(2 * n), 1.0, 1e-5);
        EXPECT_THROW(average_quad(one, one, x, 0.0, rule), std::invalid_argument);
    }
    const auto r3 = squad::SphereRule::hemisphere_graph(4, 6);
    EXPECT_THROW(average_quad(one, one, std::vector<double>{0.0}, 1.0, r3), std::invalid_argument);
}

TEST(AverageMult, ConstantSymbolIsPointwiseProduct)
{
    for (int n : {1, 2}) {
        const std::size_t N = n == 1 ? 64 : 16;
        const auto f = TestFunction::modulated_bump(std::vector<double>(n, 2.0), 1.5, std::vector<double>(n, 1.5)).on_grid(N, 4.0);
        const auto g = TestFunction::gaussian(std::vector<double>(n, 1.8), 0.5).on_grid(N, 4.0);
        const auto prod = pointwise_product(f, g);
        EXPECT_LT(max_diff(average_mult(one_symbol, f, g, 0.7), prod), 1e-12 * prod.max_abs()) << n;
    }
    EXPECT_THROW(average_mult(one_symbol, GridFunction(1, 8, 1.0), GridFunction(1, 16, 1.0), 1.0), std::invalid_argument);
    EXPECT_THROW(average_mult(one_symbol, GridFunction(1, 8, 1.0), GridFunction(1, 8, 1.0), 0.0), std::invalid_argument);
}

TEST(AverageMult, SingleModeEigenfunction)
{
    const double L = 3.0;
    const double t = 0.9;
    const auto sym = full_symbol(2);
    const auto f = mode(2, 16, L, {2, -3});
    const auto g = mode(2, 16, L, {1, 5});
    const auto c = average_mult(sym, f, g, t).coefficients();
    const double expected = specfn::dsigma_hat(4, t * std::sqrt(4.0 + 9.0 + 1.0 + 25.0) / L);
    for (std::size_t i = 0; i < c.size(); ++i) {
        // output frequency (3, 2)
        const double want = i == 3 * 16 + 2 ? expected : 0.0;
        EXPECT_LT(std::abs(c[i] - want), 1e-12) << i;
    }
    // the same number from the quadrature path: A_t(e_k, e_l)(x) = e_{k+l}(x) dsigma_hat(t |(k, l)| / L)
    const auto rule = squad::SphereRule::hemisphere_graph(4, 16);
    const auto ek = [&](std::span<const double> x) { return std::polar(1.0, 2.0 * std::numbers::pi * (2 * x[0] - 3 * x[1]) / L); };
    const auto el = [&](std::span<const double> x) { return std::polar(1.0, 2.0 * std::numbers::pi * (x[0] + 5 * x[1]) / L); };
    const std::vector<double> x{0.0, 0.0};
    EXPECT_NEAR(std::abs(average_quad(ek, el, x, t, rule) - expected), 0.0, 1e-9);
}

TEST(AverageMult, BilinearAndSymmetric)
{
    RandomStream rng(63, 0);
    const TestFunctionFamily fam{1, 8.0, TestFunction::Kind::Gaussian};
    const auto f1 = fam.draw(rng).on_grid(128, 8.0);
    const auto f2 = TestFunction::modulated_bump({4.0}, 1.5, {2.0}).on_grid(128, 8.0);
    const auto g = fam.draw(rng).on_grid(128, 8.0);
    const std::complex<double> alpha(-1.7, 0.4);
    GridFunction comb(1, 128, 8.0);
    for (std::size_t i = 0; i < comb.size(); ++i) {
        comb[i] = alpha * f1[i] + f2[i];
    }
    const auto sym = full_symbol(1);
    const auto lhs = average_mult(sym, comb, g, 0.6);
    const auto a = average_mult(sym, f1, g, 0.6);
    const auto b = average_mult(sym, f2, g, 0.6);
    double err = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        err = std::max(err, std::abs(lhs[i] - alpha * a[i] - b[i]));
    }
    EXPECT_LT(err, 1e-12 * std::max(1.0, lhs.max_abs()));

    for (auto kind : {symbols::Kind::Full, symbols::Kind::Diagonal, symbols::Kind::EulerOffDiagonal}) {
        const symbols::RadialBilinearSymbol s(1, kind == symbols::Kind::Full ? 0 : 3, kind);
        const auto fg = average_mult(s, f2, g, 1.3);
        const auto gf = average_mult(s, g, f2, 1.3);
        EXPECT_LT(max_diff(fg, gf), 1e-12 * std::max(1.0, fg.max_abs()));
    }
}

TEST(AverageMult, DecompositionSumsToFullSymbol)
{
    for (int n : {1, 2}) {
        const std::size_t N = n == 1 ? 128 : 16;
        const double L = 6.0;
        const auto f = TestFunction::gaussian(std::vector<double>(n, 3.0), 0.5).on_grid(N, L);
        const auto g = TestFunction::modulated_bump(std::vector<double>(n, 2.9), 2.0, std::vector<double>(n, 0.7)).on_grid(N, L);
        const double t = 1.4;
        const BilinearEngine engine(f, g);
        // 2^J above the largest |t (xi, eta)| on the grid
        const double top = t * std::sqrt(2.0 * n) * static_cast<double>(N / 2) / L;
        const int J = static_cast<int>(std::ceil(std::log2(top))) + 1;
        GridFunction sum(n, N, L);
        for (int j = 0; j <= J; ++j) {
            const auto part = engine.apply(symbols::make_symbol(n, j, symbols::Kind::Piece), t);
            for (std::size_t i = 0; i < sum.size(); ++i) {
                sum[i] += part[i];
            }
        }
        const auto full = engine.apply(full_symbol(n), t);
        EXPECT_LT(max_diff(sum, full), 1e-10 * full.max_abs()) << n;
    }
}

TEST(AverageMult, DilationCovariance)
{
    const std::size_t N = 128;
    const double L = 8.0;
    const auto tf = TestFunction::gaussian({4.0}, 0.6);
    const auto tg = TestFunction::bump({4.2}, 1.5);
    const auto f = tf.on_grid(N, L);
    const auto g = tg.on_grid(N, L);
    const auto f2 = GridFunction::sample(1, N, L / 2, [&](std::span<const double> x) { const double y = 2 * x[0]; return tf(std::span<const double>(&y, 1)); });
    const auto g2 = GridFunction::sample(1, N, L / 2, [&](std::span<const double> x) { const double y = 2 * x[0]; return tg(std::span<const double>(&y, 1)); });
    for (double t : {0.2, 0.5, 1.1}) {
        const auto a = average_mult(full_symbol(1), f, g, 2 * t);
        const auto b = average_mult(full_symbol(1), f2, g2, t);
        EXPECT_LT(max_diff(a, b), 1e-3 * a.max_abs()) << t;
    }
}

TEST(AverageMult, MatchesQuadraturePath)
{
    // n = 1, N = 256, analytic Gaussians against the multiplier on their samples
    const std::size_t N = 256;
    const double L = 16.0;
    const auto tf = TestFunction::gaussian({8.0}, 0.5);
    const auto tg = TestFunction::gaussian({7.6}, 0.7, 1.3);
    require_periodizable(tf, L);
    require_periodizable(tg, L);
    const auto rule = squad::SphereRule::change_of_variables(2, 512, 4);
    for (double t : {0.25, 0.8, 2.0}) {
        const auto m = average_mult(full_symbol(1), tf.on_grid(N, L), tg.on_grid(N, L), t);
        for (int s = 0; s < 16; ++s) {
            const std::size_t idx = 112 + 2 * static_cast<std::size_t>(s);
            const std::vector<double> x{L * static_cast<double>(idx) / N};
            const double q = average_quad(tf, tg, x, t, rule);
            EXPECT_LE(std::abs(m[idx] - q), 1e-2 * std::abs(q)) << t << ' ' << x[0];
        }
    }
}

TEST(Maximal, RefinementMonotone)
{
    const auto f = TestFunction::gaussian({3.0}, 0.4).on_grid(64, 6.0);
    const auto g = TestFunction::modulated_bump({3.1}, 1.2, {1.0}).on_grid(64, 6.0);
    const std::vector<double> coarse = geometric_grid(0.05, 3.0, 1.5);
    std::vector<double> fine = coarse;
    fine.push_back(0.77);
    std::sort(fine.begin(), fine.end());
    for (auto kind : {symbols::Kind::Full, symbols::Kind::Piece}) {
        const symbols::RadialBilinearSymbol s(1, kind == symbols::Kind::Full ? 0 : 2, kind);
        const auto a = maximal(f, g, s, coarse);
        const auto b = maximal(f, g, s, fine);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_GE(a[i].real(), 0.0);
            EXPECT_EQ(a[i].imag(), 0.0);
            EXPECT_LE(a[i].real(), b[i].real());
        }
    }
    EXPECT_THROW(maximal(f, g, full_symbol(1), std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(maximal(f, g, full_symbol(1), std::vector<double>{1.0, 0.5}), std::invalid_argument);
}

TEST(Maximal, DominatedByLinearMaximal)
{
    for (int n : {1, 2}) {
        const std::size_t N = n == 1 ? 128 : 32;
        const double L = 8.0;
        const auto f = TestFunction::gaussian(std::vector<double>(n, 4.0), 0.45).on_grid(N, L);
        const auto g = TestFunction::gaussian(std::vector<double>(n, 3.7), 0.6, 0.8).on_grid(N, L);
        const auto ts = default_t_grid(N, L);
        const auto M = maximal(f, g, full_symbol(n), ts);
        const auto M0 = linear_max(f, ts);
        const double ginf = g.max_abs();
        for (std::size_t i = 0; i < M.size(); ++i) {
            EXPECT_LE(M[i].real(), ginf * M0[i].real() + 1e-10) << n << ' ' << i;
        }
    }
}

TEST(LinearMax, Examples)
{
    for (int n : {1, 2}) {
        const std::size_t N = n == 1 ? 64 : 16;
        const auto ts = geometric_grid(0.1, 10.0, 2.0);
        const auto one = linear_max(constant(n, N, 5.0, 1.0), ts);
        for (std::size_t i = 0; i < one.size(); ++i) {
            EXPECT_NEAR(one[i].real(), omega(2 * n), 1e-12 * omega(2 * n));
        }
        // sup dominates the marginal average at every t
        const auto f = TestFunction::modulated_bump(std::vector<double>(n, 2.5), 1.8, std::vector<double>(n, 1.0)).on_grid(N, 5.0);
        const auto M0 = linear_max(f, ts);
        const auto absf = f.abs();
        const auto unit = constant(n, N, 5.0, 1.0);
        for (double t : ts) {
            const auto a = average_mult(full_symbol(n), absf, unit, t);
            for (std::size_t i = 0; i < a.size(); ++i) {
                EXPECT_LE(std::abs(a[i]), M0[i].real() * (1.0 + 1e-12) + 1e-14);
            }
        }
    }
    EXPECT_THROW(linear_max(constant(1, 8, 1.0, 1.0), std::vector<double>{}), std::invalid_argument);
}

TEST(LinearMax, TranslationEquivariant)
{
    const std::size_t N = 32;
    const double L = 6.0;
    const auto f = TestFunction::modulated_bump({2.0, 3.5}, 1.6, {0.8, -0.3}).on_grid(N, L);
    const std::size_t sx = 5;
    const std::size_t sy = 27;
    GridFunction shifted(2, N, L);
    std::array<std::size_t, 2> k{};
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.multi_index(i, k);
        const std::array<std::size_t, 2> to{(k[0] + sx) % N, (k[1] + sy) % N};
        shifted[shifted.flat_index(to)] = f[i];
    }
    const auto ts = default_t_grid(N, L);
    const auto a = linear_max(f, ts);
    const auto b = linear_max(shifted, ts);
    for (std::size_t i = 0; i < a.size(); ++i) {
        f.multi_index(i, k);
        const std::array<std::size_t, 2> to{(k[0] + sx) % N, (k[1] + sy) % N};
        EXPECT_NEAR(b[b.flat_index(to)].real(), a[i].real(), 1e-12 * a.max_abs());
    }
}

TEST(Maximal, RadialEquivariance)
{
    // radial f, g about the grid point (L/2, L/2): reflections and the axis swap fix the output
    const std::size_t N = 16;
    const double L = 6.0;
    const auto f = TestFunction::gaussian({3.0, 3.0}, 0.5).on_grid(N, L);
    const auto g = TestFunction::bump({3.0, 3.0}, 2.0).on_grid(N, L);
    const auto M = maximal(f, g, full_symbol(2), geometric_grid(0.2, 3.0, std::sqrt(2.0)));
    std::array<std::size_t, 2> k{};
    for (std::size_t i = 0; i < M.size(); ++i) {
        M.multi_index(i, k);
        const double v = M[i].real();
        const std::array<std::size_t, 2> swap{k[1], k[0]};
        const std::array<std::size_t, 2> refl{(N - k[0]) % N, k[1]};
        const std::array<std::size_t, 2> both{(N - k[1]) % N, (N - k[0]) % N};
        EXPECT_NEAR(M[M.flat_index(swap)].real(), v, 1e-12 * M.max_abs());
        EXPECT_NEAR(M[M.flat_index(refl)].real(), v, 1e-12 * M.max_abs());
        EXPECT_NEAR(M[M.flat_index(both)].real(), v, 1e-12 * M.max_abs());
    }
}

TEST(Maximal, PieceVanishesBeyondGridBand)
{
    const std::size_t N = 64;
    const double L = 8.0;
    const auto f = TestFunction::gaussian({4.0}, 0.5).on_grid(N, L);
    const auto g = TestFunction::gaussian({4.1}, 0.4).on_grid(N, L);
    const auto ts = geometric_grid(0.125, 1.0, std::exp2(1.0 / 8.0));
    const double band = std::sqrt(2.0) * static_cast<double>(N) / (2.0 * L);
    double prev = INFINITY;
    for (int j = 1; j <= 7; ++j) {
        const double norm = lp_norm(maximal(f, g, symbols::make_symbol(1, j, symbols::Kind::Piece), ts), 2.0);
        if (std::ldexp(1.0, j - 1) > band) {
            EXPECT_LT(norm, 1e-8) << j;
        }
        if (j >= 2) {
            EXPECT_LE(norm, prev * (1.0 + 1e-12)) << j;
        }
        prev = norm;
    }
    // below the active range the piece sees no grid frequency at all
    const auto [t_lo, t_hi] = active_t_range(3, N, L, 1);
    EXPECT_EQ(average_mult(symbols::make_symbol(1, 3, symbols::Kind::Piece), f, g, 0.99 * t_lo).max_abs(), 0.0);
    EXPECT_GT(t_hi, t_lo);
}

TEST(SquareFunction, Examples)
{
    const std::size_t N = 128;
    const double L = 8.0;
    const auto f = TestFunction::gaussian({4.0}, 0.3).on_grid(N, L);
    const auto g = TestFunction::gaussian({4.2}, 0.35).on_grid(N, L);
    const int j = 2;
    const auto [lo, hi] = active_t_range(j, N, L, 1);
    const auto ts = geometric_grid(lo, hi, std::exp2(1.0 / 16.0));
    EXPECT_EQ(square_function(f, constant(1, N, L, 0.0), j, SquareVariant::G, ts).max_abs(), 0.0);
    EXPECT_THROW(square_function(f, g, 0, SquareVariant::G, ts), std::invalid_argument);
    EXPECT_THROW(square_function(f, g, j, SquareVariant::G, std::vector<double>{}), std::invalid_argument);

    const auto G = square_function(f, g, j, SquareVariant::G, ts);
    const auto Gt = square_function(f, g, j, SquareVariant::GTilde, ts);
    // sup_s |T_{j,s}| <= sqrt2 (G G~)^{1/2}, plus a few percent for the discrete s grid
    const auto sup = maximal(f, g, symbols::make_symbol(1, j, symbols::Kind::OffDiagonal), ts);
    for (std::size_t i = 0; i < G.size(); i += 3) {
        const double bound = std::sqrt(2.0 * G[i].real() * Gt[i].real());
        EXPECT_LE(sup[i].real(), 1.05 * bound + 1e-10 * sup.max_abs()) << i;
    }
    // doubling the s density
    const auto G2 = square_function(f, g, j, SquareVariant::G, geometric_grid(lo, hi, std::exp2(1.0 / 32.0)));
    EXPECT_LT(max_diff(G, G2), 0.05 * G.max_abs());
    const auto ts_fine = geometric_grid(lo, hi, std::exp2(1.0 / 32.0));
    EXPECT_LT(std::abs(lp_norm(G, 2.0) - lp_norm(G2, 2.0)), 0.05 * lp_norm(G2, 2.0));
    EXPECT_GT(ts_fine.size(), ts.size());
}

TEST(LpNorm, Examples)
{
    GridFunction cell(2, 16, 4.0);
    cell[37] = 1.0;
    EXPECT_NEAR(lp_norm(cell, 1.0), cell.cell_volume(), 1e-15);
    EXPECT_NEAR(lp_norm(cell, 0.5), cell.cell_volume() * cell.cell_volume(), 1e-15);
    EXPECT_EQ(lp_norm(cell, INFINITY), 1.0);
    EXPECT_THROW(lp_norm(cell, 0.0), std::invalid_argument);
    EXPECT_THROW(lp_norm(cell, -1.0), std::invalid_argument);

    RandomStream rng(64, 0);
    GridFunction h(1, 256, 3.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = {rng.uniform() - 0.3, rng.uniform() * 0.1};
    }
    const double vol = 3.0;
    for (double p : {0.5, 1.0, 2.0, 3.5}) {
        EXPECT_GE(lp_norm(h, INFINITY) * (1.0 + 1e-14), lp_norm(h, p) * std::pow(vol, -1.0 / p)) << p;
    }
    EXPECT_LE(lp_norm(h, 1.0), lp_norm(h, 2.0) * std::sqrt(vol) * (1.0 + 1e-14));
}

TEST(LpNorm, GaussianClosedForm)
{
    for (int n : {1, 2}) {
        const double L = 10.0;
        const auto tf = TestFunction::gaussian(std::vector<double>(n, 5.0), 0.4, 1.7);
        const std::size_t N = n == 1 ? 256 : 64;
        EXPECT_NEAR(lp_norm(tf.on_grid(N, L), 2.0) / tf.l2_norm(), 1.0, 1e-4) << n;
    }
}

TEST(Opnorm, PointwiseProductCauchySchwarz)
{
    const TestFunctionFamily fam{1, 16.0, TestFunction::Kind::Gaussian};
    const auto op = [](const GridFunction& f, const GridFunction& g) { return pointwise_product(f, g); };
    const auto probe = opnorm_lower(op, 2.0, 2.0, 1.0, fam, 256, 64, 5);
    EXPECT_LE(probe.lower_bound, 1.0 + 1e-12);
    EXPECT_GE(probe.lower_bound, 0.9);
    EXPECT_EQ(probe.ratios.size(), 64u);
    EXPECT_EQ(probe.ratios[probe.best_trial], probe.lower_bound);
    for (double r : probe.ratios) {
        EXPECT_LE(r, probe.lower_bound);
    }
    const auto again = opnorm_lower(op, 2.0, 2.0, 1.0, fam, 256, 64, 5);
    EXPECT_EQ(again.ratios, probe.ratios);

    const auto zero = [](const GridFunction& f, const GridFunction&) { return GridFunction(f.n(), f.N(), f.L()); };
    EXPECT_EQ(opnorm_lower(zero, 2.0, 2.0, 1.0, fam, 64, 4, 1).lower_bound, 0.0);
    EXPECT_THROW(opnorm_lower(op, 2.0, 2.0, 1.0, fam, 64, 0, 1), std::invalid_argument);
}

TEST(Engine, WorkerCountDoesNotChangeOutput)
{
    const auto f = TestFunction::gaussian({2.0, 2.1}, 0.4).on_grid(16, 4.0);
    const auto g = TestFunction::modulated_bump({2.0, 1.9}, 1.5, {0.5, 0.5}).on_grid(16, 4.0);
    const auto a = average_mult(full_symbol(2), f, g, 0.8, 1);
    const auto b = average_mult(full_symbol(2), f, g, 0.8, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
    }
}
