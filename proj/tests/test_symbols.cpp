#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spheremax/fit.hpp"
#include "spheremax/random.hpp"
#include "spheremax/specfn.hpp"
#include "spheremax/squad.hpp"
#include "spheremax/symbols.hpp"

using namespace spheremax;
using namespace spheremax::symbols;

TEST(Cutoffs, Phi0)
{
    EXPECT_EQ(phi0(0.0), 1.0);
    EXPECT_EQ(phi0(0.5), 1.0);
    EXPECT_EQ(phi0(3.0), 0.0);
    EXPECT_DOUBLE_EQ(phi0(1.5), 0.5);
    // the stated construction h(2-s) / (h(2-s) + h(s-1)), h(t) = exp(-1/t)
    for (double s = 1.01; s < 2.0; s += 0.05) {
        const double a = std::exp(-1.0 / (2.0 - s));
        const double b = std::exp(-1.0 / (s - 1.0));
        EXPECT_NEAR(phi0(s), a / (a + b), 1e-15);
        if (s > 1.05 && s < 1.94) {
            EXPECT_LT(phi0(s + 0.01), phi0(s));  // nearer the ends exp(-1/t) is below an ulp of 1
        }
        EXPECT_LE(phi0(s + 0.01), phi0(s));
    }
}

TEST(Cutoffs, PhiAndTelescoping)
{
    EXPECT_EQ(phi(0.25), 0.0);
    EXPECT_EQ(phi(4.0), 0.0);
    double sum = phi0(100.0);
    for (int j = 1; j <= 20; ++j) {
        sum += phi(std::ldexp(100.0, -j));
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);

    RandomStream rng(21, 0);
    for (int i = 0; i < 1000; ++i) {
        const double r = std::ldexp(rng.uniform(), 15);
        double s = phi0(r);
        for (int j = 1; j <= 16; ++j) {
            s += phi(std::ldexp(r, -j));
        }
        EXPECT_NEAR(s, 1.0, 1e-14) << r;
        // finite telescoping identity
        double partial = phi0(r);
        for (int j = 1; j <= 5; ++j) {
            partial += phi(std::ldexp(r, -j));
        }
        EXPECT_NEAR(partial, phi0(std::ldexp(r, -5)), 1e-14);
    }
}

TEST(Cutoffs, PhiSupport)
{
    RandomStream rng(22, 0);
    for (int i = 0; i < 10000; ++i) {
        const double s = 8.0 * rng.uniform();
        if (s < 0.5 || s > 2.0) {
            EXPECT_EQ(phi(s), 0.0) << s;
        }
    }
}

TEST(Cutoffs, Rho)
{
    EXPECT_EQ(rho(0.0, 0.1), 1.0);
    EXPECT_EQ(rho(1.5, 0.1), 0.0);
    EXPECT_EQ(rho(0.9, 0.1), 1.0);
    EXPECT_EQ(rho(-1.0, 0.1), 0.0);
    RandomStream rng(23, 0);
    for (int i = 0; i < 1000; ++i) {
        const double u = 3.0 * rng.uniform() - 1.5;
        EXPECT_EQ(rho(u, 0.1), rho(-u, 0.1));
        EXPECT_GE(rho(u, 0.2), 0.0);
        EXPECT_LE(rho(u, 0.2), 1.0);
    }
    EXPECT_THROW(rho(0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(rho(0.0, 0.5), std::invalid_argument);
}

TEST(Symbol, Construction)
{
    EXPECT_THROW(make_symbol(0, 1, Kind::Piece), std::invalid_argument);
    EXPECT_THROW(make_symbol(2, 0, Kind::Diagonal), std::invalid_argument);
    EXPECT_THROW(make_symbol(2, -1, Kind::Piece), std::invalid_argument);
    EXPECT_THROW(make_symbol(2, 3, Kind::Diagonal, 0.6), std::invalid_argument);
    EXPECT_NO_THROW(make_symbol(2, 0, Kind::Piece));
}

TEST(Symbol, Examples)
{
    for (int n : {1, 2, 3}) {
        const double omega = 2.0 * std::pow(std::numbers::pi, n) / std::tgamma(n);
        EXPECT_NEAR(make_symbol(n, 0, Kind::Piece)(0.0, 0.0), omega, 1e-12 * omega);
        for (int j = 1; j <= 6; ++j) {
            const double r = std::ldexp(1.0, j + 2);
            EXPECT_EQ(make_symbol(n, j, Kind::Piece)(r / std::sqrt(2.0), r / std::sqrt(2.0)), 0.0);
        }
    }
}

TEST(Symbol, SupportAndSplit)
{
    RandomStream rng(31, 0);
    for (int n : {1, 2, 3}) {
        for (int j = 1; j <= 8; ++j) {
            const auto m = make_symbol(n, j, Kind::Piece);
            const auto m1 = make_symbol(n, j, Kind::Diagonal);
            const auto m2 = make_symbol(n, j, Kind::OffDiagonal);
            const auto e = make_symbol(n, j, Kind::EulerPiece);
            const auto e1 = make_symbol(n, j, Kind::EulerDiagonal);
            const auto e2 = make_symbol(n, j, Kind::EulerOffDiagonal);
            for (int i = 0; i < 1000; ++i) {
                const double r = std::ldexp(3.0 * rng.uniform(), j - 1);
                const double th = 0.5 * std::numbers::pi * rng.uniform();
                const double u = r * std::cos(th);
                const double v = r * std::sin(th);
                if (r < std::ldexp(1.0, j - 1) || r > std::ldexp(1.0, j + 1)) {
                    EXPECT_EQ(m(u, v), 0.0);
                    EXPECT_EQ(e(u, v), 0.0);
                }
                const double lam = std::abs(std::log2(u / v));
                if (lam > j) {
                    EXPECT_EQ(m1(u, v), 0.0);
                    EXPECT_EQ(e1(u, v), 0.0);
                }
                if (lam <= (1.0 - 0.1) * j) {
                    EXPECT_EQ(m2(u, v), 0.0);
                    EXPECT_EQ(e2(u, v), 0.0);
                }
                EXPECT_NEAR(m1(u, v) + m2(u, v), m(u, v), 1e-14);
                EXPECT_NEAR(e1(u, v) + e2(u, v), e(u, v), 1e-14 * std::max(1.0, std::abs(e(u, v))));
            }
        }
    }
}

TEST(Symbol, Reconstruction)
{
    RandomStream rng(32, 0);
    for (int n : {1, 2, 3}) {
        const int J = 10;
        std::vector<RadialBilinearSymbol> pieces;
        for (int j = 0; j <= J; ++j) {
            pieces.push_back(make_symbol(n, j, Kind::Piece));
        }
        for (int i = 0; i < 2000; ++i) {
            const double r = std::ldexp(rng.uniform(), J);
            const double th = 0.5 * std::numbers::pi * rng.uniform();
            double sum = 0.0;
            for (const auto& m : pieces) {
                sum += m(r * std::cos(th), r * std::sin(th));
            }
            EXPECT_NEAR(sum, specfn::dsigma_hat(2 * n, r), 1e-12) << n << ' ' << r;
        }
    }
}

TEST(Symbol, RotationInvariantInEachFactor)
{
    const auto m = make_symbol(2, 3, Kind::Diagonal);
    RandomStream rng(33, 0);
    for (int i = 0; i < 200; ++i) {
        const double xi[2] = {6.0 * rng.uniform(), 6.0 * rng.uniform()};
        const double eta[2] = {6.0 * rng.uniform(), 6.0 * rng.uniform()};
        const double a = 2.0 * std::numbers::pi * rng.uniform();
        const double xr[2] = {std::cos(a) * xi[0] - std::sin(a) * xi[1], std::sin(a) * xi[0] + std::cos(a) * xi[1]};
        EXPECT_NEAR(m.at(xr, eta), m.at(xi, eta), 1e-12);
        const double er[2] = {-eta[1], eta[0]};
        EXPECT_NEAR(m.at(xi, er), m.at(xi, eta), 1e-12);
    }
}

TEST(Symbol, EulerProfileMatchesFiniteDifferences)
{
    RandomStream rng(34, 0);
    for (int n : {1, 2}) {
        for (int j : {2, 5}) {
            for (auto [base, euler] : {std::pair{Kind::Piece, Kind::EulerPiece}, std::pair{Kind::Diagonal, Kind::EulerDiagonal},
                                       std::pair{Kind::OffDiagonal, Kind::EulerOffDiagonal}}) {
                const auto s = make_symbol(n, j, base);
                const auto e = make_symbol(n, j, euler);
                int tested = 0;
                for (int i = 0; i < 400 && tested < 40; ++i) {
                    const double r = std::ldexp(0.55 + 1.4 * rng.uniform(), j);
                    const double th = 0.5 * std::numbers::pi * rng.uniform();
                    const double u = r * std::cos(th);
                    const double v = r * std::sin(th);
                    // five-point stencil; the angular cutoff is steep enough that O(h^2) shows at 1e-5
                    const double h = 1e-4 * r;
                    const double du = (8.0 * (s(u + h, v) - s(u - h, v)) - (s(u + 2 * h, v) - s(u - 2 * h, v))) / (12 * h);
                    const double dv = (8.0 * (s(u, v + h) - s(u, v - h)) - (s(u, v + 2 * h) - s(u, v - 2 * h))) / (12 * h);
                    const double fd = u * du + v * dv;
                    if (std::abs(fd) < 1e-3 * std::pow(r, -(2 * n - 1) / 2.0) * r) {
                        continue;
                    }
                    ++tested;
                    EXPECT_NEAR(e(u, v) / fd, 1.0, 1e-5) << n << ' ' << j << ' ' << u << ' ' << v;
                }
                EXPECT_GT(tested, 10);
            }
        }
    }
}

TEST(SupNorm, FiniteDifferencesBoundedByEstimate)
{
    // smoothness proxy: |sigma(xi + h e_a, eta) - sigma(xi, eta)| / h <= 1.1 sup |d_a sigma|
    RandomStream rng(35, 0);
    const int n = 2;
    for (Kind kind : {Kind::Piece, Kind::Diagonal, Kind::EulerDiagonal}) {
        const auto sym = make_symbol(n, 4, kind);
        for (int axis : {0, 2}) {
            const double sup = sup_norm_partial(sym, partial(n, axis)).value;
            ASSERT_GT(sup, 0.0);
            double worst = 0.0;
            for (int i = 0; i < 20000; ++i) {
                double x[4];
                for (double& c : x) {
                    c = std::ldexp(2.0 * rng.uniform() - 1.0, 5);
                }
                const double h = 1e-4;
                double y[4] = {x[0], x[1], x[2], x[3]};
                y[axis] += h;
                const double d = std::abs(sym.at(std::span<const double>(y, 2), std::span<const double>(y + 2, 2)) -
                                          sym.at(std::span<const double>(x, 2), std::span<const double>(x + 2, 2))) /
                                 h;
                worst = std::max(worst, d);
            }
            EXPECT_LE(worst, 1.1 * sup) << to_string(kind) << " axis " << axis;
            EXPECT_GT(worst, 0.2 * sup) << "sampling never came near the maximiser";
        }
    }
}

TEST(SupNorm, ZeroOrderMatchesDirectScan)
{
    const auto sym = make_symbol(2, 5, Kind::Piece);
    const double est = sup_norm_partial(sym, Multiindex(4, 0)).value;
    double scan = 0.0;
    for (double r = 16.0; r <= 64.0; r += 1e-3) {
        scan = std::max(scan, std::abs(sym.radial(r)));
    }
    EXPECT_NEAR(est / scan, 1.0, 1e-3);
}

TEST(SupNorm, RejectsBadInput)
{
    EXPECT_THROW(sup_norm_partial(make_symbol(2, 0, Kind::Full), partial(2, 0)), std::invalid_argument);
    EXPECT_THROW(sup_norm_partial(make_symbol(2, 3, Kind::Piece), partial(2, 0, 3)), std::invalid_argument);
    EXPECT_THROW(sup_norm_partial(make_symbol(2, 3, Kind::Piece), Multiindex(3, 0)), std::invalid_argument);
}

TEST(SupNorm, ZeroOrderDecaySlope)
{
    const int n = 2;
    std::vector<std::pair<double, double>> pts;
    for (int j = 4; j <= 10; ++j) {
        pts.emplace_back(std::ldexp(1.0, j), sup_norm_partial(make_symbol(n, j, Kind::Piece), Multiindex(4, 0)).value);
    }
    EXPECT_LE(fit_loglog(pts).slope, -(2.0 * n - 1.0) / 2.0 + 0.2);
}

TEST(L2Norm, MatchesMonteCarloOnIndicatorLikeProfile)
{
    // s = phi(2^-j r) on R^4: integral of s^2 over the ball of radius 2^{j+1}
    const int j = 3;
    const double R = std::ldexp(1.0, j + 1);
    const auto prof = [&](double u, double v) { return phi(std::ldexp(std::hypot(u, v), -j)); };
    const double l2 = l2_norm_profile(2, prof, std::ldexp(1.0, j - 1), R, {}, 1e-8);

    RandomStream rng(41, 0);
    const std::size_t samples = 1 << 20;
    const double ball = std::numbers::pi * std::numbers::pi / 2.0 * std::pow(R, 4);
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double x[4];
        double q;
        do {
            q = 0.0;
            for (double& c : x) {
                c = R * (2.0 * rng.uniform() - 1.0);
                q += c * c;
            }
        } while (q > R * R);
        const double s = prof(std::hypot(x[0], x[1]), std::hypot(x[2], x[3]));
        sum += s * s;
        sum2 += s * s * s * s;
    }
    const double mean = sum / samples;
    const double se = ball * std::sqrt((sum2 / samples - mean * mean) / (samples - 1));
    EXPECT_TRUE(squad::within_mc_error(ball * mean, se, l2 * l2)) << ball * mean << " +- " << se << " vs " << l2 * l2;
}

TEST(L2Norm, FactorizedMatchesGenericPath)
{
    for (int n : {1, 2}) {
        for (Kind kind : {Kind::Piece, Kind::Diagonal, Kind::EulerDiagonal, Kind::EulerOffDiagonal}) {
            const auto sym = make_symbol(n, 5, kind);
            const double fast = l2_norm(sym);
            std::vector<double> breaks{-5.0, -4.5, 4.5, 5.0};
            const double slow = l2_norm_profile(n, sym, sym.r_min(), sym.r_max(), breaks, 1e-7);
            EXPECT_NEAR(fast / slow, 1.0, 1e-4) << n << ' ' << to_string(kind);
        }
    }
}

TEST(L2Norm, Trivial)
{
    EXPECT_EQ(l2_norm_profile(2, [](double, double) { return 0.0; }, 1.0, 4.0), 0.0);
    EXPECT_THROW(l2_norm(make_symbol(2, 0, Kind::Full)), std::invalid_argument);
}

TEST(L2Norm, EulerDiagonalGrowth)
{
    std::vector<std::pair<double, double>> pts;
    for (int j = 4; j <= 10; ++j) {
        pts.emplace_back(std::ldexp(1.0, j), l2_norm(make_symbol(2, j, Kind::EulerDiagonal)));
    }
    EXPECT_LE(fit_loglog(pts).slope, 1.6);
}
