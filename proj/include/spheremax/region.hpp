#ifndef SPHEREMAX_REGION_HPP
#define SPHEREMAX_REGION_HPP

// Exponent-region geometry for the bilinear spherical maximal operator:
// which Hölder triples (1/p1, 1/p2, 1/p) are known bounded, known
// unbounded, or open.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "spheremax/rational.hpp"

namespace spheremax::region {

namespace detail {

template <class Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr double tolerance = 1e-12;
    static double from(const Rational& r) { return r.to_double(); }
};

template <>
struct ScalarTraits<Rational> {
    static Rational from(const Rational& r) { return r; }
};

template <class Scalar>
bool positive(const Scalar& x)
{
    if constexpr (std::is_same_v<Scalar, Rational>) {
        return x > Rational(0);
    } else {
        return x > ScalarTraits<Scalar>::tolerance;
    }
}

template <class Scalar>
bool at_least(const Scalar& a, const Scalar& b)
{
    if constexpr (std::is_same_v<Scalar, Rational>) {
        return a >= b;
    } else {
        return a >= b - ScalarTraits<Scalar>::tolerance;
    }
}

template <class Scalar>
bool equal(const Scalar& a, const Scalar& b)
{
    if constexpr (std::is_same_v<Scalar, Rational>) {
        return a == b;
    } else {
        return std::abs(a - b) <= ScalarTraits<Scalar>::tolerance;
    }
}

}  // namespace detail

/// A point (1/p1, 1/p2, 1/p) of the Hölder plane 1/p = 1/p1 + 1/p2.
///
/// `Scalar` is `double` or `Rational`. Rational points are classified with
/// exact arithmetic, so points on the boundary of an open region are never
/// reported as interior.
template <class Scalar = double>
class ExponentPoint {
public:
    ExponentPoint(Scalar inv_p1, Scalar inv_p2) : inv_p1_(inv_p1), inv_p2_(inv_p2), inv_p_(inv_p1 + inv_p2)
    {
        const Scalar zero(0);
        const Scalar one(1);
        if (inv_p1_ < zero || inv_p1_ > one || inv_p2_ < zero || inv_p2_ > one) {
            throw std::invalid_argument("ExponentPoint: reciprocal exponents must lie in [0,1]");
        }
    }

    [[nodiscard]] const Scalar& inv_p1() const { return inv_p1_; }
    [[nodiscard]] const Scalar& inv_p2() const { return inv_p2_; }
    [[nodiscard]] const Scalar& inv_p() const { return inv_p_; }

    [[nodiscard]] ExponentPoint swapped() const { return ExponentPoint(inv_p2_, inv_p1_); }

    template <class Other = double>
    [[nodiscard]] ExponentPoint<Other> as() const
        requires std::is_same_v<Scalar, Rational>
    {
        return ExponentPoint<Other>(detail::ScalarTraits<Other>::from(inv_p1_),
                                    detail::ScalarTraits<Other>::from(inv_p2_));
    }

    friend bool operator==(const ExponentPoint&, const ExponentPoint&) = default;

private:
    Scalar inv_p1_;
    Scalar inv_p2_;
    Scalar inv_p_;
};

/// Builds a point from Lebesgue exponents; +infinity maps to 0.
inline ExponentPoint<double> from_exponents(double p1, double p2)
{
    if (!(p1 >= 1.0) || !(p2 >= 1.0)) {
        throw std::invalid_argument("from_exponents: exponents must be >= 1");
    }
    return {std::isinf(p1) ? 0.0 : 1.0 / p1, std::isinf(p2) ? 0.0 : 1.0 / p2};
}

enum class Status { BoundedRhombus, BoundedBanach, Unbounded, Unknown };

inline const char* to_string(Status s)
{
    switch (s) {
    case Status::BoundedRhombus: return "BoundedRhombus";
    case Status::BoundedBanach: return "BoundedBanach";
    case Status::Unbounded: return "Unbounded";
    case Status::Unknown: return "Unknown";
    }
    return "?";
}

struct RegionVerdict {
    Status status = Status::Unknown;
    std::string witness;

    [[nodiscard]] bool bounded() const
    {
        return status == Status::BoundedRhombus || status == Status::BoundedBanach;
    }
};

/// Which vertex list defines the open rhombus. `Standard` uses P1 = (1, 0, 1);
/// `Interpolation` uses the alternate vertex ((2n-3/2)/(2n-1), 0, (2n-3/2)/(2n-1))
/// produced by the interpolation argument. Classification defaults to `Standard`.
enum class RhombusVariant { Standard, Interpolation };

inline Rational delta_n_exact(int n) { return Rational(2 * static_cast<std::int64_t>(n) - 15, 10); }

/// (2n - 15) / 10.
inline double delta_n(int n)
{
    if (n < 1) {
        throw std::invalid_argument("delta_n: dimension must be >= 1");
    }
    return (2.0 * n - 15.0) / 10.0;
}

/// Vertices P0, P1, P2, P3 of the open rhombus, in counter-clockwise order
/// P0, P1, P3, P2 when projected to the (1/p1, 1/p2) plane.
inline std::array<ExponentPoint<Rational>, 4> rhombus_vertices(int n,
                                                               RhombusVariant variant = RhombusVariant::Standard)
{
    if (n < 8) {
        throw std::invalid_argument("rhombus_vertices: requires n >= 8 (delta_n > 0)");
    }
    const Rational d = delta_n_exact(n);
    const Rational a = (Rational(1) + Rational(2) * d) / (Rational(2) + Rational(2) * d);
    Rational edge(1);
    if (variant == RhombusVariant::Interpolation) {
        edge = Rational(4 * static_cast<std::int64_t>(n) - 3, 4 * static_cast<std::int64_t>(n) - 2);
    }
    return {ExponentPoint<Rational>(Rational(0), Rational(0)), ExponentPoint<Rational>(edge, Rational(0)),
            ExponentPoint<Rational>(Rational(0), edge), ExponentPoint<Rational>(a, a)};
}

/// Smallest 1/p at which the counterexample family forces unboundedness: (2n-1)/n.
inline Rational unbounded_threshold(int n)
{
    return Rational(2 * static_cast<std::int64_t>(n) - 1, n);
}

template <class Scalar>
bool in_open_rhombus(int n, const ExponentPoint<Scalar>& pt, RhombusVariant variant = RhombusVariant::Standard)
{
    if (n < 8) {
        return false;
    }
    const auto v = rhombus_vertices(n, variant);
    // counter-clockwise boundary P0 -> P1 -> P3 -> P2
    const std::array<const ExponentPoint<Rational>*, 4> ring{&v[0], &v[1], &v[3], &v[2]};
    const Scalar x = pt.inv_p1();
    const Scalar y = pt.inv_p2();
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& a = *ring[i];
        const auto& b = *ring[(i + 1) % ring.size()];
        const Scalar ax = detail::ScalarTraits<Scalar>::from(a.inv_p1());
        const Scalar ay = detail::ScalarTraits<Scalar>::from(a.inv_p2());
        const Scalar bx = detail::ScalarTraits<Scalar>::from(b.inv_p1());
        const Scalar by = detail::ScalarTraits<Scalar>::from(b.inv_p2());
        const Scalar cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        if (!detail::positive(cross)) {
            return false;
        }
    }
    return true;
}

template <class Scalar>
RegionVerdict classify(int n, const ExponentPoint<Scalar>& pt, RhombusVariant variant = RhombusVariant::Standard)
{
    if (n < 1) {
        throw std::invalid_argument("classify: dimension must be >= 1");
    }
    using T = detail::ScalarTraits<Scalar>;
    const Scalar one = T::from(Rational(1));
    const Scalar half = T::from(Rational(1, 2));

    const bool unbounded = detail::at_least(pt.inv_p(), T::from(unbounded_threshold(n)));

    bool rhombus = false;
    std::string rhombus_witness;
    if (n >= 8) {
        if (detail::equal(pt.inv_p1(), half) && detail::equal(pt.inv_p2(), half)) {
            rhombus = true;
            rhombus_witness = "L2 x L2 -> L1 estimate, summed dyadic pieces (n >= 8)";
        } else if (in_open_rhombus(n, pt, variant)) {
            rhombus = true;
            rhombus_witness = "open rhombus P0 P1 P3 P2 with delta_n = (2n-15)/10 (n >= 8)";
        }
    }
    const bool banach = n >= 2 && pt.inv_p1() < one && pt.inv_p2() < one && pt.inv_p() < one;

    if (unbounded) {
        if (rhombus || banach) {
            throw std::logic_error("classify: bounded and unbounded regions overlap");
        }
        return {Status::Unbounded, "counterexample family: unbounded for 1/p >= (2n-1)/n, p1, p2 >= 1"};
    }
    if (rhombus) {
        return {Status::BoundedRhombus, rhombus_witness};
    }
    if (banach) {
        return {Status::BoundedBanach, "Banach range: 1 < p1, p2 <= inf, 1 < p <= inf (n >= 2)"};
    }
    return {Status::Unknown, ""};
}

/// Distance between the largest bounded diagonal exponent p = (1+d)/(1+2d)
/// and the unbounded threshold p = n/(2n-1); roughly 1/n for large n.
inline double diagonal_gap(int n)
{
    if (n < 8) {
        throw std::invalid_argument("diagonal_gap: requires n >= 8");
    }
    const double d = delta_n(n);
    return (1.0 + d) / (1.0 + 2.0 * d) - static_cast<double>(n) / (2.0 * n - 1.0);
}

}  // namespace spheremax::region

#endif  // SPHEREMAX_REGION_HPP
