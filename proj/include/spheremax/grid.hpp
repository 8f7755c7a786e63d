#ifndef SPHEREMAX_GRID_HPP
#define SPHEREMAX_GRID_HPP

// Periodic complex samples on the torus [0, L)^n with N points per axis.
// Fourier coefficients follow F_k = N^{-n} sum_x f(x) e^{-2 pi i k.x / L},
// so f(x) = sum_k F_k e^{2 pi i k.x / L}, index k < N/2 meaning frequency k / L
// and k >= N/2 meaning (k - N) / L.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <fftw3.h>
#include "json.hpp"

namespace spheremax {

namespace detail {

// FFTW's planner is not thread-safe.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t count)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count)))
    {
        if (data == nullptr) {
            throw std::bad_alloc();
        }
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* data;
};

inline void fft_inplace(int n, std::size_t N, std::vector<std::complex<double>>& values, int sign)
{
    FftwBuffer buf(values.size());
    std::vector<int> dims(static_cast<std::size_t>(n), static_cast<int>(N));
    fftw_plan plan = nullptr;
    {
        const std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft(n, dims.data(), buf.data, buf.data, sign, FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw std::runtime_error("fftw: planning failed");
    }
    std::memcpy(static_cast<void*>(buf.data), values.data(), sizeof(fftw_complex) * values.size());
    fftw_execute(plan);
    std::memcpy(static_cast<void*>(values.data()), buf.data, sizeof(fftw_complex) * values.size());
    {
        const std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
}

inline void write_u64(std::ostream& os, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64(std::istream& is)
{
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) {
        throw std::runtime_error("GridFunction::load: truncated file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

}  // namespace detail

class GridFunction {
public:
    using value_type = std::complex<double>;

    GridFunction(int n, std::size_t N, double L) : n_(n), N_(N), L_(L)
    {
        if (n < 1) {
            throw std::invalid_argument("GridFunction: n must be >= 1");
        }
        if (N < 2 || !std::has_single_bit(N)) {
            throw std::invalid_argument("GridFunction: N must be a power of two >= 2");
        }
        if (!(L > 0.0)) {
            throw std::invalid_argument("GridFunction: L must be positive");
        }
        std::size_t count = 1;
        for (int i = 0; i < n; ++i) {
            count *= N;
        }
        values_.assign(count, value_type{});
    }

    /// Samples f at x = L k / N.
    template <class F>
    static GridFunction sample(int n, std::size_t N, double L, const F& f)
    {
        GridFunction g(n, N, L);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            g.position(idx, x);
            g.values_[idx] = value_type(f(std::span<const double>(x)));
        }
        return g;
    }

    /// Grid function whose Fourier coefficients are `coeffs`.
    static GridFunction from_coefficients(int n, std::size_t N, double L, std::vector<value_type> coeffs)
    {
        GridFunction g(n, N, L);
        if (coeffs.size() != g.size()) {
            throw std::invalid_argument("GridFunction::from_coefficients: wrong coefficient count");
        }
        detail::fft_inplace(n, N, coeffs, FFTW_BACKWARD);
        g.values_ = std::move(coeffs);
        return g;
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] std::size_t N() const { return N_; }
    [[nodiscard]] double L() const { return L_; }
    [[nodiscard]] double spacing() const { return L_ / static_cast<double>(N_); }
    [[nodiscard]] double cell_volume() const { return std::pow(spacing(), n_); }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] const std::vector<value_type>& values() const { return values_; }
    [[nodiscard]] std::vector<value_type>& values() { return values_; }
    value_type& operator[](std::size_t i) { return values_[i]; }
    const value_type& operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] bool same_grid(const GridFunction& o) const { return n_ == o.n_ && N_ == o.N_ && L_ == o.L_; }

    /// Row-major multi-index of flat index idx (last axis fastest).
    void multi_index(std::size_t idx, std::span<std::size_t> out) const
    {
        for (int a = n_ - 1; a >= 0; --a) {
            out[static_cast<std::size_t>(a)] = idx % N_;
            idx /= N_;
        }
    }

    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> k) const
    {
        std::size_t idx = 0;
        for (int a = 0; a < n_; ++a) {
            idx = idx * N_ + (k[static_cast<std::size_t>(a)] % N_);
        }
        return idx;
    }

    void position(std::size_t idx, std::span<double> x) const
    {
        for (int a = n_ - 1; a >= 0; --a) {
            x[static_cast<std::size_t>(a)] = L_ * static_cast<double>(idx % N_) / static_cast<double>(N_);
            idx /= N_;
        }
    }

    /// Signed frequency index of an axis index.
    [[nodiscard]] long signed_frequency(std::size_t k) const
    {
        return k < N_ / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(N_);
    }

    [[nodiscard]] std::vector<value_type> coefficients() const
    {
        std::vector<value_type> c = values_;
        detail::fft_inplace(n_, N_, c, FFTW_FORWARD);
        const double scale = 1.0 / static_cast<double>(values_.size());
        for (auto& v : c) {
            v *= scale;
        }
        return c;
    }

    /// Periodic multilinear interpolation.
    [[nodiscard]] value_type interpolate(std::span<const double> x) const
    {
        if (x.size() != static_cast<std::size_t>(n_)) {
            throw std::invalid_argument("GridFunction::interpolate: wrong point dimension");
        }
        std::vector<std::size_t> lo(static_cast<std::size_t>(n_));
        std::vector<double> frac(static_cast<std::size_t>(n_));
        for (int a = 0; a < n_; ++a) {
            const double s = x[static_cast<std::size_t>(a)] / spacing();
            const double fl = std::floor(s);
            frac[static_cast<std::size_t>(a)] = s - fl;
            const auto Nl = static_cast<long long>(N_);
            long long k = static_cast<long long>(fl) % Nl;
            if (k < 0) {
                k += Nl;
            }
            lo[static_cast<std::size_t>(a)] = static_cast<std::size_t>(k);
        }
        value_type acc{};
        std::vector<std::size_t> corner(static_cast<std::size_t>(n_));
        for (unsigned mask = 0; mask < (1u << n_); ++mask) {
            double w = 1.0;
            for (int a = 0; a < n_; ++a) {
                const bool up = (mask >> a) & 1u;
                const auto ua = static_cast<std::size_t>(a);
                corner[ua] = (lo[ua] + (up ? 1 : 0)) % N_;
                w *= up ? frac[ua] : 1.0 - frac[ua];
            }
            acc += w * values_[flat_index(corner)];
        }
        return acc;
    }

    [[nodiscard]] GridFunction abs() const
    {
        GridFunction out(n_, N_, L_);
        for (std::size_t i = 0; i < size(); ++i) {
            out.values_[i] = std::abs(values_[i]);
        }
        return out;
    }

    [[nodiscard]] double max_abs() const
    {
        double m = 0.0;
        for (const auto& v : values_) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }

    /// Binary layout: n, N, L (little-endian 64-bit), then N^n (re, im) pairs.
    /// A JSON sidecar `<path>.json` carries the same metadata.
    void save(const std::string& path) const
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            throw std::runtime_error("GridFunction::save: cannot open " + path);
        }
        detail::write_u64(os, static_cast<std::uint64_t>(n_));
        detail::write_u64(os, static_cast<std::uint64_t>(N_));
        detail::write_u64(os, std::bit_cast<std::uint64_t>(L_));
        for (const auto& v : values_) {
            detail::write_u64(os, std::bit_cast<std::uint64_t>(v.real()));
            detail::write_u64(os, std::bit_cast<std::uint64_t>(v.imag()));
        }
        nlohmann::json meta{{"format", "spheremax-grid"}, {"version", 1},        {"n", n_},
                            {"N", N_},                   {"L", L_},              {"layout", "row-major"},
                            {"dtype", "complex128-le"},  {"count", values_.size()}};
        std::ofstream js(path + ".json");
        js << meta.dump(2) << '\n';
    }

    static GridFunction load(const std::string& path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is) {
            throw std::runtime_error("GridFunction::load: cannot open " + path);
        }
        const auto n = detail::read_u64(is);
        const auto N = detail::read_u64(is);
        const auto L = std::bit_cast<double>(detail::read_u64(is));
        if (n < 1 || n > 8) {
            throw std::runtime_error("GridFunction::load: bad header");
        }
        GridFunction g(static_cast<int>(n), static_cast<std::size_t>(N), L);
        for (auto& v : g.values_) {
            const double re = std::bit_cast<double>(detail::read_u64(is));
            const double im = std::bit_cast<double>(detail::read_u64(is));
            v = {re, im};
        }
        return g;
    }

private:
    int n_;
    std::size_t N_;
    double L_;
    std::vector<value_type> values_;
};

}  // namespace spheremax

#endif  // SPHEREMAX_GRID_HPP
