#ifndef SPHEREMAX_HARNESS_CONFIG_HPP
#define SPHEREMAX_HARNESS_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spheremax::harness {

inline const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{
        "region-table",   "dsigma-decay",  "symbol-sup-decay", "symbol-l2-growth", "partition-check",
        "cov-identity",   "avg-crosscheck", "maximal-sanity",  "squarefn-bound",   "opnorm-trend",
        "cex-growth",     "cex-divergence", "monotone-lemma"};
    return names;
}

inline bool known_experiment(std::string_view name)
{
    const auto& v = experiment_names();
    return std::find(v.begin(), v.end(), name) != v.end();
}

/// Everything a run depends on. Unset optionals take per-experiment defaults
/// in resolve(); only resolved configs are hashed.
struct ExperimentConfig {
    std::string experiment;
    std::optional<int> n;
    std::optional<int> j_min;
    std::optional<int> j_max;
    double epsilon = 0.1;
    std::optional<std::size_t> grid_n;
    std::optional<double> grid_l;
    double t_ratio = 1.0442737824274138;  // 2^{1/16}
    std::optional<double> r_min;
    std::optional<double> r_max;
    std::uint64_t seed = 1;
    std::string out = "out";
    bool svg = false;
    unsigned workers = 0;
};

/// Defaults filled in; `dims` lists the base dimensions the experiment sweeps.
struct ResolvedConfig {
    std::string experiment;
    std::vector<int> dims;
    int j_min = 0;
    int j_max = 0;
    double epsilon = 0.1;
    std::size_t grid_n = 0;  // 0: per-dimension default
    double grid_l = 0.0;
    double t_ratio = 1.0442737824274138;
    double r_min = 0.0;
    double r_max = 0.0;
    std::uint64_t seed = 1;
};

/// Default grid size per base dimension: O(N^{2n}) work caps n = 2 at 32.
inline std::size_t grid_size_for(const ResolvedConfig& c, int n)
{
    if (c.grid_n != 0) {
        return c.grid_n;
    }
    return n == 1 ? 256 : 32;
}

inline ResolvedConfig resolve(const ExperimentConfig& in)
{
    if (!known_experiment(in.experiment)) {
        throw std::invalid_argument("unknown experiment '" + in.experiment + "'");
    }
    ResolvedConfig c;
    c.experiment = in.experiment;
    c.epsilon = in.epsilon;
    c.t_ratio = in.t_ratio;
    c.seed = in.seed;
    const std::string& e = in.experiment;

    std::vector<int> dims;
    int j_lo = 0;
    int j_hi = 0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    double L = 16.0;
    if (e == "region-table") {
        dims = {1, 2, 8, 20};
    } else if (e == "dsigma-decay") {
        dims = {1, 2, 3};
        r_lo = 32.0;
        r_hi = 1024.0;
    } else if (e == "symbol-sup-decay" || e == "symbol-l2-growth") {
        dims = {2};
        j_lo = 4;
        j_hi = 10;
    } else if (e == "partition-check") {
        dims = {1, 2, 3};
        j_lo = 1;
        j_hi = 8;
    } else if (e == "cov-identity") {
        dims = {1, 2, 3};
    } else if (e == "avg-crosscheck" || e == "maximal-sanity") {
        dims = {1, 2};
    } else if (e == "squarefn-bound") {
        dims = {1};
        j_lo = 3;
        j_hi = 5;
    } else if (e == "opnorm-trend") {
        dims = {1};
        j_lo = 1;
        j_hi = 8;
    } else if (e == "cex-growth") {
        dims = {1, 2};
        r_lo = 1024.0;
        r_hi = 65536.0;
    } else if (e == "cex-divergence") {
        dims = {1};
        j_lo = 4;
        j_hi = 20;
        r_lo = 1024.0;
        r_hi = 1024.0;
    } else if (e == "monotone-lemma") {
        dims = {1};
    }
    c.dims = in.n ? std::vector<int>{*in.n} : dims;
    c.j_min = in.j_min.value_or(j_lo);
    c.j_max = in.j_max.value_or(j_hi);
    c.grid_n = in.grid_n.value_or(0);
    c.grid_l = in.grid_l.value_or(L);
    c.r_min = in.r_min.value_or(r_lo);
    c.r_max = in.r_max.value_or(r_hi);

    for (int n : c.dims) {
        if (n < 1) {
            throw std::invalid_argument("--n must be >= 1");
        }
    }
    if (c.j_max < c.j_min) {
        throw std::invalid_argument("--j-max must be >= --j-min");
    }
    if (!(c.epsilon > 0.0 && c.epsilon < 0.5)) {
        throw std::invalid_argument("--epsilon must lie in (0, 1/2)");
    }
    if (!(c.t_ratio > 1.0)) {
        throw std::invalid_argument("--t-ratio must be > 1");
    }
    if (!(c.grid_l > 0.0)) {
        throw std::invalid_argument("--grid-l must be positive");
    }
    if (c.r_max < c.r_min) {
        throw std::invalid_argument("--r-max must be >= --r-min");
    }
    return c;
}

inline nlohmann::json to_json(const ResolvedConfig& c)
{
    // nlohmann::json objects are key-sorted, so dump() is canonical
    char seed[32];
    std::snprintf(seed, sizeof seed, "%llu", static_cast<unsigned long long>(c.seed));
    return {{"experiment", c.experiment}, {"dims", c.dims},       {"j_min", c.j_min},     {"j_max", c.j_max},
            {"epsilon", c.epsilon},       {"grid_n", c.grid_n},   {"grid_l", c.grid_l},   {"t_ratio", c.t_ratio},
            {"r_min", c.r_min},           {"r_max", c.r_max},     {"seed", std::string(seed)}};
}

inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t config_hash(const ResolvedConfig& c) { return fnv1a(to_json(c).dump()); }

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace spheremax::harness

#endif  // SPHEREMAX_HARNESS_CONFIG_HPP
