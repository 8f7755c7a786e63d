// spheremax <experiment> [options]: runs one experiment, writes CSV/JSON (and
// optionally SVG) under --out, exits 0 iff every threshold passes.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spheremax/harness/run.hpp"

int main(int argc, char** argv)
{
    namespace h = spheremax::harness;
    h::ExperimentConfig cfg;
    CLI::App app{"Bilinear spherical maximal function experiments"};
    std::string names;
    for (const auto& n : h::experiment_names()) {
        names += (names.empty() ? "" : ", ") + n;
    }
    app.add_option("experiment", cfg.experiment, "one of: " + names)->required();
    int n = 0;
    int j_min = 0;
    int j_max = 0;
    std::size_t grid_n = 0;
    double grid_l = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    auto* on = app.add_option("--n", n, "base dimension (default: experiment sweep)");
    auto* ojmin = app.add_option("--j-min", j_min, "smallest dyadic index");
    auto* ojmax = app.add_option("--j-max", j_max, "largest dyadic index");
    app.add_option("--epsilon", cfg.epsilon, "cutoff steepness of the diagonal window")->capture_default_str();
    auto* ogn = app.add_option("--grid-n", grid_n, "grid points per axis (power of two)");
    auto* ogl = app.add_option("--grid-l", grid_l, "period length of the torus");
    app.add_option("--t-ratio", cfg.t_ratio, "ratio of the geometric t grid")->capture_default_str();
    auto* ormin = app.add_option("--r-min", r_min, "smallest radius / scale");
    auto* ormax = app.add_option("--r-max", r_max, "largest radius / scale");
    app.add_option("--seed", cfg.seed, "root seed")->capture_default_str();
    app.add_option("--out", cfg.out, "output directory")->capture_default_str();
    app.add_flag("--svg", cfg.svg, "also write a log-log SVG plot");
    app.add_option("--workers", cfg.workers, "worker threads (0: all cores)")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    if (on->count()) cfg.n = n;
    if (ojmin->count()) cfg.j_min = j_min;
    if (ojmax->count()) cfg.j_max = j_max;
    if (ogn->count()) cfg.grid_n = grid_n;
    if (ogl->count()) cfg.grid_l = grid_l;
    if (ormin->count()) cfg.r_min = r_min;
    if (ormax->count()) cfg.r_max = r_max;

    try {
        const auto start = std::chrono::steady_clock::now();
        const h::RunOutcome out = h::run(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const auto& c : out.result.checks) {
            std::printf("%s  %s: %s %s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), h::num(c.value).c_str(),
                        c.relation.c_str(), h::num(c.threshold).c_str());
        }
        std::fprintf(stderr, "%s: %s in %.1f s -> %s\n", out.config.experiment.c_str(),
                     out.result.passed() ? "passed" : "FAILED", secs, out.json.string().c_str());
        return out.result.passed() ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
