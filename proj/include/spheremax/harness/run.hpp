#ifndef SPHEREMAX_HARNESS_RUN_HPP
#define SPHEREMAX_HARNESS_RUN_HPP

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "spheremax/harness/config.hpp"
#include "spheremax/harness/experiments.hpp"
#include "spheremax/harness/report.hpp"
#include "spheremax/parallel.hpp"

namespace spheremax::harness {

struct RunOutcome {
    ExperimentResult result;
    ResolvedConfig config;
    std::filesystem::path csv;
    std::filesystem::path json;
    std::filesystem::path svg;  // empty unless requested
};

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    os << text;
}

/// Runs one experiment and writes <out>/<experiment>.{csv,json[,svg]}.
inline RunOutcome run(const ExperimentConfig& config)
{
    const ResolvedConfig cfg = resolve(config);
    if (config.workers != 0) {
        default_workers() = config.workers;
    }
    RunOutcome out;
    out.config = cfg;
    try {
        out.result = run_experiment(cfg);
    } catch (const std::exception& e) {
        throw std::runtime_error(cfg.experiment + ": " + e.what());
    }
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    out.csv = dir / (cfg.experiment + ".csv");
    out.json = dir / (cfg.experiment + ".json");
    write_text(out.csv, to_csv(out.result, config_hash(cfg)));
    write_text(out.json, to_json(out.result, cfg).dump(2) + "\n");
    if (config.svg) {
        out.svg = dir / (cfg.experiment + ".svg");
        write_text(out.svg, to_svg(out.result));
    }
    return out;
}

}  // namespace spheremax::harness

#endif  // SPHEREMAX_HARNESS_RUN_HPP
