// runner.hpp — Configuration-driven experiment pipelines: suppression checks,
// DD state-preservation comparison, QNS demonstration, and cumulant validation.
// Each run writes <out>/manifest.json, <out>/summary.json and <out>/data/*.csv.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "xtalk/config.hpp"

namespace xtalk {

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int threads = 0;  // 0 = config value, then XTALK_THREADS, then hardware
    bool quiet = false;
};

// Exit code: 0 = success, 2 = a PASS/FAIL check failed, 1 = error (thrown).
int run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Convenience: load + run; converts errors into exit code 1 with a message
// on stderr.
int run_config_file(const std::string& config_path, const RunOptions& options);

// Human-readable report over an artifact bundle directory; missing artifacts
// are listed and the rest of the report is still produced.
std::string emit_report(const std::string& bundle_dir);

}  // namespace xtalk
