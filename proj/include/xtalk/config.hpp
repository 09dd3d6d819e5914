// config.hpp — Single JSON configuration document for the experiment runner.
// Unknown fields are rejected with their full field path; frequencies are
// given in Hz (converted to rad/s on load), spectral levels in (rad/s)^2 s.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtalk/model.hpp"

namespace xtalk {

struct NoiseEntryConfig {
    int qubit = 0;
    Axis axis = Axis::z;
    // optional cross-correlation partner; equal to (qubit, axis) for diagonal entries
    int qubit_j = 0;
    Axis axis_j = Axis::z;
    bool cross = false;
    SpectrumSpec spectrum;
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string experiment;  // check | dd_compare | qns_demo | cumulant_validate
    std::uint64_t seed = 0;
    int threads = 0;
    DeviceModel device;
    std::vector<NoiseEntryConfig> noise;
    nlohmann::json protocol;  // experiment-specific block, parsed by the pipeline

    NoiseModel noise_model() const;
};

// Throws std::invalid_argument with a dotted field path on schema violations.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Strict sub-object reader shared by the pipelines.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path);
    ~StrictObject() noexcept(false);

    bool has(const std::string& name) const;
    const nlohmann::json& require(const std::string& name);
    const nlohmann::json* optional(const std::string& name);

    double number(const std::string& name);
    double number_or(const std::string& name, double fallback);
    int integer(const std::string& name);
    int integer_or(const std::string& name, int fallback);
    std::uint64_t uinteger_or(const std::string& name, std::uint64_t fallback);
    bool boolean_or(const std::string& name, bool fallback);
    std::string text(const std::string& name);
    std::string text_or(const std::string& name, const std::string& fallback);

    const std::string& path() const { return path_; }
    void disarm() { armed_ = false; }  // skip unknown-field check (error paths)

private:
    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string> consumed_;
    bool armed_ = true;
};

SpectrumSpec parse_spectrum(const nlohmann::json& j, const std::string& path);

}  // namespace xtalk
