#include "xtalk/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace xtalk {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path.empty() ? what : path + ": " + what);
}
}  // namespace

StrictObject::StrictObject(const nlohmann::json& j, std::string path)
    : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
}

StrictObject::~StrictObject() noexcept(false) {
    if (!armed_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
        if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end())
            fail(path_.empty() ? key : path_ + "." + key, "unknown field");
    }
}

bool StrictObject::has(const std::string& name) const { return j_.contains(name); }

const nlohmann::json& StrictObject::require(const std::string& name) {
    if (!j_.contains(name)) fail(path_.empty() ? name : path_ + "." + name, "missing field");
    consumed_.push_back(name);
    return j_.at(name);
}

const nlohmann::json* StrictObject::optional(const std::string& name) {
    if (!j_.contains(name)) return nullptr;
    consumed_.push_back(name);
    return &j_.at(name);
}

double StrictObject::number(const std::string& name) {
    const auto& v = require(name);
    if (!v.is_number()) fail(path_ + "." + name, "expected a number");
    return v.get<double>();
}

double StrictObject::number_or(const std::string& name, double fallback) {
    const auto* v = optional(name);
    if (!v) return fallback;
    if (!v->is_number()) fail(path_ + "." + name, "expected a number");
    return v->get<double>();
}

int StrictObject::integer(const std::string& name) {
    const auto& v = require(name);
    if (!v.is_number_integer()) fail(path_ + "." + name, "expected an integer");
    return v.get<int>();
}

int StrictObject::integer_or(const std::string& name, int fallback) {
    const auto* v = optional(name);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(path_ + "." + name, "expected an integer");
    return v->get<int>();
}

std::uint64_t StrictObject::uinteger_or(const std::string& name, std::uint64_t fallback) {
    const auto* v = optional(name);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !v->is_number_integer())
        fail(path_ + "." + name, "expected an unsigned integer");
    return v->get<std::uint64_t>();
}

bool StrictObject::boolean_or(const std::string& name, bool fallback) {
    const auto* v = optional(name);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(path_ + "." + name, "expected a boolean");
    return v->get<bool>();
}

std::string StrictObject::text(const std::string& name) {
    const auto& v = require(name);
    if (!v.is_string()) fail(path_ + "." + name, "expected a string");
    return v.get<std::string>();
}

std::string StrictObject::text_or(const std::string& name, const std::string& fallback) {
    const auto* v = optional(name);
    if (!v) return fallback;
    if (!v->is_string()) fail(path_ + "." + name, "expected a string");
    return v->get<std::string>();
}

SpectrumSpec parse_spectrum(const nlohmann::json& j, const std::string& path) {
    StrictObject o(j, path);
    const std::string kind = o.text("kind");
    if (kind == "white") {
        return WhiteSpectrum{o.number("level")};
    }
    if (kind == "lorentzian") {
        return LorentzianSpectrum{o.number("level"), kTwoPi * o.number("cutoff_hz")};
    }
    if (kind == "one_over_f") {
        return OneOverFSpectrum{o.number("amplitude"), kTwoPi * o.number("min_hz"),
                                kTwoPi * o.number("max_hz")};
    }
    if (kind == "gaussian_band") {
        return GaussianBandSpectrum{o.number("level"), kTwoPi * o.number("center_hz"),
                                    kTwoPi * o.number("width_hz")};
    }
    if (kind == "tabulated") {
        TabulatedSpectrum t;
        const auto& grid = o.require("omega_hz");
        const auto& values = o.require("values");
        if (!grid.is_array() || !values.is_array()) fail(path, "grid/values must be arrays");
        for (const auto& g : grid) t.omega.push_back(kTwoPi * g.get<double>());
        for (const auto& v : values) t.value.push_back(v.get<double>());
        return t;
    }
    fail(path + ".kind", "unknown spectrum kind '" + kind + "'");
}

NoiseModel ExperimentConfig::noise_model() const {
    NoiseModel model;
    for (const auto& entry : noise)
        model.set(entry.qubit, entry.axis, entry.qubit_j, entry.axis_j, entry.spectrum);
    return model;
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    StrictObject root(doc, "");

    cfg.schema_version = root.integer("schema_version");
    if (cfg.schema_version != 1) fail("schema_version", "unsupported version");
    cfg.experiment = root.text("experiment");
    cfg.seed = root.uinteger_or("seed", 0);
    cfg.threads = root.integer_or("threads", 0);

    {
        const auto& dev = root.require("device");
        StrictObject d(dev, "device");
        cfg.device.n_qubits = d.integer("n_qubits");
        if (const auto* labels = d.optional("labels")) {
            if (!labels->is_array()) fail("device.labels", "expected an array");
            for (const auto& l : *labels) cfg.device.labels.push_back(l.get<std::string>());
        }
        const auto& edges = d.require("edges");
        if (!edges.is_array()) fail("device.edges", "expected an array");
        int idx = 0;
        for (const auto& e : edges) {
            StrictObject eo(e, "device.edges[" + std::to_string(idx) + "]");
            Edge edge;
            edge.i = eo.integer("i");
            edge.j = eo.integer("j");
            edge.coupling = kTwoPi * eo.number("coupling_hz");
            cfg.device.edges.push_back(edge);
            ++idx;
        }
        validate_device(cfg.device);
    }

    if (const auto* noise = root.optional("noise")) {
        if (!noise->is_array()) fail("noise", "expected an array");
        int idx = 0;
        for (const auto& n : *noise) {
            const std::string path = "noise[" + std::to_string(idx) + "]";
            StrictObject no(n, path);
            NoiseEntryConfig entry;
            entry.qubit = no.integer("qubit");
            entry.axis = axis_from_string(no.text_or("axis", "z"));
            entry.qubit_j = no.integer_or("qubit_j", entry.qubit);
            entry.axis_j = no.has("axis_j") ? axis_from_string(no.text("axis_j")) : entry.axis;
            entry.cross = entry.qubit_j != entry.qubit || entry.axis_j != entry.axis;
            if (entry.qubit < 0 || entry.qubit >= cfg.device.n_qubits ||
                entry.qubit_j < 0 || entry.qubit_j >= cfg.device.n_qubits)
                fail(path + ".qubit", "qubit index out of range");
            entry.spectrum = parse_spectrum(no.require("spectrum"), path + ".spectrum");
            cfg.noise.push_back(entry);
            ++idx;
        }
    }

    cfg.protocol = root.require("protocol");
    if (!cfg.protocol.is_object()) fail("protocol", "expected an object");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace xtalk
