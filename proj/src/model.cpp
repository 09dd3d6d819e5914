#include "xtalk/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include "xtalk/numerics.hpp"

namespace xtalk {

double DeviceModel::coupling_between(int a, int b) const {
    for (const auto& e : edges) {
        if ((e.i == a && e.j == b) || (e.i == b && e.j == a)) return e.coupling;
    }
    return 0.0;
}

const DeviceModel& validate_device(const DeviceModel& device) {
    if (device.n_qubits <= 0) throw std::invalid_argument("device: n_qubits must be positive");
    if (!device.labels.empty() && static_cast<int>(device.labels.size()) != device.n_qubits)
        throw std::invalid_argument("device: labels must be empty or one per qubit");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : device.edges) {
        const std::string tag = "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
        if (e.i == e.j) throw std::invalid_argument("device: self-edge " + tag);
        if (e.i < 0 || e.j < 0 || e.i >= device.n_qubits || e.j >= device.n_qubits)
            throw std::invalid_argument("device: out-of-range index in " + tag);
        if (e.i > e.j) throw std::invalid_argument("device: indices not ordered i < j in " + tag);
        if (!std::isfinite(e.coupling))
            throw std::invalid_argument("device: non-finite coupling in " + tag);
        if (!seen.insert({e.i, e.j}).second)
            throw std::invalid_argument("device: duplicate " + tag);
    }
    return device;
}

TwoColoring two_color(const DeviceModel& device) {
    TwoColoring out;
    out.color.assign(device.n_qubits, -1);
    std::vector<std::vector<int>> adj(device.n_qubits);
    for (const auto& e : device.edges) {
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());

    for (int root = 0; root < device.n_qubits; ++root) {
        if (out.color[root] != -1) continue;
        out.color[root] = 0;
        std::deque<int> queue{root};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : adj[u]) {
                if (out.color[v] == -1) {
                    out.color[v] = 1 - out.color[u];
                    queue.push_back(v);
                }
            }
        }
    }
    for (const auto& e : device.edges) {
        if (out.color[e.i] == out.color[e.j]) {
            out.bipartite = false;
            out.monochromatic.push_back(e);
        }
    }
    return out;
}

double ControlField::total_duration() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.duration;
    return total;
}

void validate_schedule(const PulseSchedule& schedule, double tol) {
    if (schedule.horizon <= 0.0) throw std::invalid_argument("schedule: horizon must be positive");
    for (const auto& [qubit, field] : schedule.per_qubit) {
        for (const auto& s : field.segments) {
            if (s.duration < 0.0 || !std::isfinite(s.duration))
                throw std::invalid_argument("schedule: negative segment duration on qubit " +
                                            std::to_string(qubit));
            if (!std::isfinite(s.amplitude) || !std::isfinite(s.phase))
                throw std::invalid_argument("schedule: non-finite segment on qubit " +
                                            std::to_string(qubit));
        }
        const double total = field.total_duration();
        if (std::abs(total - schedule.horizon) > tol * std::max(1.0, schedule.horizon))
            throw std::invalid_argument("schedule: qubit " + std::to_string(qubit) +
                                        " does not tile the horizon");
    }
}

// ----------------------------- spectra --------------------------------------

namespace {

double tabulated_value(const TabulatedSpectrum& t, double omega) {
    if (t.omega.empty()) return 0.0;
    if (omega < t.omega.front() || omega > t.omega.back()) return 0.0;
    const auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
    if (it == t.omega.begin()) return t.value.front();
    if (it == t.omega.end()) return t.value.back();
    const std::size_t hi = static_cast<std::size_t>(it - t.omega.begin());
    const std::size_t lo = hi - 1;
    const double f = (omega - t.omega[lo]) / (t.omega[hi] - t.omega[lo]);
    return t.value[lo] + f * (t.value[hi] - t.value[lo]);
}

void check_tabulated(const TabulatedSpectrum& t) {
    if (t.omega.size() != t.value.size())
        throw std::invalid_argument("tabulated spectrum: grid/value size mismatch");
    for (std::size_t k = 0; k + 1 < t.omega.size(); ++k) {
        if (!(t.omega[k] < t.omega[k + 1]))
            throw std::invalid_argument("tabulated spectrum: grid must be strictly increasing");
    }
    for (double v : t.value) {
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("tabulated spectrum: values must be finite and >= 0");
    }
}

}  // namespace

double eval_psd(const SpectrumSpec& spec, double omega) {
    if (omega < 0.0) throw std::invalid_argument("eval_psd: omega must be >= 0");
    return std::visit(
        [omega](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WhiteSpectrum>) {
                return s.level;
            } else if constexpr (std::is_same_v<T, LorentzianSpectrum>) {
                const double r = omega / s.cutoff;
                return s.level / (1.0 + r * r);
            } else if constexpr (std::is_same_v<T, OneOverFSpectrum>) {
                if (omega < s.omega_min || omega > s.omega_max) return 0.0;
                return s.amplitude / omega;
            } else if constexpr (std::is_same_v<T, GaussianBandSpectrum>) {
                const double d = (omega - s.center) / s.width;
                return s.level * std::exp(-0.5 * d * d);
            } else {
                check_tabulated(s);
                return tabulated_value(s, omega);
            }
        },
        spec);
}

double spectrum_feature_frequency(const SpectrumSpec& spec) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WhiteSpectrum>) {
                return 0.0;  // flat; caller must pick a cutoff from the control side
            } else if constexpr (std::is_same_v<T, LorentzianSpectrum>) {
                return s.cutoff;
            } else if constexpr (std::is_same_v<T, OneOverFSpectrum>) {
                return s.omega_max;
            } else if constexpr (std::is_same_v<T, GaussianBandSpectrum>) {
                return s.center + 5.0 * s.width;
            } else {
                return s.omega.empty() ? 0.0 : s.omega.back();
            }
        },
        spec);
}

CorrelationResult correlation_from_psd(const SpectrumSpec& spec, double tau, double omega_max,
                                       int n_grid) {
    if (n_grid < 2) throw std::invalid_argument("correlation_from_psd: n_grid must be >= 2");
    if (omega_max <= 0.0) throw std::invalid_argument("correlation_from_psd: omega_max must be > 0");
    CorrelationResult out;
    const double abs_tau = std::abs(tau);  // C is even in tau for real spectra
    auto integrand = [&](double w) { return eval_psd(spec, w) * std::cos(w * abs_tau); };
    out.value = simpson(integrand, 0.0, omega_max, n_grid) / std::numbers::pi;
    // flag osc. periods that the grid cannot resolve (>~ 4 points per period)
    const double cycles = omega_max * abs_tau / (2.0 * std::numbers::pi);
    if (cycles > 0.25 * n_grid) {
        out.converged = false;
        return out;
    }
    const double coarse = simpson(integrand, 0.0, omega_max, n_grid / 2) / std::numbers::pi;
    const double scale = std::max(std::abs(out.value), 1e-300);
    out.converged = std::abs(out.value - coarse) <= 1e-3 * scale + 1e-300;
    return out;
}

// ----------------------------- noise model ----------------------------------

Axis axis_from_string(const std::string& s) {
    if (s == "x" || s == "X") return Axis::x;
    if (s == "y" || s == "Y") return Axis::y;
    if (s == "z" || s == "Z") return Axis::z;
    throw std::invalid_argument("unknown axis '" + s + "'");
}

std::string axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        default: return "z";
    }
}

NoiseModel::Key NoiseModel::canonical(int i, int mu, int j, int nu) {
    if (std::tie(i, mu) <= std::tie(j, nu)) return {i, mu, j, nu};
    return {j, nu, i, mu};
}

void NoiseModel::set(int i, Axis mu, int j, Axis nu, SpectrumSpec spec) {
    entries_[canonical(i, axis_index(mu), j, axis_index(nu))] = std::move(spec);
}

const SpectrumSpec* NoiseModel::find(int i, Axis mu, int j, Axis nu) const {
    const auto it = entries_.find(canonical(i, axis_index(mu), j, axis_index(nu)));
    return it == entries_.end() ? nullptr : &it->second;
}

double NoiseModel::max_feature_frequency() const {
    double best = 0.0;
    for (const auto& [key, spec] : entries_)
        best = std::max(best, spectrum_feature_frequency(spec));
    return best;
}

}  // namespace xtalk
