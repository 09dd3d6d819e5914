// model.hpp — Device topology, control fields, and noise spectra.
//
// Units: hbar = 1 throughout; times in seconds, angular frequencies and
// coupling strengths in rad/s. Power spectral densities are one-sided
// (defined for omega >= 0 and extended evenly to negative frequencies).
// All types are immutable values after construction.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace xtalk {

// ----------------------------- device ---------------------------------------

struct Edge {
    int i = 0;
    int j = 0;          // i < j
    double coupling = 0.0;  // static ZZ strength J_ij, rad/s
};

struct DeviceModel {
    int n_qubits = 0;
    std::vector<Edge> edges;
    std::vector<std::string> labels;  // optional, empty or size n_qubits

    double coupling_between(int a, int b) const;  // 0 when not an edge
};

// Deterministic BFS 2-coloring; lowest index in each component gets color 0.
struct TwoColoring {
    std::vector<int> color;
    bool bipartite = true;
    std::vector<Edge> monochromatic;  // edges violating the 2-coloring
};

// Throws std::invalid_argument naming the offending edge/index on violation.
// Returns the device unchanged, plus the bipartiteness verdict via two_color.
const DeviceModel& validate_device(const DeviceModel& device);
TwoColoring two_color(const DeviceModel& device);

// ----------------------------- control fields -------------------------------

// Piecewise-constant control segment. duration == 0 encodes an instantaneous
// rotation; amplitude then holds the total rotation angle (rad) instead of a
// rate. For positive durations, amplitude is the Rabi rate Omega (rad/s).
struct Segment {
    double duration = 0.0;   // s
    double amplitude = 0.0;  // rad/s, or rad when duration == 0
    double phase = 0.0;      // rad; 0 = x axis, pi/2 = y axis
};

struct ControlField {
    std::vector<Segment> segments;

    double total_duration() const;
};

struct PulseSchedule {
    std::map<int, ControlField> per_qubit;
    double horizon = 0.0;  // s
};

// Checks that every field tiles [0, horizon] exactly (all durations >= 0,
// positive segments sum to the horizon). Throws on violation.
void validate_schedule(const PulseSchedule& schedule, double tol = 1e-12);

// ----------------------------- noise spectra --------------------------------

struct WhiteSpectrum {
    double level = 0.0;  // S0, (rad/s)^2 * s
};

struct LorentzianSpectrum {
    double level = 0.0;   // S0 at omega = 0
    double cutoff = 1.0;  // omega_c, rad/s
};

struct OneOverFSpectrum {
    double amplitude = 0.0;  // A; S = A / omega on [omega_min, omega_max]
    double omega_min = 1.0;
    double omega_max = 2.0;
};

struct GaussianBandSpectrum {
    double level = 0.0;   // S0 at the band center
    double center = 0.0;  // omega_0, rad/s
    double width = 1.0;   // sigma_omega, rad/s
};

struct TabulatedSpectrum {
    std::vector<double> omega;  // strictly increasing, >= 0
    std::vector<double> value;  // S(omega) >= 0
};

using SpectrumSpec = std::variant<WhiteSpectrum, LorentzianSpectrum, OneOverFSpectrum,
                                  GaussianBandSpectrum, TabulatedSpectrum>;

// S(omega) for omega >= 0; tabulated specs interpolate linearly and clamp to
// zero outside their support. Throws on omega < 0.
double eval_psd(const SpectrumSpec& spec, double omega);

// Largest frequency at which the spectrum still carries appreciable weight;
// used to pick default quadrature cutoffs.
double spectrum_feature_frequency(const SpectrumSpec& spec);

struct CorrelationResult {
    double value = 0.0;
    bool converged = true;  // false when the grid under-resolves e^{i omega tau}
};

// C(tau) = (1/pi) * ∫_0^{omega_max} S(omega) cos(omega tau) d omega
// (even extension of the one-sided PSD, truncated at omega_max).
CorrelationResult correlation_from_psd(const SpectrumSpec& spec, double tau, double omega_max,
                                       int n_grid);

// ----------------------------- noise model ----------------------------------

enum class Axis : int { x = 0, y = 1, z = 2 };

inline int axis_index(Axis a) { return static_cast<int>(a); }
Axis axis_from_string(const std::string& s);
std::string axis_name(Axis a);

// Map (i, mu, j, nu) -> S^{mu nu}_{ij}; absent entries mean zero spectrum.
// Entries are stored once per unordered pair with the (i, mu) <= (j, nu) key;
// real spectra make the symmetric partner identical.
class NoiseModel {
public:
    using Key = std::tuple<int, int, int, int>;  // (i, mu, j, nu)

    void set(int i, Axis mu, int j, Axis nu, SpectrumSpec spec);
    void set_dephasing(int qubit, SpectrumSpec spec) { set(qubit, Axis::z, qubit, Axis::z, std::move(spec)); }

    const SpectrumSpec* find(int i, Axis mu, int j, Axis nu) const;
    const std::map<Key, SpectrumSpec>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    double max_feature_frequency() const;

private:
    static Key canonical(int i, int mu, int j, int nu);
    std::map<Key, SpectrumSpec> entries_;
};

}  // namespace xtalk
