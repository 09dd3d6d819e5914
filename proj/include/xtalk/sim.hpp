// sim.hpp — Exact reference dynamics: dense state-vector Monte Carlo under
// control + sampled noise trajectories + static ZZ coupling.
//
// Per slice of width dt the Hamiltonian is constant (piecewise-constant
// control, slice-held noise) and the propagator is the exact matrix
// exponential via Hermitian eigendecomposition, so the only discretization
// is the noise-trajectory granularity itself.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/control.hpp"
#include "xtalk/model.hpp"
#include "xtalk/noisegen.hpp"
#include "xtalk/pauli.hpp"

namespace xtalk {

struct NoiseInjection {
    int qubit = 0;
    Axis axis = Axis::z;
    MAFilter filter;
};

struct ReadoutError {
    double flip_probability = 0.0;  // independent per-qubit classification flip
};

struct SimConfig {
    DeviceModel device;
    PulseSchedule schedule;
    std::vector<NoiseInjection> injections;
    double dt = 0.0;  // 0 = min segment duration / 4
    int n_trajectories = 1;
    int n_shots = 0;  // 0 = exact expectation, no shot sampling
    std::uint64_t seed = 0;
    Eigen::VectorXcd initial_state;
    ReadoutError readout{};
    int n_threads = 0;  // 0 = auto
    int qubit_cap = 8;
};

struct SimResult {
    std::vector<double> per_trajectory;  // exact per-trajectory values
    std::vector<double> shot_estimates;  // binomial estimates (n_shots > 0)
    double mean = 0.0;
    double std_error = 0.0;
    double wall_seconds = 0.0;
    int n_shots = 0;

    std::string to_json() const;
    std::string per_trajectory_csv() const;
};

// Evolves psi0 over the schedule horizon with the given per-(qubit, axis)
// trajectories, one sample per dt slice. Norm is preserved to 1e-10.
Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi0, const PulseSchedule& schedule,
                        const DeviceModel& device,
                        const std::map<std::pair<int, int>, std::vector<double>>& trajectories,
                        double dt);

// dt slices across the horizon (ceil), used to size trajectories.
int slice_count(const PulseSchedule& schedule, double dt);
double default_dt(const PulseSchedule& schedule);

// Survival-probability Monte Carlo: evolve, project on the initial state
// (inverse preparation + all-zeros readout), then optional binomial shots.
SimResult run_monte_carlo(const SimConfig& config);

// Pauli-expectation Monte Carlo with the same trajectory machinery.
SimResult run_expectation(const SimConfig& config, const PauliString& obs);

// Relative frequency of the target outcome in a counts histogram.
double survival_probability(const std::map<std::string, int>& counts,
                            const std::string& target_bitstring);

// Deterministic sub-keys for trajectory streams.
std::uint64_t trajectory_seed(std::uint64_t master, int qubit, int axis, int trajectory,
                              int replicate = 0, int sequence = 0);

}  // namespace xtalk
