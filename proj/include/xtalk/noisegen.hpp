// noisegen.hpp — Stationary Gaussian dephasing synthesis with a prescribed PSD
// (moving-average filtering of unit-variance innovations) and empirical
// spectrum estimation for validation.
//
// Discrete/continuous correspondence: a trajectory sample is the noise value
// held constant over one simulation slice of width dt, and the target
// continuous PSD relates to the filter response as S(w) = dt * |B(e^{i w dt})|^2.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xtalk/model.hpp"

namespace xtalk {

struct MAFilter {
    std::vector<double> taps;   // b_0..b_q
    double sample_period = 0.0; // dt, s

    int order() const { return static_cast<int>(taps.size()) - 1; }
};

struct MADesignResult {
    MAFilter filter;
    bool aliasing_warning = false;  // target carries weight above the Nyquist rate
};

// Frequency-sample sqrt(S) on a uniform grid, inverse DFT, Hann-windowed
// symmetric truncation to n_taps (forced odd). White spectra reduce to the
// single tap sqrt(S0/dt).
MADesignResult design_ma(const SpectrumSpec& spec, int n_taps, double dt, int n_fft = 4096);

struct Trajectory {
    std::vector<double> samples;  // rad/s, one per dt slice
    std::uint64_t seed = 0;
    int qubit = 0;
};

// Convolves counter-based N(0,1) innovations with the taps; the q-sample
// warm-up prefix is discarded so every output sample sees full overlap.
Trajectory sample_trajectory(const MAFilter& filter, int n_samples, std::uint64_t seed);

// Averaged one-sided periodogram: mean over trajectories of |DFT|^2 * dt / n,
// on omega_k = 2 pi k / (n dt), k = 0..n/2. Trajectories must share a length.
TabulatedSpectrum empirical_psd(std::span<const Trajectory> trajectories, double dt);

std::string trajectory_to_csv(const Trajectory& trajectory);
Trajectory trajectory_from_csv(const std::string& csv);

}  // namespace xtalk
