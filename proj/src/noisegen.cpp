#include "xtalk/noisegen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "xtalk/numerics.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

MADesignResult design_ma(const SpectrumSpec& spec, int n_taps, double dt, int n_fft) {
    if (n_taps < 1) throw std::invalid_argument("design_ma: n_taps must be >= 1");
    if (dt <= 0.0) throw std::invalid_argument("design_ma: dt must be > 0");
    if (n_fft < 8) n_fft = 8;

    MADesignResult out;
    out.filter.sample_period = dt;

    const double nyquist = std::numbers::pi / dt;
    double in_band = 0.0, above_band = 0.0;
    for (int k = 1; k <= 64; ++k) {
        in_band += eval_psd(spec, nyquist * k / 64.0);
        above_band += eval_psd(spec, nyquist * (1.0 + 4.0 * k / 64.0));
    }
    out.aliasing_warning = above_band > 1e-3 * std::max(in_band, 1e-300);

    // Zero-phase frequency sampling: H on the full circle from the even
    // extension of the one-sided target, then inverse DFT.
    std::vector<std::complex<double>> H(n_fft);
    for (int j = 0; j < n_fft; ++j) {
        const double theta = kTwoPi * j / n_fft;                      // [0, 2pi)
        const double wrapped = theta <= std::numbers::pi ? theta : kTwoPi - theta;
        const double omega = wrapped / dt;
        H[j] = std::sqrt(std::max(0.0, eval_psd(spec, omega) / dt));
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> h(n_fft);
    fft.inv(h, H);

    // Symmetric window truncation around lag zero (circular indexing).
    int length = n_taps;
    if (length % 2 == 0) --length;
    const int half = length / 2;
    out.filter.taps.assign(length, 0.0);
    for (int m = -half; m <= half; ++m) {
        const int src = (m + n_fft) % n_fft;
        const double hann = 0.5 * (1.0 + std::cos(std::numbers::pi * m / (half + 1.0)));
        out.filter.taps[m + half] = h[src].real() * hann;
    }
    return out;
}

Trajectory sample_trajectory(const MAFilter& filter, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("sample_trajectory: n_samples must be >= 1");
    if (filter.taps.empty()) throw std::invalid_argument("sample_trajectory: filter has no taps");
    Trajectory out;
    out.seed = seed;
    out.samples.assign(n_samples, 0.0);
    const int q = filter.order();
    const CounterRng rng(seed);
    std::vector<double> w(static_cast<std::size_t>(n_samples) + q);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = rng.normal(k);
    for (int nidx = 0; nidx < n_samples; ++nidx) {
        double acc = 0.0;
        for (int k = 0; k <= q; ++k) acc += filter.taps[k] * w[nidx + q - k];
        out.samples[nidx] = acc;
    }
    return out;
}

TabulatedSpectrum empirical_psd(std::span<const Trajectory> trajectories, double dt) {
    if (trajectories.empty())
        throw std::invalid_argument("empirical_psd: at least one trajectory required");
    const std::size_t n = trajectories.front().samples.size();
    for (const auto& t : trajectories) {
        if (t.samples.size() != n)
            throw std::invalid_argument("empirical_psd: trajectories have unequal lengths");
    }
    TabulatedSpectrum out;
    const std::size_t n_bins = n / 2 + 1;
    out.omega.resize(n_bins);
    out.value.assign(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k) out.omega[k] = kTwoPi * k / (n * dt);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    for (const auto& t : trajectories) {
        std::vector<double> x = t.samples;
        fft.fwd(spectrum, x);
        for (std::size_t k = 0; k < n_bins; ++k)
            out.value[k] += std::norm(spectrum[k]) * dt / static_cast<double>(n);
    }
    for (auto& v : out.value) v /= static_cast<double>(trajectories.size());
    return out;
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
    std::string out = "index,value\r\n";
    char buf[64];
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\r\n", k, trajectory.samples[k]);
        out += buf;
    }
    return out;
}

Trajectory trajectory_from_csv(const std::string& csv) {
    Trajectory out;
    std::istringstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("trajectory_from_csv: malformed row '" + line + "'");
        out.samples.push_back(std::stod(line.substr(comma + 1)));
    }
    return out;
}

}  // namespace xtalk
