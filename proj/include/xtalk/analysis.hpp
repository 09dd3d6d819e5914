// analysis.hpp — Fidelity-decay fitting, bootstrap confidence intervals,
// time-averaged fidelity, and improvement ratios.
//
// Decay model: F(t) = c [1 - f(t)] + F0 with
//   f(t) = (k e^{-t/lambda} cos(t gamma) + e^{-t/alpha}) / (1 + k)
// and c anchored so that F(T_max) = F_Tmax.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xtalk {

struct DecayFit {
    double lambda = 0.0;   // short decay time, s
    double alpha = 0.0;    // long decay time, s
    double gamma = 0.0;    // oscillation frequency, rad/s
    double weight_k = 0.0; // dimensionless mixing weight
    double f0 = 0.0;
    double f_tmax = 0.0;
    double t_max = 0.0;
    double scale_c = 0.0;
    double residual_norm = 0.0;
    bool hit_bounds = false;
    bool degenerate = false;  // constant data: lambda unidentifiable

    double evaluate(double t) const;
    std::string to_json() const;
};

double decay_model(double t, double lambda, double alpha, double gamma, double k, double f0,
                   double f_tmax, double t_max);

// Bounded nonlinear least squares with 8 deterministic multi-starts over
// log-spaced (lambda, alpha); F0 / F_Tmax are pinned to the endpoint data.
DecayFit fit_decay(std::span<const double> times, std::span<const double> fidelities,
                   std::span<const double> weights = {});

struct BootstrapSummary {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_resamples = 0;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

// Percentile bootstrap (2.5/97.5) over row resamples with replacement. The
// statistic receives the resampled row indices; returning nullopt counts as a
// failure and redraws the resample (more than 10% failures is an error).
BootstrapSummary bootstrap(const std::function<std::optional<double>(std::span<const int>)>& statistic,
                           int n_rows, int n_resamples, std::uint64_t seed);

// T_max^{-1} * ∫ F(t)/F(0) dt by trapezoid; times must start at 0, F(0) > 0.
double time_avg_fidelity(std::span<const double> times, std::span<const double> fidelities);

struct ImprovementRatios {
    double r_lambda = 0.0;
    double r_favg = 0.0;
};

ImprovementRatios improvement_ratios(const DecayFit& fit_a, const DecayFit& fit_b, double favg_a,
                                     double favg_b);

}  // namespace xtalk
