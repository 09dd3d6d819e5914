#include "xtalk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "xtalk/rng.hpp"

namespace xtalk {

double decay_model(double t, double lambda, double alpha, double gamma, double k, double f0,
                   double f_tmax, double t_max) {
    auto f = [&](double tt) {
        return (k * std::exp(-tt / lambda) * std::cos(tt * gamma) + std::exp(-tt / alpha)) /
               (1.0 + k);
    };
    const double f_end = f(t_max);
    // c anchors F(T_max) = F_Tmax; the denominator vanishes only for data
    // with no decay at all, which the fitter flags as degenerate instead.
    const double denom = 1.0 - f_end;
    const double c = std::abs(denom) > 1e-12 ? (f_tmax - f0) / denom : 0.0;
    return c * (1.0 - f(t)) + f0;
}

double DecayFit::evaluate(double t) const {
    return decay_model(t, lambda, alpha, gamma, weight_k, f0, f_tmax, t_max);
}

namespace {

struct FitProblem {
    std::span<const double> times;
    std::span<const double> values;
    std::span<const double> weights;
    double f0 = 0.0;
    double f_tmax = 0.0;
    double t_max = 0.0;

    // parameters p = (log lambda, log alpha, gamma, log k)
    double residual(const Eigen::Vector4d& p, Eigen::VectorXd* r_out) const {
        const double lambda = std::exp(p(0));
        const double alpha = std::exp(p(1));
        const double gamma = std::abs(p(2));
        const double k = std::exp(p(3));
        double acc = 0.0;
        if (r_out) r_out->resize(static_cast<Eigen::Index>(times.size()));
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double w = weights.empty() ? 1.0 : std::sqrt(weights[i]);
            const double r =
                w * (decay_model(times[i], lambda, alpha, gamma, k, f0, f_tmax, t_max) - values[i]);
            if (r_out) (*r_out)(static_cast<Eigen::Index>(i)) = r;
            acc += r * r;
        }
        return acc;
    }
};

// Levenberg-Marquardt with a central-difference Jacobian.
Eigen::Vector4d lm_minimize(const FitProblem& prob, Eigen::Vector4d p, double* final_cost) {
    const int n = static_cast<int>(prob.times.size());
    double mu = 1e-3;
    Eigen::VectorXd r(n);
    double cost = prob.residual(p, &r);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::MatrixXd jac(n, 4);
        for (int c = 0; c < 4; ++c) {
            const double h = 1e-6 * std::max(1.0, std::abs(p(c)));
            Eigen::Vector4d pp = p, pm = p;
            pp(c) += h;
            pm(c) -= h;
            Eigen::VectorXd rp(n), rm(n);
            prob.residual(pp, &rp);
            prob.residual(pm, &rm);
            jac.col(c) = (rp - rm) / (2.0 * h);
        }
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d g = jac.transpose() * r;
        if (g.cwiseAbs().maxCoeff() < 1e-14) break;

        bool stepped = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::Matrix4d damped = jtj;
            damped.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::Vector4d step = damped.ldlt().solve(-g);
            const Eigen::Vector4d cand = p + step;
            Eigen::VectorXd rc;
            const double cost_c = prob.residual(cand, &rc);
            if (cost_c < cost) {
                p = cand;
                r = rc;
                cost = cost_c;
                mu = std::max(mu * 0.3, 1e-12);
                stepped = true;
                if (step.cwiseAbs().maxCoeff() < 1e-12) iter = 200;
                break;
            }
            mu *= 4.0;
        }
        if (!stepped) break;
    }
    if (final_cost) *final_cost = cost;
    return p;
}

}  // namespace

DecayFit fit_decay(std::span<const double> times, std::span<const double> fidelities,
                   std::span<const double> weights) {
    if (times.size() != fidelities.size())
        throw std::invalid_argument("fit_decay: times/fidelities size mismatch");
    if (times.size() < 6) throw std::invalid_argument("fit_decay: need at least 6 points");
    if (!weights.empty() && weights.size() != times.size())
        throw std::invalid_argument("fit_decay: weights size mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(fidelities[i]))
            throw std::invalid_argument("fit_decay: non-finite data");
        if (i > 0 && times[i] <= times[i - 1])
            throw std::invalid_argument("fit_decay: times must be increasing");
    }

    DecayFit fit;
    fit.f0 = fidelities.front();
    fit.f_tmax = fidelities.back();
    const double t_max = times.back();
    fit.t_max = t_max;

    double lo = fidelities[0], hi = fidelities[0];
    for (double v : fidelities) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        fit.degenerate = true;
        fit.lambda = t_max;
        fit.alpha = t_max;
        fit.weight_k = 0.0;
        fit.gamma = 0.0;
        fit.scale_c = 0.0;
        fit.residual_norm = 0.0;
        return fit;
    }

    FitProblem prob{times, fidelities, weights, fit.f0, fit.f_tmax, t_max};

    // crude oscillation-frequency guess from sign changes around the midline
    int crossings = 0;
    const double midline = 0.5 * (lo + hi);
    for (std::size_t i = 1; i < fidelities.size(); ++i)
        if ((fidelities[i] - midline) * (fidelities[i - 1] - midline) < 0.0) ++crossings;
    const double gamma_guess =
        crossings > 1 ? std::numbers::pi * crossings / (2.0 * t_max) : 0.5 / t_max;

    const double lambda_starts[4] = {t_max / 50.0, t_max / 15.0, t_max / 5.0, t_max / 1.5};
    const double alpha_starts[2] = {t_max / 2.0, 5.0 * t_max};

    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::Vector4d best = Eigen::Vector4d::Zero();
    for (double l0 : lambda_starts) {
        for (double a0 : alpha_starts) {
            Eigen::Vector4d p(std::log(l0), std::log(a0), gamma_guess, std::log(1.0));
            double cost = 0.0;
            p = lm_minimize(prob, p, &cost);
            if (cost < best_cost) {
                best_cost = cost;
                best = p;
            }
        }
    }

    fit.lambda = std::exp(best(0));
    fit.alpha = std::exp(best(1));
    fit.gamma = std::abs(best(2));
    fit.weight_k = std::exp(best(3));
    fit.residual_norm = std::sqrt(best_cost);

    auto f_model = [&](double tt) {
        return (fit.weight_k * std::exp(-tt / fit.lambda) * std::cos(tt * fit.gamma) +
                std::exp(-tt / fit.alpha)) /
               (1.0 + fit.weight_k);
    };
    const double denom = 1.0 - f_model(t_max);
    fit.scale_c = std::abs(denom) > 1e-12 ? (fit.f_tmax - fit.f0) / denom : 0.0;
    fit.hit_bounds = fit.lambda < 1e-3 * times[1] || fit.lambda > 1e3 * t_max ||
                     fit.alpha < 1e-3 * times[1] || fit.alpha > 1e3 * t_max;
    return fit;
}

BootstrapSummary bootstrap(
    const std::function<std::optional<double>(std::span<const int>)>& statistic, int n_rows,
    int n_resamples, std::uint64_t seed) {
    if (n_rows < 1) throw std::invalid_argument("bootstrap: need at least one row");
    if (n_resamples < 100) throw std::invalid_argument("bootstrap: need at least 100 resamples");

    BootstrapSummary out;
    out.n_resamples = n_resamples;
    out.seed = seed;

    std::vector<int> all(n_rows);
    std::iota(all.begin(), all.end(), 0);
    const auto point = statistic(all);
    if (!point) throw std::runtime_error("bootstrap: statistic failed on the full dataset");
    out.estimate = *point;

    const CounterRng rng(CounterRng::derive(seed, 0x62747374));
    std::vector<double> stats;
    stats.reserve(n_resamples);
    int failures = 0;
    const int max_failures = n_resamples / 10;
    std::uint64_t draw = 0;
    std::vector<int> rows(n_rows);
    while (static_cast<int>(stats.size()) < n_resamples) {
        for (int r = 0; r < n_rows; ++r)
            rows[r] = static_cast<int>(rng.below(draw++, static_cast<std::uint64_t>(n_rows)));
        const auto value = statistic(rows);
        if (value) {
            stats.push_back(*value);
        } else if (++failures > max_failures) {
            throw std::runtime_error("bootstrap: more than 10% of resamples failed");
        }
    }
    std::sort(stats.begin(), stats.end());
    auto percentile = [&stats](double q) {
        const double pos = q * (stats.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, stats.size() - 1);
        const double frac = pos - lo;
        return stats[lo] + frac * (stats[hi] - stats[lo]);
    };
    out.ci_low = percentile(0.025);
    out.ci_high = percentile(0.975);
    // percentile CIs need not bracket the point estimate exactly; widen minimally
    out.ci_low = std::min(out.ci_low, out.estimate);
    out.ci_high = std::max(out.ci_high, out.estimate);
    return out;
}

double time_avg_fidelity(std::span<const double> times, std::span<const double> fidelities) {
    if (times.size() != fidelities.size() || times.size() < 2)
        throw std::invalid_argument("time_avg_fidelity: need matching series with >= 2 points");
    if (std::abs(times.front()) > 1e-15)
        throw std::invalid_argument("time_avg_fidelity: times must start at 0");
    if (fidelities.front() <= 0.0)
        throw std::invalid_argument("time_avg_fidelity: F(0) must be positive");
    const double f0 = fidelities.front();
    double acc = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (dt <= 0.0) throw std::invalid_argument("time_avg_fidelity: times must increase");
        acc += 0.5 * dt * (fidelities[i] / f0 + fidelities[i - 1] / f0);
    }
    return acc / times.back();
}

ImprovementRatios improvement_ratios(const DecayFit& fit_a, const DecayFit& fit_b, double favg_a,
                                     double favg_b) {
    if (fit_b.lambda <= 0.0 || favg_b <= 0.0)
        throw std::invalid_argument("improvement_ratios: denominators must be positive");
    return {fit_a.lambda / fit_b.lambda, favg_a / favg_b};
}

std::string DecayFit::to_json() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"lambda\":%.17g,\"alpha\":%.17g,\"gamma\":%.17g,\"k\":%.17g,"
                  "\"f0\":%.17g,\"f_tmax\":%.17g,\"c\":%.17g,\"residual_norm\":%.17g,"
                  "\"hit_bounds\":%s,\"degenerate\":%s}",
                  lambda, alpha, gamma, weight_k, f0, f_tmax, scale_c, residual_norm,
                  hit_bounds ? "true" : "false", degenerate ? "true" : "false");
    return buf;
}

std::string BootstrapSummary::to_json() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"estimate\":%.17g,\"ci_low\":%.17g,\"ci_high\":%.17g,\"n_resamples\":%d}",
                  estimate, ci_low, ci_high, n_resamples);
    return buf;
}

}  // namespace xtalk
