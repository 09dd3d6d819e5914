#include "xtalk/qns.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "xtalk/cumulant.hpp"
#include "xtalk/numerics.hpp"

namespace xtalk {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

InversionDesign design_inversion(SequenceKind variant, int n_slots, double t_gate) {
    if (t_gate <= 0.0) throw std::invalid_argument("design_inversion: t_gate must be > 0");
    if (n_slots < 2 || n_slots % 2 != 0)
        throw std::invalid_argument("design_inversion: n_slots must be even and >= 2");
    const int n_seq = n_slots / 2;
    const double horizon = n_slots * t_gate;
    const double d_omega = std::numbers::pi / horizon;

    InversionDesign out;
    out.n_slots = n_slots;
    out.t_gate = t_gate;
    out.variant = variant;
    out.omega.resize(n_seq);
    for (int k = 0; k < n_seq; ++k) out.omega[k] = d_omega * k;  // pi (kappa-1) / (ell t_gate)

    out.weights.resize(n_seq, n_seq);
    for (int kappa = 1; kappa <= n_seq; ++kappa) {
        const std::vector<int> signs = fttps_slot_signs(variant, n_slots, kappa);
        for (int k = 0; k < n_seq; ++k) {
            const double w = out.omega[k];
            // G^{zz}(w) of the ideal +-1 slot trace
            std::complex<double> g = 0.0;
            for (int m = 0; m < n_slots; ++m)
                g += static_cast<double>(signs[m]) *
                     cexp_integral(w, m * t_gate, (m + 1) * t_gate);
            out.weights(kappa - 1, k) = 4.0 * std::norm(g) * d_omega / kTwoPi;
        }
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.weights);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    out.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(out.condition_number < 1e12))
        throw std::runtime_error("design_inversion: singular design (condition number " +
                                 std::to_string(out.condition_number) + ")");
    return out;
}

DecayVector extract_decays(std::span<const double> expectations,
                           std::span<const double> baselines, double eps) {
    if (expectations.size() != baselines.size())
        throw std::invalid_argument("extract_decays: size mismatch");
    DecayVector out;
    out.b.reserve(expectations.size());
    for (std::size_t k = 0; k < expectations.size(); ++k) {
        if (baselines[k] <= 0.0)
            throw std::invalid_argument("extract_decays: baseline must be positive");
        double ratio = expectations[k] / baselines[k];
        if (ratio < eps || ratio > 1.0) {
            ratio = std::clamp(ratio, eps, 1.0);
            ++out.n_clamped;
        }
        out.b.push_back(-std::log(ratio));
    }
    return out;
}

CrosstalkCorrection cc_correct(std::span<const double> measured,
                               std::span<const double> crosstalk_reference, double eps) {
    if (measured.size() != crosstalk_reference.size())
        throw std::invalid_argument("cc_correct: size mismatch");
    CrosstalkCorrection out;
    out.corrected.assign(measured.begin(), measured.end());
    for (std::size_t k = 0; k < measured.size(); ++k) {
        if (std::abs(crosstalk_reference[k]) < eps) {
            out.skipped.push_back(static_cast<int>(k));
            continue;
        }
        out.corrected[k] = measured[k] / crosstalk_reference[k];
    }
    return out;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iter) {
    // Lawson-Hanson active set
    const int ncols = static_cast<int>(a.cols());
    if (max_iter <= 0) max_iter = 3 * ncols + 30;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ncols);
    std::vector<bool> passive(ncols, false);
    Eigen::VectorXd w = a.transpose() * (b - a * x);

    const double tol = 1e-12 * (a.cwiseAbs().maxCoeff() + 1.0) * (b.cwiseAbs().maxCoeff() + 1.0);
    for (int iter = 0; iter < max_iter; ++iter) {
        int best = -1;
        double best_w = tol;
        for (int j = 0; j < ncols; ++j) {
            if (!passive[j] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[best] = true;

        while (true) {
            std::vector<int> idx;
            for (int j = 0; j < ncols; ++j)
                if (passive[j]) idx.push_back(j);
            Eigen::MatrixXd ap(a.rows(), idx.size());
            for (std::size_t c = 0; c < idx.size(); ++c) ap.col(c) = a.col(idx[c]);
            const Eigen::VectorXd z = ap.colPivHouseholderQr().solve(b);

            double alpha = 1.0;
            bool feasible = true;
            for (std::size_t c = 0; c < idx.size(); ++c) {
                if (z(c) <= 0.0) {
                    feasible = false;
                    const double xi = x(idx[c]);
                    if (xi - z(c) > 0.0) alpha = std::min(alpha, xi / (xi - z(c)));
                }
            }
            if (feasible) {
                x.setZero();
                for (std::size_t c = 0; c < idx.size(); ++c) x(idx[c]) = z(c);
                break;
            }
            for (std::size_t c = 0; c < idx.size(); ++c)
                x(idx[c]) += alpha * (z(c) - x(idx[c]));
            for (int j = 0; j < ncols; ++j) {
                if (passive[j] && x(j) <= tol) {
                    passive[j] = false;
                    x(j) = 0.0;
                }
            }
        }
        w = a.transpose() * (b - a * x);
    }
    return x.cwiseMax(0.0);
}

SpectrumEstimate reconstruct(std::span<const double> b, const InversionDesign& design,
                             ReconstructionConstraint constraint, double ridge) {
    const int n = static_cast<int>(design.omega.size());
    if (static_cast<int>(b.size()) != n)
        throw std::invalid_argument("reconstruct: decay vector does not match the design");

    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k) rhs(k) = b[k];

    Eigen::MatrixXd a = design.weights;
    Eigen::VectorXd y = rhs;
    if (ridge > 0.0) {
        Eigen::MatrixXd stacked(2 * n, n);
        stacked.topRows(n) = a;
        stacked.bottomRows(n) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd ystack = Eigen::VectorXd::Zero(2 * n);
        ystack.head(n) = y;
        a = stacked;
        y = ystack;
    }

    SpectrumEstimate out;
    out.omega = design.omega;
    out.ridge = ridge;
    out.condition_number = design.condition_number;

    Eigen::VectorXd solution;
    if (constraint == ReconstructionConstraint::nonneg) {
        solution = nnls(a, y);
    } else {
        solution = a.colPivHouseholderQr().solve(y);
    }
    out.residual_norm = (design.weights * solution - rhs).norm();
    out.s_hat.assign(solution.data(), solution.data() + n);
    out.ci_low = out.s_hat;
    out.ci_high = out.s_hat;
    return out;
}

ReconstructionError reconstruction_error(const SpectrumEstimate& estimate,
                                         const SpectrumSpec& truth) {
    ReconstructionError out;
    if (estimate.omega.empty()) return out;
    double acc = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < estimate.omega.size(); ++k) {
        const double s_true = eval_psd(truth, estimate.omega[k]);
        const double d = estimate.s_hat[k] - s_true;
        acc += d * d;
        norm += s_true * s_true;
    }
    const double n = static_cast<double>(estimate.omega.size());
    out.mse = acc / n;
    out.normalized = norm > 0.0 ? acc / norm : out.mse;
    return out;
}

std::string spectrum_estimate_to_csv(const SpectrumEstimate& estimate) {
    std::string out = "omega,s_hat,ci_low,ci_high\r\n";
    char buf[160];
    for (std::size_t k = 0; k < estimate.omega.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\r\n", estimate.omega[k],
                      estimate.s_hat[k], estimate.ci_low[k], estimate.ci_high[k]);
        out += buf;
    }
    return out;
}

}  // namespace xtalk
