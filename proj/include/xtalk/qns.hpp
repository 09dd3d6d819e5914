// qns.hpp — Spectrum reconstruction from FTTPS decays: linear inversion design,
// decay extraction, crosstalk correction, least-squares / non-negative solves,
// and reconstruction scoring.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/control.hpp"
#include "xtalk/model.hpp"

namespace xtalk {

struct InversionDesign {
    std::vector<double> omega;  // one sample per sequence: omega_k = pi (k-1) / (ell t_gate)
    Eigen::MatrixXd weights;    // A[kappa-1][k-1]: log-decay b = A * S(omega)
    int n_slots = 0;            // ell
    double t_gate = 0.0;
    SequenceKind variant = SequenceKind::fttps_cos;
    double condition_number = 0.0;
};

// Builds the filter-weight matrix from the instantaneous-pulse sign traces of
// every sequence kappa = 1..ell/2 of the given variant. Row kappa satisfies
// b_kappa = sum_k A[kappa][k] S(omega_k) for Gaussian dephasing, with
// A = 4 |G^{zz}_kappa(omega_k)|^2 dOmega / (2 pi). Throws when the matrix is
// numerically singular (condition number above 1e12).
InversionDesign design_inversion(SequenceKind variant, int n_slots, double t_gate);

struct DecayVector {
    std::vector<double> b;
    int n_clamped = 0;  // entries that hit the strong-decay clamp
};

// b_kappa = -ln(clamp(<O>_kappa / baseline_kappa, eps, 1)), eps = 1e-6.
DecayVector extract_decays(std::span<const double> expectations,
                           std::span<const double> baselines, double eps = 1e-6);

struct CrosstalkCorrection {
    std::vector<double> corrected;  // expectations divided by the J-only reference
    std::vector<int> skipped;       // sequences whose reference fell below eps
};

// Divides measured expectations by the noiseless crosstalk-only reference
// (exact simulation of the same protocol with J only).
CrosstalkCorrection cc_correct(std::span<const double> measured,
                               std::span<const double> crosstalk_reference, double eps = 1e-6);

enum class ReconstructionConstraint { none, nonneg };

struct SpectrumEstimate {
    std::vector<double> omega;
    std::vector<double> s_hat;
    std::vector<double> ci_low;   // filled by bootstrap pipelines; equals s_hat otherwise
    std::vector<double> ci_high;
    int qubit = 0;
    double condition_number = 0.0;
    double residual_norm = 0.0;
    double ridge = 0.0;
};

// Least squares with optional ridge and optional non-negativity
// (Lawson-Hanson active set).
SpectrumEstimate reconstruct(std::span<const double> b, const InversionDesign& design,
                             ReconstructionConstraint constraint = ReconstructionConstraint::none,
                             double ridge = 0.0);

// Lawson-Hanson non-negative least squares; returns x >= 0 minimizing |Ax - b|.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iter = 0);

struct ReconstructionError {
    double mse = 0.0;
    double normalized = 0.0;  // mse / mean(S_true^2)
};

// Truth evaluated on the estimate's grid.
ReconstructionError reconstruction_error(const SpectrumEstimate& estimate,
                                         const SpectrumSpec& truth);

std::string spectrum_estimate_to_csv(const SpectrumEstimate& estimate);

}  // namespace xtalk
