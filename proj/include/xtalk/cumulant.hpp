// cumulant.hpp — Overlap integrals, filter functions, first/second cumulants,
// the crosstalk suppression condition, and cumulant-based predictions.
//
// Conventions, resolved against a time-domain Gaussian oracle and documented
// in the README:
//   chi^{mu nu}_{ij}(T) = J_ij ∫_0^T R^{z mu}_i R^{z nu}_j dt        (edges i < j)
//   G^{mu nu}_i(w, T)   = ∫_0^T R^{mu nu}_i(t) e^{i w t} dt
//   Gamma^{nu ga}_{ij}  = sum_{mu de} ∫_0^inf dw/2pi Re[G_i(w) G_j(-w)] S^{mu de}_{ij}(w)
//   predictions use exp(-i C1 - C2): for real even spectra Gamma equals half
//   the double time integral of the correlation, and -C2 (not +C2/2) is the
//   generator that reproduces the exact Gaussian average.

#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/control.hpp"
#include "xtalk/model.hpp"
#include "xtalk/pauli.hpp"

namespace xtalk {

// ----------------------------- overlap tables --------------------------------

struct ChiTable {
    struct Entry {
        int i = 0;
        int j = 0;                                      // device edge, i < j
        Eigen::Matrix3d chi = Eigen::Matrix3d::Zero();  // [mu][nu], rad
    };
    std::vector<Entry> entries;
    double horizon = 0.0;

    const Eigen::Matrix3d* find(int i, int j) const;
};

struct FilterTrace {
    int qubit = 0;
    std::vector<double> omega;
    std::vector<Eigen::Matrix3cd> G;  // per omega, [mu][nu]
};

struct GammaTable {
    // ordered (i, j) -> Gamma^{nu gamma}_{ij}; both orders present for cross terms
    std::map<std::pair<int, int>, Eigen::Matrix3d> entries;
    double omega_max = 0.0;
    int n_omega = 0;
    bool truncation_warning = false;

    Eigen::Matrix3d get(int i, int j) const;
};

struct SuppressionVerdict {
    bool pass = true;
    double max_abs_chi = 0.0;     // worst |chi| entry, rad
    double relative_residual = 0.0;  // against |J_ij| * T of the worst edge
    int worst_i = -1, worst_j = -1, worst_mu = -1, worst_nu = -1;
    std::string note;
};

// ----------------------------- operations ------------------------------------

// Per-edge quadrature of the z-row products; per-segment 16-node Gauss-Legendre
// on the merged boundary refinement (machine-exact for the piecewise-trig
// integrands produced by square and instantaneous pulses).
ChiTable chi_overlaps(const std::vector<ControlMatrixTrace>& traces, const DeviceModel& device);

// PASS iff max |chi| <= rel_tol * max(|J_ij| * T, floor). Empty table passes.
SuppressionVerdict check_suppression(const ChiTable& chi, const DeviceModel& device,
                                     double rel_tol, double floor = 1e-12);

// Analytic per-segment Fourier transform of the control-matrix trace.
FilterTrace filter_G(const ControlMatrixTrace& trace, const std::vector<double>& omega);
Eigen::Matrix3cd filter_G_at(const ControlMatrixTrace& trace, double omega);

// Composite-Simpson frequency integral of the filter functions against the
// noise spectra. omega_max should cover the spectral support (the result is
// flagged otherwise).
GammaTable gamma_overlaps(const std::vector<ControlMatrixTrace>& traces, const NoiseModel& noise,
                          double omega_max, int n_omega);

// Eq.-(5)/(6) operators for a Hermitian unitary Pauli-string observable.
Eigen::MatrixXcd first_cumulant(const ChiTable& chi, const PauliString& obs);
Eigen::MatrixXcd second_cumulant(const GammaTable& gamma, const PauliString& obs);

struct QuadratureParams {
    double omega_max = 0.0;       // 0 = auto from noise features and horizon
    int n_omega = 2048;
    int samples_per_segment = 8;  // trace sampling density (integrals are analytic)
    int qubit_cap = 8;            // dense-operator safety cap
};

struct PredictionResult {
    double value = 0.0;
    double imag_residual = 0.0;
    bool warning = false;  // imag residual above 1e-6: perturbative regime violated
    bool truncation_warning = false;
};

// Tr[exp(-i C1 - C2) rho_C(T) O] with rho_C from exact control propagators.
PredictionResult predict_expectation(const Eigen::MatrixXcd& rho0, const PulseSchedule& schedule,
                                     const DeviceModel& device, const NoiseModel& noise,
                                     const PauliString& obs, const QuadratureParams& quad = {});

// Pauli expansion of a pure rho0; per-term cumulants share the chi/Gamma tables.
PredictionResult predict_fidelity(const Eigen::VectorXcd& psi0, const PulseSchedule& schedule,
                                  const DeviceModel& device, const NoiseModel& noise,
                                  const QuadratureParams& quad = {});

// Bundled output for the suppression-check pipeline.
struct CumulantReport {
    ChiTable chi;
    GammaTable gamma;
    Eigen::MatrixXcd c1;
    Eigen::MatrixXcd c2;
    SuppressionVerdict verdict;
};

// Long-format CSV exports (indices + value per row).
std::string chi_to_csv(const ChiTable& chi);
std::string gamma_to_csv(const GammaTable& gamma);
std::string filter_to_csv(const FilterTrace& trace);

// Helpers shared with sim/qns: full-register control propagator and rho_C(T).
Eigen::MatrixXcd schedule_propagator(const PulseSchedule& schedule, int n_qubits);

}  // namespace xtalk
