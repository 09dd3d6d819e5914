// control.hpp — Pulse protocols (XY4, XY4', CR-XY4, FTTPS variants), control
// propagators, and toggling-frame control matrices.
//
// Frame convention (load-bearing): the control matrix is referenced to the end
// of the window, R^{mu nu}(t) = Tr[U_C(T,t) sigma^mu U_C^dag(T,t) sigma^nu]/2,
// so R(T) is the identity and intermediate signs track the pulses still to
// come. This choice sets the sign structure of every overlap integral.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xtalk/model.hpp"

namespace xtalk {

enum class PulseShape { square, instantaneous };
enum class SequenceKind { free_evolution, xy4, xy4_prime, fttps_cos, fttps_sin };

std::string sequence_kind_name(SequenceKind kind);

struct DdParams {
    double tau = 0.0;    // free-period duration, s
    double delta = 0.0;  // pulse duration, s (ignored for instantaneous pulses)
    int repetitions = 1;
    PulseShape shape = PulseShape::square;
};

struct FttpsParams {
    int n_slots = 0;    // ell (even); one gate per slot
    int harmonic = 1;   // kappa in 1..ell/2
    double t_gate = 0.0;  // slot duration, s
    PulseShape shape = PulseShape::square;
};

// One DD cycle is f X f Y f X f Y (XY4) or X f Y f X f Y f (XY4'); square
// pi pulses use Omega = pi/delta with phase 0 (X) or pi/2 (Y). Duration is
// repetitions * 4(tau+delta).
ControlField build_dd_schedule(SequenceKind kind, const DdParams& p);

// Target slot signs sgn{cos(pi (kappa-1) m / ell)} (or sin), m = 1..ell,
// with sgn{0} := +1. X gates sit in the slot where the sign changes going in.
std::vector<int> fttps_slot_signs(SequenceKind variant, int n_slots, int harmonic);
ControlField build_fttps(SequenceKind variant, const FttpsParams& p);

struct PatternedSchedule {
    PulseSchedule schedule;
    TwoColoring coloring;
    std::vector<SequenceKind> assignment;  // per qubit
};

// Color-A qubits get XY4, color-B qubits XY4' (cos/sin for FTTPS). On a
// non-bipartite graph the greedy coloring is still returned; the edges on
// which suppression is not guaranteed are listed in coloring.monochromatic.
PatternedSchedule pattern_crdd(const DeviceModel& device, const DdParams& p);
PatternedSchedule pattern_crfttps(const DeviceModel& device, const FttpsParams& p);
// Same sequence on every qubit (e.g. simultaneous XY4, plain cosine FTTPS).
PatternedSchedule pattern_uniform(const DeviceModel& device, const ControlField& field);

// Time-ordered control propagator over [t1, t2]; throws when t1 > t2.
// Instantaneous segments apply when their position lies in (t1, t2].
Eigen::Matrix2cd control_propagator(const ControlField& field, double t1, double t2);

// Piecewise-analytic form of R on one interval: R(t) = A + cos(th) B + sin(th) C
// with th = rate * (t1 - t). Free intervals have B = C = 0.
struct TraceSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    double rate = 0.0;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();

    Eigen::Matrix3d at(double t) const;
};

struct ControlMatrixTrace {
    int qubit = 0;
    double horizon = 0.0;
    std::vector<double> grid;                 // strictly increasing, includes 0 and T
    std::vector<Eigen::Matrix3d> samples;     // R at grid points (right-limit at flips)
    std::vector<TraceSegment> segments;       // exact piecewise form, covers [0, T]

    Eigen::Matrix3d at(double t) const;       // exact evaluation via segments
};

// Samples R(t) with samples_per_segment interior points per positive-duration
// segment (>= 2 required) and records the exact per-segment trigonometric
// form used by the overlap quadratures.
ControlMatrixTrace control_matrix(const ControlField& field, int samples_per_segment);

// SO(3) conjugation matrix of exp(-i angle/2 * (cos phase sigma_x + sin phase sigma_y + nz sigma_z)).
Eigen::Matrix3d rotation_conjugation(double angle, double nx, double ny, double nz);

// Human-readable form, e.g. "f X f Y f X f Y".
std::string sequence_string(const ControlField& field);
// CSV rows (t, Omega, phi) per qubit; RFC-4180 with header.
std::string schedule_to_csv(const PulseSchedule& schedule);

}  // namespace xtalk
