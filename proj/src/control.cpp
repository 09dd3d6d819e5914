#include "xtalk/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace xtalk {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d cross(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return a.cross(b);
}

}  // namespace

std::string sequence_kind_name(SequenceKind kind) {
    switch (kind) {
        case SequenceKind::free_evolution: return "free";
        case SequenceKind::xy4: return "xy4";
        case SequenceKind::xy4_prime: return "xy4_prime";
        case SequenceKind::fttps_cos: return "fttps_cos";
        default: return "fttps_sin";
    }
}

Eigen::Matrix3d rotation_conjugation(double angle, double nx, double ny, double nz) {
    Eigen::Vector3d n(nx, ny, nz);
    const double norm = n.norm();
    if (norm == 0.0) return Eigen::Matrix3d::Identity();
    n /= norm;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix3d out;
    for (int m = 0; m < 3; ++m) {
        Eigen::Vector3d em = Eigen::Vector3d::Zero();
        em(m) = 1.0;
        const Eigen::Vector3d row = c * em + (1.0 - c) * n(m) * n + s * cross(n, em);
        out.row(m) = row.transpose();
    }
    return out;
}

// ----------------------------- sequence builders -----------------------------

ControlField build_dd_schedule(SequenceKind kind, const DdParams& p) {
    if (kind != SequenceKind::xy4 && kind != SequenceKind::xy4_prime)
        throw std::invalid_argument("build_dd_schedule: kind must be XY4 or XY4'");
    if (p.tau < 0.0 || p.delta < 0.0)
        throw std::invalid_argument("build_dd_schedule: tau and delta must be >= 0");
    if (p.tau == 0.0 && p.delta == 0.0)
        throw std::invalid_argument("build_dd_schedule: tau and delta cannot both be zero");
    if (p.repetitions < 1) throw std::invalid_argument("build_dd_schedule: repetitions must be >= 1");
    if (p.shape == PulseShape::square && p.delta == 0.0)
        throw std::invalid_argument("build_dd_schedule: square pulses need delta > 0");

    ControlField field;
    const double phases[2] = {0.0, kPi / 2.0};  // X, Y
    if (p.shape == PulseShape::square) {
        const double omega = kPi / p.delta;
        for (int cycle = 0; cycle < p.repetitions; ++cycle) {
            for (int k = 0; k < 4; ++k) {
                const double phase = phases[k % 2];
                if (kind == SequenceKind::xy4) {
                    field.segments.push_back({p.tau, 0.0, 0.0});
                    field.segments.push_back({p.delta, omega, phase});
                } else {
                    field.segments.push_back({p.delta, omega, phase});
                    field.segments.push_back({p.tau, 0.0, 0.0});
                }
            }
        }
        // drop zero-length free markers when tau == 0
        std::erase_if(field.segments,
                      [](const Segment& s) { return s.duration == 0.0 && s.amplitude == 0.0; });
    } else {
        // Instantaneous pulses keep the 4(tau+delta) cycle time: each slot is a
        // free period of tau+delta with the pi flip at its end (XY4) or start (XY4').
        const double slot = p.tau + p.delta;
        for (int cycle = 0; cycle < p.repetitions; ++cycle) {
            for (int k = 0; k < 4; ++k) {
                const double phase = phases[k % 2];
                if (kind == SequenceKind::xy4) {
                    field.segments.push_back({slot, 0.0, 0.0});
                    field.segments.push_back({0.0, kPi, phase});
                } else {
                    field.segments.push_back({0.0, kPi, phase});
                    field.segments.push_back({slot, 0.0, 0.0});
                }
            }
        }
    }
    return field;
}

std::vector<int> fttps_slot_signs(SequenceKind variant, int n_slots, int harmonic) {
    if (variant != SequenceKind::fttps_cos && variant != SequenceKind::fttps_sin)
        throw std::invalid_argument("fttps_slot_signs: variant must be cosine or sine FTTPS");
    if (n_slots < 2 || n_slots % 2 != 0)
        throw std::invalid_argument("fttps_slot_signs: n_slots must be even and >= 2");
    if (harmonic < 1 || harmonic > n_slots / 2)
        throw std::invalid_argument("fttps_slot_signs: harmonic must be in 1..n_slots/2");
    std::vector<int> signs(n_slots);
    for (int m = 1; m <= n_slots; ++m) {
        const double arg = kPi * (harmonic - 1) * m / n_slots;
        const double v = (variant == SequenceKind::fttps_cos) ? std::cos(arg) : std::sin(arg);
        // sgn{0} := +1, which also makes the kappa = 1 sine sequence pulse-free
        signs[m - 1] = (v < 0.0) ? -1 : 1;
    }
    return signs;
}

ControlField build_fttps(SequenceKind variant, const FttpsParams& p) {
    if (p.t_gate <= 0.0) throw std::invalid_argument("build_fttps: t_gate must be > 0");
    const std::vector<int> signs = fttps_slot_signs(variant, p.n_slots, p.harmonic);

    // Slot m hosts an X gate iff the target sign changes between slots m and m+1.
    std::vector<bool> is_gate(p.n_slots, false);
    for (int m = 0; m + 1 < p.n_slots; ++m) is_gate[m] = signs[m] != signs[m + 1];

    ControlField field;
    const double omega = kPi / p.t_gate;
    for (int m = 0; m < p.n_slots; ++m) {
        if (!is_gate[m]) {
            field.segments.push_back({p.t_gate, 0.0, 0.0});
        } else if (p.shape == PulseShape::square) {
            field.segments.push_back({p.t_gate, omega, 0.0});
        } else {
            // free slot with the flip at its end, so the slot keeps sign s_m
            field.segments.push_back({p.t_gate, 0.0, 0.0});
            field.segments.push_back({0.0, kPi, 0.0});
        }
    }
    return field;
}

// ----------------------------- array patterning ------------------------------

namespace {

PatternedSchedule pattern_two_kinds(const DeviceModel& device, SequenceKind kind_a,
                                    SequenceKind kind_b, const ControlField& field_a,
                                    const ControlField& field_b) {
    PatternedSchedule out;
    out.coloring = two_color(device);
    out.assignment.resize(device.n_qubits);
    out.schedule.horizon = field_a.total_duration();
    for (int q = 0; q < device.n_qubits; ++q) {
        const bool first = out.coloring.color[q] == 0;
        out.assignment[q] = first ? kind_a : kind_b;
        out.schedule.per_qubit[q] = first ? field_a : field_b;
    }
    return out;
}

}  // namespace

PatternedSchedule pattern_crdd(const DeviceModel& device, const DdParams& p) {
    validate_device(device);
    return pattern_two_kinds(device, SequenceKind::xy4, SequenceKind::xy4_prime,
                             build_dd_schedule(SequenceKind::xy4, p),
                             build_dd_schedule(SequenceKind::xy4_prime, p));
}

PatternedSchedule pattern_crfttps(const DeviceModel& device, const FttpsParams& p) {
    validate_device(device);
    return pattern_two_kinds(device, SequenceKind::fttps_cos, SequenceKind::fttps_sin,
                             build_fttps(SequenceKind::fttps_cos, p),
                             build_fttps(SequenceKind::fttps_sin, p));
}

PatternedSchedule pattern_uniform(const DeviceModel& device, const ControlField& field) {
    validate_device(device);
    PatternedSchedule out;
    out.coloring.color.assign(device.n_qubits, 0);
    out.coloring.bipartite = true;
    out.assignment.assign(device.n_qubits, SequenceKind::free_evolution);
    out.schedule.horizon = field.total_duration();
    for (int q = 0; q < device.n_qubits; ++q) out.schedule.per_qubit[q] = field;
    return out;
}

// ----------------------------- propagators -----------------------------------

namespace {

Eigen::Matrix2cd axis_rotation(double angle, double phase) {
    // exp(-i angle/2 * (cos phase sx + sin phase sy))
    const std::complex<double> I(0.0, 1.0);
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Eigen::Matrix2cd u;
    u(0, 0) = c;
    u(1, 1) = c;
    u(0, 1) = -I * s * std::exp(-I * phase);
    u(1, 0) = -I * s * std::exp(I * phase);
    return u;
}

}  // namespace

Eigen::Matrix2cd control_propagator(const ControlField& field, double t1, double t2) {
    if (t1 > t2) throw std::invalid_argument("control_propagator: need t1 <= t2");
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    if (t1 == t2) return u;
    const double total = field.total_duration();
    double clock = 0.0;
    for (const auto& seg : field.segments) {
        if (seg.duration == 0.0) {
            // A flip at position p applies on [t1, t2); the window end is closed
            // only at the horizon so the final pulse of a cycle is not dropped.
            const bool inside = (clock >= t1 && clock < t2) || (t2 == total && clock == total);
            if (inside) u = axis_rotation(seg.amplitude, seg.phase) * u;
            continue;
        }
        const double a = std::max(clock, t1);
        const double b = std::min(clock + seg.duration, t2);
        if (b > a && seg.amplitude != 0.0)
            u = axis_rotation(seg.amplitude * (b - a), seg.phase) * u;
        clock += seg.duration;
    }
    return u;
}

// ----------------------------- control matrix --------------------------------

Eigen::Matrix3d TraceSegment::at(double t) const {
    if (rate == 0.0) return A;
    const double th = rate * (t1 - t);
    return A + std::cos(th) * B + std::sin(th) * C;
}

Eigen::Matrix3d ControlMatrixTrace::at(double t) const {
    if (segments.empty()) return Eigen::Matrix3d::Identity();
    if (t >= horizon) return Eigen::Matrix3d::Identity();
    if (t <= segments.front().t0) t = segments.front().t0;
    // half-open [t0, t1) lookup
    for (const auto& seg : segments) {
        if (t < seg.t1 || &seg == &segments.back()) return seg.at(t);
    }
    return Eigen::Matrix3d::Identity();
}

ControlMatrixTrace control_matrix(const ControlField& field, int samples_per_segment) {
    if (samples_per_segment < 2)
        throw std::invalid_argument("control_matrix: need >= 2 samples per segment");
    ControlMatrixTrace trace;
    trace.horizon = field.total_duration();

    // Segment end times
    std::vector<double> ends(field.segments.size());
    {
        double clock = 0.0;
        for (std::size_t k = 0; k < field.segments.size(); ++k) {
            clock += field.segments[k].duration;
            ends[k] = clock;
        }
    }

    // Walk backward accumulating the conjugation matrix of everything after
    // the current segment. Composition rule: Rmat(U2 U1) = R1 * R2 with U1
    // chronologically first, so R(t) = R_partial(t) * R_after.
    Eigen::Matrix3d r_after = Eigen::Matrix3d::Identity();
    std::vector<TraceSegment> rev;
    for (std::size_t k = field.segments.size(); k-- > 0;) {
        const Segment& seg = field.segments[k];
        const double t1 = ends[k];
        const double t0 = t1 - seg.duration;
        if (seg.duration == 0.0) {
            r_after = rotation_conjugation(seg.amplitude, std::cos(seg.phase),
                                           std::sin(seg.phase), 0.0) *
                      r_after;
            continue;
        }
        TraceSegment ts;
        ts.t0 = t0;
        ts.t1 = t1;
        if (seg.amplitude == 0.0) {
            ts.rate = 0.0;
            ts.A = r_after;
        } else {
            ts.rate = seg.amplitude;
            Eigen::Vector3d n(std::cos(seg.phase), std::sin(seg.phase), 0.0);
            const Eigen::Matrix3d P = n * n.transpose();
            Eigen::Matrix3d K;
            for (int m = 0; m < 3; ++m) {
                Eigen::Vector3d em = Eigen::Vector3d::Zero();
                em(m) = 1.0;
                K.row(m) = cross(n, em).transpose();
            }
            ts.A = P * r_after;
            ts.B = (Eigen::Matrix3d::Identity() - P) * r_after;
            ts.C = K * r_after;
            r_after = rotation_conjugation(seg.amplitude * seg.duration, n(0), n(1), 0.0) * r_after;
        }
        rev.push_back(ts);
    }
    trace.segments.assign(rev.rbegin(), rev.rend());

    // Sample grid: all boundaries plus interior points per segment.
    for (const auto& ts : trace.segments) {
        if (trace.grid.empty() || trace.grid.back() < ts.t0) {
            trace.grid.push_back(ts.t0);
            trace.samples.push_back(ts.at(ts.t0));
        }
        for (int q = 1; q < samples_per_segment; ++q) {
            const double t = ts.t0 + (ts.t1 - ts.t0) * q / samples_per_segment;
            trace.grid.push_back(t);
            trace.samples.push_back(ts.at(t));
        }
    }
    trace.grid.push_back(trace.horizon);
    trace.samples.push_back(Eigen::Matrix3d::Identity());
    return trace;
}

// ----------------------------- exports ---------------------------------------

std::string sequence_string(const ControlField& field) {
    std::string out;
    auto append = [&out](const std::string& tok) {
        if (!out.empty()) out += ' ';
        out += tok;
    };
    for (const auto& seg : field.segments) {
        const double angle = seg.duration == 0.0 ? seg.amplitude : seg.amplitude * seg.duration;
        if (seg.duration > 0.0 && seg.amplitude == 0.0) {
            append("f");
        } else if (std::abs(angle - kPi) < 1e-9 && std::abs(seg.phase) < 1e-9) {
            append("X");
        } else if (std::abs(angle - kPi) < 1e-9 && std::abs(seg.phase - kPi / 2) < 1e-9) {
            append("Y");
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "P(%.3g,%.3g)", angle, seg.phase);
            append(buf);
        }
    }
    return out;
}

std::string schedule_to_csv(const PulseSchedule& schedule) {
    std::string out = "qubit,t,duration,omega,phi\r\n";
    char buf[160];
    for (const auto& [qubit, field] : schedule.per_qubit) {
        double clock = 0.0;
        for (const auto& seg : field.segments) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\r\n", qubit, clock,
                          seg.duration, seg.amplitude, seg.phase);
            out += buf;
            clock += seg.duration;
        }
    }
    return out;
}

}  // namespace xtalk
