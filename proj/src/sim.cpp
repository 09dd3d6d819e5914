#include "xtalk/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "xtalk/numerics.hpp"
#include "xtalk/rng.hpp"

namespace xtalk {

namespace {

struct Slice {
    double t0 = 0.0;
    double t1 = 0.0;
};

// Cut the horizon at segment boundaries and at the dt grid; instantaneous
// flips are applied between slices by the per-qubit segment walk.
std::vector<Slice> build_slices(const PulseSchedule& schedule, double dt) {
    std::set<double> cuts{0.0, schedule.horizon};
    for (const auto& [q, field] : schedule.per_qubit) {
        double clock = 0.0;
        for (const auto& seg : field.segments) {
            clock += seg.duration;
            cuts.insert(std::min(clock, schedule.horizon));
        }
    }
    const int n_dt = static_cast<int>(std::ceil(schedule.horizon / dt - 1e-9));
    for (int k = 1; k < n_dt; ++k) cuts.insert(k * dt);

    std::vector<double> sorted(cuts.begin(), cuts.end());
    std::vector<Slice> out;
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        if (sorted[k + 1] - sorted[k] > 1e-15 * std::max(1.0, schedule.horizon))
            out.push_back({sorted[k], sorted[k + 1]});
    }
    return out;
}

// Control value of one qubit on a slice midpoint plus any flips at slice starts.
struct FieldCursor {
    const ControlField* field = nullptr;

    struct Value {
        double amplitude = 0.0;
        double phase = 0.0;
    };

    Value at(double t) const {
        double clock = 0.0;
        if (field == nullptr) return {};
        for (const auto& seg : field->segments) {
            if (seg.duration == 0.0) continue;
            if (t >= clock && t < clock + seg.duration) return {seg.amplitude, seg.phase};
            clock += seg.duration;
        }
        return {};
    }

    // instantaneous segments with position in [a, b)
    std::vector<Value> flips_in(double a, double b, double horizon, bool closed_end) const {
        std::vector<Value> out;
        if (field == nullptr) return out;
        double clock = 0.0;
        for (const auto& seg : field->segments) {
            if (seg.duration == 0.0) {
                const bool inside =
                    (clock >= a && clock < b) || (closed_end && b == horizon && clock == horizon);
                if (inside) out.push_back({seg.amplitude, seg.phase});
            }
            clock += seg.duration;
        }
        return out;
    }
};

}  // namespace

int slice_count(const PulseSchedule& schedule, double dt) {
    return static_cast<int>(std::ceil(schedule.horizon / dt - 1e-9));
}

double default_dt(const PulseSchedule& schedule) {
    double shortest = schedule.horizon;
    for (const auto& [q, field] : schedule.per_qubit)
        for (const auto& seg : field.segments)
            if (seg.duration > 0.0) shortest = std::min(shortest, seg.duration);
    return shortest / 4.0;
}

Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi0, const PulseSchedule& schedule,
                        const DeviceModel& device,
                        const std::map<std::pair<int, int>, std::vector<double>>& trajectories,
                        double dt) {
    const int n = device.n_qubits;
    const Eigen::Index dim = Eigen::Index(1) << n;
    if (psi0.size() != dim) throw std::invalid_argument("evolve: state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("evolve: initial state must be normalized");
    if (dt <= 0.0) throw std::invalid_argument("evolve: dt must be > 0");

    // Static ZZ part
    Eigen::MatrixXcd h_zz = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& e : device.edges) {
        if (e.coupling == 0.0) continue;
        h_zz += e.coupling * (site_pauli(n, e.i, Axis::z) * site_pauli(n, e.j, Axis::z));
    }

    std::vector<FieldCursor> cursors(n);
    for (const auto& [q, field] : schedule.per_qubit) cursors.at(q).field = &field;

    const std::vector<Slice> slices = build_slices(schedule, dt);
    Eigen::VectorXcd psi = psi0;
    const std::complex<double> I(0.0, 1.0);

    auto apply_flips = [&](double a, double b, bool closed_end) {
        for (int q = 0; q < n; ++q) {
            for (const auto& fl : cursors[q].flips_in(a, b, schedule.horizon, closed_end)) {
                Eigen::Matrix2cd u;
                const double c = std::cos(0.5 * fl.amplitude);
                const double sn = std::sin(0.5 * fl.amplitude);
                u(0, 0) = c;
                u(1, 1) = c;
                u(0, 1) = -I * sn * std::exp(-I * fl.phase);
                u(1, 0) = -I * sn * std::exp(I * fl.phase);
                psi = embed_site(n, q, u) * psi;
            }
        }
    };

    for (std::size_t s = 0; s < slices.size(); ++s) {
        const auto& sl = slices[s];
        // flips in [t0, t1) precede the slice evolution; interior positions
        // cannot occur because slices are cut at every boundary
        apply_flips(sl.t0, sl.t1, false);

        const double mid = 0.5 * (sl.t0 + sl.t1);
        Eigen::MatrixXcd h = h_zz;
        for (int q = 0; q < n; ++q) {
            const auto v = cursors[q].at(mid);
            if (v.amplitude != 0.0) {
                h += 0.5 * v.amplitude *
                     (std::cos(v.phase) * site_pauli(n, q, Axis::x) +
                      std::sin(v.phase) * site_pauli(n, q, Axis::y));
            }
        }
        const int slice_index = std::min<int>(static_cast<int>(mid / dt),
                                              std::max(0, slice_count(schedule, dt) - 1));
        for (const auto& [key, samples] : trajectories) {
            const auto [q, axis] = key;
            const double beta = samples.at(slice_index);
            if (beta != 0.0) h += beta * site_pauli(n, q, static_cast<Axis>(axis));
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
        if (eig.info() != Eigen::Success) throw std::runtime_error("evolve: eigensolver failed");
        const double w = sl.t1 - sl.t0;
        const Eigen::VectorXcd phases =
            (-I * w * eig.eigenvalues().cast<std::complex<double>>().array()).exp();
        psi = eig.eigenvectors() * (phases.asDiagonal() * (eig.eigenvectors().adjoint() * psi));
    }
    // pulses sitting exactly at the horizon close the window
    apply_flips(schedule.horizon, schedule.horizon, true);
    return psi;
}

std::uint64_t trajectory_seed(std::uint64_t master, int qubit, int axis, int trajectory,
                              int replicate, int sequence) {
    std::uint64_t key = master;
    key = CounterRng::derive(key, 0x7261 /* stream tag */);
    key = CounterRng::derive(key, static_cast<std::uint64_t>(qubit));
    key = CounterRng::derive(key, static_cast<std::uint64_t>(axis));
    key = CounterRng::derive(key, static_cast<std::uint64_t>(trajectory));
    key = CounterRng::derive(key, static_cast<std::uint64_t>(replicate));
    key = CounterRng::derive(key, static_cast<std::uint64_t>(sequence));
    return key;
}

namespace {

void aggregate(SimResult& out, const SimConfig& config,
               const std::vector<double>& values, bool clamp_to_unit) {
    out.per_trajectory = values;
    out.n_shots = config.n_shots;
    std::vector<double> estimates = values;
    if (config.n_shots > 0 && clamp_to_unit) {
        const CounterRng shot_rng(CounterRng::derive(config.seed, 0x73686f74));
        for (std::size_t k = 0; k < estimates.size(); ++k) {
            const double p = std::clamp(values[k], 0.0, 1.0);
            int hits = 0;
            for (int s = 0; s < config.n_shots; ++s) {
                const double u = shot_rng.uniform(k * static_cast<std::uint64_t>(config.n_shots) + s);
                if (u < p) ++hits;
            }
            estimates[k] = static_cast<double>(hits) / config.n_shots;
        }
        out.shot_estimates = estimates;
    }
    const double n = static_cast<double>(estimates.size());
    out.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
    double var = 0.0;
    for (double v : estimates) var += (v - out.mean) * (v - out.mean);
    out.std_error = n > 1 ? std::sqrt(var / (n * (n - 1))) : 0.0;
}

SimResult run_impl(const SimConfig& config,
                   const std::function<double(const Eigen::VectorXcd&)>& score,
                   bool clamp_to_unit) {
    validate_device(config.device);
    validate_schedule(config.schedule);
    if (config.device.n_qubits > config.qubit_cap)
        throw std::invalid_argument("sim: qubit count exceeds the dense-evolution cap");
    if (config.n_trajectories < 1)
        throw std::invalid_argument("sim: n_trajectories must be >= 1");
    const auto t_start = std::chrono::steady_clock::now();

    const double dt = config.dt > 0.0 ? config.dt : default_dt(config.schedule);
    const int n_slices = slice_count(config.schedule, dt);

    std::vector<double> values(config.n_trajectories, 0.0);
    parallel_for(
        static_cast<std::size_t>(config.n_trajectories), resolve_threads(config.n_threads),
        [&](std::size_t k) {
            std::map<std::pair<int, int>, std::vector<double>> trajs;
            for (const auto& inj : config.injections) {
                const std::uint64_t seed = trajectory_seed(config.seed, inj.qubit,
                                                           axis_index(inj.axis),
                                                           static_cast<int>(k));
                trajs[{inj.qubit, axis_index(inj.axis)}] =
                    sample_trajectory(inj.filter, n_slices, seed).samples;
            }
            const Eigen::VectorXcd psi =
                evolve(config.initial_state, config.schedule, config.device, trajs, dt);
            values[k] = score(psi);
        });

    SimResult out;
    aggregate(out, config, values, clamp_to_unit);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

}  // namespace

SimResult run_monte_carlo(const SimConfig& config) {
    const Eigen::VectorXcd psi0 = config.initial_state;
    const int n = config.device.n_qubits;
    const double flip = config.readout.flip_probability;

    // Inverse state preparation as a Householder reflection taking psi0 to
    // |0...0> (up to phase); the all-zeros population equals |<psi0|psi>|^2.
    Eigen::MatrixXcd inv_prep;
    if (flip > 0.0) {
        const Eigen::Index dim = psi0.size();
        Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(dim);
        const std::complex<double> a0 = psi0(0);
        const std::complex<double> phase =
            std::abs(a0) > 1e-15 ? a0 / std::abs(a0) : std::complex<double>(1.0, 0.0);
        e0(0) = phase;
        Eigen::VectorXcd v = psi0 - e0;
        inv_prep = Eigen::MatrixXcd::Identity(dim, dim);
        const double nv = v.squaredNorm();
        if (nv > 1e-24) inv_prep -= (2.0 / nv) * (v * v.adjoint());
    }

    return run_impl(
        config,
        [&psi0, &inv_prep, n, flip](const Eigen::VectorXcd& psi) {
            if (flip <= 0.0) return std::norm(psi0.dot(psi));
            // outcome distribution after inverse preparation, then independent
            // per-qubit classification flips feeding the all-zeros estimator
            const Eigen::VectorXcd q = inv_prep * psi;
            double acc = 0.0;
            for (Eigen::Index b = 0; b < q.size(); ++b) {
                const int weight = __builtin_popcountll(static_cast<unsigned long long>(b));
                acc += std::norm(q(b)) * std::pow(flip, weight) *
                       std::pow(1.0 - flip, n - weight);
            }
            return acc;
        },
        true);
}

SimResult run_expectation(const SimConfig& config, const PauliString& obs) {
    const Eigen::MatrixXcd o = obs.matrix();
    return run_impl(
        config,
        [&o](const Eigen::VectorXcd& psi) { return (psi.adjoint() * o * psi)(0, 0).real(); },
        false);
}

double survival_probability(const std::map<std::string, int>& counts,
                            const std::string& target_bitstring) {
    long total = 0;
    for (const auto& [key, c] : counts) {
        if (c < 0) throw std::invalid_argument("survival_probability: negative count");
        total += c;
    }
    if (total <= 0) throw std::invalid_argument("survival_probability: empty histogram");
    const auto it = counts.find(target_bitstring);
    const long hit = it == counts.end() ? 0 : it->second;
    return static_cast<double>(hit) / static_cast<double>(total);
}

std::string SimResult::to_json() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"mean\":%.17g,\"std_error\":%.17g,\"n_trajectories\":%zu,\"n_shots\":%d}",
                  mean, std_error, per_trajectory.size(), n_shots);
    return buf;
}

std::string SimResult::per_trajectory_csv() const {
    std::string out = "trajectory,value,shot_estimate\r\n";
    char buf[128];
    for (std::size_t k = 0; k < per_trajectory.size(); ++k) {
        const double est = k < shot_estimates.size() ? shot_estimates[k] : per_trajectory[k];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\r\n", k, per_trajectory[k], est);
        out += buf;
    }
    return out;
}

}  // namespace xtalk
