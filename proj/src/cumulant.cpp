#include "xtalk/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "xtalk/numerics.hpp"

namespace xtalk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Merged interval walk over two piecewise-analytic traces.
template <typename F>
void for_merged_intervals(const ControlMatrixTrace& a, const ControlMatrixTrace& b, F&& f) {
    std::vector<double> cuts{0.0};
    for (const auto& s : a.segments) cuts.push_back(s.t1);
    for (const auto& s : b.segments) cuts.push_back(s.t1);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-18; }),
               cuts.end());
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double t0 = cuts[k], t1 = cuts[k + 1];
        if (t1 - t0 <= 0.0) continue;
        const double mid = 0.5 * (t0 + t1);
        while (ia + 1 < a.segments.size() && a.segments[ia].t1 <= mid) ++ia;
        while (ib + 1 < b.segments.size() && b.segments[ib].t1 <= mid) ++ib;
        f(t0, t1, a.segments[ia], b.segments[ib]);
    }
}

}  // namespace

const Eigen::Matrix3d* ChiTable::find(int i, int j) const {
    for (const auto& e : entries)
        if (e.i == i && e.j == j) return &e.chi;
    return nullptr;
}

Eigen::Matrix3d GammaTable::get(int i, int j) const {
    const auto it = entries.find({i, j});
    return it == entries.end() ? Eigen::Matrix3d::Zero() : it->second;
}

ChiTable chi_overlaps(const std::vector<ControlMatrixTrace>& traces, const DeviceModel& device) {
    ChiTable table;
    if (traces.empty()) return table;
    table.horizon = traces.front().horizon;
    for (const auto& tr : traces) {
        if (std::abs(tr.horizon - table.horizon) > 1e-15 * std::max(1.0, table.horizon))
            throw std::invalid_argument("chi_overlaps: traces have mismatched horizons");
    }
    for (const auto& edge : device.edges) {
        if (edge.coupling == 0.0) continue;
        if (edge.i >= static_cast<int>(traces.size()) || edge.j >= static_cast<int>(traces.size()))
            throw std::invalid_argument("chi_overlaps: missing trace for a coupled qubit");
        ChiTable::Entry entry;
        entry.i = edge.i;
        entry.j = edge.j;
        const auto& ta = traces[edge.i];
        const auto& tb = traces[edge.j];
        Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
        for_merged_intervals(ta, tb, [&](double t0, double t1, const TraceSegment& sa,
                                         const TraceSegment& sb) {
            for (int mu = 0; mu < 3; ++mu) {
                for (int nu = 0; nu < 3; ++nu) {
                    acc(mu, nu) += gauss_legendre(
                        [&](double t) { return sa.at(t)(2, mu) * sb.at(t)(2, nu); }, t0, t1);
                }
            }
        });
        entry.chi = edge.coupling * acc;
        table.entries.push_back(entry);
    }
    return table;
}

SuppressionVerdict check_suppression(const ChiTable& chi, const DeviceModel& device,
                                     double rel_tol, double floor) {
    SuppressionVerdict v;
    if (chi.entries.empty()) {
        v.note = "no couplings; suppression condition empty";
        return v;
    }
    double worst_scale = floor;
    for (const auto& e : chi.entries) {
        const double scale =
            std::max(std::abs(device.coupling_between(e.i, e.j)) * chi.horizon, floor);
        for (int mu = 0; mu < 3; ++mu) {
            for (int nu = 0; nu < 3; ++nu) {
                const double a = std::abs(e.chi(mu, nu));
                if (a > v.max_abs_chi) {
                    v.max_abs_chi = a;
                    v.worst_i = e.i;
                    v.worst_j = e.j;
                    v.worst_mu = mu;
                    v.worst_nu = nu;
                    worst_scale = scale;
                }
            }
        }
    }
    v.relative_residual = v.max_abs_chi / worst_scale;
    v.pass = v.relative_residual <= rel_tol;
    return v;
}

// ----------------------------- filter functions ------------------------------

Eigen::Matrix3cd filter_G_at(const ControlMatrixTrace& trace, double omega) {
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    const std::complex<double> I(0.0, 1.0);
    for (const auto& seg : trace.segments) {
        const std::complex<double> e0 = cexp_integral(omega, seg.t0, seg.t1);
        g += seg.A.cast<std::complex<double>>() * e0;
        if (seg.rate != 0.0) {
            // theta(t) = rate*(t1 - t) = a t + b with a = -rate, b = rate * t1
            const double a = -seg.rate;
            const double b = seg.rate * seg.t1;
            const std::complex<double> ep =
                std::exp(I * b) * cexp_integral(omega + a, seg.t0, seg.t1);
            const std::complex<double> em =
                std::exp(-I * b) * cexp_integral(omega - a, seg.t0, seg.t1);
            g += seg.B.cast<std::complex<double>>() * (0.5 * (ep + em));
            g += seg.C.cast<std::complex<double>>() * ((ep - em) / (2.0 * I));
        }
    }
    return g;
}

FilterTrace filter_G(const ControlMatrixTrace& trace, const std::vector<double>& omega) {
    FilterTrace out;
    out.qubit = trace.qubit;
    out.omega = omega;
    out.G.reserve(omega.size());
    for (double w : omega) out.G.push_back(filter_G_at(trace, w));
    return out;
}

// ----------------------------- Gamma overlaps --------------------------------

GammaTable gamma_overlaps(const std::vector<ControlMatrixTrace>& traces, const NoiseModel& noise,
                          double omega_max, int n_omega) {
    if (omega_max <= 0.0) throw std::invalid_argument("gamma_overlaps: omega_max must be > 0");
    if (n_omega < 3) n_omega = 3;
    if (n_omega % 2 == 0) ++n_omega;

    GammaTable table;
    table.omega_max = omega_max;
    table.n_omega = n_omega;
    if (noise.empty()) return table;

    std::set<int> needed;
    for (const auto& [key, spec] : noise.entries()) {
        needed.insert(std::get<0>(key));
        needed.insert(std::get<2>(key));
        double peak = 0.0;
        for (int k = 0; k <= 16; ++k)
            peak = std::max(peak, eval_psd(spec, omega_max * k / 16.0));
        if (eval_psd(spec, omega_max) > 1e-3 * std::max(peak, 1e-300))
            table.truncation_warning = true;
    }
    for (int q : needed) {
        if (q < 0 || q >= static_cast<int>(traces.size()))
            throw std::invalid_argument("gamma_overlaps: missing trace for noisy qubit " +
                                        std::to_string(q));
    }

    const double h = omega_max / (n_omega - 1);
    std::map<int, Eigen::Matrix3cd> g_at;  // per qubit, current omega
    for (int k = 0; k < n_omega; ++k) {
        const double w = k * h;
        const double simpson_w =
            (k == 0 || k == n_omega - 1) ? 1.0 : ((k % 2 == 1) ? 4.0 : 2.0);
        const double weight = simpson_w * h / 3.0 / kTwoPi;
        for (int q : needed) g_at[q] = filter_G_at(traces[q], w);
        for (const auto& [key, spec] : noise.entries()) {
            const auto [qi, mu, qj, de] = key;
            const double s = eval_psd(spec, w);
            if (s == 0.0) continue;
            const Eigen::Matrix3cd& gi = g_at[qi];
            const Eigen::Matrix3cd& gj = g_at[qj];
            // G(-w) = conj(G(w)) for the real-valued control matrix
            Eigen::Matrix3d contrib_ij;
            Eigen::Matrix3d contrib_ji;
            for (int nu = 0; nu < 3; ++nu) {
                for (int ga = 0; ga < 3; ++ga) {
                    contrib_ij(nu, ga) = (gi(mu, nu) * std::conj(gj(de, ga))).real();
                    contrib_ji(nu, ga) = (gj(de, nu) * std::conj(gi(mu, ga))).real();
                }
            }
            auto slot = [&table](int a, int b) -> Eigen::Matrix3d& {
                return table.entries.try_emplace({a, b}, Eigen::Matrix3d::Zero()).first->second;
            };
            slot(qi, qj) += weight * s * contrib_ij;
            if (std::tie(qi, mu) != std::tie(qj, de)) slot(qj, qi) += weight * s * contrib_ji;
        }
    }
    return table;
}

// ----------------------------- cumulant operators ----------------------------

Eigen::MatrixXcd first_cumulant(const ChiTable& chi, const PauliString& obs) {
    const int n = obs.n;
    const Eigen::Index dim = Eigen::Index(1) << n;
    Eigen::MatrixXcd c1 = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& e : chi.entries) {
        for (int mu = 0; mu < 3; ++mu) {
            const double si = obs.commutes_with_site(e.i, mu) ? 1.0 : -1.0;
            for (int nu = 0; nu < 3; ++nu) {
                const double x = e.chi(mu, nu);
                if (x == 0.0) continue;
                const double sj = obs.commutes_with_site(e.j, nu) ? 1.0 : -1.0;
                // sigma sigma - O^{-1} sigma sigma O = (1 - si*sj) sigma sigma
                const double factor = 1.0 - si * sj;
                if (factor == 0.0) continue;
                c1 += (x * factor) * (site_pauli(n, e.i, static_cast<Axis>(mu)) *
                                      site_pauli(n, e.j, static_cast<Axis>(nu)));
            }
        }
    }
    return c1;
}

Eigen::MatrixXcd second_cumulant(const GammaTable& gamma, const PauliString& obs) {
    const int n = obs.n;
    const Eigen::Index dim = Eigen::Index(1) << n;
    Eigen::MatrixXcd c2 = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [pair, g] : gamma.entries) {
        const auto [qi, qj] = pair;
        for (int nu = 0; nu < 3; ++nu) {
            const double si = obs.commutes_with_site(qi, nu) ? 1.0 : -1.0;
            for (int ga = 0; ga < 3; ++ga) {
                const double x = g(nu, ga);
                if (x == 0.0) continue;
                const double sj = obs.commutes_with_site(qj, ga) ? 1.0 : -1.0;
                // A = (1 - si)(1 - sj) sigma^nu_i sigma^ga_j (scalar conjugation signs)
                const double factor = (1.0 - si) * (1.0 - sj);
                if (factor == 0.0) continue;
                c2 += (x * factor) * (site_pauli(n, qi, static_cast<Axis>(nu)) *
                                      site_pauli(n, qj, static_cast<Axis>(ga)));
            }
        }
    }
    return c2;
}

// ----------------------------- predictions -----------------------------------

Eigen::MatrixXcd schedule_propagator(const PulseSchedule& schedule, int n_qubits) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
        const auto it = schedule.per_qubit.find(q);
        Eigen::Matrix2cd uq = Eigen::Matrix2cd::Identity();
        if (it != schedule.per_qubit.end())
            uq = control_propagator(it->second, 0.0, schedule.horizon);
        u = kron(u, uq);
    }
    return u;
}

namespace {

struct PredictionContext {
    int n_qubits = 0;
    ChiTable chi;
    GammaTable gamma;
    Eigen::MatrixXcd rho_c;
    bool truncation_warning = false;
};

PredictionContext make_context(const Eigen::MatrixXcd& rho0, const PulseSchedule& schedule,
                               const DeviceModel& device, const NoiseModel& noise,
                               const QuadratureParams& quad) {
    validate_device(device);
    validate_schedule(schedule);
    if (device.n_qubits > quad.qubit_cap)
        throw std::invalid_argument("prediction: qubit count exceeds the dense-operator cap");
    PredictionContext ctx;
    ctx.n_qubits = device.n_qubits;

    std::vector<ControlMatrixTrace> traces;
    traces.reserve(device.n_qubits);
    for (int q = 0; q < device.n_qubits; ++q) {
        const auto it = schedule.per_qubit.find(q);
        ControlField field;
        if (it != schedule.per_qubit.end())
            field = it->second;
        else
            field.segments.push_back({schedule.horizon, 0.0, 0.0});
        auto trace = control_matrix(field, quad.samples_per_segment);
        trace.qubit = q;
        traces.push_back(std::move(trace));
    }

    ctx.chi = chi_overlaps(traces, device);
    double omega_max = quad.omega_max;
    if (omega_max <= 0.0) {
        const double feature = noise.max_feature_frequency();
        omega_max = std::max(20.0 * feature, 400.0 / schedule.horizon);
    }
    ctx.gamma = gamma_overlaps(traces, noise, omega_max, quad.n_omega);
    ctx.truncation_warning = ctx.gamma.truncation_warning;

    const Eigen::MatrixXcd u = schedule_propagator(schedule, device.n_qubits);
    ctx.rho_c = u * rho0 * u.adjoint();
    return ctx;
}

std::complex<double> single_term(const PredictionContext& ctx, const PauliString& obs,
                                 const Eigen::MatrixXcd& obs_matrix) {
    const Eigen::MatrixXcd c1 = first_cumulant(ctx.chi, obs);
    const Eigen::MatrixXcd c2 = second_cumulant(ctx.gamma, obs);
    const std::complex<double> mi(0.0, -1.0);
    const Eigen::MatrixXcd generator = mi * c1 - c2;
    const Eigen::MatrixXcd propagated = generator.exp() * ctx.rho_c * obs_matrix;
    return propagated.trace();
}

}  // namespace

PredictionResult predict_expectation(const Eigen::MatrixXcd& rho0, const PulseSchedule& schedule,
                                     const DeviceModel& device, const NoiseModel& noise,
                                     const PauliString& obs, const QuadratureParams& quad) {
    const PredictionContext ctx = make_context(rho0, schedule, device, noise, quad);
    const std::complex<double> value = single_term(ctx, obs, obs.matrix());
    PredictionResult out;
    out.value = value.real();
    out.imag_residual = std::abs(value.imag());
    out.warning = out.imag_residual > 1e-6;
    out.truncation_warning = ctx.truncation_warning;
    return out;
}

PredictionResult predict_fidelity(const Eigen::VectorXcd& psi0, const PulseSchedule& schedule,
                                  const DeviceModel& device, const NoiseModel& noise,
                                  const QuadratureParams& quad) {
    const Eigen::Index dim = psi0.size();
    int n = 0;
    while ((Eigen::Index(1) << n) < dim) ++n;
    if ((Eigen::Index(1) << n) != dim)
        throw std::invalid_argument("predict_fidelity: state dimension must be a power of two");
    if (std::abs(psi0.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("predict_fidelity: initial state must be normalized");
    if (n != device.n_qubits)
        throw std::invalid_argument("predict_fidelity: state size does not match the device");

    const Eigen::MatrixXcd rho0 = psi0 * psi0.adjoint();
    const PredictionContext ctx = make_context(rho0, schedule, device, noise, quad);

    std::complex<double> total = 0.0;
    const std::uint64_t n_strings = 1ULL << (2 * n);
    const double norm = 1.0 / static_cast<double>(dim);
    for (std::uint64_t idx = 0; idx < n_strings; ++idx) {
        const PauliString p = PauliString::from_flat_index(n, idx);
        const Eigen::MatrixXcd pm = p.matrix();
        const std::complex<double> coeff = (rho0 * pm).trace() * norm;
        if (std::abs(coeff) < 1e-14) continue;
        total += coeff * single_term(ctx, p, pm);
    }
    PredictionResult out;
    out.value = total.real();
    out.imag_residual = std::abs(total.imag());
    out.warning = out.imag_residual > 1e-6;
    out.truncation_warning = ctx.truncation_warning;
    return out;
}

// ----------------------------- CSV exports -----------------------------------

namespace {
const char* kAxisNames[3] = {"x", "y", "z"};
}

std::string chi_to_csv(const ChiTable& chi) {
    std::string out = "i,j,mu,nu,chi\r\n";
    char buf[128];
    for (const auto& e : chi.entries) {
        for (int mu = 0; mu < 3; ++mu)
            for (int nu = 0; nu < 3; ++nu) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%s,%s,%.17g\r\n", e.i, e.j, kAxisNames[mu],
                              kAxisNames[nu], e.chi(mu, nu));
                out += buf;
            }
    }
    return out;
}

std::string gamma_to_csv(const GammaTable& gamma) {
    std::string out = "i,j,nu,gamma_axis,gamma\r\n";
    char buf[128];
    for (const auto& [pair, g] : gamma.entries) {
        for (int nu = 0; nu < 3; ++nu)
            for (int ga = 0; ga < 3; ++ga) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%s,%s,%.17g\r\n", pair.first, pair.second,
                              kAxisNames[nu], kAxisNames[ga], g(nu, ga));
                out += buf;
            }
    }
    return out;
}

std::string filter_to_csv(const FilterTrace& trace) {
    std::string out = "qubit,omega,mu,nu,re,im\r\n";
    char buf[160];
    for (std::size_t k = 0; k < trace.omega.size(); ++k) {
        for (int mu = 0; mu < 3; ++mu)
            for (int nu = 0; nu < 3; ++nu) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%s,%.17g,%.17g\r\n", trace.qubit,
                              trace.omega[k], kAxisNames[mu], kAxisNames[nu],
                              trace.G[k](mu, nu).real(), trace.G[k](mu, nu).imag());
                out += buf;
            }
    }
    return out;
}

}  // namespace xtalk
