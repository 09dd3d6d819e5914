// numerics.hpp — Small quadrature and special-integral helpers shared across modules.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace xtalk {

// 16-node Gauss-Legendre rule on [-1, 1]; exact for polynomials up to degree 31,
// which makes it machine-exact for the at-most-half-period trig integrands that
// appear in per-segment overlap integrals.
struct GaussLegendre16 {
    static const std::vector<double>& nodes();
    static const std::vector<double>& weights();
};

template <typename F>
double gauss_legendre(F&& f, double a, double b) {
    const auto& x = GaussLegendre16::nodes();
    const auto& w = GaussLegendre16::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * f(mid + half * x[k]);
    return acc * half;
}

// Composite Simpson on [a, b] with n points (n made odd internally, n >= 3).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
    if (n < 3) n = 3;
    if (n % 2 == 0) ++n;
    const double h = (b - a) / (n - 1);
    double acc = f(a) + f(b);
    for (int k = 1; k < n - 1; ++k) acc += f(a + k * h) * ((k % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// ∫_{t0}^{t1} e^{i c t} dt, stable as c -> 0.
inline std::complex<double> cexp_integral(double c, double t0, double t1) {
    const double w = t1 - t0;
    const double m = 0.5 * (t0 + t1);
    const double x = 0.5 * c * w;
    double sinc;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    } else {
        sinc = std::sin(x) / x;
    }
    return w * sinc * std::exp(std::complex<double>(0.0, c * m));
}

// Run f(i) for i in [0, n) across a small thread pool. Results must be written
// to per-index slots; the aggregate is then independent of scheduling.
void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& f);

// Effective worker count: explicit > 0 wins, else XTALK_THREADS env, else hardware.
int resolve_threads(int requested);

}  // namespace xtalk
