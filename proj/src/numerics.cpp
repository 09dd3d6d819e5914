#include "xtalk/numerics.hpp"

#include <algorithm>
#include <cstdlib>

namespace xtalk {

namespace {

// Abscissas/weights for n = 16 (symmetric halves spelled out in full).
const double kNodes16[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
const double kWeights16[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

}  // namespace

const std::vector<double>& GaussLegendre16::nodes() {
    static const std::vector<double> v(kNodes16, kNodes16 + 16);
    return v;
}

const std::vector<double>& GaussLegendre16::weights() {
    static const std::vector<double> v(kWeights16, kWeights16 + 16);
    return v;
}

void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& f) {
    if (n == 0) return;
    const int workers = std::max(1, std::min<int>(n_threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = static_cast<std::size_t>(w); i < n;
                 i += static_cast<std::size_t>(workers))
                f(i);
        });
    }
    for (auto& t : pool) t.join();
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("XTALK_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace xtalk
