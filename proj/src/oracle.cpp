#include "sdetaylor/oracle.hpp"

#include "sdetaylor/errors.hpp"
#include "sdetaylor/expansion.hpp"
#include "sdetaylor/rational.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace sdetaylor {

Expr applyL0(const Expr& f, const SdeSpec& spec) {
    if (spec.calculus != Calculus::Ito)
        throw CalculusError("applyL0 requires an Ito-form problem; convert the drift first");
    std::vector<Expr> terms;
    for (int k = 1; k <= spec.d; ++k)
        terms.push_back(Expr::product({spec.drift[static_cast<std::size_t>(k - 1)], diff(f, k)}));
    for (int k = 1; k <= spec.d; ++k) {
        for (int l = 1; l <= spec.d; ++l) {
            Expr second = diff(diff(f, k), l);
            if (second.isZero()) continue;
            for (int j = 1; j <= spec.m; ++j) {
                terms.push_back(Expr::product(
                    {Expr::constant(0.5),
                     spec.diffusion[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)],
                     spec.diffusion[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(j - 1)],
                     second}));
            }
        }
    }
    return Expr::sum(std::move(terms));
}

Expr applyLj(const Expr& f, const SdeSpec& spec, int j) {
    if (j < 1 || j > spec.m)
        throw IndexError("L^j: j = " + std::to_string(j) + " outside 1.." + std::to_string(spec.m));
    std::vector<Expr> terms;
    for (int k = 1; k <= spec.d; ++k)
        terms.push_back(Expr::product(
            {spec.diffusion[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)],
             diff(f, k)}));
    return Expr::sum(std::move(terms));
}

double bruteForceCoefficient(int n, const SdeSpec& spec, int cap) {
    if (n < 0) throw DimensionError("order must be >= 0");
    if (n > cap) throw CapExceeded(n, cap);
    if (spec.calculus != Calculus::Ito)
        throw CalculusError("bruteForceCoefficient requires an Ito-form problem");
    Expr g = spec.functional;
    for (int i = 0; i < n; ++i) g = applyL0(g, spec);
    double value = evalAtCached(g, spec.x0);
    return value / static_cast<double>(factorial(n));
}

// ---------------------------------------------------------------------------
// Counter-based random stream

namespace {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t counterHash(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                 std::uint64_t component) {
    std::uint64_t z = splitmix64(seed);
    z = splitmix64(z ^ path);
    z = splitmix64(z ^ step);
    z = splitmix64(z ^ component);
    return z;
}

// Box–Muller from two counter uniforms; one Gaussian per (path, step, j).
inline double counterGaussian(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                              std::uint64_t j) {
    double u1 = static_cast<double>((counterHash(seed, path, step, 2 * j) >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(counterHash(seed, path, step, 2 * j + 1) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fixed-shape pairwise reduction, independent of thread count.
double pairwiseSum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwiseSum(data, half) + pairwiseSum(data + half, n - half);
}

constexpr double kBlowupThreshold = 1e12;

} // namespace

double counterUniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                      std::uint64_t component) {
    return static_cast<double>((counterHash(seed, path, step, component) >> 11) + 1) * 0x1.0p-53;
}

McResult mcEstimate(const SdeSpec& spec, double t0, double t, const MCConfig& cfg) {
    if (!(t > t0)) throw DimensionError("mcEstimate requires t > t0");
    if (cfg.paths < 1 || cfg.steps < 1)
        throw DimensionError("mcEstimate requires paths >= 1 and steps >= 1");

    SdeSpec ito = spec.calculus == Calculus::Ito ? spec : toItoSpec(spec);
    const double h = (t - t0) / cfg.steps;
    const double sqrtH = std::sqrt(h);
    const std::size_t d = static_cast<std::size_t>(ito.d);
    const std::size_t m = static_cast<std::size_t>(ito.m);

    std::vector<double> values(static_cast<std::size_t>(cfg.paths));

    // First failing path wins, by path index, independent of scheduling.
    std::atomic<long long> failedPath{-1};
    std::mutex failureMutex;
    std::exception_ptr failure;

    auto recordFailure = [&](long long path, std::exception_ptr e) {
        long long current = failedPath.load();
        while ((current == -1 || path < current) &&
               !failedPath.compare_exchange_weak(current, path)) {
        }
        if (failedPath.load() == path) {
            std::lock_guard<std::mutex> lock(failureMutex);
            failure = std::move(e);
        }
    };

    auto runChunk = [&](long long begin, long long end) {
        std::vector<double> x(d), xNew(d), dw(m);
        for (long long p = begin; p < end; ++p) {
            long long failed = failedPath.load(std::memory_order_relaxed);
            if (failed != -1 && failed < p) return; // an earlier path's report wins
            try {
                for (std::size_t i = 0; i < d; ++i) x[i] = ito.x0[i];
                for (int s = 0; s < cfg.steps; ++s) {
                    for (std::size_t j = 0; j < m; ++j)
                        dw[j] = sqrtH * counterGaussian(cfg.seed, static_cast<std::uint64_t>(p),
                                                        static_cast<std::uint64_t>(s), j);
                    for (std::size_t i = 0; i < d; ++i) {
                        double v = x[i] + evalAt(ito.drift[i], x) * h;
                        for (std::size_t j = 0; j < m; ++j)
                            v += evalAt(ito.diffusion[i][j], x) * dw[j];
                        xNew[i] = v;
                    }
                    x.swap(xNew);
                    for (std::size_t i = 0; i < d; ++i)
                        if (!(std::abs(x[i]) <= kBlowupThreshold)) throw NumericalBlowup(p);
                }
                values[static_cast<std::size_t>(p)] = evalAt(ito.functional, x);
            } catch (...) {
                recordFailure(p, std::current_exception());
            }
        }
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<long long>(threads, cfg.paths));

    if (threads == 1) {
        runChunk(0, cfg.paths);
    } else {
        std::vector<std::thread> pool;
        long long chunk = (cfg.paths + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            long long begin = w * chunk;
            long long end = std::min<long long>(begin + chunk, cfg.paths);
            if (begin >= end) break;
            pool.emplace_back(runChunk, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    if (failedPath.load() != -1) {
        std::lock_guard<std::mutex> lock(failureMutex);
        std::rethrow_exception(failure);
    }

    double n = static_cast<double>(cfg.paths);
    double mean = pairwiseSum(values.data(), values.size()) / n;
    double stderr_ = 0.0;
    if (cfg.paths > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            double dev = values[i] - mean;
            sq[i] = dev * dev;
        }
        double variance = pairwiseSum(sq.data(), sq.size()) / (n - 1.0);
        stderr_ = std::sqrt(variance / n);
    }
    return McResult{mean, stderr_};
}

} // namespace sdetaylor
