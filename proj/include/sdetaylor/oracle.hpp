#pragma once

#include "sdetaylor/expr.hpp"
#include "sdetaylor/sde.hpp"

#include <cstdint>

namespace sdetaylor {

inline constexpr int kDefaultGeneratorCap = 4;

/// The diffusion operator applied once:
///   L0 f = sum_k a^k d_k f + 1/2 sum_{k,l,j} b^{k,j} b^{l,j} d2_{kl} f.
/// Requires an Ito-form problem (convert Stratonovich drift first);
/// throws CalculusError otherwise.
Expr applyL0(const Expr& f, const SdeSpec& spec);

/// L^j f = sum_k b^{k,j} d_k f. Throws IndexError for j outside 1..m.
Expr applyLj(const Expr& f, const SdeSpec& spec, int j);

/// evalAt((L0)^n f, x0) / n! — the exact coefficient of (t-t0)^n in the
/// expectation series, computed without any tree machinery. This is the
/// independent ground truth the tree expansion is validated against.
/// Throws CapExceeded above the cap and CalculusError for Stratonovich input.
double bruteForceCoefficient(int n, const SdeSpec& spec, int cap = kDefaultGeneratorCap);

enum class McScheme { EulerMaruyama };

struct MCConfig {
    long long paths = 10000;
    int steps = 100;
    std::uint64_t seed = 0;
    McScheme scheme = McScheme::EulerMaruyama;
    int threads = 0; // 0 = hardware concurrency; the result is identical for any value
};

struct McResult {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Euler–Maruyama estimate of E[f(X_t)] started at (t0, x0). Stratonovich
/// problems are converted to Ito form first. Gaussian increments come from a
/// counter-based stream keyed by (seed, path, step, component), so path i is
/// reproducible bit-for-bit regardless of scheduling or thread count; the
/// final reduction is a fixed pairwise tree over path order. Throws
/// NumericalBlowup (with the smallest offending path index) when any state
/// component exceeds 1e12 in magnitude.
McResult mcEstimate(const SdeSpec& spec, double t0, double t, const MCConfig& cfg);

/// The raw uniform stream underlying the Gaussian increments, exposed for
/// tests. Value in (0, 1].
double counterUniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                      std::uint64_t component);

} // namespace sdetaylor
