#pragma once

#include "sdetaylor/expr.hpp"
#include "sdetaylor/sde.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testutil {

/// |a-b| <= tol * max(1, |a|, |b|): relative at normal scales with an
/// absolute floor at scale one, which is the natural reading of "relative
/// tolerance" for quantities that may cancel to zero.
inline bool closeRel(double a, double b, double tol) {
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tol * scale;
}

/// Random polynomial of total degree <= maxDegree in d variables with small
/// integer-ish coefficients. Always finite, C_P growth for free.
inline sdetaylor::Expr randomPolynomial(std::mt19937_64& rng, int d, int maxDegree) {
    using sdetaylor::Expr;
    std::uniform_int_distribution<int> coeffPick(-4, 4);
    std::uniform_int_distribution<int> varPick(1, d);
    std::uniform_int_distribution<int> degPick(0, maxDegree);
    std::uniform_int_distribution<int> termCount(1, 4);
    std::vector<Expr> terms;
    int nTerms = termCount(rng);
    for (int t = 0; t < nTerms; ++t) {
        double c = coeffPick(rng) * 0.25;
        if (c == 0.0) c = 1.0;
        std::vector<Expr> factors{Expr::constant(c)};
        int degree = degPick(rng);
        for (int i = 0; i < degree; ++i) factors.push_back(Expr::var(varPick(rng)));
        terms.push_back(Expr::product(std::move(factors)));
    }
    return Expr::sum(std::move(terms));
}

/// Random SDE problem with polynomial coefficients of degree <= 2,
/// d <= maxD, m <= maxM.
inline sdetaylor::SdeSpec randomSpec(std::mt19937_64& rng, int maxD, int maxM,
                                     sdetaylor::Calculus calculus, int functionalDegree = 2) {
    using namespace sdetaylor;
    std::uniform_int_distribution<int> dPick(1, maxD);
    std::uniform_int_distribution<int> mPick(1, maxM);
    std::uniform_real_distribution<double> x0Pick(-1.0, 1.0);
    SdeSpec spec;
    spec.d = dPick(rng);
    spec.m = mPick(rng);
    spec.calculus = calculus;
    for (int i = 0; i < spec.d; ++i) spec.drift.push_back(randomPolynomial(rng, spec.d, 2));
    spec.diffusion.assign(static_cast<std::size_t>(spec.d), {});
    for (int i = 0; i < spec.d; ++i)
        for (int j = 0; j < spec.m; ++j)
            spec.diffusion[static_cast<std::size_t>(i)].push_back(
                randomPolynomial(rng, spec.d, 2));
    spec.functional = randomPolynomial(rng, spec.d, functionalDegree);
    for (int i = 0; i < spec.d; ++i) spec.x0.push_back(x0Pick(rng));
    return spec;
}

inline std::vector<double> randomPoint(std::mt19937_64& rng, int d, double halfWidth = 1.0) {
    std::uniform_real_distribution<double> pick(-halfWidth, halfWidth);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = pick(rng);
    return x;
}

} // namespace testutil
