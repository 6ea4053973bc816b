#pragma once

#include "sdetaylor/eldiff.hpp"
#include "sdetaylor/oracle.hpp"
#include "sdetaylor/rational.hpp"
#include "sdetaylor/sde.hpp"
#include "sdetaylor/stree.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sdetaylor {

inline constexpr int kDefaultExpansionCap = 4;

/// One summand of the truncated expansion: a canonical tree, its cardinality
/// under the problem's calculus, the exact rational weight
/// alpha / (2^{s/2} rho!), the index-summed differential value at x0, and the
/// power of (t - t0) it multiplies.
struct ExpansionTerm {
    CanonicalSTree tree;
    long long alpha = 0;
    Rational weight;
    double value = 0.0; // sum over index assignments of F(tree)(x0)
    int power = 0;       // = tree order
};

/// The truncated expansion of E[f(X_t)] around t0 for one problem. Terms are
/// sorted by (power, encoding); the total is the polynomial evaluated at
/// t - t0, summed in that fixed order.
struct Expansion {
    int order = 0;
    double t0 = 0.0;
    std::vector<ExpansionTerm> terms;

    double total(double t) const;
    /// Coefficient of (t-t0)^power: sum of weight * value over that power.
    double coefficient(int power) const;
};

/// The Ito drift equivalent to a Stratonovich problem:
///   a~^i = a_^i + 1/2 sum_{k,l} b^{k,l} d_k b^{i,l},
/// each component shallow-simplified. Throws CalculusError on Ito input.
std::vector<Expr> modifiedDrift(const SdeSpec& spec);

/// The same problem rewritten in Ito form (drift replaced by modifiedDrift).
/// Ito input is returned unchanged.
SdeSpec toItoSpec(const SdeSpec& spec);

/// Truncated expansion of order n. For an Ito problem the sum runs over the
/// Ito tree classes with their alpha_I; for a Stratonovich problem over the
/// Stratonovich classes with alpha_S, evaluating the differentials with the
/// drift exactly as written in the problem. Throws CapExceeded above the cap.
Expansion expand(const SdeSpec& spec, int n, double t0, int hardCap = kDefaultExpansionCap);

/// Same sum taken over labelled trees with weight 1/(2^{s/2} rho!) instead of
/// canonical classes with cardinalities. The two routes must agree (the
/// cardinality is the number of labelled trees per class); this one exists
/// as an independent cross-check.
double expandLabelledTotal(const SdeSpec& spec, int n, double t0, double t,
                           int hardCap = kDefaultExpansionCap);

/// One factor of a d=m=1 elementary differential: which function (f, a or b)
/// and how many derivatives it carries.
struct SymbolicFactor {
    char function = 'f'; // 'f', 'a' or 'b'
    int derivOrder = 0;

    auto operator<=>(const SymbolicFactor&) const = default;
};

/// A term of the d=m=1 symbolic expansion: for one noise component every
/// index sum collapses, and F(t) is the plain product of one derivative
/// factor per node.
struct SymbolicTerm {
    std::string encoding;
    long long alpha = 0;
    Rational weight; // alpha / (2^{s/2} rho!)
    int power = 0;
    std::vector<SymbolicFactor> factors; // sorted; one entry per node

    std::string toText() const;
    std::string toLatex() const;
};

/// The symbolic d=m=1 expansion up to order n under the given calculus.
std::vector<SymbolicTerm> symbolicExpansion1d(Calculus calculus, int n,
                                              int hardCap = kDefaultExpansionCap);

/// Numeric value of a symbolic term's differential product for concrete
/// scalar f, a, b at x0 (weight not applied).
double evalSymbolicFactors(const std::vector<SymbolicFactor>& factors, const Expr& f,
                           const Expr& a, const Expr& b, double x0);

struct ConvergencePoint {
    double t = 0.0;
    double error = 0.0;
    double mcStderr = 0.0; // only for Monte Carlo references
};

struct ConvergenceResult {
    std::vector<ConvergencePoint> points;
    std::optional<double> slope;         // least-squares log-log fit
    bool statisticalFloor = false;       // MC noise dominated the model error
    double floorValue = 0.0;             // largest stderr when flagged
};

/// Reference curve for a convergence study.
struct Reference {
    enum class Kind { Oracle, MonteCarlo, Analytic };
    Kind kind = Kind::Oracle;
    /// Oracle: the generator series evaluated `oracleExtraOrders` beyond n.
    int oracleExtraOrders = 2;
    MCConfig mc;                              // MonteCarlo only
    std::function<double(double)> analytic;   // Analytic only; maps t to the exact value

    static Reference oracle(int extraOrders = 2);
    static Reference monteCarlo(MCConfig cfg);
    static Reference analyticFn(std::function<double(double)> fn);
};

/// Evaluates |expansion total - reference| over the grid (strictly decreasing
/// toward t0, at least 4 points) and fits the slope of log error against
/// log(t - t0). Points at the small end with error below 1e-13 are dropped
/// from the fit as float floor. Throws InsufficientGrid.
ConvergenceResult convergenceStudy(const SdeSpec& spec, int n, double t0,
                                   const std::vector<double>& tGrid, const Reference& reference,
                                   int hardCap = kDefaultExpansionCap);

} // namespace sdetaylor
