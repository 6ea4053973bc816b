#include "sdetaylor/expansion.hpp"

#include "sdetaylor/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdetaylor {

namespace {

double powInt(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace

double Expansion::total(double t) const {
    double dt = t - t0;
    double sum = 0.0;
    for (const auto& term : terms)
        sum += term.weight.toDouble() * term.value * powInt(dt, term.power);
    return sum;
}

double Expansion::coefficient(int power) const {
    double c = 0.0;
    for (const auto& term : terms)
        if (term.power == power) c += term.weight.toDouble() * term.value;
    return c;
}

std::vector<Expr> modifiedDrift(const SdeSpec& spec) {
    if (spec.calculus != Calculus::Stratonovich)
        throw CalculusError("modifiedDrift is defined for Stratonovich problems");
    std::vector<Expr> out;
    out.reserve(static_cast<std::size_t>(spec.d));
    for (int i = 1; i <= spec.d; ++i) {
        std::vector<Expr> terms;
        terms.push_back(spec.drift[static_cast<std::size_t>(i - 1)]);
        for (int k = 1; k <= spec.d; ++k) {
            for (int l = 1; l <= spec.m; ++l) {
                terms.push_back(Expr::product(
                    {Expr::constant(0.5),
                     spec.diffusion[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(l - 1)],
                     diff(spec.diffusion[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(l - 1)],
                          k)}));
            }
        }
        out.push_back(simplify(Expr::sum(std::move(terms))));
    }
    return out;
}

SdeSpec toItoSpec(const SdeSpec& spec) {
    if (spec.calculus == Calculus::Ito) return spec;
    SdeSpec ito = spec;
    ito.drift = modifiedDrift(spec);
    ito.calculus = Calculus::Ito;
    return ito;
}

Expansion expand(const SdeSpec& spec, int n, double t0, int hardCap) {
    if (n < 0) throw DimensionError("order must be >= 0");
    if (n > hardCap) throw CapExceeded(n, hardCap);
    spec.validate();

    Expansion result;
    result.order = n;
    result.t0 = t0;
    // enumerateTrees sorts by (order, encoding), which fixes the summation order
    for (auto& tree : enumerateTrees(spec.calculus, n, std::max(n, kDefaultTreeOrderCap))) {
        ExpansionTerm term;
        term.alpha = spec.calculus == Calculus::Ito ? tree.cardI : tree.cardS;
        term.power = tree.orderInt();
        term.weight = Rational(term.alpha,
                               powll(2, tree.nStoch / 2) * factorial(term.power));
        term.value = sumOverIndices(tree, spec, spec.x0);
        term.tree = std::move(tree);
        result.terms.push_back(std::move(term));
    }
    return result;
}

double expandLabelledTotal(const SdeSpec& spec, int n, double t0, double t, int hardCap) {
    if (n < 0) throw DimensionError("order must be >= 0");
    if (n > hardCap) throw CapExceeded(n, hardCap);
    spec.validate();
    double dt = t - t0;
    double totalValue = 0.0;
    forEachLabelledTree(spec.calculus, n, [&](const LabelledSTree& tree) {
        int power = tree.numDeterministic() + tree.numStochastic() / 2;
        Rational weight(1, powll(2, tree.numStochastic() / 2) * factorial(power));
        totalValue += weight.toDouble() * sumOverIndices(tree, spec, spec.x0) * powInt(dt, power);
    });
    return totalValue;
}

// ---------------------------------------------------------------------------
// Symbolic d=m=1 form

std::vector<SymbolicTerm> symbolicExpansion1d(Calculus calculus, int n, int hardCap) {
    if (n > hardCap) throw CapExceeded(n, hardCap);
    std::vector<SymbolicTerm> out;
    for (const auto& tree : enumerateTrees(calculus, n, std::max(n, kDefaultTreeOrderCap))) {
        SymbolicTerm term;
        term.encoding = tree.encoding;
        term.alpha = calculus == Calculus::Ito ? tree.cardI : tree.cardS;
        term.power = tree.orderInt();
        term.weight = Rational(term.alpha, powll(2, tree.nStoch / 2) * factorial(term.power));
        const LabelledSTree& rep = tree.representative;
        for (int node = 1; node <= rep.size(); ++node) {
            char fn = 'f';
            switch (rep.colorOf(node).kind) {
            case NodeKind::Root: fn = 'f'; break;
            case NodeKind::Deterministic: fn = 'a'; break;
            case NodeKind::Stochastic: fn = 'b'; break;
            }
            term.factors.push_back(
                SymbolicFactor{fn, static_cast<int>(rep.childrenOf(node).size())});
        }
        std::sort(term.factors.begin(), term.factors.end());
        out.push_back(std::move(term));
    }
    return out;
}

namespace {

std::string factorName(const SymbolicFactor& f, bool latex) {
    std::string name(1, f.function);
    if (f.derivOrder == 0) return name;
    if (f.derivOrder <= 4 && !latex) return name + std::string(static_cast<std::size_t>(f.derivOrder), '\'');
    if (latex) return name + "^{(" + std::to_string(f.derivOrder) + ")}";
    return name + "^(" + std::to_string(f.derivOrder) + ")";
}

std::string renderFactors(const std::vector<SymbolicFactor>& factors, bool latex) {
    // group equal factors into powers
    std::string out;
    std::size_t i = 0;
    bool first = true;
    while (i < factors.size()) {
        std::size_t j = i;
        while (j < factors.size() && factors[j] == factors[i]) ++j;
        if (!first) out += latex ? " \\, " : "*";
        out += factorName(factors[i], latex);
        std::size_t count = j - i;
        if (count > 1) out += (latex ? "^{" + std::to_string(count) + "}" : "^" + std::to_string(count));
        first = false;
        i = j;
    }
    return out;
}

} // namespace

std::string SymbolicTerm::toText() const {
    std::ostringstream out;
    out << "(" << weight.toString() << ")*" << renderFactors(factors, false);
    if (power > 0) out << "*dt" << (power > 1 ? "^" + std::to_string(power) : "");
    return out.str();
}

std::string SymbolicTerm::toLatex() const {
    std::ostringstream out;
    if (weight.den() == 1) {
        if (weight.num() != 1) out << weight.num() << " \\, ";
    } else {
        out << "\\tfrac{" << weight.num() << "}{" << weight.den() << "} \\, ";
    }
    out << renderFactors(factors, true);
    if (power > 0) {
        out << " \\, (t-t_0)";
        if (power > 1) out << "^{" << power << "}";
    }
    return out.str();
}

double evalSymbolicFactors(const std::vector<SymbolicFactor>& factors, const Expr& f,
                           const Expr& a, const Expr& b, double x0) {
    double point[1] = {x0};
    double product = 1.0;
    for (const auto& factor : factors) {
        Expr g = factor.function == 'f' ? f : (factor.function == 'a' ? a : b);
        for (int i = 0; i < factor.derivOrder; ++i) g = diff(g, 1);
        product *= evalAt(g, point);
    }
    return product;
}

// ---------------------------------------------------------------------------
// Convergence study

Reference Reference::oracle(int extraOrders) {
    Reference r;
    r.kind = Kind::Oracle;
    r.oracleExtraOrders = extraOrders;
    return r;
}

Reference Reference::monteCarlo(MCConfig cfg) {
    Reference r;
    r.kind = Kind::MonteCarlo;
    r.mc = cfg;
    return r;
}

Reference Reference::analyticFn(std::function<double(double)> fn) {
    Reference r;
    r.kind = Kind::Analytic;
    r.analytic = std::move(fn);
    return r;
}

ConvergenceResult convergenceStudy(const SdeSpec& spec, int n, double t0,
                                   const std::vector<double>& tGrid, const Reference& reference,
                                   int hardCap) {
    if (tGrid.size() < 4)
        throw InsufficientGrid("convergence study needs at least 4 grid points");
    for (std::size_t i = 0; i + 1 < tGrid.size(); ++i)
        if (!(tGrid[i] > tGrid[i + 1]))
            throw InsufficientGrid("grid must be strictly decreasing toward t0");
    if (!(tGrid.back() > t0))
        throw InsufficientGrid("grid points must lie above t0");

    Expansion expansion = expand(spec, n, t0, hardCap);

    // Oracle reference: the generator series carried a few orders further.
    std::vector<double> oracleCoeffs;
    if (reference.kind == Reference::Kind::Oracle) {
        SdeSpec ito = toItoSpec(spec);
        int top = n + reference.oracleExtraOrders;
        for (int i = 0; i <= top; ++i)
            oracleCoeffs.push_back(bruteForceCoefficient(i, ito, top));
    }

    ConvergenceResult result;
    for (std::size_t i = 0; i < tGrid.size(); ++i) {
        double t = tGrid[i];
        double model = expansion.total(t);
        ConvergencePoint point;
        point.t = t;
        double ref = 0.0;
        switch (reference.kind) {
        case Reference::Kind::Oracle: {
            double dt = t - t0;
            double acc = 0.0;
            for (std::size_t k = 0; k < oracleCoeffs.size(); ++k)
                acc += oracleCoeffs[k] * powInt(dt, static_cast<int>(k));
            ref = acc;
            break;
        }
        case Reference::Kind::MonteCarlo: {
            MCConfig cfg = reference.mc;
            cfg.seed = reference.mc.seed + i; // independent estimates per grid point
            McResult mc = mcEstimate(spec, t0, t, cfg);
            ref = mc.mean;
            point.mcStderr = mc.stderr_;
            break;
        }
        case Reference::Kind::Analytic:
            ref = reference.analytic(t);
            break;
        }
        point.error = std::abs(model - ref);
        result.points.push_back(point);
    }

    if (reference.kind == Reference::Kind::MonteCarlo) {
        double maxStderr = 0.0;
        bool floored = false;
        for (const auto& p : result.points) {
            maxStderr = std::max(maxStderr, p.mcStderr);
            if (p.mcStderr >= p.error) floored = true;
        }
        if (floored) {
            result.statisticalFloor = true;
            result.floorValue = maxStderr;
            return result;
        }
    }

    // Fit on log error vs log(t - t0); drop float-floor points from the small end.
    std::vector<std::pair<double, double>> fitPoints;
    for (const auto& p : result.points) fitPoints.emplace_back(p.t - t0, p.error);
    while (!fitPoints.empty() && fitPoints.back().second < 1e-13) fitPoints.pop_back();
    if (fitPoints.size() < 2) return result; // nothing to fit: all at float floor

    double sx = 0.0, sy = 0.0;
    for (const auto& [dt, err] : fitPoints) {
        sx += std::log(dt);
        sy += std::log(err);
    }
    double mx = sx / static_cast<double>(fitPoints.size());
    double my = sy / static_cast<double>(fitPoints.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [dt, err] : fitPoints) {
        double dx = std::log(dt) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(err) - my);
    }
    if (sxx > 0.0) result.slope = sxy / sxx;
    return result;
}

} // namespace sdetaylor
