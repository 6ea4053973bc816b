#include "sdetaylor/expr.hpp"

#include "sdetaylor/errors.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sdetaylor;

namespace {

// Independent reference interpreter over the same node grammar. Kept
// deliberately naive and separate from the library's evaluator. Tracks the
// largest intermediate magnitude so callers can reject samples where
// path-dependent rounding would dominate the comparison.
double referenceEval(const Expr& e, const std::vector<double>& x, double& maxAbs) {
    double result = 0.0;
    switch (e.kind()) {
    case ExprKind::Constant:
        result = e.constantValue();
        break;
    case ExprKind::Var:
        result = x.at(static_cast<std::size_t>(e.varIndex() - 1));
        break;
    case ExprKind::Sum: {
        double s = 0.0;
        for (const auto& k : e.operands()) s += referenceEval(k, x, maxAbs);
        result = s;
        break;
    }
    case ExprKind::Product: {
        double p = 1.0;
        for (const auto& k : e.operands()) p *= referenceEval(k, x, maxAbs);
        result = p;
        break;
    }
    case ExprKind::Power:
        result = std::pow(referenceEval(e.operands()[0], x, maxAbs), e.exponent());
        break;
    case ExprKind::Unary: {
        double a = referenceEval(e.operands()[0], x, maxAbs);
        switch (e.unaryFunc()) {
        case UnaryFunc::Exp: result = std::exp(a); break;
        case UnaryFunc::Log: result = std::log(a); break;
        case UnaryFunc::Sin: result = std::sin(a); break;
        case UnaryFunc::Cos: result = std::cos(a); break;
        case UnaryFunc::Sqrt: result = std::sqrt(a); break;
        }
        break;
    }
    }
    maxAbs = std::max(maxAbs, std::abs(result));
    return result;
}

// Random expression of bounded node count; log/sqrt arguments are shifted
// squares so every sample point is in-domain.
Expr randomExpr(std::mt19937_64& rng, int d, int budget) {
    std::uniform_int_distribution<int> kindPick(0, 5);
    std::uniform_real_distribution<double> constPick(-2.0, 2.0);
    std::uniform_int_distribution<int> varPick(1, d);
    std::uniform_int_distribution<int> expPick(-3, 3);
    std::uniform_int_distribution<int> arity(2, 3);
    if (budget <= 1) {
        if (kindPick(rng) < 3) return Expr::constant(constPick(rng));
        return Expr::var(varPick(rng));
    }
    switch (kindPick(rng)) {
    case 0: {
        int n = arity(rng);
        std::vector<Expr> kids;
        for (int i = 0; i < n; ++i) kids.push_back(randomExpr(rng, d, budget / n));
        return Expr::sum(std::move(kids));
    }
    case 1: {
        int n = arity(rng);
        std::vector<Expr> kids;
        for (int i = 0; i < n; ++i) kids.push_back(randomExpr(rng, d, budget / n));
        return Expr::product(std::move(kids));
    }
    case 2: {
        int e = expPick(rng);
        if (e == 0) e = 2;
        return Expr::power(randomExpr(rng, d, budget - 1), e);
    }
    case 3:
        return Expr::unary(UnaryFunc::Exp, randomExpr(rng, d, budget - 1));
    case 4: {
        std::uniform_int_distribution<int> trig(0, 1);
        return Expr::unary(trig(rng) ? UnaryFunc::Sin : UnaryFunc::Cos,
                           randomExpr(rng, d, budget - 1));
    }
    default: {
        Expr inner = randomExpr(rng, d, budget - 2);
        Expr positive = Expr::sum({Expr::product({inner, inner}), Expr::constant(0.5)});
        std::uniform_int_distribution<int> pick(0, 1);
        return Expr::unary(pick(rng) ? UnaryFunc::Log : UnaryFunc::Sqrt, positive);
    }
    }
}

} // namespace

TEST_CASE("parse builds the expected structure") {
    Expr e = parseExpr("0.5*x1^2 + exp(x2)", 2);
    REQUIRE(e.kind() == ExprKind::Sum);
    REQUIRE(e.operands().size() == 2);
    const Expr& first = e.operands()[0];
    CHECK(first.kind() == ExprKind::Product);
    CHECK(first.operands()[0].constantValue() == 0.5);
    CHECK(first.operands()[1].kind() == ExprKind::Power);
    CHECK(first.operands()[1].exponent() == 2);
    const Expr& second = e.operands()[1];
    CHECK(second.kind() == ExprKind::Unary);
    CHECK(second.unaryFunc() == UnaryFunc::Exp);
    CHECK(second.operands()[0].varIndex() == 2);
}

TEST_CASE("parse rejects free symbols and out-of-range variables") {
    CHECK_THROWS_AS(parseExpr("alpha", 2), ParseError);
    CHECK_THROWS_AS(parseExpr("x3", 2), UnknownVariable);
    CHECK_THROWS_AS(parseExpr("x1 +", 2), ParseError);
    CHECK_THROWS_AS(parseExpr("x1 ^ x2", 2), ParseError);
    CHECK_THROWS_AS(parseExpr("exp x1", 2), ParseError);
    CHECK_THROWS_AS(parseExpr("", 1), ParseError);
}

TEST_CASE("parse handles precedence, unary minus, division, exponent forms") {
    double x[2] = {1.5, -0.75};
    auto val = [&](const char* s) { return evalAt(parseExpr(s, 2), x); };
    CHECK(val("1 + 2*3") == doctest::Approx(7.0));
    CHECK(val("-x1^2") == doctest::Approx(-2.25));
    CHECK(val("(1 - x1)/2") == doctest::Approx(-0.25));
    CHECK(val("x1^(-2)") == doctest::Approx(1.0 / 2.25));
    CHECK(val("2e2 + x2") == doctest::Approx(199.25));
    CHECK(val("x1*x2 - x2") == doctest::Approx(1.5 * -0.75 + 0.75));
}

TEST_CASE("derivatives of the basic rules") {
    Expr x1 = Expr::var(1);
    Expr sq = Expr::product({x1, x1});
    double p[1] = {3.0};
    CHECK(evalAt(diff(sq, 1), p) == doctest::Approx(6.0));

    Expr ex = Expr::unary(UnaryFunc::Exp, x1);
    CHECK(evalAt(diff(ex, 1), p) == doctest::Approx(std::exp(3.0)));

    // derivative of a constant and of an absent variable
    CHECK(diff(Expr::constant(4.25), 1).isZero());
    CHECK(diff(x1, 2).isZero());
}

TEST_CASE("mixed second derivatives commute numerically") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        Expr e = randomExpr(rng, 2, 12);
        Expr d12 = diff(diff(e, 1), 2);
        Expr d21 = diff(diff(e, 2), 1);
        auto x = testutil::randomPoint(rng, 2);
        double a = evalAt(d12, x);
        double b = evalAt(d21, x);
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        if (std::abs(a) > 1e6 || std::abs(b) > 1e6) continue; // rounding swamps huge values
        CHECK(testutil::closeRel(a, b, 1e-6));
    }
}

TEST_CASE("evaluation basics and domain errors") {
    Expr sq = Expr::power(Expr::var(1), 2);
    double three[1] = {3.0};
    CHECK(evalAt(sq, three) == 9.0);

    double minusOne[1] = {-1.0};
    CHECK_THROWS_AS(evalAt(Expr::unary(UnaryFunc::Log, Expr::var(1)), minusOne), DomainError);
    CHECK_THROWS_AS(evalAt(Expr::unary(UnaryFunc::Sqrt, Expr::var(1)), minusOne), DomainError);

    // NaN/Inf propagate rather than throw
    double zero[1] = {0.0};
    CHECK(std::isinf(evalAt(Expr::power(Expr::var(1), -1), zero)));
}

TEST_CASE("evaluator matches an independent reference interpreter") {
    std::mt19937_64 rng(7);
    int effective = 0;
    for (int trial = 0; trial < 120; ++trial) {
        Expr e = randomExpr(rng, 3, 50);
        for (int rep = 0; rep < 5; ++rep) {
            auto x = testutil::randomPoint(rng, 3);
            double maxAbs = 0.0;
            double expected = referenceEval(e, x, maxAbs);
            if (!std::isfinite(expected) || maxAbs > 1e3) continue;
            double got = evalAt(e, x);
            double gotCached = evalAtCached(e, x);
            CHECK(testutil::closeRel(got, expected, 1e-12));
            CHECK(gotCached == got);
            ++effective;
        }
    }
    CHECK(effective > 100);
}

TEST_CASE("derivative matches central finite differences") {
    std::mt19937_64 rng(99);
    const double h = 1e-5;
    int effective = 0;
    for (int trial = 0; trial < 120; ++trial) {
        int d = 2;
        Expr e = randomExpr(rng, d, 30);
        std::uniform_int_distribution<int> varPick(1, d);
        int k = varPick(rng);
        Expr de = diff(e, k);
        Expr d2 = diff(de, k);
        Expr d3 = diff(d2, k);
        for (int rep = 0; rep < 4; ++rep) {
            auto x = testutil::randomPoint(rng, d);
            // Central differences carry an h^2 |f'''| truncation term and an
            // eps |f| / h cancellation term; the comparison is only
            // well-posed away from singular regions, so bound the local
            // scales first.
            bool smooth = true;
            for (const Expr* g : {&e, &de, &d2, &d3}) {
                double v = evalAt(*g, x);
                if (!std::isfinite(v) || std::abs(v) > 50.0) { smooth = false; break; }
            }
            if (!smooth) continue;
            auto xPlus = x, xMinus = x;
            xPlus[static_cast<std::size_t>(k - 1)] += h;
            xMinus[static_cast<std::size_t>(k - 1)] -= h;
            double fPlus = evalAt(e, xPlus);
            double fMinus = evalAt(e, xMinus);
            double exact = evalAt(de, x);
            if (std::abs(exact) <= 1e-8) continue;
            double fd = (fPlus - fMinus) / (2.0 * h);
            CHECK(std::abs(fd - exact) <= std::max(1e-5 * std::abs(exact), 1e-7));
            ++effective;
        }
    }
    CHECK(effective > 80);
}

TEST_CASE("simplify preserves value") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Expr e = randomExpr(rng, 2, 25);
        Expr s = simplify(e);
        for (int rep = 0; rep < 20; ++rep) {
            auto x = testutil::randomPoint(rng, 2);
            double a = evalAt(e, x);
            if (!std::isfinite(a)) continue;
            CHECK(testutil::closeRel(evalAt(s, x), a, 1e-12));
        }
    }
}

TEST_CASE("print then parse evaluates identically") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        Expr e = randomExpr(rng, 3, 20);
        Expr back = parseExpr(toString(e), 3);
        for (int rep = 0; rep < 5; ++rep) {
            auto x = testutil::randomPoint(rng, 3);
            double a = evalAt(e, x);
            if (!std::isfinite(a)) continue;
            CHECK(testutil::closeRel(evalAt(back, x), a, 1e-12));
        }
    }
}

TEST_CASE("simplifier folds the cheap identities") {
    Expr x = Expr::var(1);
    CHECK(Expr::sum({Expr::constant(0.0), x}).kind() == ExprKind::Var);
    CHECK(Expr::product({Expr::constant(1.0), x}).kind() == ExprKind::Var);
    CHECK(Expr::product({Expr::constant(0.0), x}).isZero());
    CHECK(Expr::power(x, 0).isOne());
    CHECK(Expr::sum({Expr::sum({x, x}), x}).operands().size() == 3); // flattened
    CHECK((Expr::constant(2.0) * Expr::constant(3.0)).constantValue() == 6.0);
}
