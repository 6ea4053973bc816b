#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdetaylor {

enum class ExprKind { Constant, Var, Sum, Product, Power, Unary };
enum class UnaryFunc { Exp, Log, Sin, Cos, Sqrt };

struct ExprNode;

/// Immutable symbolic scalar expression over variables x1..xd.
///
/// Expressions are shared-pointer handles to immutable nodes, so copies are
/// cheap and values may be shared freely across threads. All factory
/// functions apply shallow simplification on construction: nested sums and
/// products are flattened, constants are folded, and 0/1 absorption is
/// performed. There is no canonical polynomial form beyond that.
class Expr {
public:
    static Expr constant(double value);
    static Expr var(int index); // 1-based
    static Expr sum(std::vector<Expr> terms);
    static Expr product(std::vector<Expr> factors);
    static Expr power(Expr base, int exponent); // integer exponents only
    static Expr unary(UnaryFunc f, Expr argument);

    ExprKind kind() const;
    double constantValue() const;    // Constant only
    int varIndex() const;            // Var only
    int exponent() const;            // Power only
    UnaryFunc unaryFunc() const;     // Unary only
    const std::vector<Expr>& operands() const; // Sum/Product children; Power/Unary arg at [0]

    bool isConstant() const { return kind() == ExprKind::Constant; }
    bool isZero() const;
    bool isOne() const;

    /// Node identity, used as a cache key. Stable for the lifetime of the value.
    const ExprNode* id() const { return node_.get(); }

    Expr operator+(const Expr& o) const { return sum({*this, o}); }
    Expr operator-(const Expr& o) const;
    Expr operator*(const Expr& o) const { return product({*this, o}); }

private:
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
    friend Expr detail_makeExpr(std::shared_ptr<const ExprNode> node);
    std::shared_ptr<const ExprNode> node_;
};

/// Parses the infix expression grammar (+ - * / ^, unary minus, parentheses,
/// exp/log/sin/cos/sqrt calls, variables x1..xd, numeric literals).
/// Throws ParseError (with position) or UnknownVariable.
Expr parseExpr(std::string_view text, int dimension);

/// Exact partial derivative with respect to x^k, shallow-simplified.
/// Results are memoized per (node identity, k); the cache is guarded by a
/// mutex and entries pin their source expressions alive.
Expr diff(const Expr& e, int k);

/// Rebuilds the expression bottom-up through the simplifying factories.
Expr simplify(const Expr& e);

/// IEEE double evaluation. NaN/Inf propagate; log/sqrt of a negative
/// argument throws DomainError; a variable index beyond x.size() throws
/// UnknownVariable.
double evalAt(const Expr& e, std::span<const double> x);

/// Same semantics as evalAt, but memoizes per node within this one call.
/// Intended for heavily shared DAGs (iterated generator applications,
/// elementary differentials); plain evalAt is cheaper for small expressions.
double evalAtCached(const Expr& e, std::span<const double> x);

/// Infix form that parseExpr accepts back (value-identical round trip).
std::string toString(const Expr& e);

/// Largest variable index referenced, 0 if none.
int maxVarIndex(const Expr& e);

/// Drops all memoized derivatives (and their pinned sources).
void clearDerivativeCache();

} // namespace sdetaylor
