#include "sdetaylor/expr.hpp"

#include "sdetaylor/errors.hpp"

#include <cctype>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace sdetaylor {

struct ExprNode {
    ExprKind kind;
    double value = 0.0;            // Constant
    int var = 0;                   // Var
    int exponent = 0;              // Power
    UnaryFunc func = UnaryFunc::Exp; // Unary
    std::vector<Expr> kids;
};

Expr detail_makeExpr(std::shared_ptr<const ExprNode> node) {
    return Expr(std::move(node));
}

namespace {

Expr makeNode(ExprNode node) {
    return detail_makeExpr(std::make_shared<const ExprNode>(std::move(node)));
}

} // namespace

Expr Expr::constant(double value) {
    ExprNode n;
    n.kind = ExprKind::Constant;
    n.value = value;
    return makeNode(std::move(n));
}

Expr Expr::var(int index) {
    if (index < 1) throw UnknownVariable(index, 0);
    ExprNode n;
    n.kind = ExprKind::Var;
    n.var = index;
    return makeNode(std::move(n));
}

Expr Expr::sum(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    double constant = 0.0;
    bool haveConstant = false;
    for (auto& t : terms) {
        if (t.kind() == ExprKind::Sum) {
            for (const auto& k : t.operands()) {
                if (k.isConstant()) { constant += k.constantValue(); haveConstant = true; }
                else flat.push_back(k);
            }
        } else if (t.isConstant()) {
            constant += t.constantValue();
            haveConstant = true;
        } else {
            flat.push_back(std::move(t));
        }
    }
    if (haveConstant && constant != 0.0) flat.insert(flat.begin(), Expr::constant(constant));
    if (flat.empty()) return Expr::constant(haveConstant ? constant : 0.0);
    if (flat.size() == 1) return flat[0];
    ExprNode n;
    n.kind = ExprKind::Sum;
    n.kids = std::move(flat);
    return makeNode(std::move(n));
}

Expr Expr::product(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    double constant = 1.0;
    for (auto& f : factors) {
        if (f.kind() == ExprKind::Product) {
            for (const auto& k : f.operands()) {
                if (k.isConstant()) constant *= k.constantValue();
                else flat.push_back(k);
            }
        } else if (f.isConstant()) {
            constant *= f.constantValue();
        } else {
            flat.push_back(std::move(f));
        }
    }
    if (constant == 0.0) return Expr::constant(0.0);
    if (constant != 1.0) flat.insert(flat.begin(), Expr::constant(constant));
    if (flat.empty()) return Expr::constant(constant);
    if (flat.size() == 1) return flat[0];
    ExprNode n;
    n.kind = ExprKind::Product;
    n.kids = std::move(flat);
    return makeNode(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
    if (exponent == 0) return Expr::constant(1.0);
    if (exponent == 1) return base;
    if (base.isConstant()) {
        double v = base.constantValue();
        if (!(v == 0.0 && exponent < 0)) {
            double r = 1.0;
            double b = v;
            int e = exponent < 0 ? -exponent : exponent;
            for (int i = 0; i < e; ++i) r *= b;
            if (exponent < 0) r = 1.0 / r;
            if (std::isfinite(r)) return Expr::constant(r);
        }
    }
    if (base.kind() == ExprKind::Power) {
        int inner = base.exponent();
        return Expr::power(base.operands()[0], inner * exponent);
    }
    ExprNode n;
    n.kind = ExprKind::Power;
    n.exponent = exponent;
    n.kids.push_back(std::move(base));
    return makeNode(std::move(n));
}

Expr Expr::unary(UnaryFunc f, Expr argument) {
    if (argument.isConstant()) {
        double v = argument.constantValue();
        switch (f) {
        case UnaryFunc::Exp: return Expr::constant(std::exp(v));
        case UnaryFunc::Sin: return Expr::constant(std::sin(v));
        case UnaryFunc::Cos: return Expr::constant(std::cos(v));
        case UnaryFunc::Log:
            if (v > 0.0) return Expr::constant(std::log(v));
            break; // leave the node; evaluation reports the domain problem
        case UnaryFunc::Sqrt:
            if (v >= 0.0) return Expr::constant(std::sqrt(v));
            break;
        }
    }
    ExprNode n;
    n.kind = ExprKind::Unary;
    n.func = f;
    n.kids.push_back(std::move(argument));
    return makeNode(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::constantValue() const { return node_->value; }
int Expr::varIndex() const { return node_->var; }
int Expr::exponent() const { return node_->exponent; }
UnaryFunc Expr::unaryFunc() const { return node_->func; }
const std::vector<Expr>& Expr::operands() const { return node_->kids; }

bool Expr::isZero() const { return isConstant() && constantValue() == 0.0; }
bool Expr::isOne() const { return isConstant() && constantValue() == 1.0; }

Expr Expr::operator-(const Expr& o) const {
    return sum({*this, product({constant(-1.0), o})});
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

struct DiffKey {
    const ExprNode* node;
    int var;
    bool operator==(const DiffKey& o) const { return node == o.node && var == o.var; }
};

struct DiffKeyHash {
    std::size_t operator()(const DiffKey& k) const {
        return std::hash<const void*>()(k.node) * 31u + static_cast<std::size_t>(k.var);
    }
};

struct DiffCacheEntry {
    Expr source;     // pins the key's node alive
    Expr derivative;
};

std::mutex& diffCacheMutex() {
    static std::mutex m;
    return m;
}

std::unordered_map<DiffKey, DiffCacheEntry, DiffKeyHash>& diffCache() {
    static std::unordered_map<DiffKey, DiffCacheEntry, DiffKeyHash> cache;
    return cache;
}

Expr diffImpl(const Expr& e, int k);

Expr diffCached(const Expr& e, int k) {
    DiffKey key{e.id(), k};
    {
        std::lock_guard<std::mutex> lock(diffCacheMutex());
        auto it = diffCache().find(key);
        if (it != diffCache().end()) return it->second.derivative;
    }
    Expr d = diffImpl(e, k);
    {
        std::lock_guard<std::mutex> lock(diffCacheMutex());
        diffCache().emplace(key, DiffCacheEntry{e, d});
    }
    return d;
}

Expr diffImpl(const Expr& e, int k) {
    switch (e.kind()) {
    case ExprKind::Constant:
        return Expr::constant(0.0);
    case ExprKind::Var:
        return Expr::constant(e.varIndex() == k ? 1.0 : 0.0);
    case ExprKind::Sum: {
        std::vector<Expr> terms;
        terms.reserve(e.operands().size());
        for (const auto& t : e.operands()) terms.push_back(diffCached(t, k));
        return Expr::sum(std::move(terms));
    }
    case ExprKind::Product: {
        const auto& fs = e.operands();
        std::vector<Expr> terms;
        terms.reserve(fs.size());
        for (std::size_t i = 0; i < fs.size(); ++i) {
            std::vector<Expr> factors;
            factors.reserve(fs.size());
            for (std::size_t j = 0; j < fs.size(); ++j)
                factors.push_back(i == j ? diffCached(fs[j], k) : fs[j]);
            terms.push_back(Expr::product(std::move(factors)));
        }
        return Expr::sum(std::move(terms));
    }
    case ExprKind::Power: {
        const Expr& base = e.operands()[0];
        int n = e.exponent();
        return Expr::product({Expr::constant(static_cast<double>(n)),
                              Expr::power(base, n - 1), diffCached(base, k)});
    }
    case ExprKind::Unary: {
        const Expr& a = e.operands()[0];
        Expr da = diffCached(a, k);
        switch (e.unaryFunc()) {
        case UnaryFunc::Exp:
            return Expr::product({Expr::unary(UnaryFunc::Exp, a), da});
        case UnaryFunc::Log:
            return Expr::product({da, Expr::power(a, -1)});
        case UnaryFunc::Sin:
            return Expr::product({Expr::unary(UnaryFunc::Cos, a), da});
        case UnaryFunc::Cos:
            return Expr::product({Expr::constant(-1.0), Expr::unary(UnaryFunc::Sin, a), da});
        case UnaryFunc::Sqrt:
            return Expr::product({Expr::constant(0.5),
                                  Expr::power(Expr::unary(UnaryFunc::Sqrt, a), -1), da});
        }
        break;
    }
    }
    throw std::logic_error("diff: unreachable expression kind");
}

} // namespace

Expr diff(const Expr& e, int k) {
    if (k < 1) throw UnknownVariable(k, 0);
    return diffCached(e, k);
}

void clearDerivativeCache() {
    std::lock_guard<std::mutex> lock(diffCacheMutex());
    diffCache().clear();
}

Expr simplify(const Expr& e) {
    switch (e.kind()) {
    case ExprKind::Constant:
    case ExprKind::Var:
        return e;
    case ExprKind::Sum: {
        std::vector<Expr> kids;
        kids.reserve(e.operands().size());
        for (const auto& k : e.operands()) kids.push_back(simplify(k));
        return Expr::sum(std::move(kids));
    }
    case ExprKind::Product: {
        std::vector<Expr> kids;
        kids.reserve(e.operands().size());
        for (const auto& k : e.operands()) kids.push_back(simplify(k));
        return Expr::product(std::move(kids));
    }
    case ExprKind::Power:
        return Expr::power(simplify(e.operands()[0]), e.exponent());
    case ExprKind::Unary:
        return Expr::unary(e.unaryFunc(), simplify(e.operands()[0]));
    }
    throw std::logic_error("simplify: unreachable expression kind");
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double evalNode(const Expr& e, std::span<const double> x,
                std::unordered_map<const ExprNode*, double>* memo) {
    if (memo) {
        auto it = memo->find(e.id());
        if (it != memo->end()) return it->second;
    }
    double result = 0.0;
    switch (e.kind()) {
    case ExprKind::Constant:
        result = e.constantValue();
        break;
    case ExprKind::Var: {
        int k = e.varIndex();
        if (k < 1 || static_cast<std::size_t>(k) > x.size())
            throw UnknownVariable(k, static_cast<int>(x.size()));
        result = x[static_cast<std::size_t>(k - 1)];
        break;
    }
    case ExprKind::Sum: {
        double s = 0.0;
        for (const auto& t : e.operands()) s += evalNode(t, x, memo);
        result = s;
        break;
    }
    case ExprKind::Product: {
        double p = 1.0;
        for (const auto& f : e.operands()) p *= evalNode(f, x, memo);
        result = p;
        break;
    }
    case ExprKind::Power: {
        double b = evalNode(e.operands()[0], x, memo);
        int n = e.exponent();
        int m = n < 0 ? -n : n;
        double r = 1.0;
        for (int i = 0; i < m; ++i) r *= b;
        result = n < 0 ? 1.0 / r : r;
        break;
    }
    case ExprKind::Unary: {
        double a = evalNode(e.operands()[0], x, memo);
        switch (e.unaryFunc()) {
        case UnaryFunc::Exp: result = std::exp(a); break;
        case UnaryFunc::Sin: result = std::sin(a); break;
        case UnaryFunc::Cos: result = std::cos(a); break;
        case UnaryFunc::Log:
            if (a < 0.0) throw DomainError("log of negative argument");
            result = std::log(a);
            break;
        case UnaryFunc::Sqrt:
            if (a < 0.0) throw DomainError("sqrt of negative argument");
            result = std::sqrt(a);
            break;
        }
        break;
    }
    }
    if (memo) memo->emplace(e.id(), result);
    return result;
}

} // namespace

double evalAt(const Expr& e, std::span<const double> x) {
    return evalNode(e, x, nullptr);
}

double evalAtCached(const Expr& e, std::span<const double> x) {
    std::unordered_map<const ExprNode*, double> memo;
    return evalNode(e, x, &memo);
}

int maxVarIndex(const Expr& e) {
    switch (e.kind()) {
    case ExprKind::Constant: return 0;
    case ExprKind::Var: return e.varIndex();
    default: {
        int m = 0;
        for (const auto& k : e.operands()) m = std::max(m, maxVarIndex(k));
        return m;
    }
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ExprParser {
public:
    ExprParser(std::string_view text, int dimension) : text_(text), d_(dimension) {}

    Expr parse() {
        Expr e = parseSum();
        skipSpace();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    Expr parseSum() {
        std::vector<Expr> terms;
        terms.push_back(parseTerm());
        while (true) {
            skipSpace();
            if (accept('+')) {
                terms.push_back(parseTerm());
            } else if (accept('-')) {
                terms.push_back(Expr::product({Expr::constant(-1.0), parseTerm()}));
            } else {
                break;
            }
        }
        return Expr::sum(std::move(terms));
    }

    Expr parseTerm() {
        std::vector<Expr> factors;
        factors.push_back(parseUnary());
        while (true) {
            skipSpace();
            if (accept('*')) {
                factors.push_back(parseUnary());
            } else if (accept('/')) {
                factors.push_back(Expr::power(parseUnary(), -1));
            } else {
                break;
            }
        }
        return Expr::product(std::move(factors));
    }

    Expr parseUnary() {
        skipSpace();
        if (accept('-')) return Expr::product({Expr::constant(-1.0), parseUnary()});
        if (accept('+')) return parseUnary();
        return parsePostfix();
    }

    Expr parsePostfix() {
        Expr base = parsePrimary();
        skipSpace();
        if (accept('^')) return Expr::power(std::move(base), parseIntExponent());
        return base;
    }

    int parseIntExponent() {
        skipSpace();
        bool paren = accept('(');
        skipSpace();
        bool negative = accept('-');
        skipSpace();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == start) throw ParseError("integer exponent expected", pos_);
        int value = std::stoi(std::string(text_.substr(start, pos_ - start)));
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            throw ParseError("integer exponent expected", pos_);
        if (paren) {
            skipSpace();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
        }
        return negative ? -value : value;
    }

    Expr parsePrimary() {
        skipSpace();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parseSum();
            skipSpace();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parseNumber();
        if (std::isalpha(static_cast<unsigned char>(c))) return parseIdentifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parseNumber() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = mark; // the 'e' was not an exponent marker
            }
        }
        if (pos_ == start || (pos_ == start + 1 && text_[start] == '.'))
            throw ParseError("malformed number", start);
        return Expr::constant(std::stod(std::string(text_.substr(start, pos_ - start))));
    }

    Expr parseIdentifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "x") {
            std::size_t digitStart = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == digitStart) throw ParseError("variable index expected after 'x'", pos_);
            int index = std::stoi(std::string(text_.substr(digitStart, pos_ - digitStart)));
            if (index < 1 || index > d_) throw UnknownVariable(index, d_);
            return Expr::var(index);
        }
        UnaryFunc f;
        if (name == "exp") f = UnaryFunc::Exp;
        else if (name == "log") f = UnaryFunc::Log;
        else if (name == "sin") f = UnaryFunc::Sin;
        else if (name == "cos") f = UnaryFunc::Cos;
        else if (name == "sqrt") f = UnaryFunc::Sqrt;
        else throw ParseError("unknown identifier '" + name + "' (constants must be numeric)", start);
        skipSpace();
        if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
        Expr arg = parseSum();
        skipSpace();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return Expr::unary(f, std::move(arg));
    }

    void skipSpace() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    std::string_view text_;
    int d_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parseExpr(std::string_view text, int dimension) {
    return ExprParser(text, dimension).parse();
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void printExpr(const Expr& e, std::ostringstream& out, int parentPrecedence);

// precedence: 0 sum, 1 product, 2 power/atom
void printNumber(double v, std::ostringstream& out) {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v;
    std::string s = tmp.str();
    if (v < 0.0) out << "(" << s << ")";
    else out << s;
}

void printExpr(const Expr& e, std::ostringstream& out, int parentPrecedence) {
    switch (e.kind()) {
    case ExprKind::Constant:
        printNumber(e.constantValue(), out);
        break;
    case ExprKind::Var:
        out << "x" << e.varIndex();
        break;
    case ExprKind::Sum: {
        if (parentPrecedence > 0) out << "(";
        bool first = true;
        for (const auto& t : e.operands()) {
            if (!first) out << " + ";
            printExpr(t, out, 1);
            first = false;
        }
        if (parentPrecedence > 0) out << ")";
        break;
    }
    case ExprKind::Product: {
        if (parentPrecedence > 1) out << "(";
        bool first = true;
        for (const auto& f : e.operands()) {
            if (!first) out << "*";
            printExpr(f, out, 2);
            first = false;
        }
        if (parentPrecedence > 1) out << ")";
        break;
    }
    case ExprKind::Power: {
        printExpr(e.operands()[0], out, 3);
        out << "^";
        int n = e.exponent();
        if (n < 0) out << "(" << n << ")";
        else out << n;
        break;
    }
    case ExprKind::Unary: {
        switch (e.unaryFunc()) {
        case UnaryFunc::Exp: out << "exp("; break;
        case UnaryFunc::Log: out << "log("; break;
        case UnaryFunc::Sin: out << "sin("; break;
        case UnaryFunc::Cos: out << "cos("; break;
        case UnaryFunc::Sqrt: out << "sqrt("; break;
        }
        printExpr(e.operands()[0], out, 0);
        out << ")";
        break;
    }
    }
}

} // namespace

std::string toString(const Expr& e) {
    std::ostringstream out;
    printExpr(e, out, 0);
    return out.str();
}

} // namespace sdetaylor
