#include "sdetaylor/eldiff.hpp"

#include "sdetaylor/errors.hpp"

#include <algorithm>

namespace sdetaylor {

namespace {

// Children in a fixed deterministic order (their raw bracket strings, ties by
// label). The k-linear operators are symmetric, so any fixed order is valid.
std::vector<int> orderedChildren(const LabelledSTree& t, int node) {
    std::vector<int> kids = t.childrenOf(node);
    std::vector<std::pair<std::string, int>> keyed;
    keyed.reserve(kids.size());
    for (int c : kids) {
        // subtree bracket of child c
        struct Sub {
            static std::string bracket(const LabelledSTree& t, int n) {
                std::string inner;
                bool first = true;
                for (int c2 : t.childrenOf(n)) {
                    if (!first) inner += ",";
                    inner += bracket(t, c2);
                    first = false;
                }
                NodeColor col = t.colorOf(n);
                if (col.kind == NodeKind::Deterministic)
                    return inner.empty() ? "t" : "[" + inner + "]";
                std::string idx = std::to_string(col.indexVar);
                return inner.empty() ? "s" + idx : "{" + inner + "}_" + idx;
            }
        };
        keyed.emplace_back(Sub::bracket(t, c), c);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> out;
    out.reserve(keyed.size());
    for (auto& [key, c] : keyed) {
        (void)key;
        out.push_back(c);
    }
    return out;
}

// Maps index variable values (possibly non-dense for hand-built trees) to
// positions 1..K in ascending value order.
std::map<int, int> indexPositions(const LabelledSTree& t) {
    std::map<int, int> pos;
    int next = 1;
    for (int v : t.indexVarValues()) pos[v] = next++;
    return pos;
}

struct FBuilder {
    const LabelledSTree& tree;
    const SdeSpec& spec;
    const IndexAssignment& idx;
    const std::map<int, int>& varPos;

    // The base function of a node for a given component I (1..d).
    Expr baseFunction(int node, int component) const {
        NodeColor c = tree.colorOf(node);
        switch (c.kind) {
        case NodeKind::Root:
            return spec.functional;
        case NodeKind::Deterministic:
            return spec.drift[static_cast<std::size_t>(component - 1)];
        case NodeKind::Stochastic: {
            int k = varPos.at(c.indexVar);
            int j = idx[static_cast<std::size_t>(k - 1)];
            if (j < 1 || j > spec.m)
                throw IndexError("assignment component out of range 1..m");
            return spec.diffusion[static_cast<std::size_t>(component - 1)]
                                 [static_cast<std::size_t>(j - 1)];
        }
        }
        throw std::logic_error("unreachable");
    }

    // F-component of the subtree rooted at `node`. For the root the component
    // argument is ignored (f is scalar).
    Expr component(int node, int comp) const {
        std::vector<int> kids = orderedChildren(tree, node);
        Expr g = baseFunction(node, comp);
        if (kids.empty()) return g;
        std::vector<Expr> terms;
        std::vector<int> assignment(kids.size(), 1);
        while (true) {
            // derivative of g with respect to the current multi-index, taken
            // in ascending variable order to reuse cached prefixes
            std::vector<int> sorted(assignment);
            std::sort(sorted.begin(), sorted.end());
            Expr derivative = g;
            for (int v : sorted) derivative = diff(derivative, v);
            if (!derivative.isZero()) {
                std::vector<Expr> factors;
                factors.reserve(kids.size() + 1);
                factors.push_back(derivative);
                for (std::size_t i = 0; i < kids.size(); ++i)
                    factors.push_back(component(kids[i], assignment[i]));
                terms.push_back(Expr::product(std::move(factors)));
            }
            // next point of the component hypercube {1..d}^k
            std::size_t pos = 0;
            while (pos < assignment.size()) {
                if (assignment[pos] < spec.d) {
                    ++assignment[pos];
                    break;
                }
                assignment[pos] = 1;
                ++pos;
            }
            if (pos == assignment.size()) break;
        }
        return Expr::sum(std::move(terms));
    }
};

} // namespace

Expr buildF(const LabelledSTree& t, const SdeSpec& spec, const IndexAssignment& idx) {
    auto varPos = indexPositions(t);
    if (idx.size() != varPos.size())
        throw DimensionError("assignment length " + std::to_string(idx.size()) +
                             " does not match index variable count " +
                             std::to_string(varPos.size()));
    FBuilder builder{t, spec, idx, varPos};
    return builder.component(1, 0);
}

Expr buildF(const CanonicalSTree& t, const SdeSpec& spec, const IndexAssignment& idx) {
    return buildF(t.representative, spec, idx);
}

std::vector<IndexAssignment> allAssignments(int count, int m) {
    std::vector<IndexAssignment> out;
    IndexAssignment a(static_cast<std::size_t>(count), 1);
    while (true) {
        out.push_back(a);
        int pos = count - 1;
        while (pos >= 0) {
            if (a[static_cast<std::size_t>(pos)] < m) {
                ++a[static_cast<std::size_t>(pos)];
                break;
            }
            a[static_cast<std::size_t>(pos)] = 1;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

double sumOverIndices(const LabelledSTree& t, const SdeSpec& spec, std::span<const double> x) {
    int k = t.numIndexVars();
    double total = 0.0;
    for (const auto& idx : allAssignments(k, spec.m))
        total += evalAtCached(buildF(t, spec, idx), x);
    return total;
}

double sumOverIndices(const CanonicalSTree& t, const SdeSpec& spec, std::span<const double> x) {
    return sumOverIndices(t.representative, spec, x);
}

Expr ElementaryDifferential::at(const IndexAssignment& idx) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(idx);
        if (it != cache_.end()) return it->second;
    }
    Expr e = buildF(tree_.representative, *spec_, idx);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(idx, e);
    (void)inserted;
    return it->second;
}

double ElementaryDifferential::eval(const IndexAssignment& idx, std::span<const double> x) const {
    return evalAtCached(at(idx), x);
}

double ElementaryDifferential::sumOverIndices(std::span<const double> x) const {
    int k = tree_.representative.numIndexVars();
    double total = 0.0;
    for (const auto& idx : allAssignments(k, spec_->m)) total += eval(idx, x);
    return total;
}

} // namespace sdetaylor
