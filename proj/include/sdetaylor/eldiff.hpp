#pragma once

#include "sdetaylor/expr.hpp"
#include "sdetaylor/sde.hpp"
#include "sdetaylor/stree.hpp"

#include <map>
#include <mutex>
#include <span>
#include <vector>

namespace sdetaylor {

/// Assigns a concrete Wiener component (1..m) to each index variable j_k.
/// Entry k-1 is the value of j_k.
using IndexAssignment = std::vector<int>;

/// Builds the elementary differential F(t)(x) as a symbolic scalar for one
/// index assignment. The root applies f^(k) contracted against the child
/// differentials; a deterministic node applies the matching derivative of
/// its drift component, a stochastic node that of its diffusion column.
/// Component sums (the capital indices) expand eagerly into the expression.
/// Throws DimensionError when the assignment length does not match the
/// number of index variables.
Expr buildF(const LabelledSTree& t, const SdeSpec& spec, const IndexAssignment& idx);
Expr buildF(const CanonicalSTree& t, const SdeSpec& spec, const IndexAssignment& idx);

/// Sum of evalAt(buildF(t, spec, idx), x) over all m^{s/2} assignments,
/// taken in lexicographic assignment order.
double sumOverIndices(const CanonicalSTree& t, const SdeSpec& spec, std::span<const double> x);
double sumOverIndices(const LabelledSTree& t, const SdeSpec& spec, std::span<const double> x);

/// A tree's differential against one problem, with the per-assignment
/// symbolic forms built once and reused across evaluation points.
class ElementaryDifferential {
public:
    ElementaryDifferential(CanonicalSTree tree, const SdeSpec& spec)
        : tree_(std::move(tree)), spec_(&spec) {}

    const CanonicalSTree& tree() const { return tree_; }

    /// The symbolic form for one assignment (cached).
    Expr at(const IndexAssignment& idx) const;

    /// evalAt of the cached form.
    double eval(const IndexAssignment& idx, std::span<const double> x) const;

    /// Index sum at x, lexicographic assignment order.
    double sumOverIndices(std::span<const double> x) const;

private:
    CanonicalSTree tree_;
    const SdeSpec* spec_;
    mutable std::mutex mutex_;
    mutable std::map<IndexAssignment, Expr> cache_;
};

/// All assignments for `count` index variables over components 1..m, in
/// lexicographic order.
std::vector<IndexAssignment> allAssignments(int count, int m);

} // namespace sdetaylor
