#pragma once

#include "sdetaylor/rational.hpp"
#include "sdetaylor/sde.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sdetaylor {

enum class NodeKind { Root, Deterministic, Stochastic };

/// Node colour: the root and deterministic nodes carry index 0 (omitted),
/// stochastic nodes carry the index variable they pair on (j_k, k >= 1).
struct NodeColor {
    NodeKind kind = NodeKind::Root;
    int indexVar = 0;

    bool operator==(const NodeColor&) const = default;
};

/// A monotonically labelled S-tree: nodes 1..l, parent(i) < i for i >= 2,
/// node 1 is the root. Immutable after construction; the attach* operations
/// return new trees.
///
/// Labels record the construction history: a tree built by the growth rules
/// has its nodes numbered in the order they were added, with a stochastic
/// pair always occupying two consecutive labels sharing a fresh index
/// variable. That convention is what makes "count labelled trees per
/// equivalence class" coincide with "count growth histories".
class LabelledSTree {
public:
    /// The single root (gamma).
    static LabelledSTree root();

    /// Builds a tree from explicit 1-based parent/colour arrays
    /// (parents[0], colors[0] ignored; parents[1] must be 0).
    /// Throws DimensionError on malformed input.
    static LabelledSTree fromArrays(std::vector<int> parents, std::vector<NodeColor> colors);

    int size() const { return static_cast<int>(parent_.size()) - 1; }
    int parentOf(int label) const { return parent_[static_cast<std::size_t>(label)]; }
    NodeColor colorOf(int label) const { return color_[static_cast<std::size_t>(label)]; }
    std::vector<int> childrenOf(int label) const;

    int numDeterministic() const;
    int numStochastic() const;
    /// Distinct index variable values (not necessarily dense for hand-built trees).
    std::vector<int> indexVarValues() const;
    int numIndexVars() const { return static_cast<int>(indexVarValues().size()); }
    Rational order() const { return Rational(2 * numDeterministic() + numStochastic(), 2); }

    /// Attaches one deterministic node (new label l+1) below `parent`.
    LabelledSTree attachDeterministic(int parent) const;

    /// Attaches two stochastic nodes with a fresh shared index variable.
    /// Labels l+1 and l+2 go to parents p1 and p2 in that order; p2 may be
    /// l+1 (second node below the first), which is the Stratonovich-only case.
    LabelledSTree attachStochasticPair(int p1, int p2) const;

    /// Attaches a single stochastic node with a fresh index variable
    /// (used by the one-arc growth identity; the result is a general
    /// labelled S-tree, not a member of the paired growth closure).
    LabelledSTree attachStochasticLeaf(int parent) const;

    /// True if no stochastic pair is parent-and-child, i.e. the labelled tree
    /// is reachable by the Ito growth rules (assuming it is reachable by the
    /// Stratonovich ones).
    bool itoConstructible() const;

    bool operator==(const LabelledSTree&) const = default;

private:
    LabelledSTree(std::vector<int> parents, std::vector<NodeColor> colors)
        : parent_(std::move(parents)), color_(std::move(colors)) {}

    std::vector<int> parent_; // 1-based; parent_[1] = 0
    std::vector<NodeColor> color_;
};

/// One growth step of the given calculus: every deterministic attachment plus
/// every ordered parent pair (p1, p2) for a fresh stochastic pair; under
/// Stratonovich p2 may also be the first new node. Distinct ordered pairs are
/// distinct labelled trees even when they canonicalize equal — that is what
/// the cardinalities count.
std::vector<LabelledSTree> grow(const LabelledSTree& t, Calculus calculus);

/// Canonical class encoding: the lexicographically smallest bracket string
/// over all index-variable bijections, with children sorted recursively.
/// Two labelled trees get the same encoding exactly when they are related by
/// a root-fixing label permutation plus an index bijection.
std::string canonicalEncoding(const LabelledSTree& t);

/// Bracket string of the tree as labelled (children in label order, original
/// index values). parseBracket(toBracket(t)) reproduces the class of t.
std::string toBracket(const LabelledSTree& t);

/// Parses the ASCII bracket grammar
///   tree  := "g" | "(" list ")"
///   child := "t" | "s" INT | "[" list "]" | "{" list "}_" INT
///   list  := child ("," child)*
/// Labels are assigned in depth-first order. The empty string also denotes
/// the root. Throws ParseError (with position) or IndexError when the index
/// variables are not dense 1..K.
LabelledSTree parseBracket(std::string_view text);

/// An equivalence class of labelled S-trees with its combinatorial data.
struct CanonicalSTree {
    std::string encoding;
    int nNodes = 1;
    int nDet = 0;
    int nStoch = 0;
    long long cardI = 0; // labelled trees of this class reachable under Ito growth
    long long cardS = 0; // ... under Stratonovich growth
    LabelledSTree representative = LabelledSTree::root();

    Rational order() const { return Rational(2 * nDet + nStoch, 2); }
    /// Order as an integer; trees of the paired growth closure always have one.
    int orderInt() const { return nDet + nStoch / 2; }
};

inline constexpr int kDefaultTreeOrderCap = 5;

/// Enumerates the equivalence classes of the growth closure up to maxOrder,
/// with both cardinalities counted by exhaustive growth enumeration. Classes
/// whose cardinality under `calculus` is zero are excluded. Sorted by
/// (order, encoding). Throws CapExceeded when maxOrder > hardCap.
std::vector<CanonicalSTree> enumerateTrees(Calculus calculus, int maxOrder,
                                           int hardCap = kDefaultTreeOrderCap);

/// Visits every labelled tree of the growth closure (given calculus) with
/// order <= maxOrder, each exactly once, in a deterministic order.
void forEachLabelledTree(Calculus calculus, int maxOrder,
                         const std::function<void(const LabelledSTree&)>& visit);

// Output formats for enumerated trees.
void writeTreesCsv(std::ostream& out, const std::vector<CanonicalSTree>& trees);
void writeTreesJson(std::ostream& out, const std::vector<CanonicalSTree>& trees);
void writeTreesDot(std::ostream& out, const std::vector<CanonicalSTree>& trees);
void writeTreesLatex(std::ostream& out, const std::vector<CanonicalSTree>& trees);

/// LaTeX form of one bracket encoding (\sigma_{j_1} etc.).
std::string bracketToLatex(const std::string& encoding);

} // namespace sdetaylor
