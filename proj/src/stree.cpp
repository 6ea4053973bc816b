#include "sdetaylor/stree.hpp"

#include "sdetaylor/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace sdetaylor {

LabelledSTree LabelledSTree::root() {
    return LabelledSTree({0, 0}, {NodeColor{}, NodeColor{NodeKind::Root, 0}});
}

LabelledSTree LabelledSTree::fromArrays(std::vector<int> parents, std::vector<NodeColor> colors) {
    if (parents.size() != colors.size() || parents.size() < 2)
        throw DimensionError("parent/colour arrays must be 1-based and equally sized");
    int l = static_cast<int>(parents.size()) - 1;
    if (parents[1] != 0) throw DimensionError("root must have parent 0");
    if (colors[1].kind != NodeKind::Root) throw DimensionError("node 1 must be the root");
    for (int i = 2; i <= l; ++i) {
        if (parents[static_cast<std::size_t>(i)] < 1 || parents[static_cast<std::size_t>(i)] >= i)
            throw DimensionError("labelling is not monotone at node " + std::to_string(i));
        if (colors[static_cast<std::size_t>(i)].kind == NodeKind::Root)
            throw DimensionError("only node 1 may be the root");
    }
    for (int i = 1; i <= l; ++i) {
        const NodeColor& c = colors[static_cast<std::size_t>(i)];
        if (c.kind == NodeKind::Stochastic && c.indexVar < 1)
            throw DimensionError("stochastic node without index variable");
        if (c.kind != NodeKind::Stochastic && c.indexVar != 0)
            throw DimensionError("non-stochastic node with index variable");
    }
    return LabelledSTree(std::move(parents), std::move(colors));
}

std::vector<int> LabelledSTree::childrenOf(int label) const {
    std::vector<int> out;
    for (int i = 2; i <= size(); ++i)
        if (parentOf(i) == label) out.push_back(i);
    return out;
}

int LabelledSTree::numDeterministic() const {
    int n = 0;
    for (int i = 1; i <= size(); ++i)
        if (colorOf(i).kind == NodeKind::Deterministic) ++n;
    return n;
}

int LabelledSTree::numStochastic() const {
    int n = 0;
    for (int i = 1; i <= size(); ++i)
        if (colorOf(i).kind == NodeKind::Stochastic) ++n;
    return n;
}

std::vector<int> LabelledSTree::indexVarValues() const {
    std::set<int> values;
    for (int i = 1; i <= size(); ++i)
        if (colorOf(i).kind == NodeKind::Stochastic) values.insert(colorOf(i).indexVar);
    return std::vector<int>(values.begin(), values.end());
}

LabelledSTree LabelledSTree::attachDeterministic(int parent) const {
    if (parent < 1 || parent > size()) throw DimensionError("attach: parent out of range");
    std::vector<int> p = parent_;
    std::vector<NodeColor> c = color_;
    p.push_back(parent);
    c.push_back(NodeColor{NodeKind::Deterministic, 0});
    return LabelledSTree(std::move(p), std::move(c));
}

LabelledSTree LabelledSTree::attachStochasticPair(int p1, int p2) const {
    int l = size();
    if (p1 < 1 || p1 > l) throw DimensionError("attach: first parent out of range");
    if (p2 < 1 || p2 > l + 1) throw DimensionError("attach: second parent out of range");
    auto vars = indexVarValues();
    int fresh = vars.empty() ? 1 : vars.back() + 1;
    std::vector<int> p = parent_;
    std::vector<NodeColor> c = color_;
    p.push_back(p1);
    c.push_back(NodeColor{NodeKind::Stochastic, fresh});
    p.push_back(p2);
    c.push_back(NodeColor{NodeKind::Stochastic, fresh});
    return LabelledSTree(std::move(p), std::move(c));
}

LabelledSTree LabelledSTree::attachStochasticLeaf(int parent) const {
    if (parent < 1 || parent > size()) throw DimensionError("attach: parent out of range");
    auto vars = indexVarValues();
    int fresh = vars.empty() ? 1 : vars.back() + 1;
    std::vector<int> p = parent_;
    std::vector<NodeColor> c = color_;
    p.push_back(parent);
    c.push_back(NodeColor{NodeKind::Stochastic, fresh});
    return LabelledSTree(std::move(p), std::move(c));
}

bool LabelledSTree::itoConstructible() const {
    std::map<int, std::vector<int>> byVar;
    for (int i = 1; i <= size(); ++i)
        if (colorOf(i).kind == NodeKind::Stochastic)
            byVar[colorOf(i).indexVar].push_back(i);
    for (const auto& [var, nodes] : byVar) {
        (void)var;
        if (nodes.size() != 2) return false;
        // labels are sorted; the younger node can only be the child
        if (parentOf(nodes[1]) == nodes[0]) return false;
    }
    return true;
}

std::vector<LabelledSTree> grow(const LabelledSTree& t, Calculus calculus) {
    std::vector<LabelledSTree> out;
    int l = t.size();
    for (int p = 1; p <= l; ++p) out.push_back(t.attachDeterministic(p));
    for (int p1 = 1; p1 <= l; ++p1) {
        for (int p2 = 1; p2 <= l; ++p2) out.push_back(t.attachStochasticPair(p1, p2));
        if (calculus == Calculus::Stratonovich)
            out.push_back(t.attachStochasticPair(p1, l + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bracket form and canonical encoding

namespace {

// Bracket string with children ordered by their own bracket strings and the
// given index relabelling. `remap[value]` gives the printed index.
std::string encodeNode(const LabelledSTree& t, int node, const std::map<int, int>& remap) {
    std::vector<std::string> kids;
    for (int c : t.childrenOf(node)) kids.push_back(encodeNode(t, c, remap));
    std::sort(kids.begin(), kids.end());
    std::string inner;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) inner += ",";
        inner += kids[i];
    }
    NodeColor color = t.colorOf(node);
    switch (color.kind) {
    case NodeKind::Root:
        return kids.empty() ? "g" : "(" + inner + ")";
    case NodeKind::Deterministic:
        return kids.empty() ? "t" : "[" + inner + "]";
    case NodeKind::Stochastic: {
        std::string idx = std::to_string(remap.at(color.indexVar));
        return kids.empty() ? "s" + idx : "{" + inner + "}_" + idx;
    }
    }
    return {};
}

std::string bracketNodeAsLabelled(const LabelledSTree& t, int node) {
    std::vector<std::string> kids;
    for (int c : t.childrenOf(node)) kids.push_back(bracketNodeAsLabelled(t, c));
    std::string inner;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) inner += ",";
        inner += kids[i];
    }
    NodeColor color = t.colorOf(node);
    switch (color.kind) {
    case NodeKind::Root:
        return kids.empty() ? "g" : "(" + inner + ")";
    case NodeKind::Deterministic:
        return kids.empty() ? "t" : "[" + inner + "]";
    case NodeKind::Stochastic: {
        std::string idx = std::to_string(color.indexVar);
        return kids.empty() ? "s" + idx : "{" + inner + "}_" + idx;
    }
    }
    return {};
}

} // namespace

std::string toBracket(const LabelledSTree& t) {
    return bracketNodeAsLabelled(t, 1);
}

std::string canonicalEncoding(const LabelledSTree& t) {
    std::vector<int> values = t.indexVarValues();
    int k = static_cast<int>(values.size());
    if (k == 0) return encodeNode(t, 1, {});
    // Label permutations are absorbed by sorting children; index bijections
    // are few (k! with k <= order), so the minimum over all of them is exact.
    std::vector<int> targets(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) targets[static_cast<std::size_t>(i)] = i + 1;
    std::string best;
    do {
        std::map<int, int> remap;
        for (int i = 0; i < k; ++i)
            remap[values[static_cast<std::size_t>(i)]] = targets[static_cast<std::size_t>(i)];
        std::string enc = encodeNode(t, 1, remap);
        if (best.empty() || enc < best) best = std::move(enc);
    } while (std::next_permutation(targets.begin(), targets.end()));
    return best;
}

// ---------------------------------------------------------------------------
// Bracket parsing

namespace {

class BracketParser {
public:
    explicit BracketParser(std::string_view text) : text_(text) {}

    LabelledSTree parse() {
        skipSpace();
        if (pos_ == text_.size()) return LabelledSTree::root(); // empty input is gamma
        LabelledSTree t = parseTree();
        skipSpace();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        checkDenseIndices(t);
        return t;
    }

private:
    // Nodes are accumulated in depth-first order, which is a monotone labelling.
    LabelledSTree parseTree() {
        skipSpace();
        if (accept('g')) return LabelledSTree::root();
        if (!accept('(')) throw ParseError("expected 'g' or '('", pos_);
        parents_ = {0, 0};
        colors_ = {NodeColor{}, NodeColor{NodeKind::Root, 0}};
        parseList(1);
        skipSpace();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return LabelledSTree::fromArrays(parents_, colors_);
    }

    void parseList(int parent) {
        parseChild(parent);
        while (true) {
            skipSpace();
            if (!accept(',')) break;
            parseChild(parent);
        }
    }

    void parseChild(int parent) {
        skipSpace();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == 't') {
            ++pos_;
            addNode(parent, NodeColor{NodeKind::Deterministic, 0});
        } else if (c == 's') {
            ++pos_;
            int idx = parseIndex();
            addNode(parent, NodeColor{NodeKind::Stochastic, idx});
        } else if (c == '[') {
            ++pos_;
            int self = addNode(parent, NodeColor{NodeKind::Deterministic, 0});
            parseList(self);
            skipSpace();
            if (!accept(']')) throw ParseError("expected ']'", pos_);
        } else if (c == '{') {
            ++pos_;
            int self = addNode(parent, NodeColor{NodeKind::Stochastic, 0});
            parseList(self);
            skipSpace();
            if (!accept('}')) throw ParseError("expected '}'", pos_);
            if (!accept('_')) throw ParseError("expected '_' after '}'", pos_);
            colors_[static_cast<std::size_t>(self)].indexVar = parseIndex();
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    int parseIndex() {
        skipSpace();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == start) throw ParseError("index expected", pos_);
        int v = std::stoi(std::string(text_.substr(start, pos_ - start)));
        if (v < 1) throw IndexError("index variables start at 1");
        return v;
    }

    int addNode(int parent, NodeColor color) {
        parents_.push_back(parent);
        colors_.push_back(color);
        return static_cast<int>(parents_.size()) - 1;
    }

    static void checkDenseIndices(const LabelledSTree& t) {
        auto values = t.indexVarValues();
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] != static_cast<int>(i) + 1)
                throw IndexError("index variables must be dense 1..K");
    }

    void skipSpace() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<int> parents_;
    std::vector<NodeColor> colors_;
};

} // namespace

LabelledSTree parseBracket(std::string_view text) {
    return BracketParser(text).parse();
}

// ---------------------------------------------------------------------------
// Enumeration

void forEachLabelledTree(Calculus calculus, int maxOrder,
                         const std::function<void(const LabelledSTree&)>& visit) {
    // Depth-first over growth histories. Every labelled tree of the closure
    // encodes its own history (nodes in label order), so each is reached
    // exactly once and no dedup is necessary.
    std::vector<LabelledSTree> stack;
    stack.push_back(LabelledSTree::root());
    while (!stack.empty()) {
        LabelledSTree t = std::move(stack.back());
        stack.pop_back();
        visit(t);
        int order = t.numDeterministic() + t.numStochastic() / 2;
        if (order < maxOrder) {
            for (auto& child : grow(t, calculus)) stack.push_back(std::move(child));
        }
    }
}

std::vector<CanonicalSTree> enumerateTrees(Calculus calculus, int maxOrder, int hardCap) {
    if (maxOrder < 0) throw DimensionError("maxOrder must be >= 0");
    if (maxOrder > hardCap) throw CapExceeded(maxOrder, hardCap);

    // One Stratonovich pass counts both cardinalities: the Ito histories are
    // exactly the Stratonovich histories in which no pair is parent-and-child.
    std::map<std::string, CanonicalSTree> bins;
    forEachLabelledTree(Calculus::Stratonovich, maxOrder, [&](const LabelledSTree& t) {
        std::string enc = canonicalEncoding(t);
        auto it = bins.find(enc);
        if (it == bins.end()) {
            CanonicalSTree c;
            c.encoding = enc;
            c.nNodes = t.size();
            c.nDet = t.numDeterministic();
            c.nStoch = t.numStochastic();
            c.representative = t;
            it = bins.emplace(std::move(enc), std::move(c)).first;
        }
        it->second.cardS += 1;
        if (t.itoConstructible()) it->second.cardI += 1;
    });

    std::vector<CanonicalSTree> out;
    for (auto& [enc, tree] : bins) {
        (void)enc;
        long long card = calculus == Calculus::Ito ? tree.cardI : tree.cardS;
        if (card > 0) out.push_back(std::move(tree));
    }
    std::sort(out.begin(), out.end(), [](const CanonicalSTree& a, const CanonicalSTree& b) {
        if (a.orderInt() != b.orderInt()) return a.orderInt() < b.orderInt();
        return a.encoding < b.encoding;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Emitters

void writeTreesCsv(std::ostream& out, const std::vector<CanonicalSTree>& trees) {
    out << "encoding,order,nDet,nStoch,cardI,cardS\n";
    for (const auto& t : trees) {
        out << "\"" << t.encoding << "\"," << t.orderInt() << "," << t.nDet << ","
            << t.nStoch << "," << t.cardI << "," << t.cardS << "\n";
    }
}

void writeTreesJson(std::ostream& out, const std::vector<CanonicalSTree>& trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) {
        arr.push_back({{"encoding", t.encoding},
                       {"order", t.orderInt()},
                       {"nDet", t.nDet},
                       {"nStoch", t.nStoch},
                       {"cardI", t.cardI},
                       {"cardS", t.cardS}});
    }
    out << arr.dump(2) << "\n";
}

void writeTreesDot(std::ostream& out, const std::vector<CanonicalSTree>& trees) {
    for (std::size_t i = 0; i < trees.size(); ++i) {
        const LabelledSTree& t = trees[i].representative;
        out << "digraph tree" << i << " {\n";
        out << "  rankdir=BT; // root at the bottom\n";
        out << "  label=\"" << trees[i].encoding << "\";\n";
        for (int n = 1; n <= t.size(); ++n) {
            NodeColor c = t.colorOf(n);
            out << "  n" << n << " [";
            switch (c.kind) {
            case NodeKind::Root:
                out << "shape=circle,label=\"\",style=bold";
                break;
            case NodeKind::Deterministic:
                out << "shape=circle,label=\"\",style=filled,fillcolor=black";
                break;
            case NodeKind::Stochastic:
                out << "shape=circle,label=\"j" << c.indexVar << "\"";
                break;
            }
            out << "];\n";
        }
        for (int n = 2; n <= t.size(); ++n)
            out << "  n" << t.parentOf(n) << " -> n" << n << ";\n";
        out << "}\n";
    }
}

std::string bracketToLatex(const std::string& encoding) {
    std::string out;
    for (std::size_t i = 0; i < encoding.size(); ++i) {
        char c = encoding[i];
        if (c == 'g') {
            out += "\\gamma";
        } else if (c == 't') {
            out += "\\tau";
        } else if (c == 's') {
            out += "\\sigma_{j_{";
            ++i;
            while (i < encoding.size() && std::isdigit(static_cast<unsigned char>(encoding[i])))
                out += encoding[i++];
            --i;
            out += "}}";
        } else if (c == '{') {
            out += "\\{";
        } else if (c == '}') {
            out += "\\}";
            if (i + 1 < encoding.size() && encoding[i + 1] == '_') {
                out += "_{j_{";
                i += 2;
                while (i < encoding.size() && std::isdigit(static_cast<unsigned char>(encoding[i])))
                    out += encoding[i++];
                --i;
                out += "}}";
            }
        } else if (c == ',') {
            out += ", ";
        } else {
            out += c;
        }
    }
    return out;
}

void writeTreesLatex(std::ostream& out, const std::vector<CanonicalSTree>& trees) {
    out << "\\begin{tabular}{lcccc}\n";
    out << "tree & $\\rho$ & $\\alpha_I$ & $\\alpha_S$ \\\\\n\\hline\n";
    for (const auto& t : trees) {
        out << "$" << bracketToLatex(t.encoding) << "$ & " << t.orderInt() << " & "
            << t.cardI << " & " << t.cardS << " \\\\\n";
    }
    out << "\\end{tabular}\n";
}

} // namespace sdetaylor
