#include "sdetaylor/sde.hpp"

#include "sdetaylor/errors.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace sdetaylor {

std::string toString(Calculus c) {
    return c == Calculus::Ito ? "ito" : "stratonovich";
}

void SdeSpec::validate() const {
    if (d < 1) throw DimensionError("d must be >= 1");
    if (m < 1) throw DimensionError("m must be >= 1");
    if (static_cast<int>(drift.size()) != d)
        throw DimensionError("drift must have d entries");
    if (static_cast<int>(diffusion.size()) != d)
        throw DimensionError("diffusion must have d rows");
    for (const auto& row : diffusion)
        if (static_cast<int>(row.size()) != m)
            throw DimensionError("diffusion must have m columns");
    if (static_cast<int>(x0.size()) != d)
        throw DimensionError("x0 must have d entries");
    auto check = [&](const Expr& e) {
        int v = maxVarIndex(e);
        if (v > d) throw UnknownVariable(v, d);
    };
    for (const auto& e : drift) check(e);
    for (const auto& row : diffusion)
        for (const auto& e : row) check(e);
    check(functional);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

SdeSpec parseSpec(std::istream& in) {
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value on line " + std::to_string(lineNo), lineNo);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("empty key or value on line " + std::to_string(lineNo), lineNo);
        if (entries.count(key))
            throw ParseError("duplicate key '" + key + "' on line " + std::to_string(lineNo), lineNo);
        entries[key] = value;
    }

    auto require = [&](const std::string& key) -> std::string {
        auto it = entries.find(key);
        if (it == entries.end()) throw ParseError("missing required key '" + key + "'", 0);
        return it->second;
    };

    SdeSpec spec;
    try {
        spec.d = std::stoi(require("d"));
        spec.m = std::stoi(require("m"));
    } catch (const std::invalid_argument&) {
        throw ParseError("d and m must be integers", 0);
    }
    if (spec.d < 1 || spec.m < 1) throw ParseError("d and m must be >= 1", 0);

    std::string calc = require("calculus");
    if (calc == "ito") spec.calculus = Calculus::Ito;
    else if (calc == "stratonovich") spec.calculus = Calculus::Stratonovich;
    else throw ParseError("calculus must be 'ito' or 'stratonovich', got '" + calc + "'", 0);

    spec.drift.clear();
    for (int i = 1; i <= spec.d; ++i)
        spec.drift.push_back(parseExpr(require("a" + std::to_string(i)), spec.d));

    spec.diffusion.assign(static_cast<std::size_t>(spec.d), {});
    for (int i = 1; i <= spec.d; ++i) {
        for (int j = 1; j <= spec.m; ++j) {
            std::string key = "b" + std::to_string(i) + "_" + std::to_string(j);
            auto it = entries.find(key);
            spec.diffusion[static_cast<std::size_t>(i - 1)].push_back(
                it == entries.end() ? Expr::constant(0.0) : parseExpr(it->second, spec.d));
        }
    }

    spec.functional = parseExpr(require("f"), spec.d);

    std::string x0text = require("x0");
    std::stringstream ss(x0text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        piece = trim(piece);
        if (piece.empty()) throw ParseError("empty x0 component", 0);
        try {
            spec.x0.push_back(std::stod(piece));
        } catch (const std::invalid_argument&) {
            throw ParseError("x0 component '" + piece + "' is not a number", 0);
        }
    }
    if (static_cast<int>(spec.x0.size()) != spec.d)
        throw ParseError("x0 must have exactly d components", 0);

    // reject keys that match nothing (typos would otherwise silently vanish)
    for (const auto& [key, value] : entries) {
        (void)value;
        if (key == "d" || key == "m" || key == "calculus" || key == "f" || key == "x0") continue;
        if (key.size() > 1 && key[0] == 'a') {
            try {
                int i = std::stoi(key.substr(1));
                if (i >= 1 && i <= spec.d) continue;
            } catch (const std::invalid_argument&) {}
        }
        if (key.size() > 1 && key[0] == 'b') {
            std::size_t us = key.find('_');
            if (us != std::string::npos) {
                try {
                    int i = std::stoi(key.substr(1, us - 1));
                    int j = std::stoi(key.substr(us + 1));
                    if (i >= 1 && i <= spec.d && j >= 1 && j <= spec.m) continue;
                } catch (const std::invalid_argument&) {}
            }
        }
        throw ParseError("unrecognized key '" + key + "'", 0);
    }

    spec.validate();
    return spec;
}

SdeSpec parseSpecString(const std::string& text) {
    std::istringstream in(text);
    return parseSpec(in);
}

SdeSpec loadSpecFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open spec file '" + path + "'", 0);
    return parseSpec(in);
}

} // namespace sdetaylor
