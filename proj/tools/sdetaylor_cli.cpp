// Command-line front end: tree tables, expansions, validation runs and
// convergence studies over SDE problem files.

#include "sdetaylor/eldiff.hpp"
#include "sdetaylor/errors.hpp"
#include "sdetaylor/expansion.hpp"
#include "sdetaylor/oracle.hpp"
#include "sdetaylor/sde.hpp"
#include "sdetaylor/stree.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace sdetaylor;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// 64-bit FNV-1a of a file's bytes, as a hex string.
std::string fileHash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string isoTimestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Interrupted runs must never leave a partial file behind.
void atomicWrite(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write to " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
    }
}

struct OutputSink {
    std::string path; // empty = stdout
    json manifest;

    void deliver(const std::string& content) const {
        if (path.empty()) {
            std::cout << content;
            return;
        }
        atomicWrite(path, content);
        atomicWrite(path + ".manifest.json", manifest.dump(2) + "\n");
    }
};

json makeManifest(const std::string& command, const std::string& specFile, json parameters,
                  std::uint64_t seed) {
    json m;
    m["command"] = command;
    m["spec_file"] = specFile;
    m["spec_hash"] = specFile.empty() ? "" : fileHash(specFile);
    m["parameters"] = std::move(parameters);
    m["seed"] = seed;
    m["version"] = kVersion;
    m["timestamp"] = isoTimestamp(); // informational; outputs depend only on the fields above
    return m;
}

Calculus parseCalculusFlag(const std::string& s) {
    if (s == "ito" || s == "i") return Calculus::Ito;
    if (s == "strat" || s == "stratonovich" || s == "s") return Calculus::Stratonovich;
    throw CLI::ValidationError("--calculus must be ito or strat");
}

// ---------------------------------------------------------------------------
// trees

int cmdTrees(const std::string& calculusName, int order, const std::string& format,
             int cap, const std::string& outPath) {
    Calculus calculus = parseCalculusFlag(calculusName);
    auto trees = enumerateTrees(calculus, order, cap);
    std::ostringstream out;
    if (format == "csv") writeTreesCsv(out, trees);
    else if (format == "json") writeTreesJson(out, trees);
    else if (format == "dot") writeTreesDot(out, trees);
    else if (format == "latex") writeTreesLatex(out, trees);
    else throw CLI::ValidationError("--format must be csv, json, dot or latex");

    OutputSink sink{outPath,
                    makeManifest("trees", "",
                                 {{"calculus", toString(calculus)},
                                  {"order", order},
                                  {"format", format},
                                  {"cap", cap}},
                                 0)};
    sink.deliver(out.str());
    return 0;
}

// ---------------------------------------------------------------------------
// expand

json termToJson(const ExpansionTerm& term, double t, double t0) {
    double dt = t - t0;
    double power = 1.0;
    for (int i = 0; i < term.power; ++i) power *= dt;
    return {{"tree", term.tree.encoding},
            {"alpha", term.alpha},
            {"weight", term.weight.toString()},
            {"value", term.value},
            {"power", term.power},
            {"contribution", term.weight.toDouble() * term.value * power}};
}

int cmdExpand(const std::string& specFile, int order, double t0, double t,
              const std::string& mode, const std::string& format, int cap,
              const std::string& outPath) {
    SdeSpec spec = loadSpecFile(specFile);
    std::ostringstream out;

    if (mode == "symbolic") {
        if (spec.d != 1 || spec.m != 1) {
            std::cerr << "error: symbolic mode requires d = m = 1\n";
            return 1;
        }
        auto terms = symbolicExpansion1d(spec.calculus, order, cap);
        if (format == "json") {
            json arr = json::array();
            for (const auto& term : terms)
                arr.push_back({{"tree", term.encoding},
                               {"alpha", term.alpha},
                               {"weight", term.weight.toString()},
                               {"power", term.power},
                               {"differential", term.toText()}});
            out << arr.dump(2) << "\n";
        } else if (format == "latex") {
            out << "E[f(X_t)] = ";
            for (std::size_t i = 0; i < terms.size(); ++i) {
                if (i) out << " + ";
                out << terms[i].toLatex();
            }
            out << " + R_{" << order << "}\n";
        } else {
            for (const auto& term : terms)
                out << term.encoding << "  alpha=" << term.alpha
                    << "  weight=" << term.weight.toString() << "  " << term.toText() << "\n";
        }
    } else if (mode == "numeric") {
        Expansion e = expand(spec, order, t0, cap);
        double total = e.total(t);
        if (format == "json") {
            json terms = json::array();
            for (const auto& term : e.terms) terms.push_back(termToJson(term, t, t0));
            json doc = {{"order", order}, {"t0", t0}, {"t", t}, {"total", total}, {"terms", terms}};
            out << doc.dump(2) << "\n";
        } else if (format == "latex") {
            out << "\\begin{tabular}{lcccc}\n";
            out << "tree & $\\alpha$ & weight & $F$ at $x_0$ & power \\\\\n\\hline\n";
            for (const auto& term : e.terms)
                out << "$" << bracketToLatex(term.tree.encoding) << "$ & " << term.alpha << " & $"
                    << term.weight.num() << "/" << term.weight.den() << "$ & " << term.value
                    << " & " << term.power << " \\\\\n";
            out << "\\end{tabular}\n% total = " << total << "\n";
        } else {
            char line[256];
            for (const auto& term : e.terms) {
                std::snprintf(line, sizeof line,
                              "%-28s alpha=%-4lld weight=%-8s value=%- .12e dt^%d\n",
                              term.tree.encoding.c_str(), term.alpha,
                              term.weight.toString().c_str(), term.value, term.power);
                out << line;
            }
            std::snprintf(line, sizeof line, "total(t=%g) = %.15g\n", t, total);
            out << line;
        }
    } else {
        throw CLI::ValidationError("--mode must be numeric or symbolic");
    }

    OutputSink sink{outPath,
                    makeManifest("expand", specFile,
                                 {{"order", order},
                                  {"t0", t0},
                                  {"t", t},
                                  {"mode", mode},
                                  {"format", format},
                                  {"cap", cap}},
                                 0)};
    sink.deliver(out.str());
    return 0;
}

// ---------------------------------------------------------------------------
// validate

int cmdValidate(const std::string& specFile, int order, double t0, double t, long long mcPaths,
                int mcSteps, std::uint64_t seed, int threads, double tol,
                const std::string& format, const std::string& outPath,
                const std::string& emitManifest, const std::string& checkManifest, int cap) {
    SdeSpec spec = loadSpecFile(specFile);
    SdeSpec ito = toItoSpec(spec);

    struct Check {
        std::string name;
        bool pass;
        double lhs, rhs, bound;
    };
    std::vector<Check> checks;

    Expansion e = expand(spec, order, t0, cap);
    for (int n = 0; n <= order; ++n) {
        double tree = e.coefficient(n);
        double generator = bruteForceCoefficient(n, ito, std::max(cap, order));
        double scale = std::max({1.0, std::abs(tree), std::abs(generator)});
        checks.push_back({"order-" + std::to_string(n) + " coefficient vs generator series",
                          std::abs(tree - generator) <= tol * scale, tree, generator, tol * scale});
    }

    double total = e.total(t);
    MCConfig cfg;
    cfg.paths = mcPaths;
    cfg.steps = mcSteps;
    cfg.seed = seed;
    cfg.threads = threads;
    McResult mc = mcEstimate(spec, t0, t, cfg);
    // remainder scale: the next-order coefficient, doubled for slack
    double next = bruteForceCoefficient(order + 1, ito, order + 1);
    double dtPow = 1.0;
    for (int i = 0; i <= order; ++i) dtPow *= (t - t0);
    double bound = 3.0 * mc.stderr_ + 2.0 * std::abs(next) * dtPow + 1e-12;
    checks.push_back({"monte-carlo mean vs expansion total", std::abs(mc.mean - total) <= bound,
                      mc.mean, total, bound});

    json results = json::array();
    bool allPass = true;
    std::ostringstream out;
    for (const auto& check : checks) {
        allPass = allPass && check.pass;
        results.push_back({{"check", check.name},
                           {"pass", check.pass},
                           {"lhs", check.lhs},
                           {"rhs", check.rhs},
                           {"bound", check.bound}});
        if (format != "json")
            out << (check.pass ? "PASS" : "FAIL") << ": " << check.name << " (|" << check.lhs
                << " - " << check.rhs << "| <= " << check.bound << ")\n";
    }

    json manifest = makeManifest("validate", specFile,
                                 {{"order", order},
                                  {"t0", t0},
                                  {"t", t},
                                  {"mc_paths", mcPaths},
                                  {"mc_steps", mcSteps},
                                  {"tol", tol},
                                  {"cap", cap}},
                                 seed);
    manifest["total"] = total;
    manifest["mc_mean"] = mc.mean;
    manifest["mc_stderr"] = mc.stderr_;

    // compare against a previously emitted manifest (reproducibility gate)
    if (!checkManifest.empty()) {
        std::ifstream in(checkManifest);
        if (!in) {
            std::cerr << "error: cannot open manifest " << checkManifest << "\n";
            return 1;
        }
        json prior = json::parse(in);
        bool hashOk = prior.value("spec_hash", "") == manifest["spec_hash"].get<std::string>();
        bool valuesOk = hashOk && prior.value("total", 0.0) == total &&
                        prior.value("mc_mean", 0.0) == mc.mean;
        allPass = allPass && hashOk && valuesOk;
        if (format != "json") {
            out << (hashOk ? "PASS" : "FAIL") << ": spec hash matches manifest\n";
            out << (valuesOk ? "PASS" : "FAIL") << ": recomputed values match manifest\n";
        }
        results.push_back({{"check", "manifest spec hash"}, {"pass", hashOk}});
        results.push_back({{"check", "manifest values"}, {"pass", valuesOk}});
    }

    manifest["results"] = results;
    if (format == "json") out << manifest.dump(2) << "\n";
    else out << (allPass ? "ALL CHECKS PASSED\n" : "SOME CHECKS FAILED\n");

    OutputSink sink{outPath, manifest};
    sink.deliver(out.str());
    if (!emitManifest.empty()) atomicWrite(emitManifest, manifest.dump(2) + "\n");
    return allPass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// convergence

int cmdConvergence(const std::string& specFile, int order, double t0, std::string gridText,
                   const std::string& referenceName, const std::string& analyticText,
                   long long mcPaths, int mcSteps, std::uint64_t seed, int threads,
                   const std::string& format, const std::string& outPath, int cap) {
    SdeSpec spec = loadSpecFile(specFile);

    std::vector<double> grid;
    std::stringstream ss(gridText);
    std::string piece;
    while (std::getline(ss, piece, ',')) grid.push_back(std::stod(piece));

    Reference ref;
    if (referenceName == "oracle") {
        ref = Reference::oracle();
    } else if (referenceName == "mc") {
        MCConfig cfg;
        cfg.paths = mcPaths;
        cfg.steps = mcSteps;
        cfg.seed = seed;
        cfg.threads = threads;
        ref = Reference::monteCarlo(cfg);
    } else if (referenceName == "analytic") {
        if (analyticText.empty())
            throw CLI::ValidationError("--analytic <expr in x1, x1 = t> is required");
        Expr expr = parseExpr(analyticText, 1);
        ref = Reference::analyticFn([expr](double t) {
            double point[1] = {t};
            return evalAt(expr, point);
        });
    } else {
        throw CLI::ValidationError("--reference must be oracle, mc or analytic");
    }

    ConvergenceResult r = convergenceStudy(spec, order, t0, grid, ref, cap);

    std::ostringstream out;
    if (format == "json") {
        json points = json::array();
        for (const auto& p : r.points)
            points.push_back({{"t", p.t}, {"error", p.error}, {"mc_stderr", p.mcStderr}});
        json doc = {{"points", points}, {"statistical_floor", r.statisticalFloor}};
        if (r.slope) doc["slope"] = *r.slope;
        if (r.statisticalFloor) doc["floor"] = r.floorValue;
        out << doc.dump(2) << "\n";
    } else {
        out << "t,error,mc_stderr\n";
        for (const auto& p : r.points)
            out << p.t << "," << p.error << "," << p.mcStderr << "\n";
        if (r.statisticalFloor)
            out << "statistical floor: monte-carlo noise " << r.floorValue
                << " dominates the model error; no slope\n";
        else if (r.slope)
            out << "slope = " << *r.slope << "\n";
        else
            out << "all errors at float floor; no slope\n";
    }

    OutputSink sink{outPath,
                    makeManifest("convergence", specFile,
                                 {{"order", order},
                                  {"t0", t0},
                                  {"grid", gridText},
                                  {"reference", referenceName},
                                  {"mc_paths", mcPaths},
                                  {"mc_steps", mcSteps},
                                  {"cap", cap}},
                                 seed)};
    sink.deliver(out.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic Taylor expansions of E[f(X_t)] via coloured rooted trees"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // trees
    auto* trees = app.add_subcommand("trees", "enumerate tree classes with cardinalities");
    std::string treesCalculus = "ito";
    int treesOrder = 2;
    std::string treesFormat = "csv";
    int treesCap = kDefaultTreeOrderCap;
    std::string treesOut;
    trees->add_option("--calculus", treesCalculus, "ito or strat");
    trees->add_option("--order", treesOrder, "maximum tree order");
    trees->add_option("--format", treesFormat, "csv, json, dot or latex");
    trees->add_option("--cap", treesCap, "hard order cap override");
    trees->add_option("--output", treesOut, "write here (atomic) instead of stdout");

    // expand
    auto* expandCmd = app.add_subcommand("expand", "truncated expansion of E[f(X_t)]");
    std::string expandSpec;
    int expandOrder = 2;
    double expandT0 = 0.0, expandT = 0.1;
    std::string expandMode = "numeric", expandFormat = "text", expandOut;
    int expandCap = kDefaultExpansionCap;
    expandCmd->add_option("--spec", expandSpec, "problem file")->required();
    expandCmd->add_option("--order", expandOrder, "truncation order n");
    expandCmd->add_option("--t0", expandT0, "expansion point");
    expandCmd->add_option("--t", expandT, "evaluation time");
    expandCmd->add_option("--mode", expandMode, "numeric or symbolic");
    expandCmd->add_option("--format", expandFormat, "text, json or latex");
    expandCmd->add_option("--cap", expandCap, "hard order cap override");
    expandCmd->add_option("--output", expandOut, "write here (atomic) instead of stdout");

    // validate
    auto* validate =
        app.add_subcommand("validate", "cross-check expansion, generator series and Monte Carlo");
    std::string valSpec, valFormat = "text", valOut, valEmit, valCheck;
    int valOrder = 2, valSteps = 256, valThreads = 0, valCap = kDefaultExpansionCap;
    double valT0 = 0.0, valT = 0.25, valTol = 1e-9;
    long long valPaths = 100000;
    std::uint64_t valSeed = 0;
    validate->add_option("--spec", valSpec, "problem file")->required();
    validate->add_option("--order", valOrder, "truncation order n");
    validate->add_option("--t0", valT0, "expansion point");
    validate->add_option("--t", valT, "evaluation time");
    validate->add_option("--mc-paths", valPaths, "Monte Carlo paths");
    validate->add_option("--mc-steps", valSteps, "Euler-Maruyama steps");
    validate->add_option("--seed", valSeed, "random seed");
    validate->add_option("--threads", valThreads, "worker threads (0 = auto)");
    validate->add_option("--tol", valTol, "coefficient comparison tolerance");
    validate->add_option("--format", valFormat, "text or json");
    validate->add_option("--output", valOut, "write here (atomic) instead of stdout");
    validate->add_option("--emit-manifest", valEmit, "record results for later cross-checking");
    validate->add_option("--check-manifest", valCheck, "compare against a recorded manifest");
    validate->add_option("--cap", valCap, "hard order cap override");

    // convergence
    auto* conv = app.add_subcommand("convergence", "empirical order of the truncation error");
    std::string convSpec, convGrid = "0.2,0.1,0.05,0.025,0.0125";
    std::string convReference = "oracle", convAnalytic, convFormat = "text", convOut;
    int convOrder = 2, convSteps = 64, convThreads = 0, convCap = kDefaultExpansionCap;
    double convT0 = 0.0;
    long long convPaths = 100000;
    std::uint64_t convSeed = 0;
    conv->add_option("--spec", convSpec, "problem file")->required();
    conv->add_option("--order", convOrder, "truncation order n");
    conv->add_option("--t0", convT0, "expansion point");
    conv->add_option("--grid", convGrid, "comma list of t values, decreasing toward t0");
    conv->add_option("--reference", convReference, "oracle, mc or analytic");
    conv->add_option("--analytic", convAnalytic, "reference expression in x1 (x1 stands for t)");
    conv->add_option("--mc-paths", convPaths, "Monte Carlo paths per grid point");
    conv->add_option("--mc-steps", convSteps, "Euler-Maruyama steps");
    conv->add_option("--seed", convSeed, "random seed");
    conv->add_option("--threads", convThreads, "worker threads (0 = auto)");
    conv->add_option("--format", convFormat, "text or json");
    conv->add_option("--output", convOut, "write here (atomic) instead of stdout");
    conv->add_option("--cap", convCap, "hard order cap override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (trees->parsed())
            return cmdTrees(treesCalculus, treesOrder, treesFormat, treesCap, treesOut);
        if (expandCmd->parsed())
            return cmdExpand(expandSpec, expandOrder, expandT0, expandT, expandMode, expandFormat,
                             expandCap, expandOut);
        if (validate->parsed())
            return cmdValidate(valSpec, valOrder, valT0, valT, valPaths, valSteps, valSeed,
                               valThreads, valTol, valFormat, valOut, valEmit, valCheck, valCap);
        if (conv->parsed())
            return cmdConvergence(convSpec, convOrder, convT0, convGrid, convReference,
                                  convAnalytic, convPaths, convSteps, convSeed, convThreads,
                                  convFormat, convOut, convCap);
    } catch (const CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const UnknownVariable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IndexError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
