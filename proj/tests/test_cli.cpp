// End-to-end runs of the command-line binary: formats, exit codes, manifests.

#include <doctest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
    int exitCode;
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args) {
    std::string command = std::string(CLI_BINARY) + " " + args + " 2>&1";
    std::array<char, 4096> buffer{};
    std::string output;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::fgets(buffer.data(), buffer.size(), pipe)) output += buffer.data();
    int status = pclose(pipe);
    return RunResult{WEXITSTATUS(status), output};
}

std::string dataFile(const std::string& name) {
    return std::string(TEST_DATA_DIR) + "/" + name;
}

int countLines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("tree tables over both calculi") {
    RunResult ito = run("trees --calculus ito --order 2 --format csv");
    CHECK(ito.exitCode == 0);
    CHECK(countLines(ito.output) == 14); // header + 13 classes
    CHECK(ito.output.find("encoding,order,nDet,nStoch,cardI,cardS") == 0);

    RunResult strat = run("trees --calculus strat --order 2 --format csv");
    CHECK(strat.exitCode == 0);
    CHECK(countLines(strat.output) == 29); // header + 28 classes

    RunResult order1 = run("trees --calculus strat --order 1 --format csv");
    CHECK(countLines(order1.output) == 5); // header + gamma + three order-one classes

    RunResult order0 = run("trees --calculus ito --order 0 --format csv");
    CHECK(countLines(order0.output) == 2);
    CHECK(order0.output.find("\"g\",0,0,0,1,1") != std::string::npos);

    RunResult json = run("trees --calculus ito --order 1 --format json");
    CHECK(json.exitCode == 0);
    CHECK(json.output.find("\"cardI\"") != std::string::npos);
}

TEST_CASE("cap violations exit with code two") {
    RunResult r = run("trees --calculus ito --order 6");
    CHECK(r.exitCode == 2);
    RunResult e = run("expand --spec " + dataFile("gbm.spec") + " --order 9");
    CHECK(e.exitCode == 2);
    // explicit override lifts the cap
    RunResult lifted = run("trees --calculus ito --order 3 --cap 3 --format csv");
    CHECK(lifted.exitCode == 0);
}

TEST_CASE("malformed problem files exit with code three") {
    std::string bad = std::string(TEST_DATA_DIR) + "/bad.spec";
    {
        std::ofstream out(bad);
        out << "d = 1\nm = 1\ncalculus = ito\na1 = x1 +\nf = x1\nx0 = 1\n";
    }
    RunResult r = run("expand --spec " + bad);
    CHECK(r.exitCode == 3);
    std::remove(bad.c_str());
}

TEST_CASE("numeric expansion of the geometric fixture") {
    RunResult r = run("expand --spec " + dataFile("gbm.spec") + " --order 2 --t 0.1");
    CHECK(r.exitCode == 0);
    CHECK(r.output.find("total(t=0.1) = 1.05125") != std::string::npos);
}

TEST_CASE("symbolic expansion lists the quartic-noise differential") {
    RunResult r = run("expand --spec " + dataFile("gbm.spec") + " --order 2 --mode symbolic");
    CHECK(r.exitCode == 0);
    CHECK(r.output.find("(1/8)*b^4*f''''") != std::string::npos);
    RunResult latex =
        run("expand --spec " + dataFile("gbm.spec") + " --order 1 --mode symbolic --format latex");
    CHECK(latex.output.find("\\tfrac{1}{2}") != std::string::npos);
}

TEST_CASE("validation pipeline and manifest cross-check") {
    std::string manifest = std::string(TEST_DATA_DIR) + "/run.manifest.json";
    RunResult good = run("validate --spec " + dataFile("gbm.spec") +
                         " --order 2 --t 0.25 --mc-paths 20000 --mc-steps 64 --seed 7" +
                         " --emit-manifest " + manifest);
    CHECK(good.exitCode == 0);
    CHECK(good.output.find("ALL CHECKS PASSED") != std::string::npos);

    // identical re-run reproduces the recorded values bit for bit
    RunResult replay = run("validate --spec " + dataFile("gbm.spec") +
                           " --order 2 --t 0.25 --mc-paths 20000 --mc-steps 64 --seed 7" +
                           " --check-manifest " + manifest);
    CHECK(replay.exitCode == 0);
    CHECK(replay.output.find("PASS: recomputed values match manifest") != std::string::npos);

    // a corrupted drift no longer matches the recorded run
    RunResult corrupted = run("validate --spec " + dataFile("gbm_corrupted.spec") +
                              " --order 2 --t 0.25 --mc-paths 20000 --mc-steps 64 --seed 7" +
                              " --check-manifest " + manifest);
    CHECK(corrupted.exitCode == 1);
    CHECK(corrupted.output.find("FAIL") != std::string::npos);
    std::remove(manifest.c_str());
}

TEST_CASE("trivial order-zero validation passes") {
    RunResult r = run("validate --spec " + dataFile("gbm.spec") +
                      " --order 0 --t 0.05 --mc-paths 5000 --mc-steps 32 --seed 3");
    CHECK(r.exitCode == 0);
}

TEST_CASE("convergence table with slope line") {
    RunResult r = run("convergence --spec " + dataFile("ode.spec") +
                      " --order 3 --reference oracle --cap 5 --format json");
    CHECK(r.exitCode == 0);
    CHECK(r.output.find("\"slope\"") != std::string::npos);
}

TEST_CASE("every command has a machine-readable mode") {
    for (const std::string args :
         {std::string("trees --calculus strat --order 1 --format json"),
          "expand --spec " + dataFile("gbm.spec") + " --order 1 --format json",
          "expand --spec " + dataFile("gbm.spec") + " --order 1 --mode symbolic --format json",
          "validate --spec " + dataFile("gbm.spec") +
              " --order 1 --t 0.1 --mc-paths 2000 --mc-steps 16 --format json",
          "convergence --spec " + dataFile("ode.spec") +
              " --order 2 --reference oracle --format json"}) {
        RunResult r = run(args);
        CHECK(r.exitCode == 0);
        // fully parseable JSON documents
        nlohmann::json parsed;
        CHECK_NOTHROW(parsed = nlohmann::json::parse(r.output));
        CHECK_FALSE(parsed.empty());
    }
}

TEST_CASE("atomic output with sibling manifest") {
    std::string out = std::string(TEST_DATA_DIR) + "/trees.csv";
    RunResult r = run("trees --calculus ito --order 1 --format csv --output " + out);
    CHECK(r.exitCode == 0);
    {
        std::ifstream in(out);
        REQUIRE(in.good());
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(countLines(buf.str()) == 4);
    }
    {
        std::ifstream in(out + ".manifest.json");
        REQUIRE(in.good());
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str().find("\"command\": \"trees\"") != std::string::npos);
    }
    std::remove(out.c_str());
    std::remove((out + ".manifest.json").c_str());
}
