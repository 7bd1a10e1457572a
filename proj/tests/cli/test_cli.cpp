#include <doctest.h>

#include "cli.hpp"
#include "fixtures.hpp"

#include <windlog/generators.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace windlog;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result windlog_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "windlog");
    std::vector<char const *> argv;
    for (auto const &a : args) { argv.push_back(a.c_str()); }
    std::ostringstream out;
    std::ostringstream err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path dir() {
    auto d = fs::temp_directory_path() / "windlog-cli-test";
    fs::create_directories(d);
    return d;
}

std::string file(std::string const &name, std::string const &content) {
    auto path = dir() / name;
    std::ofstream(path) << content;
    return path.string();
}

std::string slurp(std::string const &path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t lines(std::string const &text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("exit codes") {
    auto stream = file("one.stream", "b(5).\n#end.\n");
    CHECK(windlog_cli({"check", (dir() / "missing.wl").string()}).code == 5);
    CHECK(windlog_cli({"check", file("parse.wl", "a :- b in [0].\n")}).code == 2);
    CHECK(windlog_cli({"check", file("safety.wl", "a(X) :- b(Y).\n")}).code == 3);
    CHECK(windlog_cli({"check", file("strat.wl", "a :- not a.\n")}).code == 4);
    CHECK(windlog_cli({"run", file("strat2.wl", "a :- not a.\n"), "--input", "file:" + stream}).code == 4);
    auto copy = file("ok.wl", "c(X) :- b(X).\n");
    CHECK(windlog_cli({"run", copy, "--input", "file:/nonexistent/x.stream"}).code == 5);
    CHECK(windlog_cli({"run", copy}).code == 2);
    CHECK(windlog_cli({"frobnicate"}).code == 2);

    auto div = file("div.wl", "q(Y) :- p(X), Y = 10 / X.\n");
    auto zero = file("zero.stream", "p(0).\n#end.\np(5).\n#end.\n");
    CHECK(windlog_cli({"run", div, "--input", "file:" + zero}).code == 1);
    auto skipped = windlog_cli({"run", div, "--input", "file:" + zero, "--skip-failed-ticks"});
    CHECK(skipped.code == 0);
    CHECK(skipped.out.find("q(2)") != std::string::npos);

    auto many = file("many.stream", "b(1).\nb(2).\nb(3).\n#end.\n");
    CHECK(windlog_cli({"run", copy, "--input", "file:" + many, "--max-ground-rules", "2"}).code == 7);
}

TEST_CASE("check summary") {
    auto r = windlog_cli({"check", file("p4.wl", testing::p4_text)});
    CHECK(r.code == 0);
    CHECK(r.out == "ok: 4 rules, 3 components, 2 subprograms, 3 window operators\n");
}

TEST_CASE("run prints each tick") {
    auto program = file("p2.wl", "c(X) :- b(X).\nd(X) :- c(X) in [1].\n");
    auto stream = file("p2.stream", "b(5).\n#end.\nc(7).\n#end.\n");
    auto r = windlog_cli({"run", program, "--input", "file:" + stream, "--oracle-check"});
    CHECK(r.code == 0);
    CHECK(r.out == "@timepoint 0\nb(5)\nc(5)\nd(5)\n\n@timepoint 1\nc(7)\nd(5)\nd(7)\n\n");
}

TEST_CASE("scratch and incremental runs write identical outputs") {
    auto d = dir() / "pvs";
    REQUIRE(windlog_cli({"gen", "pvs", "--out", d.string(), "--ticks", "25", "--fault", "col:1@5-15"}).code == 0);
    auto base = std::vector<std::string>{"run",          (d / "program.wl").string(),
                                         "--input",      "file:" + (d / "stream.txt").string(),
                                         "--background", (d / "background.txt").string()};
    auto inc = base;
    inc.insert(inc.end(), {"--output", "file:" + (d / "inc.out").string(), "--metrics", (d / "inc.csv").string(),
                           "--oracle-check"});
    auto scr = base;
    scr.insert(scr.end(), {"--mode", "scratch", "--output", "file:" + (d / "scr.out").string(), "--metrics",
                           (d / "scr.csv").string()});
    REQUIRE(windlog_cli(inc).code == 0);
    REQUIRE(windlog_cli(scr).code == 0);
    auto a = slurp((d / "inc.out").string());
    CHECK(a == slurp((d / "scr.out").string()));
    CHECK(a.find("alert") != std::string::npos);
    // One header plus one row per accepted tick.
    CHECK(lines(slurp((d / "inc.csv").string())) == 26);
    CHECK(lines(slurp((d / "scr.csv").string())) == 26);
}

TEST_CASE("oracle subcommand matches run") {
    auto program = file("p4run.wl", testing::p4_text);
    auto stream = file("p4.stream", "b(1).\nc(2).\n#end.\nb(1).\nc(2).\n#end.\nb(1).\nc(3).\n#end.\n");
    auto run = windlog_cli({"run", program, "--input", "file:" + stream, "--output-format", "jsonl"});
    auto oracle = windlog_cli({"oracle", program, "--input", stream, "--output-format", "jsonl"});
    CHECK(run.code == 0);
    CHECK(oracle.code == 0);
    CHECK(run.out == oracle.out);
    CHECK(lines(run.out) == 3);
}

TEST_CASE("gen writes workloads") {
    auto d = dir() / "hj";
    REQUIRE(windlog_cli({"gen", "heavy-join", "--out", d.string(), "--w", "2", "--events", "50", "--ticks", "30"})
                .code == 0);
    auto stream = slurp((d / "stream.txt").string());
    CHECK(lines(stream) == 30 * 51);
    CHECK(slurp((d / "program.wl").string()) == "a(X,Y) :- b(X,Z) in [2], c(Z,Y) in [2].\n");

    auto c = dir() / "cache";
    CHECK(windlog_cli({"gen", "caching", "--out", c.string(), "--contents", "0"}).code == 2);
    REQUIRE(windlog_cli({"gen", "caching", "--out", c.string(), "--contents", "500", "--ticks", "2"}).code == 0);
    CHECK(lines(slurp((c / "stream.txt").string())) == 2 * 501);
    CHECK(windlog_cli({"gen", "pvs", "--out", c.string(), "--fault", "p9_9@1-2"}).code == 2);
}

TEST_CASE("explain") {
    auto program = file("p4explain.wl", testing::p4_text);
    auto all = windlog_cli({"explain", program});
    CHECK(all.code == 0);
    CHECK(all.out.find("aux__1__b") != std::string::npos);
    auto dot = windlog_cli({"explain", program, "--what", "sdg", "--format", "dot"});
    CHECK(dot.code == 0);
    CHECK(dot.out.find("digraph") != std::string::npos);
}
