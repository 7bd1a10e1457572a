#include <doctest.h>

#include "fixtures.hpp"

#include <windlog/generators.hpp>
#include <windlog/io.hpp>
#include <windlog/lang.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

using namespace windlog;
using testing::atoms;

namespace {

std::vector<GroundAtom> facts(std::string text) {
    auto s = atoms(std::move(text));
    return {s.begin(), s.end()};
}

std::filesystem::path scratch_file(std::string const &name, std::string const &content) {
    auto dir = std::filesystem::temp_directory_path() / "windlog-io-test";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream(path) << content;
    return path;
}

std::size_t count_prefix(std::vector<GroundAtom> const &tick, std::string_view pred) {
    return static_cast<std::size_t>(
        std::count_if(tick.begin(), tick.end(), [&](GroundAtom const &a) { return a.predicate.str() == pred; }));
}

} // namespace

TEST_CASE("ticks are delimited by end markers") {
    auto ticks = io::read_stream("a(1).\n#end.\nb(2).\n#end.\n");
    REQUIRE(ticks.size() == 2);
    CHECK(ticks[0] == facts("a(1)."));
    CHECK(ticks[1] == facts("b(2)."));

    auto commented = io::read_stream("% header\n\na(1).\n  % note\n#end.\n#end.\n");
    REQUIRE(commented.size() == 2);
    CHECK(commented[0] == facts("a(1)."));
    CHECK(commented[1].empty());
}

TEST_CASE("malformed lines and partial ticks") {
    std::vector<std::string> warnings;
    auto warn = [&](std::string const &w) { warnings.push_back(w); };
    auto ticks = io::read_stream("a(1).\nb(X).\n#end.\nc(3).\n", false, warn);
    REQUIRE(ticks.size() == 1);
    CHECK(ticks[0] == facts("a(1)."));
    REQUIRE(warnings.size() == 2);
    CHECK(warnings[0].find("2") != std::string::npos);
    CHECK(warnings[1].find("incomplete") != std::string::npos);

    CHECK_THROWS_AS(io::read_stream("a(1).\nb(X).\n#end.\n", true), ParseError);
}

TEST_CASE("file source") {
    auto path = scratch_file("two.stream", "a(1).\n#end.\nb(2).\n#end.\n");
    io::FileSource source(path.string());
    auto first = source.next();
    REQUIRE(first);
    CHECK(first->facts == facts("a(1)."));
    REQUIRE(source.next());
    CHECK_FALSE(source.next());
    CHECK_THROWS_AS(io::FileSource("/nonexistent/windlog.stream"), IoError);
}

TEST_CASE("paced file source releases ticks on schedule") {
    auto path = scratch_file("paced.stream", "#end.\n#end.\n#end.\n");
    io::FileSource source(path.string(), std::chrono::milliseconds(40));
    auto start = engine::Clock::now();
    while (source.next()) { }
    CHECK(engine::Clock::now() - start >= std::chrono::milliseconds(80));
}

TEST_CASE("tcp source receives ticks sent over a connection") {
    io::TcpSource source(0);
    REQUIRE(source.bound_port() != 0);
    std::vector<std::vector<GroundAtom>> ticks{facts("a(1)."), facts("b(2). b(3).")};
    std::thread sender([&] { io::send_stream("127.0.0.1", source.bound_port(), ticks); });
    std::vector<std::vector<GroundAtom>> received;
    while (auto t = source.next()) { received.push_back(t->facts); }
    sender.join();
    CHECK(received == ticks);
}

TEST_CASE("tcp ticks are stamped when their end marker arrives") {
    io::TcpSource source(0);
    auto heavy = gen::heavy_join(2, 500, 3, 7);
    std::thread sender(
        [&] { io::send_stream("127.0.0.1", source.bound_port(), heavy.ticks, std::chrono::milliseconds(100)); });
    std::vector<engine::ArrivedTick> got;
    while (auto t = source.next()) { got.push_back(std::move(*t)); }
    sender.join();
    REQUIRE(got.size() == 3);
    for (auto const &t : got) { CHECK(t.facts.size() == 500); }
    auto gap = got[2].arrival - got[1].arrival;
    CHECK(gap >= std::chrono::milliseconds(60));
    CHECK(gap <= std::chrono::milliseconds(400));
}

TEST_CASE("cancel unblocks a waiting tcp source") {
    io::TcpSource source(0);
    std::thread canceller([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(150));
        source.cancel();
    });
    CHECK_FALSE(source.next());
    canceller.join();
}

TEST_CASE("output formats") {
    engine::TickOutput out;
    out.tick = 3;
    out.atoms = atoms("b(2). a(x). a(1).");
    CHECK(io::format_text(out) == "@timepoint 3\na(1)\na(x)\nb(2)\n\n");
    CHECK(io::format_jsonl(out) == std::string(R"j({"atoms":["a(1)","a(x)","b(2)"],"tick":3})j") + "\n");

    out.failed = true;
    out.error = "division by zero";
    CHECK(io::format_text(out).find("% failed: division by zero") != std::string::npos);
    CHECK(io::format_jsonl(out).find(R"j("failed":true)j") != std::string::npos);
}

TEST_CASE("metrics rows") {
    std::ostringstream csv;
    io::MetricsWriter w(csv);
    w.write({.tick = 0, .arrival_ns = 10, .emit_ns = 25, .latency_ns = 15, .queue_length = 1});
    w.write({.tick = 1, .arrival_ns = 30, .emit_ns = 31, .latency_ns = 1});
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "tick,arrival_ns,emit_ns,latency_ns,queue_length,ground_rules_total,ground_rules_new");
    std::getline(in, line);
    CHECK(line == "0,10,25,15,1,0,0");
    std::size_t rows = 1;
    while (std::getline(in, line)) { ++rows; }
    CHECK(rows == 2);
}

TEST_CASE("heavy join workload") {
    auto w = gen::heavy_join(2, 50, 30, 1);
    CHECK(w.program == "a(X,Y) :- b(X,Z) in [2], c(Z,Y) in [2].\n");
    REQUIRE(w.ticks.size() == 30);
    for (auto const &t : w.ticks) {
        CHECK(count_prefix(t, "b") == 25);
        CHECK(count_prefix(t, "c") == 25);
    }
    auto tiny = gen::heavy_join(2, 2, 1, 1);
    REQUIRE(tiny.ticks.size() == 1);
    CHECK(count_prefix(tiny.ticks[0], "b") == 1);
    CHECK(count_prefix(tiny.ticks[0], "c") == 1);
    CHECK_THROWS_AS(gen::heavy_join(2, 3, 1, 1), std::invalid_argument);
    CHECK_NOTHROW(lang::load_program(w.program));
}

TEST_CASE("photovoltaic workload") {
    auto w = gen::pvs({.rows = 5, .cols = 5, .ticks = 10, .faults = {gen::parse_fault("col:2@3-5")}});
    CHECK(w.program == testing::pvs_text);
    CHECK(w.background.find("link(cea,p0_0).") != std::string::npos);
    CHECK(w.background.find("energyThreshold(10).") != std::string::npos);
    CHECK(w.ticks[0].size() == 25);
    CHECK(w.ticks[3].size() == 20);
    CHECK(w.ticks[6].size() == 25);

    auto steady = gen::pvs({.rows = 2, .cols = 2, .ticks = 6, .steady_from = 3});
    CHECK(steady.ticks[3] == steady.ticks[2]);
    CHECK(steady.ticks[5] == steady.ticks[2]);

    auto f = gen::parse_fault("p1_2+p0_0@4-9");
    CHECK(f.panels.size() == 2);
    CHECK(f.first == 4);
    CHECK(f.last == 9);
    CHECK_THROWS_AS(gen::parse_fault("q1@1-2"), std::invalid_argument);
    CHECK_THROWS_AS(gen::parse_fault("col:1@5-2"), std::invalid_argument);
    auto outside = gen::parse_fault("p7_1@1-2");
    CHECK_THROWS_AS(gen::pvs({.rows = 5, .cols = 5, .faults = {outside}}), std::invalid_argument);
    CHECK_THROWS_AS(gen::pvs({.rows = 1, .cols = 5}), std::invalid_argument);
}

TEST_CASE("caching workload") {
    auto one = gen::caching(1, 60, 1);
    CHECK_NOTHROW(lang::load_program(one.program));
    CHECK(one.ticks.size() == 60);
    auto many = gen::caching(500, 2, 1);
    for (auto const &t : many.ticks) { CHECK(t.size() == 500); }
    CHECK_THROWS_AS(gen::caching(0, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen::caching(501, 5, 1), std::invalid_argument);
}
