#include "cli.hpp"

#include <windlog/analysis.hpp>
#include <windlog/engine.hpp>
#include <windlog/generators.hpp>
#include <windlog/io.hpp>
#include <windlog/lang.hpp>
#include <windlog/oracle.hpp>
#include <windlog/rewrite.hpp>

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

namespace windlog::cli {

namespace {

// Usage errors share the parse exit code (2), as most command-line tools do.
constexpr int usage_error = static_cast<int>(ExitCode::Parse);

Program load(std::string const &path) { return lang::load_program(io::read_file(path)); }

std::vector<GroundAtom> load_background(std::string const &path) {
    if (path.empty()) { return {}; }
    return lang::parse_facts(io::read_file(path));
}

std::chrono::nanoseconds period_ns(double ms) {
    return std::chrono::nanoseconds(static_cast<std::int64_t>(ms * 1e6));
}

// Warnings arrive from the ingestion thread as well.
class Logger {
public:
    explicit Logger(std::ostream &err) : err_(err) { }
    void warn(std::string const &message) {
        std::lock_guard lock(mutex_);
        err_ << "warning: " << message << '\n';
    }
    void info(std::string const &message) {
        std::lock_guard lock(mutex_);
        err_ << message << '\n';
    }

private:
    std::ostream &err_;
    std::mutex mutex_;
};

class Output {
public:
    Output(std::string const &target, std::ostream &fallback) : stream_(&fallback) {
        if (target == "stdout" || target.empty()) { return; }
        auto path = target.starts_with("file:") ? target.substr(5) : target;
        file_.open(path, std::ios::binary);
        if (!file_) { throw IoError("cannot write " + path); }
        stream_ = &file_;
    }
    std::ostream &stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream *stream_;
};

// Keeps a copy of each tick's input for the oracle check.
class RecordingSource : public engine::TickSource {
public:
    explicit RecordingSource(engine::TickSource &inner) : inner_(inner) { }
    std::optional<engine::ArrivedTick> next() override {
        auto tick = inner_.next();
        if (tick) {
            std::lock_guard lock(mutex_);
            inputs_.push_back(tick->facts);
        }
        return tick;
    }
    void cancel() override { inner_.cancel(); }
    std::vector<GroundAtom> pop() {
        std::lock_guard lock(mutex_);
        auto facts = std::move(inputs_.front());
        inputs_.pop_front();
        return facts;
    }

private:
    engine::TickSource &inner_;
    std::mutex mutex_;
    std::deque<std::vector<GroundAtom>> inputs_;
};

std::string difference(AtomSet const &a, AtomSet const &b) {
    std::string out;
    for (auto const &x : a) {
        if (!b.contains(x)) { out += " " + x.to_string(); }
    }
    return out.empty() ? " (none)" : out;
}

struct RunArgs {
    std::string program;
    std::string input;
    std::string background;
    std::string output = "stdout";
    std::string format = "text";
    std::string metrics;
    std::string mode = "incremental";
    bool oracle_check = false;
    double period_ms = 0;
    bool skip_failed = false;
    bool strict = false;
    std::size_t max_ground_rules = 0;
    std::size_t queue_warn = 1000;
};

int cmd_run(RunArgs const &a, std::ostream &out, Logger &log) {
    auto program = load(a.program);
    auto background = load_background(a.background);
    engine::Options opts;
    opts.mode = a.mode == "scratch" ? engine::Mode::Scratch : engine::Mode::Incremental;
    opts.max_ground_rules = a.max_ground_rules;
    opts.skip_failed_ticks = a.skip_failed;
    engine::Engine eng(program, background, opts);

    io::Warn warn = [&](std::string const &m) { log.warn(m); };
    std::unique_ptr<engine::TickSource> source;
    if (a.input == "stdin") {
        source = std::make_unique<io::StdinSource>(a.strict, warn);
    } else if (a.input.starts_with("tcp:")) {
        auto port = std::stoul(a.input.substr(4));
        if (port > 65535) { throw std::invalid_argument("bad port in " + a.input); }
        auto tcp = std::make_unique<io::TcpSource>(static_cast<std::uint16_t>(port), a.strict, warn);
        log.info("listening on 127.0.0.1:" + std::to_string(tcp->bound_port()));
        source = std::move(tcp);
    } else if (a.input.starts_with("file:")) {
        source = std::make_unique<io::FileSource>(a.input.substr(5), period_ns(a.period_ms), a.strict, warn);
    } else {
        throw std::invalid_argument("--input must be file:PATH, stdin or tcp:PORT");
    }

    Output output(a.output, out);
    io::Sink sink(output.stream(), a.format == "jsonl" ? io::OutputFormat::Jsonl : io::OutputFormat::Text);
    std::optional<std::ofstream> metrics_file;
    std::optional<io::MetricsWriter> metrics;
    if (!a.metrics.empty()) {
        metrics_file.emplace(a.metrics, std::ios::binary);
        if (!*metrics_file) { throw IoError("cannot write " + a.metrics); }
        metrics.emplace(*metrics_file);
    }

    std::optional<RecordingSource> recorder;
    std::optional<oracle::ModelBuilder> reference;
    if (a.oracle_check) {
        recorder.emplace(*source);
        reference.emplace(program, analysis::check_stratifiable(program));
    }
    bool queue_warned = false;
    auto on_tick = [&](engine::TickOutput const &tick, engine::MetricsRecord const &record) {
        sink.write(tick);
        if (metrics) { metrics->write(record); }
        if (record.queue_length >= a.queue_warn && !queue_warned) {
            log.warn("input queue reached " + std::to_string(record.queue_length) + " ticks");
            queue_warned = true;
        } else if (record.queue_length < a.queue_warn / 2) {
            queue_warned = false;
        }
        if (reference) {
            auto facts = recorder->pop();
            AtomSet input(facts.begin(), facts.end());
            input.insert(background.begin(), background.end());
            if (tick.failed) {
                reference->push_failed(std::move(input));
                return;
            }
            auto want = reference->push(std::move(input));
            if (want != tick.atoms) {
                throw Error(ExitCode::Divergence, "oracle divergence at tick " + std::to_string(tick.tick) +
                                                      "\n  engine only:" + difference(tick.atoms, want) +
                                                      "\n  oracle only:" + difference(want, tick.atoms));
            }
        }
    };
    engine::TickSource &feed = recorder ? static_cast<engine::TickSource &>(*recorder) : *source;
    auto summary = engine::run(eng, feed, on_tick);
    std::ostringstream s;
    s << "accepted " << summary.accepted << " ticks (" << summary.failed << " failed), total "
      << summary.total_seconds << " s, evaluation " << summary.eval_seconds << " s, latency mean "
      << summary.latency_mean_ns / 1e6 << " ms p50 " << summary.latency_p50_ns / 1e6 << " ms p95 "
      << summary.latency_p95_ns / 1e6 << " ms max " << summary.latency_max_ns / 1e6 << " ms, max queue "
      << summary.max_queue_length;
    if (a.oracle_check) { s << ", oracle agreed on every tick"; }
    log.info(s.str());
    return 0;
}

int cmd_check(std::string const &path, std::ostream &out) {
    auto program = load(path);
    auto plan = analysis::plan(program);
    auto flat = rewrite::flatten(program);
    out << "ok: " << program.rules.size() << " rules, " << plan.scg.components.size() << " components, "
        << plan.subprograms.size() << " subprograms, " << flat.tau.entries.size() << " window operators\n";
    return 0;
}

std::string node_label(analysis::Sdg const &sdg, std::size_t i) { return sdg.nodes[i].to_string(); }

void explain_sdg(analysis::SplitPlan const &plan, bool dot, std::ostream &out) {
    auto const &sdg = plan.sdg;
    if (dot) {
        out << "digraph sdg {\n";
        for (std::size_t i = 0; i < sdg.nodes.size(); ++i) { out << "  \"" << node_label(sdg, i) << "\";\n"; }
        for (auto const &arc : sdg.arcs) {
            out << "  \"" << node_label(sdg, arc.from) << "\" -> \"" << node_label(sdg, arc.to) << "\"";
            if (arc.windowed || arc.non_harmless) {
                out << " [";
                if (arc.windowed) { out << "label=\"<\""; }
                if (arc.non_harmless) { out << (arc.windowed ? ", " : "") << "style=dashed"; }
                out << "]";
            }
            out << ";\n";
        }
        out << "}\n";
        return;
    }
    out << "% stream dependency graph (< windowed, ! non-harmless)\n";
    for (auto const &arc : sdg.arcs) {
        out << node_label(sdg, arc.from) << " -> " << node_label(sdg, arc.to);
        if (arc.windowed) { out << " <"; }
        if (arc.non_harmless) { out << " !"; }
        out << '\n';
    }
}

void explain_scg(analysis::SplitPlan const &plan, bool dot, std::ostream &out) {
    auto const &scg = plan.scg;
    auto name = [&](std::size_t c) { return analysis::component_name(plan.sdg, scg, c); };
    if (dot) {
        out << "digraph scg {\n";
        for (std::size_t c = 0; c < scg.components.size(); ++c) { out << "  \"" << name(c) << "\";\n"; }
        for (auto const &arc : scg.arcs) {
            out << "  \"" << name(arc.from) << "\" -> \"" << name(arc.to) << "\"";
            if (arc.windowed) { out << " [label=\"<\"]"; }
            out << ";\n";
        }
        out << "}\n";
        return;
    }
    out << "% stream component graph\n";
    for (std::size_t c = 0; c < scg.components.size(); ++c) {
        out << name(c) << (scg.internal_windowed[c] ? " (windowed cycle)" : "") << '\n';
    }
    for (auto const &arc : scg.arcs) {
        out << name(arc.from) << " -> " << name(arc.to) << (arc.windowed ? " <" : "") << '\n';
    }
}

void explain_plan(analysis::SplitPlan const &plan, std::ostream &out) {
    auto name = [&](std::size_t c) { return analysis::component_name(plan.sdg, plan.scg, c); };
    out << "% processing order\n";
    for (std::size_t i = 0; i < plan.ordering.size(); ++i) { out << (i ? " " : "") << name(plan.ordering[i]); }
    out << "\n% subprograms (* streaming-recursive)\n";
    for (std::size_t m = 0; m < plan.subprograms.size(); ++m) {
        auto const &sp = plan.subprograms[m];
        out << '{';
        for (std::size_t i = 0; i < sp.predicates.size(); ++i) {
            out << (i ? "," : "") << sp.predicates[i].name.str();
        }
        out << "}:";
        for (std::size_t i = 0; i < sp.rules.size(); ++i) {
            out << " r" << sp.rules[i] + 1 << (sp.streaming_recursive[i] ? "*" : "");
        }
        out << '\n';
    }
}

void explain_flat(rewrite::FlattenResult const &flat, std::ostream &out) {
    out << "% flat program\n" << to_string(flat.flat);
}

void explain_tau(rewrite::FlattenResult const &flat, std::ostream &out) {
    out << "% window operators\n";
    for (auto const &e : flat.tau.entries) {
        out << e.key().to_string() << " <- " << rewrite::to_string(e.signature) << '\n';
    }
}

int cmd_explain(std::string const &path, std::string const &what, std::string const &format,
                std::optional<std::uint64_t> seed, std::ostream &out) {
    auto program = lang::load_program(io::read_file(path));
    auto plan = analysis::plan(program, seed);
    auto flat = rewrite::flatten(program);
    bool dot = format == "dot";
    bool all = what == "all";
    if (dot && !(all || what == "sdg" || what == "scg")) {
        throw std::invalid_argument("--format dot applies to sdg and scg only");
    }
    if (all || what == "sdg") { explain_sdg(plan, dot, out); }
    if (all || what == "scg") { explain_scg(plan, dot, out); }
    if (dot) { return 0; }
    if (all || what == "plan") { explain_plan(plan, out); }
    if (all || what == "flat") { explain_flat(flat, out); }
    if (all || what == "tau") { explain_tau(flat, out); }
    return 0;
}

void write_file(std::filesystem::path const &path, std::string const &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) { throw IoError("cannot write " + path.string()); }
}

int write_workload(gen::Workload const &w, std::string const &dir, Logger &log) {
    std::filesystem::path root(dir);
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) { throw IoError("cannot create " + dir + ": " + ec.message()); }
    write_file(root / "program.wl", w.program);
    write_file(root / "stream.txt", gen::stream_text(w.ticks));
    if (!w.background.empty()) { write_file(root / "background.txt", w.background); }
    log.info("wrote " + std::to_string(w.ticks.size()) + " ticks to " + dir);
    return 0;
}

int cmd_oracle(std::string const &path, std::string const &input, std::string const &bg_path,
               std::string const &target, std::string const &format, std::ostream &out, Logger &log) {
    auto program = load(path);
    auto background = load_background(bg_path);
    io::Warn warn = [&](std::string const &m) { log.warn(m); };
    auto ticks = io::read_stream(io::read_file(input), false, warn);
    oracle::ModelBuilder builder(program, analysis::check_stratifiable(program));
    Output output(target, out);
    io::Sink sink(output.stream(), format == "jsonl" ? io::OutputFormat::Jsonl : io::OutputFormat::Text);
    for (std::size_t n = 0; n < ticks.size(); ++n) {
        AtomSet s(ticks[n].begin(), ticks[n].end());
        s.insert(background.begin(), background.end());
        engine::TickOutput tick;
        tick.tick = n;
        tick.atoms = builder.push(std::move(s));
        sink.write(tick);
    }
    return 0;
}

int cmd_send(std::string const &to, std::string const &input, double period_ms, Logger &log) {
    std::string host = "127.0.0.1";
    std::string port = to;
    if (auto colon = to.rfind(':'); colon != std::string::npos) {
        host = to.substr(0, colon);
        port = to.substr(colon + 1);
    }
    io::Warn warn = [&](std::string const &m) { log.warn(m); };
    auto ticks = io::read_stream(io::read_file(input), false, warn);
    auto p = std::stoul(port);
    if (p == 0 || p > 65535) { throw std::invalid_argument("bad port " + port); }
    io::send_stream(host, static_cast<std::uint16_t>(p), ticks, period_ns(period_ms));
    log.info("sent " + std::to_string(ticks.size()) + " ticks");
    return 0;
}

} // namespace

int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Stream reasoning over logic programs with window literals", "windlog"};
    app.require_subcommand(1);
    Logger log(err);

    RunArgs run;
    auto *run_cmd = app.add_subcommand("run", "Evaluate a program over a stream of ticks");
    run_cmd->add_option("program", run.program, "Program file")->required();
    run_cmd->add_option("--input", run.input, "file:PATH, stdin or tcp:PORT")->required();
    run_cmd->add_option("--background", run.background, "Facts added to every tick");
    run_cmd->add_option("--output", run.output, "stdout or file:PATH");
    run_cmd->add_option("--output-format", run.format)->check(CLI::IsMember({"text", "jsonl"}));
    run_cmd->add_option("--metrics", run.metrics, "Per-tick metrics CSV");
    run_cmd->add_option("--mode", run.mode)->check(CLI::IsMember({"incremental", "scratch"}));
    run_cmd->add_flag("--oracle-check", run.oracle_check, "Compare every tick with the reference evaluator");
    run_cmd->add_option("--period", run.period_ms, "Replay period for file input, in ms")->check(CLI::NonNegativeNumber);
    run_cmd->add_flag("--skip-failed-ticks", run.skip_failed, "Record evaluation errors and continue");
    run_cmd->add_flag("--strict", run.strict, "Abort on malformed input lines");
    run_cmd->add_option("--max-ground-rules", run.max_ground_rules, "Ground rule cap (0 = none)");
    run_cmd->add_option("--queue-warn", run.queue_warn, "Warn when this many ticks are waiting");

    std::string check_path;
    auto *check_cmd = app.add_subcommand("check", "Parse and validate a program");
    check_cmd->add_option("program", check_path)->required();

    std::string explain_path;
    std::string explain_what = "all";
    std::string explain_format = "text";
    std::optional<std::uint64_t> explain_seed;
    auto *explain_cmd = app.add_subcommand("explain", "Show dependency graphs, processing plan and flat program");
    explain_cmd->add_option("program", explain_path)->required();
    explain_cmd->add_option("--what", explain_what)->check(CLI::IsMember({"all", "sdg", "scg", "plan", "flat", "tau"}));
    explain_cmd->add_option("--format", explain_format)->check(CLI::IsMember({"text", "dot"}));
    explain_cmd->add_option("--seed", explain_seed, "Pick a random valid processing order");

    auto *gen_cmd = app.add_subcommand("gen", "Generate benchmark workloads");
    gen_cmd->require_subcommand(1);
    std::string out_dir;
    std::uint64_t gen_seed = 1;
    std::size_t gen_ticks = 30;
    std::uint32_t hj_w = 2;
    std::size_t hj_events = 50;
    auto *hj = gen_cmd->add_subcommand("heavy-join", "a(X,Y) :- b(X,Z) in [w], c(Z,Y) in [w].");
    hj->add_option("--w", hj_w)->check(CLI::PositiveNumber);
    hj->add_option("--events", hj_events, "Events per tick (even)");
    gen::PvsOptions pvs;
    std::vector<std::string> faults;
    std::optional<std::size_t> steady_from;
    auto *pvs_cmd = gen_cmd->add_subcommand("pvs", "Photovoltaic grid monitoring");
    pvs_cmd->add_option("--rows", pvs.rows);
    pvs_cmd->add_option("--cols", pvs.cols);
    pvs_cmd->add_option("--fault", faults, "col:C@A-B, row:R@A-B or p<r>_<c>[+...]@A-B");
    pvs_cmd->add_option("--steady-from", steady_from, "Repeat the previous tick from this tick on");
    std::size_t contents = 1;
    std::uint32_t cache_window = 50;
    auto *caching_cmd = gen_cmd->add_subcommand("caching", "Content caching decisions");
    caching_cmd->add_option("--contents", contents);
    caching_cmd->add_option("--window", cache_window);
    for (auto *sub : {hj, pvs_cmd, caching_cmd}) {
        sub->add_option("--out", out_dir, "Output directory")->required();
        sub->add_option("--ticks", gen_ticks);
        sub->add_option("--seed", gen_seed);
    }

    std::string oracle_path;
    std::string oracle_input;
    std::string oracle_bg;
    std::string oracle_output = "stdout";
    std::string oracle_format = "text";
    auto *oracle_cmd = app.add_subcommand("oracle", "Reference evaluation of a finite stream file");
    oracle_cmd->add_option("program", oracle_path)->required();
    oracle_cmd->add_option("--input", oracle_input, "Stream file")->required();
    oracle_cmd->add_option("--background", oracle_bg);
    oracle_cmd->add_option("--output", oracle_output);
    oracle_cmd->add_option("--output-format", oracle_format)->check(CLI::IsMember({"text", "jsonl"}));

    std::string send_to;
    std::string send_input;
    double send_period = 0;
    auto *send_cmd = app.add_subcommand("send", "Replay a stream file to a tcp input");
    send_cmd->add_option("--to", send_to, "[HOST:]PORT")->required();
    send_cmd->add_option("--input", send_input, "Stream file")->required();
    send_cmd->add_option("--period", send_period, "Delay between ticks, in ms")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : usage_error;
    }

    try {
        if (run_cmd->parsed()) { return cmd_run(run, out, log); }
        if (check_cmd->parsed()) { return cmd_check(check_path, out); }
        if (explain_cmd->parsed()) { return cmd_explain(explain_path, explain_what, explain_format, explain_seed, out); }
        if (hj->parsed()) { return write_workload(gen::heavy_join(hj_w, hj_events, gen_ticks, gen_seed), out_dir, log); }
        if (pvs_cmd->parsed()) {
            for (auto const &f : faults) { pvs.faults.push_back(gen::parse_fault(f)); }
            pvs.ticks = gen_ticks;
            pvs.seed = gen_seed;
            pvs.steady_from = steady_from;
            return write_workload(gen::pvs(pvs), out_dir, log);
        }
        if (caching_cmd->parsed()) {
            return write_workload(gen::caching(contents, gen_ticks, gen_seed, cache_window), out_dir, log);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle(oracle_path, oracle_input, oracle_bg, oracle_output, oracle_format, out, log);
        }
        if (send_cmd->parsed()) { return cmd_send(send_to, send_input, send_period, log); }
    } catch (Error const &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (std::invalid_argument const &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (std::out_of_range const &e) {
        err << "error: number out of range: " << e.what() << '\n';
        return usage_error;
    }
    return usage_error;
}

} // namespace windlog::cli
