#pragma once

#include <windlog/engine.hpp>

#include <atomic>
#include <chrono>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace windlog::io {

using Warn = std::function<void(std::string const &)>;

/// Fact lines in, ticks out. A tick ends at `#end.`; malformed lines are
/// reported through `warn` and skipped, or throw ParseError when strict.
class TickAssembler {
public:
    explicit TickAssembler(bool strict = false, Warn warn = {});

    /// Returns the completed tick when `line` is `#end.`.
    std::optional<std::vector<GroundAtom>> line(std::string_view text);
    /// End of input: discards a partial tick with a warning.
    void finish();

    std::size_t line_number() const { return line_no_; }

private:
    bool strict_;
    Warn warn_;
    std::vector<GroundAtom> pending_;
    bool has_content_ = false;
    std::size_t line_no_ = 0;
};

/// Splits a stream file into ticks.
std::vector<std::vector<GroundAtom>> read_stream(std::string_view text, bool strict = false, Warn const &warn = {});

std::string read_file(std::string const &path);

/// Base for sources that produce text lines; cancel() makes a blocked
/// next() return nullopt.
class LineSource : public engine::TickSource {
public:
    LineSource(bool strict, Warn warn);
    std::optional<engine::ArrivedTick> next() override;
    void cancel() override { cancelled_ = true; }

protected:
    /// Next line without the terminator; nullopt at end of input.
    virtual std::optional<std::string> read_line() = 0;
    /// Hook run before a completed tick is handed out.
    virtual void before_emit() { }
    bool cancelled() const { return cancelled_; }
    void warn(std::string const &message) const;

private:
    Warn warn_;
    TickAssembler assembler_;
    std::atomic<bool> cancelled_ = false;
    bool finished_ = false;
};

/// Reads a stream file; with a period, tick k is released no earlier than
/// k periods after the first call to next().
class FileSource : public LineSource {
public:
    FileSource(std::string const &path, std::chrono::nanoseconds period = {}, bool strict = false, Warn warn = {});

protected:
    std::optional<std::string> read_line() override;
    void before_emit() override;

private:
    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
    std::chrono::nanoseconds period_;
    std::optional<engine::Clock::time_point> start_;
    std::size_t emitted_ = 0;
};

/// Line reader over a file descriptor, polling so that cancel() is honoured.
class FdSource : public LineSource {
public:
    FdSource(int fd, bool strict, Warn warn);

protected:
    std::optional<std::string> read_line() override;
    /// Waits for the descriptor; false on cancel or end of input.
    virtual bool ensure_fd() { return fd_ >= 0; }
    virtual void on_eof() { }
    int fd_;

private:
    std::string buffer_;
    bool eof_ = false;
};

class StdinSource : public FdSource {
public:
    explicit StdinSource(bool strict = false, Warn warn = {});
};

/// Listens on 127.0.0.1:port (0 picks a free port) and reads ticks from a
/// single connection until it closes.
class TcpSource : public FdSource {
public:
    explicit TcpSource(std::uint16_t port, bool strict = false, Warn warn = {});
    ~TcpSource() override;
    TcpSource(TcpSource const &) = delete;
    TcpSource &operator=(TcpSource const &) = delete;

    std::uint16_t bound_port() const { return port_; }

protected:
    bool ensure_fd() override;
    void on_eof() override;

private:
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    bool accepted_ = false;
};

/// Connects to host:port and writes the ticks in the line format, sleeping
/// `period` between ticks.
void send_stream(std::string const &host, std::uint16_t port, std::vector<std::vector<GroundAtom>> const &ticks,
                 std::chrono::nanoseconds period = {});

enum class OutputFormat : std::uint8_t { Text, Jsonl };

/// `@timepoint N`, the atoms in text order, then a blank line.
std::string format_text(engine::TickOutput const &output);
/// {"tick":N,"atoms":[...]} on one line.
std::string format_jsonl(engine::TickOutput const &output);

class Sink {
public:
    Sink(std::ostream &out, OutputFormat format) : out_(out), format_(format) { }
    void write(engine::TickOutput const &output);

private:
    std::ostream &out_;
    OutputFormat format_;
};

class MetricsWriter {
public:
    explicit MetricsWriter(std::ostream &out);
    void write(engine::MetricsRecord const &record);

private:
    std::ostream &out_;
};

} // namespace windlog::io
