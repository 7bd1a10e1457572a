#include <windlog/io.hpp>
#include <windlog/lang.hpp>

#include <json.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace windlog::io {

namespace {

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') { line.remove_suffix(1); }
    return line;
}

std::string errno_text() { return std::strerror(errno); }

} // namespace

TickAssembler::TickAssembler(bool strict, Warn warn) : strict_(strict), warn_(std::move(warn)) { }

std::optional<std::vector<GroundAtom>> TickAssembler::line(std::string_view text) {
    ++line_no_;
    lang::FactLine parsed;
    try {
        parsed = lang::parse_fact_line(strip_cr(text));
    } catch (ParseError const &e) {
        if (strict_) {
            auto diags = e.diagnostics();
            for (auto &d : diags) { d.loc.line = static_cast<std::uint32_t>(line_no_); }
            throw ParseError(std::move(diags));
        }
        if (warn_) { warn_("line " + std::to_string(line_no_) + ": skipped: " + e.what()); }
        return std::nullopt;
    }
    if (std::holds_alternative<lang::TickMarker>(parsed)) {
        auto tick = std::move(pending_);
        pending_.clear();
        has_content_ = false;
        return tick;
    }
    if (auto *atom = std::get_if<GroundAtom>(&parsed)) {
        pending_.push_back(std::move(*atom));
        has_content_ = true;
    }
    return std::nullopt;
}

void TickAssembler::finish() {
    if (has_content_ && warn_) {
        warn_("discarding incomplete final tick (" + std::to_string(pending_.size()) + " facts without '#end.')");
    }
    pending_.clear();
    has_content_ = false;
}

std::vector<std::vector<GroundAtom>> read_stream(std::string_view text, bool strict, Warn const &warn) {
    TickAssembler assembler(strict, warn);
    std::vector<std::vector<GroundAtom>> ticks;
    while (!text.empty()) {
        auto end = text.find('\n');
        auto line = text.substr(0, end);
        if (auto tick = assembler.line(line)) { ticks.push_back(std::move(*tick)); }
        if (end == std::string_view::npos) { break; }
        text.remove_prefix(end + 1);
    }
    assembler.finish();
    return ticks;
}

std::string read_file(std::string const &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw IoError("cannot open " + path); }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) { throw IoError("cannot read " + path); }
    return ss.str();
}

LineSource::LineSource(bool strict, Warn warn) : warn_(warn), assembler_(strict, std::move(warn)) { }

void LineSource::warn(std::string const &message) const {
    if (warn_) { warn_(message); }
}

std::optional<engine::ArrivedTick> LineSource::next() {
    while (!finished_ && !cancelled_) {
        auto line = read_line();
        if (!line) {
            finished_ = true;
            if (!cancelled_) { assembler_.finish(); }
            break;
        }
        if (auto tick = assembler_.line(*line)) {
            before_emit();
            if (cancelled_) { break; }
            return engine::ArrivedTick{std::move(*tick), engine::Clock::now()};
        }
    }
    return std::nullopt;
}

FileSource::FileSource(std::string const &path, std::chrono::nanoseconds period, bool strict, Warn warn)
    : LineSource(strict, std::move(warn)), period_(period) {
    auto text = read_file(path);
    std::string_view rest = text;
    while (!rest.empty()) {
        auto end = rest.find('\n');
        lines_.emplace_back(rest.substr(0, end));
        if (end == std::string_view::npos) { break; }
        rest.remove_prefix(end + 1);
    }
}

std::optional<std::string> FileSource::read_line() {
    if (pos_ == lines_.size()) { return std::nullopt; }
    return std::move(lines_[pos_++]);
}

void FileSource::before_emit() {
    if (period_.count() > 0) {
        if (!start_) { start_ = engine::Clock::now(); }
        auto target = *start_ + period_ * static_cast<std::int64_t>(emitted_);
        while (!cancelled()) {
            auto now = engine::Clock::now();
            if (now >= target) { break; }
            std::this_thread::sleep_for(std::min<engine::Clock::duration>(target - now, std::chrono::milliseconds(50)));
        }
    }
    ++emitted_;
}

FdSource::FdSource(int fd, bool strict, Warn warn) : LineSource(strict, std::move(warn)), fd_(fd) { }

std::optional<std::string> FdSource::read_line() {
    while (true) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (eof_) {
            if (buffer_.empty()) { return std::nullopt; }
            return std::exchange(buffer_, {});
        }
        if (cancelled() || !ensure_fd()) { return std::nullopt; }
        pollfd pfd{fd_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, 100);
        if (ready < 0) {
            if (errno == EINTR) { continue; }
            throw IoError("poll: " + errno_text());
        }
        if (ready == 0) { continue; }
        char chunk[1 << 16];
        auto n = ::read(fd_, chunk, sizeof chunk);
        if (n > 0) {
            buffer_.append(chunk, static_cast<std::size_t>(n));
        } else if (n == 0) {
            eof_ = true;
            on_eof();
        } else if (errno == EINTR || errno == EAGAIN) {
            continue;
        } else if (errno == ECONNRESET) {
            warn("connection reset");
            eof_ = true;
            on_eof();
        } else {
            throw IoError("read: " + errno_text());
        }
    }
}

StdinSource::StdinSource(bool strict, Warn warn) : FdSource(STDIN_FILENO, strict, std::move(warn)) { }

TcpSource::TcpSource(std::uint16_t port, bool strict, Warn warn) : FdSource(-1, strict, std::move(warn)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) { throw IoError("socket: " + errno_text()); }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 1) < 0) {
        auto msg = errno_text();
        ::close(listen_fd_);
        throw IoError("cannot listen on port " + std::to_string(port) + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpSource::~TcpSource() {
    if (fd_ >= 0) { ::close(fd_); }
    if (listen_fd_ >= 0) { ::close(listen_fd_); }
}

bool TcpSource::ensure_fd() {
    if (accepted_) { return fd_ >= 0; }
    while (!cancelled()) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, 100);
        if (ready < 0 && errno != EINTR) { throw IoError("poll: " + errno_text()); }
        if (ready <= 0) { continue; }
        fd_ = ::accept(listen_fd_, nullptr, nullptr);
        if (fd_ < 0) {
            if (errno == EINTR || errno == ECONNABORTED) { continue; }
            throw IoError("accept: " + errno_text());
        }
        accepted_ = true;
        return true;
    }
    return false;
}

void TcpSource::on_eof() {
    ::close(fd_);
    fd_ = -1;
}

void send_stream(std::string const &host, std::uint16_t port, std::vector<std::vector<GroundAtom>> const &ticks,
                 std::chrono::nanoseconds period) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
        throw IoError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
        auto msg = errno_text();
        ::freeaddrinfo(res);
        if (fd >= 0) { ::close(fd); }
        throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + msg);
    }
    ::freeaddrinfo(res);
    auto start = engine::Clock::now();
    for (std::size_t k = 0; k < ticks.size(); ++k) {
        std::this_thread::sleep_until(start + period * static_cast<std::int64_t>(k));
        std::string text;
        for (auto const &a : ticks[k]) { text += a.to_string() + ".\n"; }
        text += "#end.\n";
        std::string_view rest = text;
        while (!rest.empty()) {
            auto n = ::send(fd, rest.data(), rest.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) { continue; }
                auto msg = errno_text();
                ::close(fd);
                throw IoError("send: " + msg);
            }
            rest.remove_prefix(static_cast<std::size_t>(n));
        }
    }
    ::close(fd);
}

std::string format_text(engine::TickOutput const &output) {
    std::string out = "@timepoint " + std::to_string(output.tick) + "\n";
    if (output.failed) { out += "% failed: " + output.error + "\n"; }
    for (auto const &s : sorted_text(output.atoms)) {
        out += s;
        out += '\n';
    }
    out += '\n';
    return out;
}

std::string format_jsonl(engine::TickOutput const &output) {
    nlohmann::json j;
    j["tick"] = output.tick;
    j["atoms"] = sorted_text(output.atoms);
    if (output.failed) {
        j["failed"] = true;
        j["error"] = output.error;
    }
    return j.dump() + "\n";
}

void Sink::write(engine::TickOutput const &output) {
    out_ << (format_ == OutputFormat::Text ? format_text(output) : format_jsonl(output));
    out_.flush();
}

MetricsWriter::MetricsWriter(std::ostream &out) : out_(out) {
    out_ << "tick,arrival_ns,emit_ns,latency_ns,queue_length,ground_rules_total,ground_rules_new\n";
    out_.flush();
}

void MetricsWriter::write(engine::MetricsRecord const &r) {
    out_ << r.tick << ',' << r.arrival_ns << ',' << r.emit_ns << ',' << r.latency_ns << ',' << r.queue_length << ','
         << r.ground_rules_total << ',' << r.ground_rules_new << '\n';
    out_.flush();
}

} // namespace windlog::io
