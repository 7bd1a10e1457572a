#pragma once

#include <iosfwd>

namespace windlog::cli {

/// Entry point of the `windlog` tool; returns the process exit status.
/// Results go to `out` unless redirected by options, diagnostics to `err`.
int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &err);

} // namespace windlog::cli
