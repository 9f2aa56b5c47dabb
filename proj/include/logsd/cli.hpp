#pragma once

#include <iosfwd>

namespace logsd::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericError = 3;

/// Subcommands: parse, prepare, train, score, evaluate, ablate, synth.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logsd::cli
