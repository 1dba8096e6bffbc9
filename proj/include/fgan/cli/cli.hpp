#pragma once

#include <iosfwd>

namespace fgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand (prepare-data, train-gan, synthesize,
/// train-recognizer, evaluate, ablate, sample-grid). Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fgan::cli
