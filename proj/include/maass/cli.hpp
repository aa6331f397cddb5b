#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maass::cli {

inline constexpr const char* kToolVersion = "maass-0.1.0";

/// Runs one command line (without the program name). Results go to `out`,
/// usage text, progress and errors to `err`.
/// Returns 0 on success, 1 on domain errors, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Precision from MAASS_PRECISION_BITS, or the library default.
long default_precision();

} // namespace maass::cli
