#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace idmfit::cli {

enum ExitCode : int {
    ok = 0,
    input_error = 1,
    nonconvergence = 2,
};

/// Runs one command line. Results go to files named by flags, or to `out`
/// when no file is given; warnings and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

/// Writes `content` next to `path` and renames it into place.
void write_atomically(const std::string& path, const std::string& content);

} // namespace idmfit::cli
