#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dropwatch::cli {

/// Runs one command line (without the program name). Results go to files;
/// `out` receives short reports, `err` receives diagnostics. Returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dropwatch::cli
