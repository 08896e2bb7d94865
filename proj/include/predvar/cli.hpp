#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "predvar/error.hpp"

namespace predvar::cli {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

int exit_code(ErrorKind kind);

/// Runs the predvar command line; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace predvar::cli
