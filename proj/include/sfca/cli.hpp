#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace sfca {

/// Command-line entry point. Exit codes: 0 ok, 1 runtime error, 2 usage.
int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same with arguments after the program name.
int cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sfca
