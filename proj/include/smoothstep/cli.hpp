#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smoothstep {

/// Exit codes: 0 success, 1 usage or config validation error, 2 numeric failure.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smoothstep
