#ifndef WMAGIN_CLI_HPP
#define WMAGIN_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace wmagin {

/// Entry point of the `wmagin` tool. Returns the process exit code; errors
/// are reported on `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wmagin

#endif  // WMAGIN_CLI_HPP
