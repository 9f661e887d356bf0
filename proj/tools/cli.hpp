#ifndef CNNBP_TOOLS_CLI_HPP
#define CNNBP_TOOLS_CLI_HPP

#include <ostream>

namespace cnn::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,     // bad arguments or config
    kData = 2,      // unreadable / malformed / mismatched data or model files
    kCheckFail = 3, // gradient check did not pass
};

/// Entry point of the `cnnbp` tool, with the streams injectable for tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cnn::cli

#endif // CNNBP_TOOLS_CLI_HPP
