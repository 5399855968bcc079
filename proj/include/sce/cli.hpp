#pragma once

namespace sce {

// Entry point of the `sce` tool. Returns the process exit status: 0 on success,
// 2 for configuration errors, 3 for transport errors, 4 for data errors.
int run_cli(int argc, char** argv);

}  // namespace sce
