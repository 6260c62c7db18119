#pragma once

namespace gridcrew {

// Entry point of the command-line tool. Returns the process exit code:
// 0 success, 2 scenario/config validation failure, 1 unexpected error.
int run_cli(int argc, char** argv);

}  // namespace gridcrew
