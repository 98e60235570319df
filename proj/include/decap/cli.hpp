#pragma once

namespace decap {

// Full command-line interface (train-position, record-imitation,
// train-torque, evaluate, sweep, export). Returns the process exit code:
// 0 success, 1 runtime failure, 2 bad configuration or arguments.
int run_cli(int argc, const char* const* argv);

}  // namespace decap
