#pragma once

// Command-line entry points: generate / fit / infer / analyze. Exit codes:
// 0 success, 2 config error, 3 missing input, 4 numerical failure.

namespace jpm {

int run_cli(int argc, char** argv);

}  // namespace jpm
