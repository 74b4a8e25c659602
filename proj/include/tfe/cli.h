#pragma once

namespace tfe {

// Exit codes: 0 success, 2 iteration budget exhausted, 1 input error.
int run_cli(int argc, char** argv);

}  // namespace tfe
