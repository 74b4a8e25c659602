#pragma once

#include <stdexcept>
#include <string>

namespace tfe {

// Malformed or inconsistent user input (files, flags, timetables).
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scenario that is well formed but cannot be solved as posed.
struct scenario_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken precondition between library components.
struct contract_violation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace tfe
