#pragma once

#include <stdexcept>
#include <string>

namespace repsig {

// Input outside an operation's mathematical domain.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite intermediate in a numeric routine.
class numeric_error : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Decision points submitted out of order, duplicated, or incomplete.
class sequencing_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operation not permitted in the current monitor state.
class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Plan/stream/trial configuration that cannot be run.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed document (JSON, CSV) or unreadable file.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace repsig
