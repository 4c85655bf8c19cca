#ifndef DREAMPLAN_ERROR_HPP_
#define DREAMPLAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dreamplan {

// Dimension or wiring mismatch (vector lengths, layer chains, layouts).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid value: non-finite data, out-of-range config, violated precondition.
struct ValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File I/O and serialization failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dreamplan

#endif  // DREAMPLAN_ERROR_HPP_
