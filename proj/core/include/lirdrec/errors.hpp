#pragma once

#include <stdexcept>
#include <string>

namespace lirdrec {

// Error taxonomy maps to CLI exit codes: config -> 2, data -> 3, numeric -> 4.

// Invalid or inconsistent configuration (unknown field, bad range).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (carries line numbers where applicable).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally invalid binary container or out-of-vocabulary token.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (shape mismatch, bounds).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values detected in checked mode, or training divergence.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lirdrec
