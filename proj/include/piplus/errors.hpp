#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace piplus {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation left the domain an operand was declared on.
struct DomainError : Error {
  DomainError(const std::string& what, double offending)
      : Error(what + " (at s = " + std::to_string(offending) + ")"),
        offending_input(offending) {}
  double offending_input;
};

// Inversion target outside the reachable range of the bracket.
struct BracketError : Error {
  BracketError(const std::string& what, double lo, double hi, double target)
      : Error(what + " (bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
              "], target " + std::to_string(target) + ")"),
        bracket_lo(lo), bracket_hi(hi), target(target) {}
  double bracket_lo;
  double bracket_hi;
  double target;
};

// A certificate function violates one of its declared properties.
struct CertificateError : Error {
  CertificateError(const std::string& what, double witness)
      : Error(what + " (witness s = " + std::to_string(witness) + ")"), witness(witness) {}
  double witness;
};

struct ModelError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line(line) {}
  int line;
};

// Improvement produced an empty argmin set at a state.
struct FeasibilityError : Error {
  FeasibilityError(const std::string& what, std::size_t state, int iteration)
      : Error(what + " (state index " + std::to_string(state) + ", iteration " +
              std::to_string(iteration) + ")"),
        state(state), iteration(iteration) {}
  std::size_t state;
  int iteration;
};

struct BudgetError : Error {
  using Error::Error;
};

}  // namespace piplus
