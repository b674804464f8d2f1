#pragma once

#include <stdexcept>
#include <string>

namespace mercbo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfiguration : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Posterior factorization failed even after jitter escalation.
struct SingularModel : Error {
  using Error::Error;
};

struct ExhaustedSpace : Error {
  using Error::Error;
};

struct LoadError : Error {
  using Error::Error;
};

struct InvalidPoint : Error {
  using Error::Error;
};

struct NotSubmodular : Error {
  using Error::Error;
};

}  // namespace mercbo
