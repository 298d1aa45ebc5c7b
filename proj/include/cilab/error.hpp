#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cilab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration refused because n exceeds the exact-mode cap.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

// The normal approximation needs a non-degenerate attention spread
// (K_zz > 0 or S_VV > 0); callers should fall back to exact or MC paths.
class DegenerateAttention : public Error {
 public:
  using Error::Error;
};

// Covariance outside the block-equicorrelated family, or a correlated model
// handed to the independent sampler.
class UnsupportedCovariance : public Error {
 public:
  using Error::Error;
};

// Sparse accuracy fallback requested for a well-spread attention vector.
class NotSparse : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double t, std::vector<double> last_state)
      : Error(what), time(t), state(std::move(last_state)) {}

  double time;
  std::vector<double> state;
};

}  // namespace cilab
