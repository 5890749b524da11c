#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace skewdiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

/// Direction of skew: Right produces the X+ (right-skewed) process, Left the X- one.
enum class Chirality : int { Left = -1, Right = 1 };

inline constexpr double sign(Chirality c) noexcept { return static_cast<int>(c); }
inline constexpr Chirality flip(Chirality c) noexcept {
  return c == Chirality::Right ? Chirality::Left : Chirality::Right;
}
Chirality chirality_from_int(int s);

/// Raised when a numerical routine cannot deliver a result within its contract
/// (non-converged quadrature, NaN in a path, unstable PDE step, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input violates a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace skewdiff
