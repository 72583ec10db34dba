#pragma once
/** \file
    Shared dense types, error reporting and small numeric helpers.
*/

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace drsl {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

enum class Errc {
  ShapeMismatch,
  NonFinite,
  EmptyDesign,
  TooFewRows,
  BadParams,
  UnknownCondition,
  BadArchitecture,
  BadAlpha,
  BatchTooLarge,
  ConditionMismatch,
  BadStep,
  ConstantVector,
  LengthMismatch,
  ConstantRow,
  DegeneratePair,
  TooFewSubjects,
  BadSpec,
  InfeasibleSchedule,
  MissingFile,
  ParseError,
  ManifestMismatch,
  IoError,
  BadConfig,
};

std::string_view to_string(Errc code);

/// Every recoverable failure in the library is reported as a drsl::Error.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// splitmix64 finalizer; used to derive independent, reproducible RNG streams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  return mix64(mix64(mix64(mix64(master) ^ a) ^ b) ^ c);
}

}  // namespace drsl
