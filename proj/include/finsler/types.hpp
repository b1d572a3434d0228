#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace finsler {

// Charts are at most three dimensional; fixed-capacity storage keeps the
// per-point math free of heap traffic.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorCode {
  InvalidArgument = 1,
  ZeroDirection,
  NotPositiveDefinite,
  NonConvergence,
  NewtonDivergence,
  DegenerateSample,
  LeftDomain,
  NonPositiveDensity,
  StencilUnstable,
  InvalidN,
  SourceOutsideDomain,
  TouchesBoundary,
  WindowOutsideDomain,
  EmptyInput,
  NoConvergence,
  EmptyInterior,
  MonotonicityViolation,
  SupportTooLarge,
  InfeasibleMarginals,
  SingularPart,
  PathNotFound,
  ConfigInvalid,
  IoFailure,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace finsler
