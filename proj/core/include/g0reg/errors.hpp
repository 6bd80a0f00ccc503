#pragma once

#include <stdexcept>
#include <string>

namespace g0reg {

// Argument outside a documented domain (z < 0, x <= 0, u outside (0,1), ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested moment does not exist: alpha >= -h.
class MomentDiverges : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A likelihood quantity evaluated to NaN/Inf (overflowed linear predictor,
// degenerate T_k, ...).
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// X'WX (or the observed information) is not positive definite.
class SingularInformation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Schur complement of the information matrix is nonpositive, so the
// blockwise inverse does not yield a covariance.
class DegenerateTheta : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Standardized residuals need Var(Z) which requires alpha < -2.
class VarianceUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// h_kk ~ 1: the observation determines its own fit, standardization breaks.
class LeverageAtOne : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sample with no usable variation (all-equal ratios, empty pool, ...).
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace g0reg
