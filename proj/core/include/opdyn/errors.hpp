#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opdyn {

// Base of every error raised by the library. `code()` is the stable,
// machine-readable name used in CLI error lists.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define OPDYN_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message)                     \
        : Error(#Name, message) {}                                \
  }

OPDYN_DEFINE_ERROR(ParseError);
OPDYN_DEFINE_ERROR(ValidationError);
OPDYN_DEFINE_ERROR(NotIrreducible);
OPDYN_DEFINE_ERROR(NoStubbornLink);
OPDYN_DEFINE_ERROR(NoConvergence);
OPDYN_DEFINE_ERROR(PreconditionViolation);
OPDYN_DEFINE_ERROR(SingularSystem);
OPDYN_DEFINE_ERROR(DimensionMismatch);
OPDYN_DEFINE_ERROR(StatisticalMismatch);
OPDYN_DEFINE_ERROR(HypothesisNotMet);
OPDYN_DEFINE_ERROR(ExhaustionFailure);
OPDYN_DEFINE_ERROR(ConfigError);

#undef OPDYN_DEFINE_ERROR

// DeGroot iteration ran out of steps before reaching the tolerance.
class HorizonExceeded : public Error {
 public:
  HorizonExceeded(const std::string& message, double final_error)
      : Error("HorizonExceeded", message), final_error_(final_error) {}

  double final_error() const noexcept { return final_error_; }

 private:
  double final_error_;
};

// An exact algebraic identity failed beyond round-off.
class IdentityViolation : public Error {
 public:
  IdentityViolation(const std::string& message, std::size_t step,
                    double residual)
      : Error("IdentityViolation", message), step_(step), residual_(residual) {}

  std::size_t step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t step_;
  double residual_;
};

// A replica inside a batch failed; carries the offending replica id.
class ReplicaFailure : public Error {
 public:
  ReplicaFailure(const std::string& message, std::size_t replica_id)
      : Error("ReplicaFailure", message), replica_id_(replica_id) {}

  std::size_t replica_id() const noexcept { return replica_id_; }

 private:
  std::size_t replica_id_;
};

}  // namespace opdyn
