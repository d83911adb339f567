#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "opdyn/graph.hpp"

namespace opdyn {

struct OpinionState {
  Eigen::VectorXd values;
  std::size_t time = 0;
};

/// One DeGroot update x[n+1] = T x[n]. Throws DimensionMismatch.
OpinionState degroot_step(const TrustMatrix& trust, const OpinionState& x);

/// Limit of the ordinary agents' opinions, (I - Q)^{-1} r * x1_0.
Eigen::VectorXd degroot_limit(const PartitionedTrust& p, double x1_0);

/// Uniform [0, 1) opinions drawn from `seed`.
OpinionState random_opinions(std::size_t k, std::uint64_t seed);

inline constexpr double kDegrootTolerance = 1e-10;
inline constexpr double kRateSlack = 0.05;
// Steps beyond this are recorded every kTraceStride-th step.
inline constexpr std::size_t kFullTraceSteps = 100'000;
inline constexpr std::size_t kTraceStride = 10;

struct DegrootOptions {
  double tol = kDegrootTolerance;
  // Defaults to 2 * ceil(log(tol) / log(rho(Q))).
  std::optional<std::size_t> horizon;
  double rate_slack = kRateSlack;
};

struct DegrootTraceRow {
  std::size_t n = 0;
  double err_inf = 0.0;
  Eigen::VectorXd y;
};

struct DegrootRun {
  std::vector<DegrootTraceRow> trace;
  Eigen::VectorXd limit;
  std::size_t steps = 0;       // n at termination
  std::size_t horizon = 0;
  double final_error = 0.0;
  double rate_estimate = 0.0;  // empirical geometric rate of err_inf
  double rho = 0.0;            // rho(Q)
  bool rate_ok = false;        // rate_estimate <= rho + rate_slack
  double solver_residual = 0.0;
};

/// Default horizon for a contraction rate `rho` and tolerance `tol`.
std::size_t default_degroot_horizon(double rho, double tol);

/// Iterates the DeGroot update from x0 until ||y[n] - y_inf||_inf <= tol.
/// Throws HorizonExceeded (carrying the final error) when the horizon is
/// reached first.
DegrootRun degroot_run(const TrustMatrix& trust, const OpinionState& x0,
                       const DegrootOptions& options = {});

/// Same, reusing an existing partition of `trust`.
DegrootRun degroot_run(const TrustMatrix& trust, const PartitionedTrust& p,
                       const OpinionState& x0, const DegrootOptions& options = {});

/// Geometric-mean decay rate of err over the second half of the positive
/// prefix of `errors`: (e_end / e_mid)^(1 / (end - mid)).
double empirical_rate(const std::vector<double>& errors,
                      const std::vector<std::size_t>& steps);

/// CSV with columns `n,err_inf` and optionally `y_1..y_{K-1}`.
void write_degroot_csv(std::ostream& out, const DegrootRun& run,
                       bool with_opinions);

}  // namespace opdyn
