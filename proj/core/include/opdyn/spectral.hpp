#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace opdyn {

/// Residual tolerance on ||psi^T A - rho psi^T||_inf.
inline constexpr double kEigenTolerance = 1e-12;
inline constexpr std::size_t kEigenIterationCap = 1'000'000;

struct SpectralData {
  double rho = 0.0;
  Eigen::VectorXd left_vector;  // positive, sums to 1
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct PowerIterationOptions {
  double tolerance = kEigenTolerance;
  std::size_t max_iterations = kEigenIterationCap;
  // Added to the diagonal so periodic irreducible matrices converge.
  double shift = 1.0;
};

/// Spectral radius and Perron left eigenvector of a nonnegative irreducible
/// matrix by power iteration on (A + shift I)^T, started from the uniform
/// vector. After the residual drops below the tolerance the iteration keeps
/// polishing until it stagnates at round-off.
///
/// Throws PreconditionViolation (negative entries, non-square, all zero),
/// NotIrreducible, or NoConvergence when the cap is hit.
SpectralData spectral_radius_perron(const Eigen::MatrixXd& a,
                                    const PowerIterationOptions& options = {});

struct Lemma1Report {
  std::size_t dimension = 0;
  // row_sums[n - 1] holds the row sums of A^n, n = 1..M.
  std::vector<Eigen::VectorXd> row_sums;
  bool rows_non_increasing = false;
  bool final_rows_below_one = false;
  double rho = 0.0;
  bool rho_below_one = false;
  double max_increase = 0.0;  // largest r^{(n+1)}_m - r^{(n)}_m observed

  bool passed() const {
    return rows_non_increasing && final_rows_below_one && rho_below_one;
  }
};

/// Slack allowed on the row-sum monotonicity check for floating-point
/// accumulation in repeated products.
inline constexpr double kRowSumMonotoneSlack = 1e-12;

/// Numerically exercises the row-sum argument for irreducible sub-stochastic
/// matrices with a deficient row: row sums of A^n are non-increasing in n,
/// all row sums of A^M are below 1, and rho(A) < 1.
/// Throws PreconditionViolation when A is not such a matrix.
Lemma1Report verify_lemma1_rowsums(const Eigen::MatrixXd& a);

void to_json(nlohmann::json& j, const Lemma1Report& report);

struct NeumannResult {
  Eigen::VectorXd solution;  // (I - Q)^{-1} r
  double residual = 0.0;     // ||(I - Q) x - r||_inf
};

/// Solves (I - Q) x = r by LU. Throws SingularSystem when I - Q is not
/// invertible (only possible when rho(Q) >= 1).
NeumannResult neumann_limit(const Eigen::MatrixXd& q, const Eigen::VectorXd& r);

/// sum_{k < terms} Q^k r, accumulated term by term.
Eigen::VectorXd truncated_neumann_series(const Eigen::MatrixXd& q,
                                         const Eigen::VectorXd& r,
                                         std::size_t terms);

/// Row sums A * 1.
Eigen::VectorXd row_sums(const Eigen::MatrixXd& a);

}  // namespace opdyn
