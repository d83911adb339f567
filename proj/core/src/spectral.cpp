#include "opdyn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "opdyn/errors.hpp"
#include "opdyn/graph.hpp"

namespace opdyn {
namespace {

void require_nonnegative_square(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw PreconditionViolation(std::string(what) + ": matrix must be square and non-empty");
  }
  if (!a.allFinite() || (a.array() < 0.0).any()) {
    throw PreconditionViolation(std::string(what) +
                                ": matrix must be finite and nonnegative");
  }
}

struct Iterate {
  Eigen::VectorXd v;
  double rho = 0.0;
  double residual = std::numeric_limits<double>::infinity();
};

}  // namespace

Eigen::VectorXd row_sums(const Eigen::MatrixXd& a) { return a.rowwise().sum(); }

SpectralData spectral_radius_perron(const Eigen::MatrixXd& a,
                                    const PowerIterationOptions& options) {
  require_nonnegative_square(a, "spectral_radius_perron");
  if ((a.array() == 0.0).all()) {
    throw PreconditionViolation("spectral_radius_perron: matrix is all zero");
  }
  if (!check_irreducible(a)) {
    throw NotIrreducible("spectral_radius_perron: matrix is reducible");
  }

  const auto n = a.rows();
  const Eigen::MatrixXd at = a.transpose();
  const double shift = options.shift;
  // Residuals below this are round-off; no point polishing further.
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff();

  Iterate current;
  current.v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd u(n);

  auto evaluate = [&](Iterate& it) {
    u.noalias() = at * it.v;
    it.rho = u.sum();
    it.residual = (u - it.rho * it.v).cwiseAbs().maxCoeff();
  };

  std::size_t iterations = 0;
  evaluate(current);
  while (current.residual > options.tolerance) {
    if (iterations >= options.max_iterations) {
      std::ostringstream msg;
      msg << "power iteration hit the cap of " << options.max_iterations
          << " iterations with residual " << current.residual;
      throw NoConvergence(msg.str());
    }
    current.v = (u + shift * current.v) / (current.rho + shift);
    ++iterations;
    evaluate(current);
  }

  // Polish: keep iterating (at most as many steps again) while the residual
  // still improves.
  Iterate best = current;
  const std::size_t budget = std::max<std::size_t>(iterations, 64);
  std::size_t stale = 0;
  for (std::size_t extra = 0; extra < budget && best.residual > floor && stale < 16;
       ++extra) {
    current.v = (u + shift * current.v) / (current.rho + shift);
    ++iterations;
    evaluate(current);
    if (current.residual < best.residual) {
      best = current;
      stale = 0;
    } else {
      ++stale;
    }
  }

  SpectralData out;
  out.left_vector = best.v / best.v.sum();
  u.noalias() = at * out.left_vector;
  out.rho = u.sum();
  out.residual = (u - out.rho * out.left_vector).cwiseAbs().maxCoeff();
  out.iterations = iterations;
  return out;
}

Lemma1Report verify_lemma1_rowsums(const Eigen::MatrixXd& a) {
  require_nonnegative_square(a, "verify_lemma1_rowsums");
  const Eigen::VectorXd sums = row_sums(a);
  if ((sums.array() > 1.0 + kStochasticTolerance).any()) {
    throw PreconditionViolation("verify_lemma1_rowsums: matrix is not sub-stochastic");
  }
  if (sums.minCoeff() >= 1.0 - kStochasticTolerance) {
    throw PreconditionViolation("verify_lemma1_rowsums: no row sum is below 1");
  }
  if (!check_irreducible(a)) {
    throw PreconditionViolation("verify_lemma1_rowsums: matrix is reducible");
  }

  Lemma1Report report;
  const auto m = static_cast<std::size_t>(a.rows());
  report.dimension = m;
  report.rows_non_increasing = true;
  report.max_increase = -std::numeric_limits<double>::infinity();

  Eigen::MatrixXd power = a;
  for (std::size_t n = 1; n <= m; ++n) {
    report.row_sums.push_back(row_sums(power));
    if (n > 1) {
      const Eigen::VectorXd diff = report.row_sums[n - 1] - report.row_sums[n - 2];
      report.max_increase = std::max(report.max_increase, diff.maxCoeff());
      if (diff.maxCoeff() > kRowSumMonotoneSlack) report.rows_non_increasing = false;
    }
    if (n < m) power = power * a;
  }
  if (m == 1) report.max_increase = 0.0;
  report.final_rows_below_one = (report.row_sums.back().array() < 1.0).all();

  report.rho = spectral_radius_perron(a).rho;
  report.rho_below_one = report.rho < 1.0 - kEigenTolerance;
  return report;
}

void to_json(nlohmann::json& j, const Lemma1Report& report) {
  nlohmann::json sums = nlohmann::json::array();
  for (const auto& v : report.row_sums) {
    sums.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  j = nlohmann::json{{"dimension", report.dimension},
                     {"row_sums", sums},
                     {"rows_non_increasing", report.rows_non_increasing},
                     {"max_increase", report.max_increase},
                     {"final_rows_below_one", report.final_rows_below_one},
                     {"rho", report.rho},
                     {"rho_below_one", report.rho_below_one},
                     {"pass", report.passed()}};
}

NeumannResult neumann_limit(const Eigen::MatrixXd& q, const Eigen::VectorXd& r) {
  if (q.rows() != q.cols() || q.rows() != r.size()) {
    throw DimensionMismatch("neumann_limit: Q and r sizes disagree");
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(q.rows(), q.cols()) - q;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw SingularSystem("I - Q is singular; rho(Q) >= 1");
  }
  NeumannResult out;
  out.solution = lu.solve(r);
  out.residual = r.size() == 0 ? 0.0 : (system * out.solution - r).cwiseAbs().maxCoeff();
  return out;
}

Eigen::VectorXd truncated_neumann_series(const Eigen::MatrixXd& q,
                                         const Eigen::VectorXd& r,
                                         std::size_t terms) {
  if (q.rows() != q.cols() || q.rows() != r.size()) {
    throw DimensionMismatch("truncated_neumann_series: Q and r sizes disagree");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(r.size());
  Eigen::VectorXd term = r;
  for (std::size_t k = 0; k < terms; ++k) {
    sum += term;
    term = q * term;
  }
  return sum;
}

}  // namespace opdyn
