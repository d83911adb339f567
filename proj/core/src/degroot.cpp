#include "opdyn/degroot.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "format.hpp"
#include "opdyn/errors.hpp"
#include "opdyn/ra_sim.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

OpinionState degroot_step(const TrustMatrix& trust, const OpinionState& x) {
  if (static_cast<std::size_t>(x.values.size()) != trust.size()) {
    throw DimensionMismatch("degroot_step: state has " + std::to_string(x.values.size()) +
                            " entries, network has " + std::to_string(trust.size()));
  }
  return {trust.weights() * x.values, x.time + 1};
}

Eigen::VectorXd degroot_limit(const PartitionedTrust& p, double x1_0) {
  return neumann_limit(p.q, p.r).solution * x1_0;
}

OpinionState random_opinions(std::size_t k, std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  OpinionState x;
  x.values.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    x.values[static_cast<Eigen::Index>(i)] = rng.uniform(CounterRng::Domain::kInitial, 0, i);
  }
  return x;
}

std::size_t default_degroot_horizon(double rho, double tol) {
  if (rho <= 0.0) return 2;
  if (rho >= 1.0) throw PreconditionViolation("default horizon needs rho(Q) < 1");
  return 2 * static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(rho)));
}

double empirical_rate(const std::vector<double>& errors,
                      const std::vector<std::size_t>& steps) {
  // Only the positive prefix is usable on a log scale.
  std::size_t usable = 0;
  while (usable < errors.size() && errors[usable] > 0.0) ++usable;
  if (usable < 2) return 0.0;
  const std::size_t mid = (usable - 1) / 2;
  const std::size_t last = usable - 1;
  const double span = static_cast<double>(steps[last] - steps[mid]);
  if (span <= 0.0) return 0.0;
  return std::pow(errors[last] / errors[mid], 1.0 / span);
}

DegrootRun degroot_run(const TrustMatrix& trust, const OpinionState& x0,
                       const DegrootOptions& options) {
  return degroot_run(trust, partition(trust), x0, options);
}

DegrootRun degroot_run(const TrustMatrix& trust, const PartitionedTrust& p,
                       const OpinionState& x0, const DegrootOptions& options) {
  if (!trust.has_stubborn()) {
    throw ValidationError("degroot_run requires a stubborn agent");
  }
  if (static_cast<std::size_t>(x0.values.size()) != trust.size()) {
    throw DimensionMismatch("degroot_run: initial state has wrong size");
  }

  DegrootRun run;
  run.rho = p.lambda;
  const auto neumann = neumann_limit(p.q, p.r);
  run.solver_residual = neumann.residual;
  run.limit = neumann.solution * x0.values[0];
  run.horizon = options.horizon.value_or(default_degroot_horizon(p.lambda, options.tol));
  if (run.horizon == 0) throw PreconditionViolation("degroot_run: horizon must be >= 1");

  const auto k = x0.values.size();
  auto error_of = [&](const OpinionState& x) {
    return (x.values.tail(k - 1) - run.limit).cwiseAbs().maxCoeff();
  };
  auto record = [&](const OpinionState& x, double err) {
    run.trace.push_back({x.time, err, x.values.tail(k - 1)});
  };

  OpinionState x = x0;
  x.time = 0;
  double err = error_of(x);
  record(x, err);
  while (err > options.tol) {
    if (x.time >= run.horizon) {
      std::ostringstream msg;
      msg << "DeGroot iteration did not reach tol " << options.tol << " within "
          << run.horizon << " steps (final error " << err << ")";
      throw HorizonExceeded(msg.str(), err);
    }
    x = degroot_step(trust, x);
    err = error_of(x);
    if (x.time <= kFullTraceSteps || x.time % kTraceStride == 0 || err <= options.tol) {
      record(x, err);
    }
  }
  run.steps = x.time;
  run.final_error = err;

  std::vector<double> errors;
  std::vector<std::size_t> steps;
  for (const auto& row : run.trace) {
    errors.push_back(row.err_inf);
    steps.push_back(row.n);
  }
  run.rate_estimate = empirical_rate(errors, steps);
  run.rate_ok = run.rate_estimate <= run.rho + options.rate_slack;
  return run;
}

void write_degroot_csv(std::ostream& out, const DegrootRun& run, bool with_opinions) {
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  out << "n,err_inf";
  const auto ordinary = run.limit.size();
  if (with_opinions) {
    for (Eigen::Index i = 1; i <= ordinary; ++i) out << ",y_" << i;
  }
  out << "\n";
  for (const auto& row : run.trace) {
    out << row.n << ',' << detail::format_double(row.err_inf);
    if (with_opinions) {
      for (Eigen::Index i = 0; i < row.y.size(); ++i) {
        out << ',' << detail::format_double(row.y[i]);
      }
    }
    out << "\n";
  }
}

}  // namespace opdyn
