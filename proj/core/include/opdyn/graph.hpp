#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opdyn/spectral.hpp"

namespace opdyn {

/// Absolute tolerance on row sums of (sub-)stochastic matrices.
inline constexpr double kStochasticTolerance = 1e-9;

/// Validated K x K row-stochastic trust matrix.
///
/// Entry (i, j) is the trust agent i puts in agent j. When a stubborn agent
/// is designated it is relabeled to index 0, so its row is the unit row
/// e_0. `labels()[k]` is the source index of internal agent k.
class TrustMatrix {
 public:
  /// Validates `weights` and, when `stubborn` is set, moves that agent to
  /// index 0 (the relative order of the others is kept). Rows are rescaled
  /// to sum 1 only when `normalize` is true.
  static TrustMatrix create(Eigen::MatrixXd weights,
                            std::optional<std::size_t> stubborn = std::nullopt,
                            bool normalize = false);

  static TrustMatrix from_rows(const std::vector<std::vector<double>>& rows,
                               std::optional<std::size_t> stubborn = std::nullopt,
                               bool normalize = false);

  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  bool has_stubborn() const { return has_stubborn_; }
  const std::vector<std::size_t>& labels() const { return labels_; }

 private:
  TrustMatrix() = default;

  Eigen::MatrixXd weights_;
  bool has_stubborn_ = false;
  std::vector<std::size_t> labels_;
};

/// Parses the edge-list format: one `i j w` triple per line (t_ij = w, i.e.
/// agent i trusts agent j with weight w), `#` comments, and header
/// directives `K=<int>`, `stubborn=<int>`, `normalize=<bool>`.
TrustMatrix parse_edge_list(std::string_view text);

/// Reads a file and forwards to parse_edge_list.
TrustMatrix load_edge_list_file(const std::string& path);

/// Block decomposition T = [[1, 0], [r, Q]] together with the Perron data of
/// Q: lambda = rho(Q) and psi, the positive left eigenvector with sum 1.
struct PartitionedTrust {
  Eigen::VectorXd r;
  Eigen::MatrixXd q;
  double lambda = 0.0;
  Eigen::VectorXd psi;
  SpectralData spectral;

  std::size_t ordinary_count() const { return static_cast<std::size_t>(r.size()); }
};

/// Splits a trust matrix with a stubborn agent into (r, Q) and computes the
/// Perron data. Throws NotIrreducible or NoStubbornLink when the
/// preconditions of the consensus result do not hold.
PartitionedTrust partition(const TrustMatrix& trust);

/// Inverse of partition: builds [[1, 0], [r, Q]].
TrustMatrix assemble(const Eigen::VectorXd& r, const Eigen::MatrixXd& q);

/// True iff the directed graph with an edge whenever m(i, j) > 0 is strongly
/// connected. Tarjan's SCC algorithm, O(K + edges).
bool check_irreducible(const Eigen::MatrixXd& m);

/// Strongly connected component id per node (Tarjan order).
std::vector<std::size_t> strongly_connected_components(const Eigen::MatrixXd& m);

}  // namespace opdyn
