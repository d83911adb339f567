#include "opdyn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "opdyn/errors.hpp"

namespace opdyn {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string line_prefix(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

std::size_t parse_index(const std::string& token, std::size_t line_no) {
  std::size_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line_prefix(line_no) + "bad agent index '" + token + "'");
  }
  return value;
}

double parse_weight(const std::string& token, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double w = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return w;
  } catch (const std::exception&) {
    throw ParseError(line_prefix(line_no) + "bad weight '" + token + "'");
  }
}

bool parse_bool(const std::string& token, std::size_t line_no) {
  if (token == "true" || token == "1" || token == "yes") return true;
  if (token == "false" || token == "0" || token == "no") return false;
  throw ParseError(line_prefix(line_no) + "bad boolean '" + token + "'");
}

// Moves `agent` to index 0, keeping the order of the others.
std::vector<std::size_t> stubborn_first(std::size_t k, std::size_t agent) {
  std::vector<std::size_t> order;
  order.reserve(k);
  order.push_back(agent);
  for (std::size_t i = 0; i < k; ++i) {
    if (i != agent) order.push_back(i);
  }
  return order;
}

}  // namespace

TrustMatrix TrustMatrix::create(Eigen::MatrixXd weights,
                                std::optional<std::size_t> stubborn,
                                bool normalize) {
  const auto k = weights.rows();
  if (k == 0 || weights.cols() != k) {
    throw ValidationError("trust matrix must be square and non-empty, got " +
                          std::to_string(weights.rows()) + "x" +
                          std::to_string(weights.cols()));
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double w = weights(i, j);
      if (!std::isfinite(w)) {
        throw ValidationError("non-finite weight at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
      if (w < 0.0) {
        throw ValidationError("negative weight at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    const double sum = weights.row(i).sum();
    if (normalize) {
      if (sum <= 0.0) {
        throw ValidationError("row " + std::to_string(i) +
                              " has no weight to normalize");
      }
      weights.row(i) /= sum;
    } else if (std::abs(sum - 1.0) > kStochasticTolerance) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << sum << ", expected 1";
      throw ValidationError(msg.str());
    }
  }

  TrustMatrix t;
  const auto n = static_cast<std::size_t>(k);
  if (stubborn) {
    const std::size_t s = *stubborn;
    if (s >= n) {
      throw ValidationError("stubborn index " + std::to_string(s) +
                            " out of range for K=" + std::to_string(n));
    }
    const auto si = static_cast<Eigen::Index>(s);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double w = weights(si, j);
      const bool ok = (j == si) ? std::abs(w - 1.0) <= kStochasticTolerance : w == 0.0;
      if (!ok) {
        throw ValidationError("stubborn agent " + std::to_string(s) +
                              " must have the unit row (only a self-trust of 1)");
      }
    }
    t.labels_ = stubborn_first(n, s);
    Eigen::MatrixXd permuted(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        permuted(i, j) = weights(static_cast<Eigen::Index>(t.labels_[i]),
                                 static_cast<Eigen::Index>(t.labels_[j]));
      }
    }
    permuted.row(0).setZero();
    permuted(0, 0) = 1.0;
    t.weights_ = std::move(permuted);
    t.has_stubborn_ = true;
  } else {
    t.labels_.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.labels_[i] = i;
    t.weights_ = std::move(weights);
  }
  return t;
}

TrustMatrix TrustMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                   std::optional<std::size_t> stubborn,
                                   bool normalize) {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != k) {
      throw ValidationError("row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " entries, expected " +
                            std::to_string(k));
    }
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return create(std::move(m), stubborn, normalize);
}

TrustMatrix parse_edge_list(std::string_view text) {
  std::optional<std::size_t> declared_k;
  std::optional<std::size_t> stubborn;
  bool normalize = false;
  std::map<std::pair<std::size_t, std::size_t>, double> edges;
  std::size_t max_index = 0;
  bool any_edge = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find('\n', pos);
    const auto raw = text.substr(pos, next == std::string_view::npos ? text.npos
                                                                      : next - pos);
    pos = next == std::string_view::npos ? text.size() + 1 : next + 1;
    ++line_no;

    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;

    if (const auto eq = line.find('='); eq != std::string::npos) {
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "K") {
        declared_k = parse_index(value, line_no);
        if (*declared_k == 0) throw ParseError(line_prefix(line_no) + "K must be positive");
      } else if (key == "stubborn") {
        stubborn = parse_index(value, line_no);
      } else if (key == "normalize") {
        normalize = parse_bool(value, line_no);
      } else {
        throw ParseError(line_prefix(line_no) + "unknown directive '" + key + "'");
      }
      continue;
    }

    std::istringstream fields(line);
    std::string a, b, w, extra;
    if (!(fields >> a >> b >> w) || (fields >> extra)) {
      throw ParseError(line_prefix(line_no) + "expected 'i j w', got '" + line + "'");
    }
    const std::size_t i = parse_index(a, line_no);
    const std::size_t j = parse_index(b, line_no);
    const double weight = parse_weight(w, line_no);
    if (!std::isfinite(weight)) {
      throw ParseError(line_prefix(line_no) + "non-finite weight");
    }
    if (weight < 0.0) {
      throw ValidationError(line_prefix(line_no) + "negative weight " + w);
    }
    if (!edges.emplace(std::make_pair(i, j), weight).second) {
      throw ParseError(line_prefix(line_no) + "duplicate edge " + a + " " + b);
    }
    max_index = std::max({max_index, i, j});
    any_edge = true;
  }

  if (!any_edge && !declared_k) throw ParseError("edge list defines no agents");
  const std::size_t k = declared_k.value_or(max_index + 1);
  if (any_edge && max_index >= k) {
    throw ParseError("agent index " + std::to_string(max_index) +
                     " out of range for K=" + std::to_string(k));
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                            static_cast<Eigen::Index>(k));
  for (const auto& [ij, weight] : edges) {
    m(static_cast<Eigen::Index>(ij.first), static_cast<Eigen::Index>(ij.second)) = weight;
  }
  return TrustMatrix::create(std::move(m), stubborn, normalize);
}

TrustMatrix load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str());
}

std::vector<std::size_t> strongly_connected_components(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);

  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
        adjacency[i].push_back(j);
      }
    }
  }

  // Iterative Tarjan.
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), component(n, kUnvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
  std::size_t counter = 0;
  std::size_t components = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge < adjacency[v].size()) {
        const std::size_t w = adjacency[v][edge++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        std::size_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component[w] = components;
        } while (w != done);
        ++components;
      }
    }
  }
  return component;
}

bool check_irreducible(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return false;
  const auto components = strongly_connected_components(m);
  return std::all_of(components.begin(), components.end(),
                     [&](std::size_t c) { return c == components.front(); });
}

PartitionedTrust partition(const TrustMatrix& trust) {
  if (!trust.has_stubborn()) {
    throw ValidationError("partition requires a stubborn agent");
  }
  const auto k = static_cast<Eigen::Index>(trust.size());
  if (k < 2) throw ValidationError("partition requires at least one ordinary agent");

  PartitionedTrust p;
  p.r = trust.weights().block(1, 0, k - 1, 1);
  p.q = trust.weights().block(1, 1, k - 1, k - 1);

  if ((p.q.array() == 0.0).all()) {
    // A zero 1x1 block has no cycle; it is reducible in the matrix sense.
    throw NotIrreducible("the ordinary block is the zero matrix");
  }
  if (!(p.r.array() > 0.0).any()) {
    throw NoStubbornLink("no ordinary agent puts trust in the stubborn agent");
  }
  if (!check_irreducible(p.q)) {
    throw NotIrreducible("the ordinary agents are not strongly connected");
  }
  p.spectral = spectral_radius_perron(p.q);
  p.lambda = p.spectral.rho;
  p.psi = p.spectral.left_vector;
  return p;
}

TrustMatrix assemble(const Eigen::VectorXd& r, const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols() || q.rows() != r.size()) {
    throw DimensionMismatch("assemble: r and Q sizes disagree");
  }
  const auto k = q.rows() + 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  t(0, 0) = 1.0;
  t.block(1, 0, k - 1, 1) = r;
  t.block(1, 1, k - 1, k - 1) = q;
  return TrustMatrix::create(std::move(t), 0, false);
}

}  // namespace opdyn
