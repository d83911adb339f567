#include <gtest/gtest.h>

#include <cmath>

#include "opdyn/errors.hpp"
#include "opdyn/graph.hpp"
#include "support/oracles.hpp"

using namespace opdyn;
namespace t = opdyn::testing;

// ============================================================================
// Loading
// ============================================================================

TEST(TrustMatrix, IdentityIsValid) {
  const auto m = TrustMatrix::from_rows({{1, 0}, {0, 1}});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_FALSE(m.has_stubborn());
}

TEST(TrustMatrix, StubbornUnitRowAccepted) {
  const auto m = TrustMatrix::from_rows({{1, 0}, {0.3, 0.7}}, 0);
  EXPECT_TRUE(m.has_stubborn());
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.3);
}

TEST(TrustMatrix, RowSumViolationRejected) {
  EXPECT_THROW(TrustMatrix::from_rows({{0.5, 0.6}, {0.3, 0.7}}), ValidationError);
}

TEST(TrustMatrix, NormalizeRescalesRows) {
  const auto m = TrustMatrix::from_rows({{0.5, 0.6}, {0.3, 0.7}}, std::nullopt, true);
  EXPECT_NEAR(m(0, 0), 0.5 / 1.1, 1e-15);
  EXPECT_NEAR(m.weights().row(0).sum(), 1.0, 1e-15);
}

TEST(TrustMatrix, NegativeWeightRejected) {
  EXPECT_THROW(TrustMatrix::from_rows({{1.2, -0.2}, {0, 1}}), ValidationError);
}

TEST(TrustMatrix, StubbornRowMustBeUnit) {
  EXPECT_THROW(TrustMatrix::from_rows({{0.5, 0.5}, {0.3, 0.7}}, 0), ValidationError);
  EXPECT_THROW(TrustMatrix::from_rows({{1, 0}, {0, 1}}, 2), ValidationError);
}

TEST(TrustMatrix, StubbornRelabeledToFront) {
  // Agent 2 is stubborn in the source labeling.
  const auto m = TrustMatrix::from_rows({{0.5, 0.2, 0.3}, {0.1, 0.6, 0.3}, {0, 0, 1}}, 2);
  EXPECT_EQ(m.labels(), (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.3);  // source t_02
  EXPECT_DOUBLE_EQ(m(1, 1), 0.5);  // source t_00
  EXPECT_DOUBLE_EQ(m(2, 2), 0.6);  // source t_11
  EXPECT_DOUBLE_EQ(m(2, 0), 0.3);  // source t_12
}

TEST(EdgeList, ParsesDirectivesAndComments) {
  const auto m = parse_edge_list(
      "# beta chain\n"
      "K=2\n"
      "stubborn=0\n"
      "0 0 1\n"
      "1 0 0.3   # trust in the stubborn agent\n"
      "1 1 0.7\n");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_TRUE(m.has_stubborn());
  EXPECT_DOUBLE_EQ(m(1, 0), 0.3);
}

TEST(EdgeList, EdgeConventionIsRowTrustsColumn) {
  // "1 0 w" means agent 1 trusts agent 0: t_10 = w.
  const auto m = parse_edge_list("0 0 1\n1 0 0.25\n1 1 0.75\n");
  EXPECT_DOUBLE_EQ(m(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
}

TEST(EdgeList, NormalizeDirective) {
  const auto m = parse_edge_list("normalize=true\n0 0 2\n1 0 1\n1 1 3\n");
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.25);
}

TEST(EdgeList, Errors) {
  EXPECT_THROW(parse_edge_list("0 0\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 x 1\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 0 abc\n"), ParseError);
  EXPECT_THROW(parse_edge_list("foo=1\n0 0 1\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 0 0.5\n0 0 0.5\n"), ParseError);
  EXPECT_THROW(parse_edge_list("K=1\n0 0 1\n1 1 1\n"), ParseError);
  EXPECT_THROW(parse_edge_list("0 0 -1\n"), ValidationError);
  EXPECT_THROW(parse_edge_list("0 0 0.5\n"), ValidationError);
  EXPECT_THROW(parse_edge_list(""), ParseError);
}

TEST(EdgeList, MissingFile) {
  EXPECT_THROW(load_edge_list_file("/nonexistent/net.edges"), ParseError);
}

// ============================================================================
// Irreducibility
// ============================================================================

TEST(Irreducible, TwoCycle) {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  EXPECT_TRUE(check_irreducible(m));
}

TEST(Irreducible, TriangularIsReducible) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 1, 1;
  EXPECT_FALSE(check_irreducible(m));
}

TEST(Irreducible, CyclePlusChords) {
  t::Rng rng(7);
  const auto m = t::random_irreducible_stochastic(6, rng, 0.4);
  EXPECT_TRUE(t::closure_strongly_connected(m));
  EXPECT_TRUE(check_irreducible(m));
}

TEST(Irreducible, AgreesWithClosureOracle) {
  t::Rng rng(11);
  std::bernoulli_distribution edge(0.3);
  int connected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<Eigen::Index>(t::uniform_index(rng, 1, 6));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (edge(rng)) m(i, j) = 1.0;
      }
    }
    const bool expected = t::closure_strongly_connected(m);
    connected += expected;
    ASSERT_EQ(check_irreducible(m), expected) << m;
  }
  // Both outcomes are exercised.
  EXPECT_GT(connected, 50);
  EXPECT_LT(connected, 1950);
}

// ============================================================================
// Partition
// ============================================================================

TEST(Partition, BetaChain) {
  const auto p = partition(TrustMatrix::from_rows({{1, 0}, {0.3, 0.7}}, 0));
  ASSERT_EQ(p.ordinary_count(), 1u);
  EXPECT_DOUBLE_EQ(p.r[0], 0.3);
  EXPECT_DOUBLE_EQ(p.q(0, 0), 0.7);
  EXPECT_NEAR(p.lambda, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(p.psi[0], 1.0);
}

TEST(Partition, ThreeAgentQuadraticOracle) {
  const auto p =
      partition(TrustMatrix::from_rows({{1, 0, 0}, {0.2, 0, 0.8}, {0, 0.8, 0.2}}, 0));
  EXPECT_DOUBLE_EQ(p.r[0], 0.2);
  EXPECT_DOUBLE_EQ(p.r[1], 0.0);
  // Characteristic polynomial x^2 - 0.2 x - 0.64 of Q.
  const double expected = (0.2 + std::sqrt(0.04 + 2.56)) / 2.0;
  EXPECT_NEAR(p.lambda, expected, 1e-12);
  EXPECT_NEAR(p.lambda, 0.9062, 1e-4);
  EXPECT_NEAR(p.psi.sum(), 1.0, 1e-15);
  EXPECT_TRUE((p.psi.array() > 0).all());
}

TEST(Partition, ReducibleOrdinaryBlock) {
  // Ordinary agents {1,2} and {3,4} never trust across halves.
  const auto m = TrustMatrix::from_rows({{1, 0, 0, 0, 0},
                                         {0.2, 0.4, 0.4, 0, 0},
                                         {0, 0.5, 0.5, 0, 0},
                                         {0.1, 0, 0, 0.5, 0.4},
                                         {0, 0, 0, 0.5, 0.5}},
                                        0);
  EXPECT_THROW(partition(m), NotIrreducible);
}

TEST(Partition, NoStubbornLink) {
  const auto m = TrustMatrix::from_rows({{1, 0, 0}, {0, 0.5, 0.5}, {0, 0.5, 0.5}}, 0);
  EXPECT_THROW(partition(m), NoStubbornLink);
}

TEST(Partition, RequiresStubborn) {
  EXPECT_THROW(partition(TrustMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})), ValidationError);
}

TEST(Partition, AssembleRoundTrip) {
  t::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = t::uniform_index(rng, 2, 9);
    const auto net = t::random_stubborn_network(k, t::uniform_index(rng, 1, k - 1), rng);
    const auto p = partition(net);
    // Stubborn row is the unit row, ordinary rows are [r Q].
    EXPECT_EQ(net.weights().row(0).sum(), 1.0);
    EXPECT_EQ(net(0, 0), 1.0);
    const auto back = partition(assemble(p.r, p.q));
    EXPECT_EQ(back.r, p.r);
    EXPECT_EQ(back.q, p.q);
  }
}
