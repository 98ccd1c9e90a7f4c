#include <gtest/gtest.h>

#include <random>

#include "dagctrl/graph.hpp"

using namespace dagctrl;

namespace {

// adj(to, from) = true for each 0-based (from, to).
Adjacency make_adj(int N, const std::vector<std::pair<int, int>>& edges) {
  Adjacency a = Adjacency::Identity(N, N);
  for (auto [from, to] : edges) a(to, from) = true;
  return a;
}

InfoGraph fig1() { return InfoGraph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}}); }

Adjacency bool_square(const Adjacency& S) {
  const Index N = S.rows();
  Adjacency out = Adjacency::Constant(N, N, false);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j)
      for (Index k = 0; k < N; ++k) out(i, j) = out(i, j) || (S(i, k) && S(k, j));
  return out;
}

Adjacency random_dag(std::mt19937_64& rng, int N, double p) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int> order(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  Adjacency a = Adjacency::Identity(N, N);
  for (int x = 0; x < N; ++x)
    for (int y = x + 1; y < N; ++y)
      if (u(rng) < p) a(order[static_cast<std::size_t>(y)], order[static_cast<std::size_t>(x)]) = true;
  return a;
}

}  // namespace

TEST(TransitiveClosure, ChainAddsShortcut) {
  const Adjacency S = transitive_closure(make_adj(3, {{0, 1}, {1, 2}}));
  EXPECT_TRUE(S(2, 0));
  EXPECT_FALSE(S(0, 2));
}

TEST(TransitiveClosure, FigureOneImpliesOneToFive) {
  const Adjacency S = transitive_closure(make_adj(5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}}));
  EXPECT_TRUE(S(4, 0));
  EXPECT_FALSE(S(4, 1));
  EXPECT_FALSE(S(2, 1));
}

TEST(TransitiveClosure, IdentityStaysIdentity) {
  const Adjacency S = transitive_closure(Adjacency::Identity(4, 4));
  EXPECT_EQ(S, Adjacency(Adjacency::Identity(4, 4)));
}

TEST(TransitiveClosure, RequiresUnitDiagonal) {
  Adjacency a = Adjacency::Constant(2, 2, false);
  a(1, 0) = true;
  EXPECT_THROW(transitive_closure(a), InvalidArgument);
}

TEST(TransitiveClosure, CycleRejected) {
  EXPECT_THROW(transitive_closure(make_adj(3, {{0, 1}, {1, 2}, {2, 0}})), CycleError);
  EXPECT_THROW(InfoGraph::from_edges(2, {{0, 1}, {1, 0}}), CycleError);
}

TEST(TransitiveClosure, NonSquareRejected) {
  EXPECT_THROW(transitive_closure(Adjacency::Constant(2, 3, false)), DimensionError);
}

TEST(TransitiveClosure, IdempotentAndMonotoneOnRandomDags) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 2 + trial % 7;
    const Adjacency a = random_dag(rng, N, 0.3);
    const Adjacency S = transitive_closure(a);
    EXPECT_EQ(transitive_closure(S), S);
    EXPECT_EQ(bool_square(S), S);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j) {
        if (a(i, j)) EXPECT_TRUE(S(i, j));
        if (S(i, j) || S(j, i) || i == j) continue;
        Adjacency b = S;
        b(i, j) = true;
        const Adjacency Sb = transitive_closure(b);
        for (Index r = 0; r < N; ++r)
          for (Index c = 0; c < N; ++c)
            if (S(r, c)) EXPECT_TRUE(Sb(r, c));
      }
  }
}

TEST(Relabel, UpperEntrySwapsNodes) {
  const auto [perm, g] = relabel_topological(make_adj(2, {{1, 0}}));
  EXPECT_EQ(perm, (std::vector<int>{1, 0}));
  EXPECT_TRUE(g.adjacency()(1, 0));
  EXPECT_FALSE(g.adjacency()(0, 1));
  EXPECT_EQ(g.original_label(), (std::vector<int>{1, 0}));
}

TEST(Relabel, LowerTriangularKeepsOrder) {
  const auto [perm, g] = relabel_topological(make_adj(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(perm, (std::vector<int>{0, 1, 2}));
}

TEST(Relabel, FigureOneAlreadyTopological) {
  EXPECT_EQ(fig1().perm(), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Relabel, RandomDagsBecomeLowerTriangular) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 1 + trial % 8;
    const Adjacency a = random_dag(rng, N, 0.4);
    const InfoGraph g = InfoGraph::from_adjacency(a);
    const Adjacency& S = g.adjacency();
    for (Index i = 0; i < N; ++i) {
      EXPECT_TRUE(S(i, i));
      for (Index j = i + 1; j < N; ++j) EXPECT_FALSE(S(i, j));
    }
    const auto& perm = g.perm();
    const Adjacency closed = transitive_closure(a);
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j) EXPECT_EQ(closed(i, j), S(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
  }
}

TEST(Relatives, FigureOne) {
  const InfoGraph g = fig1();
  EXPECT_EQ(g.descendants(3), (IndexSet{3, 4}));
  EXPECT_EQ(g.strict_ancestors(4), (IndexSet{0, 3}));
  EXPECT_EQ(g.descendants(0), (IndexSet{0, 1, 2, 3, 4}));
  EXPECT_EQ(g.ancestors(2), (IndexSet{0, 2}));
  EXPECT_EQ(g.strict_descendants(1), IndexSet{});
  const Relatives r = relatives(g, 3);
  EXPECT_EQ(r.ancestors, (IndexSet{0, 3}));
  EXPECT_EQ(r.strict_descendants, (IndexSet{4}));
}

TEST(Relatives, OutOfRange) {
  const InfoGraph g = fig1();
  EXPECT_THROW(g.descendants(5), IndexError);
  EXPECT_THROW(g.ancestors(-1), IndexError);
  EXPECT_THROW(relatives(g, 7), IndexError);
}

TEST(Relatives, ReflexiveAndDual) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const InfoGraph g = InfoGraph::from_adjacency(random_dag(rng, 6, 0.35));
    for (int i = 0; i < 6; ++i) {
      const auto d = g.descendants(i), a = g.ancestors(i);
      EXPECT_EQ(d.front(), i);
      EXPECT_EQ(a.back(), i);
      for (int j = 0; j < 6; ++j) {
        const auto aj = g.ancestors(j);
        const bool in_d = std::find(d.begin(), d.end(), j) != d.end();
        const bool in_a = std::find(aj.begin(), aj.end(), i) != aj.end();
        EXPECT_EQ(in_d, in_a);
      }
    }
  }
}

TEST(Selector, SecondScalarBlock) {
  const Eigen::MatrixXd E = selector(BlockPartition({1, 1}), {1});
  ASSERT_EQ(E.rows(), 2);
  ASSERT_EQ(E.cols(), 1);
  EXPECT_EQ(E(0, 0), 0.0);
  EXPECT_EQ(E(1, 0), 1.0);
}

TEST(Selector, FullSelectionIsIdentity) {
  EXPECT_EQ(selector(BlockPartition({2, 1}), {0, 1}), Eigen::MatrixXd::Identity(3, 3));
}

TEST(Selector, OrthonormalColumns) {
  const BlockPartition dims({2, 3, 1, 2});
  const IndexSet idx{0, 2, 3};
  const Eigen::MatrixXd E = selector(dims, idx);
  EXPECT_EQ(E.transpose() * E, Eigen::MatrixXd::Identity(dims.total(idx), dims.total(idx)));
}

TEST(Selector, OutOfRange) {
  EXPECT_THROW(selector(BlockPartition({1, 1}), {2}), IndexError);
}

TEST(BlockSubmatrix, IdentityRowAgainstOthers) {
  const BlockPartition d({1, 1, 1});
  const Eigen::MatrixXd X = block_submatrix(Eigen::MatrixXd::Identity(3, 3), d, {0}, d, {1, 2});
  EXPECT_EQ(X, Eigen::MatrixXd::Zero(1, 2));
}

TEST(BlockSubmatrix, RowTwoAgainstDescendantsOfFour) {
  Eigen::MatrixXd X(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) X(i, j) = 10 * (i + 1) + (j + 1);
  const BlockPartition d({1, 1, 1, 1, 1});
  const Eigen::MatrixXd sub = block_submatrix(X, d, {1}, d, fig1().descendants(3));
  ASSERT_EQ(sub.cols(), 2);
  EXPECT_EQ(sub(0, 0), 24);
  EXPECT_EQ(sub(0, 1), 25);
  const IndexSet all{0, 1, 2, 3, 4};
  EXPECT_EQ(block_submatrix(X, d, all, d, all), X);
}

TEST(BlockSubmatrix, MatchesSelectorSandwich) {
  const BlockPartition r({2, 1, 2}), c({1, 3});
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 4);
  EXPECT_EQ(block_submatrix(X, r, {0, 2}, c, {1}), selector(r, {0, 2}).transpose() * X * selector(c, {1}));
}

TEST(BlockSubmatrix, NonconformingPartition) {
  const BlockPartition d({1, 1});
  EXPECT_THROW(block_submatrix(Eigen::MatrixXd::Identity(3, 3), d, {0}, d, {1}), DimensionError);
}

TEST(InverseAdjacency, IntegerUnitDiagonal) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const InfoGraph g = InfoGraph::from_adjacency(random_dag(rng, 1 + trial % 7, 0.5));
    const Eigen::MatrixXi Sinv = g.inverse_adjacency();
    const Eigen::MatrixXd S = g.real_adjacency();
    EXPECT_TRUE((Sinv.diagonal().array() == 1).all());
    EXPECT_LE((S * Sinv.cast<double>() - Eigen::MatrixXd::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(InverseAdjacency, ChainOfTwo) {
  const InfoGraph g = InfoGraph::from_edges(2, {{0, 1}});
  Eigen::MatrixXi expect(2, 2);
  expect << 1, 0, -1, 1;
  EXPECT_EQ(g.inverse_adjacency(), expect);
}

TEST(InfoGraph, ClosedEdgesOfFigureOne) {
  const auto e = fig1().closed_edges();
  EXPECT_EQ(e.size(), 5u);
  EXPECT_NE(std::find(e.begin(), e.end(), std::make_pair(0, 4)), e.end());
}

TEST(InfoGraph, EdgeOutOfRange) {
  EXPECT_THROW(InfoGraph::from_edges(2, {{0, 2}}), IndexError);
}
