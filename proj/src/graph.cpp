#include "dagctrl/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace dagctrl {

namespace {

void require_square_unit_diagonal(const Adjacency& adj) {
  if (adj.rows() != adj.cols() || adj.rows() == 0)
    throw DimensionError("adjacency must be a non-empty square matrix");
  for (Index i = 0; i < adj.rows(); ++i)
    if (!adj(i, i)) throw InvalidArgument("adjacency must have unit diagonal (node " + std::to_string(i + 1) + ")");
}

}  // namespace

Adjacency transitive_closure(const Adjacency& adj) {
  require_square_unit_diagonal(adj);
  Adjacency S = adj;
  const Index N = S.rows();
  // Floyd-Warshall over the boolean semiring.
  for (Index k = 0; k < N; ++k)
    for (Index i = 0; i < N; ++i)
      if (S(i, k))
        for (Index j = 0; j < N; ++j)
          if (S(k, j)) S(i, j) = true;
  for (Index i = 0; i < N; ++i)
    for (Index j = i + 1; j < N; ++j)
      if (S(i, j) && S(j, i))
        throw CycleError("directed cycle through nodes " + std::to_string(i + 1) + " and " +
                         std::to_string(j + 1) + "; merge the cycle into a single node");
  return S;
}

std::pair<std::vector<int>, InfoGraph> relabel_topological(const Adjacency& adj) {
  const Adjacency S = transitive_closure(adj);
  const int N = static_cast<int>(S.rows());

  // Kahn's algorithm, always taking the smallest available original index.
  std::vector<int> pending(static_cast<std::size_t>(N), 0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j && S(i, j)) ++pending[static_cast<std::size_t>(i)];

  std::vector<int> order;
  std::vector<bool> done(static_cast<std::size_t>(N), false);
  while (static_cast<int>(order.size()) < N) {
    int next = -1;
    for (int i = 0; i < N; ++i)
      if (!done[static_cast<std::size_t>(i)] && pending[static_cast<std::size_t>(i)] == 0) {
        next = i;
        break;
      }
    if (next < 0) throw CycleError("no topological order exists");
    done[static_cast<std::size_t>(next)] = true;
    order.push_back(next);
    for (int i = 0; i < N; ++i)
      if (i != next && S(i, next)) --pending[static_cast<std::size_t>(i)];
  }

  std::vector<int> perm(static_cast<std::size_t>(N));
  for (int r = 0; r < N; ++r) perm[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;

  Adjacency relabeled(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      relabeled(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = S(i, j);

  return {perm, InfoGraph(std::move(relabeled), perm)};
}

InfoGraph InfoGraph::from_adjacency(const Adjacency& adj) {
  const Adjacency S = transitive_closure(adj);
  const int N = static_cast<int>(S.rows());
  bool lower = true;
  for (int i = 0; i < N && lower; ++i)
    for (int j = i + 1; j < N; ++j)
      if (S(i, j)) {
        lower = false;
        break;
      }
  if (lower) {
    std::vector<int> id(static_cast<std::size_t>(N));
    std::iota(id.begin(), id.end(), 0);
    return InfoGraph(S, std::move(id));
  }
  return relabel_topological(S).second;
}

InfoGraph InfoGraph::from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  if (num_nodes <= 0) throw InvalidArgument("graph needs at least one node");
  Adjacency S = Adjacency::Identity(num_nodes, num_nodes);
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= num_nodes || to < 0 || to >= num_nodes)
      throw IndexError("edge (" + std::to_string(from + 1) + "," + std::to_string(to + 1) +
                       ") references a node outside [1," + std::to_string(num_nodes) + "]");
    S(to, from) = true;
  }
  return from_adjacency(S);
}

std::vector<int> InfoGraph::original_label() const {
  std::vector<int> inv(perm_.size());
  for (std::size_t o = 0; o < perm_.size(); ++o) inv[static_cast<std::size_t>(perm_[o])] = static_cast<int>(o);
  return inv;
}

void InfoGraph::check_node(int i) const {
  if (i < 0 || i >= size())
    throw IndexError("node " + std::to_string(i + 1) + " outside [1," + std::to_string(size()) + "]");
}

IndexSet InfoGraph::descendants(int i) const {
  check_node(i);
  IndexSet out;
  for (int j = 0; j < size(); ++j)
    if (adj_(j, i)) out.push_back(j);
  return out;
}

IndexSet InfoGraph::ancestors(int i) const {
  check_node(i);
  IndexSet out;
  for (int j = 0; j < size(); ++j)
    if (adj_(i, j)) out.push_back(j);
  return out;
}

IndexSet InfoGraph::strict_descendants(int i) const {
  auto d = descendants(i);
  d.erase(std::remove(d.begin(), d.end(), i), d.end());
  return d;
}

IndexSet InfoGraph::strict_ancestors(int i) const {
  auto a = ancestors(i);
  a.erase(std::remove(a.begin(), a.end(), i), a.end());
  return a;
}

Eigen::MatrixXd InfoGraph::real_adjacency() const { return adj_.cast<double>(); }

Eigen::MatrixXi InfoGraph::inverse_adjacency() const {
  // Forward substitution on the unit lower triangular S, in integers.
  const int N = size();
  Eigen::MatrixXi S = adj_.cast<int>();
  Eigen::MatrixXi inv = Eigen::MatrixXi::Identity(N, N);
  for (int col = 0; col < N; ++col)
    for (int i = col + 1; i < N; ++i) {
      int acc = 0;
      for (int k = col; k < i; ++k) acc += S(i, k) * inv(k, col);
      inv(i, col) = -acc;
    }
  return inv;
}

std::vector<std::pair<int, int>> InfoGraph::closed_edges() const {
  std::vector<std::pair<int, int>> out;
  for (int from = 0; from < size(); ++from)
    for (int to = 0; to < size(); ++to)
      if (from != to && adj_(to, from)) out.emplace_back(from, to);
  return out;
}

Relatives relatives(const InfoGraph& g, int i) {
  return {g.descendants(i), g.ancestors(i), g.strict_descendants(i), g.strict_ancestors(i)};
}

BlockPartition::BlockPartition(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size() + 1);
  for (Index s : sizes_) {
    if (s <= 0) throw DimensionError("block sizes must be strictly positive");
    offsets_.push_back(offsets_.back() + s);
  }
}

Index BlockPartition::total(const IndexSet& idx) const {
  Index t = 0;
  for (int i : idx) {
    if (i < 0 || i >= count()) throw IndexError("block index " + std::to_string(i + 1) + " out of range");
    t += size(i);
  }
  return t;
}

std::vector<Index> BlockPartition::positions(const IndexSet& idx) const {
  std::vector<Index> pos;
  pos.reserve(static_cast<std::size_t>(total(idx)));
  for (int i : idx)
    for (Index k = 0; k < size(i); ++k) pos.push_back(offset(i) + k);
  return pos;
}

}  // namespace dagctrl
