#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "dagctrl/errors.hpp"

namespace dagctrl {

using Index = Eigen::Index;
using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Ordered (ascending) set of 0-based node ids.
using IndexSet = std::vector<int>;

/// Smallest transitively closed superset of `adj`. Entry (i, j) set means
/// node j's information reaches node i. Throws CycleError when the
/// off-diagonal relation contains a directed cycle.
Adjacency transitive_closure(const Adjacency& adj);

class InfoGraph;

/// Returns (perm, relabeled graph) with ties between incomparable nodes broken
/// by ascending original index.
std::pair<std::vector<int>, InfoGraph> relabel_topological(const Adjacency& adj);

/// Information DAG after transitive closure and topological relabeling.
/// Immutable once built; the adjacency is unit lower triangular.
class InfoGraph {
 public:
  /// Closes and relabels. Edges are 0-based (from, to) pairs in the
  /// original labeling meaning "from's information reaches to".
  static InfoGraph from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges);
  static InfoGraph from_adjacency(const Adjacency& adj);

  int size() const { return static_cast<int>(adj_.rows()); }
  const Adjacency& adjacency() const { return adj_; }
  bool reaches(int from, int to) const { return adj_(to, from); }

  /// perm()[original] = relabeled id.
  const std::vector<int>& perm() const { return perm_; }
  /// original_label()[relabeled] = original id.
  std::vector<int> original_label() const;

  IndexSet descendants(int i) const;
  IndexSet ancestors(int i) const;
  IndexSet strict_descendants(int i) const;
  IndexSet strict_ancestors(int i) const;

  /// S as a real matrix.
  Eigen::MatrixXd real_adjacency() const;
  /// S^{-1}; integer valued because S is unit lower triangular.
  Eigen::MatrixXi inverse_adjacency() const;

  /// Edges of the closed graph, relabeled ids, excluding self loops.
  std::vector<std::pair<int, int>> closed_edges() const;

 private:
  InfoGraph(Adjacency adj, std::vector<int> perm) : adj_(std::move(adj)), perm_(std::move(perm)) {}
  void check_node(int i) const;
  friend std::pair<std::vector<int>, InfoGraph> relabel_topological(const Adjacency& adj);

  Adjacency adj_;
  std::vector<int> perm_;
};

struct Relatives {
  IndexSet descendants;
  IndexSet ancestors;
  IndexSet strict_descendants;
  IndexSet strict_ancestors;
};

Relatives relatives(const InfoGraph& g, int i);

/// Sizes and offsets of a block partition.
class BlockPartition {
 public:
  BlockPartition() = default;
  explicit BlockPartition(std::vector<Index> sizes);

  int count() const { return static_cast<int>(sizes_.size()); }
  Index size(int i) const { return sizes_.at(static_cast<std::size_t>(i)); }
  Index offset(int i) const { return offsets_.at(static_cast<std::size_t>(i)); }
  Index total() const { return offsets_.back(); }
  Index total(const IndexSet& idx) const;
  const std::vector<Index>& sizes() const { return sizes_; }

  /// Scalar positions covered by the blocks in idx, in order.
  std::vector<Index> positions(const IndexSet& idx) const;

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_{0};
};

/// Per-agent state, input, measurement and noise dimensions.
struct BlockDims {
  BlockPartition n, m, p, q;

  int agents() const { return n.count(); }
};

/// Block columns of the identity selecting the blocks in idx.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> selector(const BlockPartition& dims,
                                                               const IndexSet& idx) {
  const auto pos = dims.positions(idx);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> E =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dims.total(), static_cast<Index>(pos.size()));
  for (std::size_t c = 0; c < pos.size(); ++c) E(pos[c], static_cast<Index>(c)) = Scalar(1);
  return E;
}

/// X_{rows, cols} for a block matrix X; equals selector(rows)^T X selector(cols).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> block_submatrix(
    const Eigen::MatrixBase<Derived>& X, const BlockPartition& row_dims, const IndexSet& rows,
    const BlockPartition& col_dims, const IndexSet& cols) {
  if (X.rows() != row_dims.total() || X.cols() != col_dims.total())
    throw DimensionError("block_submatrix: matrix is " + std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()) + " but partition is " +
                         std::to_string(row_dims.total()) + "x" + std::to_string(col_dims.total()));
  const auto r = row_dims.positions(rows);
  const auto c = col_dims.positions(cols);
  return X(r, c);
}

}  // namespace dagctrl
