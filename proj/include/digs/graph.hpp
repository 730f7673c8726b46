#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace digs {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

enum class Metric { euclidean, manhattan };

enum class LaplacianKind { combinatorial, symmetric_normalized, random_walk };

/// A set of n feature vectors of uniform dimension, one row per point.
/// For images this is one row per pixel holding the channel intensities.
class FeatureSet {
 public:
  explicit FeatureSet(MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() < 2) throw std::invalid_argument("FeatureSet: need at least 2 points");
    if (!points_.allFinite()) throw std::invalid_argument("FeatureSet: NaN/Inf entry");
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const MatrixXd& points() const { return points_; }

  /// Squared distance between points i and j under the given metric.
  /// manhattan squares the summed per-channel absolute differences.
  double squared_distance(Index i, Index j, Metric metric) const {
    switch (metric) {
      case Metric::euclidean:
        return (points_.row(i) - points_.row(j)).squaredNorm();
      case Metric::manhattan: {
        const double d = (points_.row(i) - points_.row(j)).cwiseAbs().sum();
        return d * d;
      }
    }
    return 0.0;
  }

 private:
  MatrixXd points_;
};

/// Undirected weighted graph: sparse symmetric nonnegative weight matrix with
/// zero diagonal plus the vertex degree vector. Isolated vertices are rejected
/// at construction since D^{-1/2} would be undefined.
class WeightedGraph {
 public:
  WeightedGraph(SparseMat w, bool trusted_symmetric = false) : w_(std::move(w)) {
    if (w_.rows() != w_.cols()) throw std::invalid_argument("WeightedGraph: W not square");
    w_.makeCompressed();
    if (!trusted_symmetric) check_symmetric();
    degree_ = VectorXd::Zero(w_.rows());
    for (Index k = 0; k < w_.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(w_, k); it; ++it) {
        if (it.row() == it.col() && it.value() != 0.0)
          throw std::invalid_argument("WeightedGraph: nonzero diagonal at vertex " +
                                      std::to_string(it.row()));
        if (it.value() < 0.0)
          throw std::invalid_argument("WeightedGraph: negative weight at (" +
                                      std::to_string(it.row()) + "," + std::to_string(it.col()) + ")");
        degree_[it.row()] += it.value();
      }
    }
    for (Index i = 0; i < degree_.size(); ++i) {
      if (degree_[i] <= 0.0)
        throw std::invalid_argument("WeightedGraph: vertex " + std::to_string(i) +
                                    " has zero degree");
    }
  }

  Index size() const { return w_.rows(); }
  const SparseMat& weights() const { return w_; }
  const VectorXd& degrees() const { return degree_; }

 private:
  void check_symmetric() const {
    SparseMat wt = SparseMat(w_.transpose());
    SparseMat diff = w_ - wt;
    for (Index k = 0; k < diff.outerSize(); ++k)
      for (SparseMat::InnerIterator it(diff, k); it; ++it)
        if (it.value() != 0.0) throw std::invalid_argument("WeightedGraph: W not symmetric");
  }

  SparseMat w_;
  VectorXd degree_;
};

/// Symmetric linear operator with on-demand dense materialization.
/// `apply` computes L x. `companion` computes (I - L) x, the similarity
/// companion the eigensolver iterates on. The operator holds references into
/// the graph/hypergraph it was built from; keep that object alive.
struct LinearOperator {
  Index n = 0;
  bool symmetric = true;
  std::function<VectorXd(const VectorXd&)> apply;
  std::function<VectorXd(const VectorXd&)> companion;
  std::function<MatrixXd()> materialize;

  /// Dense matrix of the operator; refuses above the oracle bound.
  MatrixXd dense(Index bound = 2000) const {
    if (n > bound)
      throw std::invalid_argument("LinearOperator: n=" + std::to_string(n) +
                                  " above dense bound " + std::to_string(bound));
    return materialize();
  }
};

namespace detail {

/// Distances from point i to all other points, as (distance, index) pairs
/// sorted ascending with index tie-break.
inline std::vector<std::pair<double, Index>> sorted_neighbors(const FeatureSet& points, Index i,
                                                              Metric metric) {
  const Index n = points.size();
  std::vector<std::pair<double, Index>> cand;
  cand.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    cand.emplace_back(std::sqrt(points.squared_distance(i, j, metric)), j);
  }
  std::sort(cand.begin(), cand.end());
  return cand;
}

/// Symmetric k-NN union: pair (i,j) retained if j is among the k nearest of i
/// or i among the k nearest of j. Returned as per-vertex sorted adjacency.
inline std::vector<std::vector<Index>> knn_union(const FeatureSet& points, int k, Metric metric) {
  const Index n = points.size();
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto cand = sorted_neighbors(points, i, metric);
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
    for (std::size_t t = 0; t < kk; ++t) {
      const Index j = cand[t].second;
      adj[static_cast<std::size_t>(i)].push_back(j);
      adj[static_cast<std::size_t>(j)].push_back(i);
    }
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return adj;
}

/// Fills a symmetric weight matrix from a pairwise weight callable.
/// weight(i,j) must be symmetric in its arguments.
template <class WeightFn>
SparseMat build_weight_matrix(const FeatureSet& points, int knn, Metric metric, WeightFn weight) {
  const Index n = points.size();
  SparseMat w(n, n);
  if (knn <= 0) {
    w.reserve(Eigen::VectorXi::Constant(n, static_cast<int>(n - 1)));
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (i == j) continue;
        const double v = weight(i, j);
        if (v > 0.0) w.insert(i, j) = v;
      }
    }
  } else {
    auto adj = knn_union(points, knn, metric);
    Eigen::VectorXi counts(n);
    for (Index j = 0; j < n; ++j) counts[j] = static_cast<int>(adj[static_cast<std::size_t>(j)].size());
    w.reserve(counts);
    for (Index j = 0; j < n; ++j) {
      for (Index i : adj[static_cast<std::size_t>(j)]) {
        const double v = weight(i, j);
        if (v > 0.0) w.insert(i, j) = v;
      }
    }
  }
  w.makeCompressed();
  return w;
}

}  // namespace detail

/// Gaussian weights w_ij = exp(-dist(x_i,x_j)^2 / sigma).
/// knn > 0 keeps the symmetric k-nearest-neighbor union of pairs.
inline WeightedGraph gaussian_weights(const FeatureSet& points, double sigma,
                                      Metric metric = Metric::euclidean, int knn = 0) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_weights: sigma must be > 0");
  if (knn != 0 && (knn < 1 || knn >= points.size()))
    throw std::invalid_argument("gaussian_weights: need 1 <= knn < n");
  auto weight = [&](Index i, Index j) {
    return std::exp(-points.squared_distance(i, j, metric) / sigma);
  };
  return WeightedGraph(detail::build_weight_matrix(points, knn, metric, weight), true);
}

/// Self-tuning weights of Zelnik-Manor and Perona:
/// w_ij = exp(-dist^2 / sqrt(tau_i tau_j)) with tau_i the distance from x_i to
/// its R-th nearest neighbor (self excluded, sorted with index tie-break).
inline WeightedGraph zmp_weights(const FeatureSet& points, int R,
                                 Metric metric = Metric::euclidean, int knn = 0) {
  const Index n = points.size();
  if (R < 1 || R >= n) throw std::invalid_argument("zmp_weights: need 1 <= R < n");
  if (knn != 0 && (knn < 1 || knn >= n))
    throw std::invalid_argument("zmp_weights: need 1 <= knn < n");

  VectorXd tau(n);
  for (Index i = 0; i < n; ++i) {
    auto cand = detail::sorted_neighbors(points, i, metric);
    tau[i] = cand[static_cast<std::size_t>(R - 1)].first;
    if (!(tau[i] > 0.0))
      throw std::invalid_argument("zmp_weights: duplicate points give tau=0 at vertex " +
                                  std::to_string(i));
  }
  auto weight = [&](Index i, Index j) {
    return std::exp(-points.squared_distance(i, j, metric) / std::sqrt(tau[i] * tau[j]));
  };
  return WeightedGraph(detail::build_weight_matrix(points, knn, metric, weight), true);
}

/// Graph Laplacian as a matrix-free operator.
///   combinatorial         L   = D - W
///   symmetric_normalized  L_s = I - D^{-1/2} W D^{-1/2}
///   random_walk           L_w = I - D^{-1} W   (nonsymmetric)
inline LinearOperator laplacian(const WeightedGraph& g, LaplacianKind kind) {
  LinearOperator op;
  op.n = g.size();
  const SparseMat* w = &g.weights();
  switch (kind) {
    case LaplacianKind::combinatorial: {
      VectorXd d = g.degrees();
      op.apply = [w, d](const VectorXd& x) { return VectorXd(d.cwiseProduct(x) - (*w) * x); };
      op.companion = [op_apply = op.apply](const VectorXd& x) {
        return VectorXd(x - op_apply(x));
      };
      op.materialize = [w, d]() {
        MatrixXd m = -MatrixXd(*w);
        m.diagonal() += d;
        return m;
      };
      break;
    }
    case LaplacianKind::symmetric_normalized: {
      VectorXd dis = g.degrees().cwiseSqrt().cwiseInverse();
      op.apply = [w, dis](const VectorXd& x) {
        return VectorXd(x - dis.cwiseProduct((*w) * dis.cwiseProduct(x)));
      };
      op.companion = [w, dis](const VectorXd& x) {
        return VectorXd(dis.cwiseProduct((*w) * dis.cwiseProduct(x)));
      };
      op.materialize = [w, dis]() {
        MatrixXd m = -(dis.asDiagonal() * MatrixXd(*w) * dis.asDiagonal());
        m.diagonal().array() += 1.0;
        return m;
      };
      break;
    }
    case LaplacianKind::random_walk: {
      VectorXd di = g.degrees().cwiseInverse();
      op.symmetric = false;
      op.apply = [w, di](const VectorXd& x) {
        return VectorXd(x - di.cwiseProduct((*w) * x));
      };
      op.companion = [w, di](const VectorXd& x) { return VectorXd(di.cwiseProduct((*w) * x)); };
      op.materialize = [w, di]() {
        MatrixXd m = -(di.asDiagonal() * MatrixXd(*w));
        m.diagonal().array() += 1.0;
        return m;
      };
      break;
    }
  }
  return op;
}

}  // namespace digs
