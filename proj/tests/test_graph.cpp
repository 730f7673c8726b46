#include "digs/graph.hpp"
#include "digs/spectral.hpp"
#include "oracles.hpp"

#include <catch2/catch.hpp>

using namespace digs;

namespace {

MatrixXd random_points(Index n, Index dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  MatrixXd pts(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  return pts;
}

}  // namespace

TEST_CASE("gaussian weights: forced values") {
  MatrixXd pts(3, 2);
  pts << 0.0, 0.0, 0.0, 0.0, 1.0, 0.0;  // first two coincide
  auto g = gaussian_weights(FeatureSet(pts), 0.7);
  REQUIRE(g.weights().coeff(0, 1) == 1.0);  // dist = 0 forces exp(0)

  MatrixXd pts2(2, 1);
  pts2 << 0.0, std::sqrt(2.0);  // dist^2 = sigma = 2
  auto g2 = gaussian_weights(FeatureSet(pts2), 2.0);
  REQUIRE(g2.weights().coeff(0, 1) == Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("gaussian weights match the brute-force pairwise oracle") {
  MatrixXd pts = random_points(5, 2, 42);
  auto g = gaussian_weights(FeatureSet(pts), 1.0);
  MatrixXd w = oracle::gaussian_dense(pts, 1.0, Metric::euclidean);
  REQUIRE((MatrixXd(g.weights()) - w).cwiseAbs().maxCoeff() < 1e-15);

  MatrixXd pts2 = random_points(60, 3, 43);
  auto g2 = gaussian_weights(FeatureSet(pts2), 0.8, Metric::manhattan);
  MatrixXd w2 = oracle::gaussian_dense(pts2, 0.8, Metric::manhattan);
  REQUIRE((MatrixXd(g2.weights()) - w2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zmp weights: collinear hand example and oracle agreement") {
  MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  auto g = zmp_weights(FeatureSet(pts), 1);
  // tau = (1, 1, 2); W_12 = exp(-1/sqrt(1*1)) = e^-1
  REQUIRE(g.weights().coeff(0, 1) == Approx(std::exp(-1.0)).epsilon(1e-14));
  REQUIRE(g.weights().coeff(0, 2) == Approx(std::exp(-9.0 / std::sqrt(2.0))).epsilon(1e-14));
  REQUIRE(g.weights().coeff(1, 2) == Approx(std::exp(-4.0 / std::sqrt(2.0))).epsilon(1e-14));

  MatrixXd pts2 = random_points(40, 2, 44);
  auto g2 = zmp_weights(FeatureSet(pts2), 5);
  MatrixXd w2 = oracle::zmp_dense(pts2, 5, Metric::euclidean);
  REQUIRE((MatrixXd(g2.weights()) - w2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zmp weights reject duplicates and bad R") {
  MatrixXd dup(3, 1);
  dup << 1.0, 1.0, 2.0;
  REQUIRE_THROWS_WITH(zmp_weights(FeatureSet(dup), 1), Catch::Contains("tau=0"));
  MatrixXd pts = random_points(4, 2, 45);
  REQUIRE_THROWS_AS(zmp_weights(FeatureSet(pts), 4), std::invalid_argument);
}

TEST_CASE("constructed graphs are exactly symmetric with positive degrees") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    MatrixXd pts = random_points(30, 2, seed);
    auto g = zmp_weights(FeatureSet(pts), 4, Metric::euclidean, 7);
    SparseMat diff = g.weights() - SparseMat(g.weights().transpose());
    double max_asym = 0.0;
    for (Index k = 0; k < diff.outerSize(); ++k)
      for (SparseMat::InnerIterator it(diff, k); it; ++it)
        max_asym = std::max(max_asym, std::abs(it.value()));
    REQUIRE(max_asym == 0.0);
    REQUIRE(g.degrees().minCoeff() > 0.0);
  }
}

TEST_CASE("zero-degree vertices are rejected by name") {
  // the far point's weights underflow to zero
  MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 1e6;
  REQUIRE_THROWS_WITH(gaussian_weights(FeatureSet(pts), 1.0), Catch::Contains("vertex 2"));
}

TEST_CASE("knn sparsification keeps the symmetric union") {
  MatrixXd pts = random_points(25, 2, 46);
  FeatureSet fs(pts);
  auto g = gaussian_weights(fs, 1.0, Metric::euclidean, 3);
  // every retained pair must carry the exact formula value
  MatrixXd w = oracle::gaussian_dense(pts, 1.0, Metric::euclidean);
  for (Index k = 0; k < g.weights().outerSize(); ++k)
    for (SparseMat::InnerIterator it(g.weights(), k); it; ++it)
      REQUIRE(it.value() == Approx(w(it.row(), it.col())).epsilon(1e-15));
  REQUIRE(g.weights().nonZeros() < 25 * 24);  // actually sparsified
}

TEST_CASE("K2 and P3 normalized Laplacians match the dense eigen oracle") {
  SparseMat w(2, 2);
  w.insert(0, 1) = 1.0;
  w.insert(1, 0) = 1.0;
  WeightedGraph k2(w);
  auto op = laplacian(k2, LaplacianKind::symmetric_normalized);
  MatrixXd ls = op.dense();
  REQUIRE(ls(0, 0) == Approx(1.0));
  REQUIRE(ls(0, 1) == Approx(-1.0));
  auto eig = dense_eigen_oracle(op);
  REQUIRE(eig.lambda[0] == Approx(0.0).margin(1e-12));
  REQUIRE(eig.lambda[1] == Approx(2.0).epsilon(1e-12));

  SparseMat wp(3, 3);
  wp.insert(0, 1) = 1.0;
  wp.insert(1, 0) = 1.0;
  wp.insert(1, 2) = 1.0;
  wp.insert(2, 1) = 1.0;
  WeightedGraph p3(wp);
  auto eig3 = dense_eigen_oracle(laplacian(p3, LaplacianKind::symmetric_normalized));
  REQUIRE(eig3.lambda[0] == Approx(0.0).margin(1e-12));
  REQUIRE(eig3.lambda[1] == Approx(1.0).epsilon(1e-12));
  REQUIRE(eig3.lambda[2] == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("L_s annihilates D^{1/2} 1 and is positive semidefinite") {
  SplitMix64 rng(47);
  for (int rep = 0; rep < 5; ++rep) {
    auto g = oracle::random_connected_graph(20, rng);
    auto op = laplacian(g, LaplacianKind::symmetric_normalized);
    VectorXd null_vec = g.degrees().cwiseSqrt();
    REQUIRE(op.apply(null_vec).cwiseAbs().maxCoeff() < 1e-12 * null_vec.norm());
    for (int t = 0; t < 100; ++t) {
      VectorXd x(20);
      for (Index i = 0; i < 20; ++i) x[i] = rng.uniform(-1.0, 1.0);
      REQUIRE(x.dot(op.apply(x)) >= -1e-12);
    }
  }
}

TEST_CASE("laplacian kinds agree with their definitions") {
  SplitMix64 rng(48);
  auto g = oracle::random_connected_graph(12, rng);
  MatrixXd w = MatrixXd(g.weights());
  VectorXd d = g.degrees();

  MatrixXd comb = laplacian(g, LaplacianKind::combinatorial).dense();
  REQUIRE((comb - (MatrixXd(d.asDiagonal()) - w)).cwiseAbs().maxCoeff() < 1e-14);

  MatrixXd sym = laplacian(g, LaplacianKind::symmetric_normalized).dense();
  REQUIRE((sym - oracle::normalized_laplacian_dense(w)).cwiseAbs().maxCoeff() < 1e-13);

  auto rw = laplacian(g, LaplacianKind::random_walk);
  REQUIRE_FALSE(rw.symmetric);
  MatrixXd rwm = rw.dense();
  MatrixXd expect = MatrixXd::Identity(12, 12) - d.cwiseInverse().asDiagonal() * w;
  REQUIRE((rwm - expect).cwiseAbs().maxCoeff() < 1e-13);

  // operator apply matches the dense materialization
  VectorXd x(12);
  for (Index i = 0; i < 12; ++i) x[i] = rng.uniform(-1.0, 1.0);
  REQUIRE((laplacian(g, LaplacianKind::symmetric_normalized).apply(x) - sym * x).norm() < 1e-12);
}

TEST_CASE("feature set rejects bad input") {
  MatrixXd one(1, 2);
  one << 0.0, 0.0;
  REQUIRE_THROWS_AS(FeatureSet(one), std::invalid_argument);
  MatrixXd nan(2, 1);
  nan << 0.0, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(FeatureSet(nan), std::invalid_argument);
}
