#include "digs/spectral.hpp"
#include "digs/hypergraph.hpp"
#include "oracles.hpp"

#include <catch2/catch.hpp>

#include <filesystem>

using namespace digs;

namespace {

EigsOptions lanczos_only(double tol = 1e-11) {
  EigsOptions o;
  o.tol = tol;
  o.dense_bound = 0;  // force the iterative path
  return o;
}

/// Largest principal angle between the column spaces of two orthonormal bases.
double principal_angle(const MatrixXd& a, const MatrixXd& b) {
  Eigen::JacobiSVD<MatrixXd> svd(a.transpose() * b);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smin);
}

}  // namespace

TEST_CASE("K2, P3 and the single-pair hypergraph spectra") {
  SparseMat w(2, 2);
  w.insert(0, 1) = 1.0;
  w.insert(1, 0) = 1.0;
  WeightedGraph k2(w);
  auto basis = smallest_eigenpairs(laplacian(k2, LaplacianKind::symmetric_normalized), 2,
                                   lanczos_only());
  REQUIRE(basis.lambda[0] == Approx(0.0).margin(1e-10));
  REQUIRE(basis.lambda[1] == Approx(2.0).epsilon(1e-10));

  SparseMat wp(3, 3);
  wp.insert(0, 1) = 1.0;
  wp.insert(1, 0) = 1.0;
  wp.insert(1, 2) = 1.0;
  wp.insert(2, 1) = 1.0;
  WeightedGraph p3(wp);
  auto b3 = smallest_eigenpairs(laplacian(p3, LaplacianKind::symmetric_normalized), 2,
                                lanczos_only());
  REQUIRE(b3.lambda[0] == Approx(0.0).margin(1e-10));
  REQUIRE(b3.lambda[1] == Approx(1.0).epsilon(1e-10));

  SparseMat h(2, 1);
  h.insert(0, 0) = 1.0;
  h.insert(1, 0) = 1.0;
  Hypergraph hg(h, VectorXd::Ones(1));
  auto bh = smallest_eigenpairs(hypergraph_laplacian(hg), 1, lanczos_only());
  REQUIRE(bh.lambda[0] == Approx(0.0).margin(1e-10));
  auto fh = dense_eigen_oracle(hypergraph_laplacian(hg));
  REQUIRE(fh.lambda[1] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("iterative solver agrees with the dense oracle on random graphs") {
  SplitMix64 rng(11);
  for (int rep = 0; rep < 12; ++rep) {
    const Index n = 10 + static_cast<Index>(rng.below(51));
    auto g = oracle::random_connected_graph(n, rng);
    auto op = laplacian(g, LaplacianKind::symmetric_normalized);
    const Index m = std::min<Index>(10, n - 1);
    auto basis = smallest_eigenpairs(op, m, lanczos_only(1e-12));
    auto full = dense_eigen_oracle(op);
    for (Index k = 0; k < m; ++k)
      REQUIRE(basis.lambda[k] == Approx(full.lambda[k]).margin(1e-8));
    REQUIRE(principal_angle(basis.phi, full.phi.leftCols(m)) < 1e-6);
    // orthonormality and residuals
    MatrixXd gram = basis.phi.transpose() * basis.phi;
    REQUIRE((gram - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-10);
    for (Index k = 0; k < m; ++k) {
      VectorXd r = op.apply(basis.phi.col(k)) - basis.lambda[k] * basis.phi.col(k);
      REQUIRE(r.norm() <= 1e-10);
    }
    REQUIRE(basis.lambda[0] <= 1e-10);
    REQUIRE(basis.lambda[m - 1] <= 2.0 + 1e-10);
  }
}

TEST_CASE("iterative solver agrees with the dense oracle on random hypergraphs") {
  SplitMix64 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 12 + static_cast<Index>(rng.below(30));
    auto hg = oracle::random_hypergraph(n, rng);
    auto op = hypergraph_laplacian(hg);
    const Index m = std::min<Index>(8, n - 1);
    auto basis = smallest_eigenpairs(op, m, lanczos_only(1e-12));
    auto full = dense_eigen_oracle(op);
    for (Index k = 0; k < m; ++k)
      REQUIRE(basis.lambda[k] == Approx(full.lambda[k]).margin(1e-8));
  }
}

TEST_CASE("eigenvalue sum equals the trace") {
  SplitMix64 rng(13);
  auto g = oracle::random_connected_graph(40, rng);
  auto op = laplacian(g, LaplacianKind::symmetric_normalized);
  auto full = dense_eigen_oracle(op);
  REQUIRE(full.lambda.sum() == Approx(op.dense().trace()).margin(1e-8));
}

TEST_CASE("fixed seed reproduces the basis bit for bit") {
  SplitMix64 rng(14);
  auto g = oracle::random_connected_graph(30, rng);
  auto op = laplacian(g, LaplacianKind::symmetric_normalized);
  EigsOptions o = lanczos_only();
  o.seed = 77;
  auto b1 = smallest_eigenpairs(op, 6, o);
  auto b2 = smallest_eigenpairs(op, 6, o);
  REQUIRE((b1.phi - b2.phi).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((b1.lambda - b2.lambda).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter and convergence errors") {
  SplitMix64 rng(15);
  auto g = oracle::random_connected_graph(30, rng);
  auto op = laplacian(g, LaplacianKind::symmetric_normalized);
  REQUIRE_THROWS_AS(smallest_eigenpairs(op, 31, lanczos_only()), std::invalid_argument);
  REQUIRE_THROWS_AS(smallest_eigenpairs(op, 0, lanczos_only()), std::invalid_argument);
  EigsOptions tiny = lanczos_only(1e-14);
  tiny.max_iter = 4;
  REQUIRE_THROWS_WITH(smallest_eigenpairs(op, 4, tiny), Catch::Contains("residuals"));
  REQUIRE_THROWS_AS(smallest_eigenpairs(laplacian(g, LaplacianKind::random_walk), 4, lanczos_only()),
                    std::invalid_argument);
}

TEST_CASE("dense delegation below the oracle bound matches the oracle") {
  SplitMix64 rng(16);
  auto g = oracle::random_connected_graph(25, rng);
  auto op = laplacian(g, LaplacianKind::symmetric_normalized);
  EigsOptions o;
  o.dense_bound = 100;
  auto basis = smallest_eigenpairs(op, 5, o);
  auto full = dense_eigen_oracle(op);
  REQUIRE((basis.lambda - full.lambda.head(5).cwiseMax(0.0)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((basis.phi - full.phi.leftCols(5)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(dense_eigen_oracle(op, 10), std::invalid_argument);
}

TEST_CASE("basis save/load round-trips exactly") {
  SplitMix64 rng(17);
  auto g = oracle::random_connected_graph(20, rng);
  auto basis = smallest_eigenpairs(laplacian(g, LaplacianKind::symmetric_normalized), 4,
                                   lanczos_only());
  const auto prefix = std::filesystem::temp_directory_path() / "digs_basis_test";
  save_basis(prefix, basis);
  REQUIRE(basis_cached(prefix));
  auto loaded = load_basis(prefix);
  REQUIRE((loaded.phi - basis.phi).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((loaded.lambda - basis.lambda).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(prefix.string() + ".lambda.csv");
  std::filesystem::remove(prefix.string() + ".phi.csv");
}
