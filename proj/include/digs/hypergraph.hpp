#pragma once

#include "digs/graph.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace digs {

/// Rectangular table of categorical values. Missing cells are flagged by the
/// empty string (loaders normalize their missing markers to it).
struct CategoricalTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;  // rows x columns

  Index rows() const { return static_cast<Index>(cells.size()); }
  Index cols() const { return static_cast<Index>(columns.size()); }

  bool is_missing(Index r, Index c) const {
    return cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].empty();
  }

  Index column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return static_cast<Index>(c);
    throw std::invalid_argument("CategoricalTable: no column named '" + name + "'");
  }

  void validate() const {
    for (const auto& row : cells)
      if (row.size() != columns.size())
        throw std::invalid_argument("CategoricalTable: ragged row");
  }
};

/// Vertex/hyperedge incidence structure with hyperedge weights.
/// d_v(j) = sum of w(e) over hyperedges containing j; delta(e) = |e|.
class Hypergraph {
 public:
  Hypergraph(SparseMat incidence, VectorXd edge_weights)
      : h_(std::move(incidence)), w_e_(std::move(edge_weights)) {
    h_.makeCompressed();
    const Index n = h_.rows();
    const Index me = h_.cols();
    if (w_e_.size() != me) throw std::invalid_argument("Hypergraph: weight count != edge count");
    for (Index e = 0; e < me; ++e)
      if (!(w_e_[e] > 0.0)) throw std::invalid_argument("Hypergraph: nonpositive weight on edge " +
                                                        std::to_string(e));
    delta_ = VectorXd::Zero(me);
    d_v_ = VectorXd::Zero(n);
    for (Index e = 0; e < h_.outerSize(); ++e) {
      for (SparseMat::InnerIterator it(h_, e); it; ++it) {
        if (it.value() != 1.0)
          throw std::invalid_argument("Hypergraph: incidence entries must be 0/1");
        delta_[e] += 1.0;
        d_v_[it.row()] += w_e_[e];
      }
    }
    for (Index e = 0; e < me; ++e)
      if (delta_[e] < 1.0)
        throw std::invalid_argument("Hypergraph: empty hyperedge " + std::to_string(e));
    for (Index i = 0; i < n; ++i)
      if (!(d_v_[i] > 0.0))
        throw std::invalid_argument("Hypergraph: vertex " + std::to_string(i) +
                                    " belongs to no hyperedge");
  }

  Index vertices() const { return h_.rows(); }
  Index edges() const { return h_.cols(); }
  const SparseMat& incidence() const { return h_; }
  const VectorXd& edge_weights() const { return w_e_; }
  const VectorXd& vertex_degrees() const { return d_v_; }
  const VectorXd& edge_degrees() const { return delta_; }

 private:
  SparseMat h_;     // n x m_e, 0/1
  VectorXd w_e_;    // m_e
  VectorXd d_v_;    // n
  VectorXd delta_;  // m_e
};

/// Builds one hyperedge per (column, value) pair: all rows sharing that value
/// in that column. Hyperedges are ordered column-major with values sorted
/// lexicographically inside a column, so a given table always produces the
/// identical incidence matrix. Missing cells join no hyperedge unless
/// include_missing is set (then the missing marker acts as a value of its own).
inline Hypergraph hyperedges_from_attributes(const CategoricalTable& table,
                                             const std::vector<std::string>& include_columns,
                                             double weight = 1.0, bool include_missing = false) {
  table.validate();
  if (include_columns.empty())
    throw std::invalid_argument("hyperedges_from_attributes: no columns selected");
  if (!(weight > 0.0))
    throw std::invalid_argument("hyperedges_from_attributes: weight must be > 0");
  const Index n = table.rows();
  if (n < 1) throw std::invalid_argument("hyperedges_from_attributes: empty table");

  std::vector<std::vector<Index>> edges;
  for (const auto& name : include_columns) {
    const Index c = table.column_index(name);
    std::map<std::string, std::vector<Index>> by_value;
    for (Index r = 0; r < n; ++r) {
      if (!include_missing && table.is_missing(r, c)) continue;
      by_value[table.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]].push_back(r);
    }
    for (auto& [value, members] : by_value)
      if (!members.empty()) edges.push_back(std::move(members));
  }

  const Index me = static_cast<Index>(edges.size());
  SparseMat h(n, me);
  Eigen::VectorXi counts(me);
  for (Index e = 0; e < me; ++e) counts[e] = static_cast<int>(edges[static_cast<std::size_t>(e)].size());
  h.reserve(counts);
  for (Index e = 0; e < me; ++e)
    for (Index r : edges[static_cast<std::size_t>(e)]) h.insert(r, e) = 1.0;
  h.makeCompressed();

  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (const auto& members : edges)
    for (Index r : members) covered[static_cast<std::size_t>(r)] = true;
  for (Index r = 0; r < n; ++r)
    if (!covered[static_cast<std::size_t>(r)])
      throw std::invalid_argument("hyperedges_from_attributes: row " + std::to_string(r) +
                                  " belongs to no hyperedge");

  return Hypergraph(h, VectorXd::Constant(me, weight));
}

/// Normalized hypergraph Laplacian L_s = I - Theta with
/// Theta = D_V^{-1/2} H W_H D_E^{-1} H^T D_V^{-1/2}, applied factored as four
/// sparse products (Theta itself can be dense).
inline LinearOperator hypergraph_laplacian(const Hypergraph& h) {
  LinearOperator op;
  op.n = h.vertices();
  const SparseMat* inc = &h.incidence();
  VectorXd dv_isqrt = h.vertex_degrees().cwiseSqrt().cwiseInverse();
  VectorXd edge_scale = h.edge_weights().cwiseQuotient(h.edge_degrees());  // w(e)/delta(e)
  auto theta = [inc, dv_isqrt, edge_scale](const VectorXd& x) {
    VectorXd y = dv_isqrt.cwiseProduct(x);
    VectorXd t = inc->transpose() * y;
    t = edge_scale.cwiseProduct(t);
    VectorXd z = (*inc) * t;
    return VectorXd(dv_isqrt.cwiseProduct(z));
  };
  op.companion = theta;
  op.apply = [theta](const VectorXd& x) { return VectorXd(x - theta(x)); };
  op.materialize = [inc, dv_isqrt, edge_scale]() {
    MatrixXd hd = MatrixXd(*inc);
    MatrixXd theta_m = dv_isqrt.asDiagonal() * hd * edge_scale.asDiagonal() * hd.transpose() *
                       dv_isqrt.asDiagonal();
    MatrixXd m = -theta_m;
    m.diagonal().array() += 1.0;
    return m;
  };
  return op;
}

/// Explicit double sum  sum_e sum_{ {i,j} in e } (w(e)/delta(e)) *
/// (u_i/sqrt(d_i) - u_j/sqrt(d_j))^2  over unordered pairs inside each
/// hyperedge. Equals u^T (I - Theta) u.
inline double hypergraph_quadratic_form(const Hypergraph& h, const VectorXd& u) {
  if (u.size() != h.vertices())
    throw std::invalid_argument("hypergraph_quadratic_form: dimension mismatch");
  VectorXd un = u.cwiseQuotient(h.vertex_degrees().cwiseSqrt());
  const SparseMat& inc = h.incidence();
  double total = 0.0;
  std::vector<Index> members;
  for (Index e = 0; e < inc.outerSize(); ++e) {
    members.clear();
    for (SparseMat::InnerIterator it(inc, e); it; ++it) members.push_back(it.row());
    const double scale = h.edge_weights()[e] / h.edge_degrees()[e];
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const double d = un[members[a]] - un[members[b]];
        total += scale * d * d;
      }
  }
  return total;
}

/// The adjacency matrix H W_H H^T - D_V from the hypergraph literature.
/// Exposed for inspection only; no scheme in this library consumes it.
inline MatrixXd hypergraph_adjacency(const Hypergraph& h, Index bound = 2000) {
  if (h.vertices() > bound)
    throw std::invalid_argument("hypergraph_adjacency: above dense bound");
  MatrixXd hd = MatrixXd(h.incidence());
  MatrixXd a = hd * h.edge_weights().asDiagonal() * hd.transpose();
  a.diagonal() -= h.vertex_degrees();
  return a;
}

}  // namespace digs
