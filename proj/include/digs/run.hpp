#pragma once

#include "digs/config.hpp"
#include "digs/evaluation.hpp"
#include "digs/ingestion.hpp"
#include "digs/multiclass_solver.hpp"
#include "digs/scalar_solver.hpp"

#include <atomic>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

namespace digs {

/// Fully resolved run parameters: defaults applied, the convexity constant and
/// nu schedule expanded, every value echoed into the manifest.
struct ResolvedConfig {
  // input
  std::string input_kind;  // two_moons | four_corners | two_region_image | categorical |
                           // image | points_csv | table_csv
  std::string input_path;
  std::string truth_path;
  Index input_n = 3000;
  double input_noise = 0.1;
  double input_spread = 0.35;
  int input_k = 4;
  int input_width = 65, input_height = 65;
  double input_tail_fraction = 0.10;
  int input_attributes = 21;
  int input_values = 4;
  double input_flip = 0.25;
  std::uint64_t input_seed = 1;

  // graph / hypergraph
  std::string graph_mode;  // graph | hypergraph
  std::string weight_kind; // gaussian | zmp
  double sigma = 1.0;
  int r_scale = 9;
  int knn = 0;
  std::string metric;  // euclidean | manhattan | auto
  std::vector<std::string> hyper_columns;  // empty = all non-label columns
  std::string label_column = "class";
  double hyper_weight = 1.0;
  bool include_missing = false;
  std::vector<std::string> hyper_bins;  // "column:width" entries

  // spectral
  Index m = 15;
  EigsOptions eigs;
  std::string basis_cache;  // file prefix, optional

  // solver + fidelity
  std::string solver_mode;  // auto | scalar | multiclass
  SolverConfig solver;
  std::string c_spec;  // original text of solver.c
  double omega0 = 1.0;
  std::vector<int> n_sample;  // per class (broadcast when single)
  std::uint64_t run_seed = 1;

  ConfigMap to_map() const;
};

inline ResolvedConfig resolve_config(const ConfigMap& raw);

namespace detail {

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

template <class T>
std::string join_numeric(const std::vector<T>& items) {
  std::string out;
  for (const T& v : items) {
    if (!out.empty()) out += ' ';
    if constexpr (std::is_same_v<T, double>)
      out += format_double(v);
    else
      out += std::to_string(v);
  }
  return out;
}

}  // namespace detail

inline ConfigMap ResolvedConfig::to_map() const {
  ConfigMap m_;
  m_["input.kind"] = input_kind;
  if (!input_path.empty()) m_["input.path"] = input_path;
  if (!truth_path.empty()) m_["input.truth_path"] = truth_path;
  m_["input.n"] = std::to_string(input_n);
  m_["input.noise"] = format_double(input_noise);
  m_["input.spread"] = format_double(input_spread);
  m_["input.k"] = std::to_string(input_k);
  m_["input.width"] = std::to_string(input_width);
  m_["input.height"] = std::to_string(input_height);
  m_["input.tail_fraction"] = format_double(input_tail_fraction);
  m_["input.attributes"] = std::to_string(input_attributes);
  m_["input.values"] = std::to_string(input_values);
  m_["input.flip"] = format_double(input_flip);
  m_["input.seed"] = std::to_string(input_seed);
  m_["graph.mode"] = graph_mode;
  m_["graph.weight"] = weight_kind;
  m_["graph.sigma"] = format_double(sigma);
  m_["graph.R"] = std::to_string(r_scale);
  m_["graph.knn"] = std::to_string(knn);
  m_["graph.metric"] = metric;
  if (!hyper_columns.empty()) m_["hypergraph.columns"] = detail::join(hyper_columns);
  m_["hypergraph.label_column"] = label_column;
  m_["hypergraph.weight"] = format_double(hyper_weight);
  m_["hypergraph.include_missing"] = detail::bool_str(include_missing);
  if (!hyper_bins.empty()) m_["hypergraph.bin"] = detail::join(hyper_bins);
  m_["spectral.m"] = std::to_string(m);
  m_["spectral.tol"] = format_double(eigs.tol);
  m_["spectral.max_iter"] = std::to_string(eigs.max_iter);
  m_["spectral.seed"] = std::to_string(eigs.seed);
  m_["spectral.dense_bound"] = std::to_string(eigs.dense_bound);
  if (!basis_cache.empty()) m_["spectral.cache"] = basis_cache;
  m_["solver.mode"] = solver_mode;
  m_["solver.potential"] = solver.potential == Potential::smooth ? "smooth" : "nonsmooth";
  m_["solver.epsilon"] = format_double(solver.epsilon);
  m_["solver.tau"] = format_double(solver.tau);
  m_["solver.c"] = format_double(solver.c);
  m_["solver.omega0"] = format_double(omega0);
  m_["solver.eps_tol"] = format_double(solver.eps_tol);
  m_["solver.t_max"] = std::to_string(solver.t_max);
  m_["solver.nu_schedule"] = detail::join_numeric(solver.nu_schedule);
  m_["solver.newton_max"] = std::to_string(solver.newton.l_max);
  m_["solver.newton_rel"] = format_double(solver.newton.eps_rel);
  m_["solver.newton_abs"] = format_double(solver.newton.eps_abs);
  m_["solver.linear_solver"] =
      solver.linear_solver == LinearSolverKind::direct ? "direct" : "conjugate_gradient";
  m_["solver.stop_norm"] = solver.stop_norm == StopNorm::l2 ? "l2" : "max";
  m_["fidelity.n_sample"] = detail::join_numeric(n_sample);
  m_["run.seed"] = std::to_string(run_seed);
  return m_;
}

inline ResolvedConfig resolve_config(const ConfigMap& raw) {
  ConfigView view(raw);
  ResolvedConfig r;
  r.input_kind = view.get_string("input.kind", "two_moons");
  const bool tabular = r.input_kind == "categorical" || r.input_kind == "table_csv";
  r.input_path = view.get_string("input.path", "");
  r.truth_path = view.get_string("input.truth_path", "");
  r.input_n = view.get_int("input.n", 3000);
  r.input_noise = view.get_double("input.noise", r.input_kind == "two_region_image" ? 0.05 : 0.1);
  r.input_spread = view.get_double("input.spread", 0.35);
  r.input_k = static_cast<int>(view.get_int("input.k", 4));
  r.input_width = static_cast<int>(view.get_int("input.width", 65));
  r.input_height = static_cast<int>(view.get_int("input.height", 65));
  r.input_tail_fraction = view.get_double("input.tail_fraction", 0.10);
  r.input_attributes = static_cast<int>(view.get_int("input.attributes", 21));
  r.input_values = static_cast<int>(view.get_int("input.values", 4));
  r.input_flip = view.get_double("input.flip", 0.25);
  r.input_seed = view.get_seed("input.seed", 1);

  r.graph_mode = view.get_string("graph.mode", tabular ? "hypergraph" : "graph");
  if (r.graph_mode != "graph" && r.graph_mode != "hypergraph")
    throw std::invalid_argument("config: field 'graph.mode' must be graph|hypergraph");
  r.weight_kind = view.get_string("graph.weight", "zmp");
  if (r.weight_kind != "gaussian" && r.weight_kind != "zmp")
    throw std::invalid_argument("config: field 'graph.weight' must be gaussian|zmp");
  r.sigma = view.get_double("graph.sigma", 1.0);
  r.r_scale = static_cast<int>(view.get_int("graph.R", 9));
  r.knn = static_cast<int>(view.get_int("graph.knn", 0));
  r.metric = view.get_string("graph.metric", "auto");
  if (r.metric != "euclidean" && r.metric != "manhattan" && r.metric != "auto")
    throw std::invalid_argument("config: field 'graph.metric' must be euclidean|manhattan|auto");
  r.hyper_columns = view.get_list("hypergraph.columns");
  r.label_column = view.get_string("hypergraph.label_column", "class");
  r.hyper_weight = view.get_double("hypergraph.weight", 1.0);
  r.include_missing = view.get_bool("hypergraph.include_missing", false);
  r.hyper_bins = view.get_list("hypergraph.bin");

  r.m = view.get_int("spectral.m", 15);
  r.eigs.tol = view.get_double("spectral.tol", 1e-10);
  r.eigs.max_iter = static_cast<int>(view.get_int("spectral.max_iter", 1000));
  r.eigs.seed = view.get_seed("spectral.seed", 1);
  r.eigs.dense_bound = view.get_int("spectral.dense_bound", 256);
  r.basis_cache = view.get_string("spectral.cache", "");

  r.solver_mode = view.get_string("solver.mode", "auto");
  if (r.solver_mode != "auto" && r.solver_mode != "scalar" && r.solver_mode != "multiclass")
    throw std::invalid_argument("config: field 'solver.mode' must be auto|scalar|multiclass");
  const std::string pot = view.get_string("solver.potential", "nonsmooth");
  if (pot != "smooth" && pot != "nonsmooth")
    throw std::invalid_argument("config: field 'solver.potential' must be smooth|nonsmooth");
  r.solver.potential = pot == "smooth" ? Potential::smooth : Potential::nonsmooth;
  r.solver.epsilon = view.get_double("solver.epsilon", 0.5);
  r.solver.tau = view.get_double("solver.tau", 0.01);
  r.omega0 = view.get_double("solver.omega0", 1.0);
  r.c_spec = view.get_string("solver.c", "3/eps+omega0");
  r.solver.c = resolve_convexity_constant(r.c_spec, r.solver.epsilon, r.omega0);
  r.solver.eps_tol = view.get_double("solver.eps_tol", 1e-6);
  r.solver.t_max = static_cast<int>(view.get_int("solver.t_max", 500));
  if (view.has("solver.nu_schedule")) {
    r.solver.nu_schedule = view.get_double_list("solver.nu_schedule");
  } else {
    const double nu_min = view.get_double("solver.nu_min", 1e-7);
    if (!(nu_min > 0.0) || nu_min > 1e-1)
      throw std::invalid_argument("config: field 'solver.nu_min' must be in (0, 0.1]");
    r.solver.nu_schedule.clear();
    for (double nu = 1e-1; nu >= nu_min * (1.0 - 1e-12); nu /= 10.0)
      r.solver.nu_schedule.push_back(nu);
  }
  r.solver.newton.l_max = static_cast<int>(view.get_int("solver.newton_max", 20));
  r.solver.newton.eps_rel = view.get_double("solver.newton_rel", 1e-12);
  r.solver.newton.eps_abs = view.get_double("solver.newton_abs", 1e-6);
  const std::string lin = view.get_string("solver.linear_solver", "direct");
  if (lin != "direct" && lin != "conjugate_gradient")
    throw std::invalid_argument("config: field 'solver.linear_solver' must be direct|conjugate_gradient");
  r.solver.linear_solver =
      lin == "direct" ? LinearSolverKind::direct : LinearSolverKind::conjugate_gradient;
  const std::string norm = view.get_string("solver.stop_norm", "l2");
  if (norm != "l2" && norm != "max")
    throw std::invalid_argument("config: field 'solver.stop_norm' must be l2|max");
  r.solver.stop_norm = norm == "l2" ? StopNorm::l2 : StopNorm::max;
  try {
    r.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: [solver] ") + e.what());
  }

  r.n_sample = view.get_int_list("fidelity.n_sample");
  if (r.n_sample.empty()) r.n_sample = {10};
  r.run_seed = view.get_seed("run.seed", 1);
  return r;
}

/// Dataset as seen by a run: features or a table, plus ground truth and the
/// optional exactly-valued reference used for the FOC metric.
struct Dataset {
  std::optional<FeatureSet> features;
  std::optional<CategoricalTable> table;
  std::vector<int> truth;
  VectorXd foc_reference;
  int width = 0, height = 0;
  int k = 0;
};

namespace detail {

inline std::vector<int> labels_from_csv(const std::string& path) {
  MatrixXd m = read_matrix_csv(path);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) out.push_back(static_cast<int>(m(i, m.cols() - 1)));
  return out;
}

inline int count_classes(const std::vector<int>& truth) {
  int k = 0;
  for (int label : truth) k = std::max(k, label);
  return k;
}

}  // namespace detail

inline Dataset load_dataset(const ResolvedConfig& cfg) {
  Dataset d;
  if (cfg.input_kind == "two_moons") {
    auto pts = make_two_moons(cfg.input_n, cfg.input_noise, cfg.input_seed);
    d.features.emplace(std::move(pts.points));
    d.truth = std::move(pts.labels);
  } else if (cfg.input_kind == "four_corners") {
    auto pts = make_four_corners(cfg.input_n, cfg.input_k, cfg.input_spread, cfg.input_seed);
    d.features.emplace(std::move(pts.points));
    d.truth = std::move(pts.labels);
  } else if (cfg.input_kind == "two_region_image") {
    auto img = make_two_region_image(cfg.input_width, cfg.input_height, cfg.input_noise,
                                     cfg.input_seed, cfg.input_tail_fraction);
    d.features.emplace(std::move(img.observed));
    d.truth = std::move(img.labels);
    d.foc_reference = std::move(img.clean);
    d.width = img.width;
    d.height = img.height;
  } else if (cfg.input_kind == "image") {
    if (cfg.input_path.empty())
      throw std::invalid_argument("config: input.path required for kind=image");
    ImageData img = load_image(cfg.input_path);
    d.features.emplace(img.features);
    d.width = img.width;
    d.height = img.height;
    d.foc_reference = img.features.rowwise().mean();
    if (!cfg.truth_path.empty()) d.truth = detail::labels_from_csv(cfg.truth_path);
  } else if (cfg.input_kind == "points_csv") {
    if (cfg.input_path.empty())
      throw std::invalid_argument("config: input.path required for kind=points_csv");
    d.features.emplace(read_matrix_csv(cfg.input_path));
    if (!cfg.truth_path.empty()) d.truth = detail::labels_from_csv(cfg.truth_path);
  } else if (cfg.input_kind == "categorical") {
    auto synth = make_categorical_dataset(cfg.input_n, cfg.input_attributes, cfg.input_values,
                                          cfg.input_flip, cfg.input_seed);
    d.table.emplace(std::move(synth.table));
    d.truth = std::move(synth.labels);
  } else if (cfg.input_kind == "table_csv") {
    if (cfg.input_path.empty())
      throw std::invalid_argument("config: input.path required for kind=table_csv");
    d.table.emplace(load_table(cfg.input_path));
    const Index lc = d.table->column_index(cfg.label_column);
    std::map<std::string, int> code;
    for (const auto& row : d.table->cells) code.emplace(row[static_cast<std::size_t>(lc)], 0);
    int next = 1;
    for (auto& [value, id] : code) id = next++;
    for (const auto& row : d.table->cells)
      d.truth.push_back(code[row[static_cast<std::size_t>(lc)]]);
  } else {
    throw std::invalid_argument("config: unknown input.kind '" + cfg.input_kind + "'");
  }
  d.k = detail::count_classes(d.truth);
  return d;
}

/// In-memory basis cache for sweeps: runs that share the input, graph, and
/// spectral sections reuse one decomposition. Thread-safe.
class BasisCache {
 public:
  std::shared_ptr<const SpectralBasis> get_or_compute(
      const std::string& key, const std::function<SpectralBasis()>& compute) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    auto basis = std::make_shared<SpectralBasis>(compute());
    map_.emplace(key, basis);
    return basis;
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const SpectralBasis>> map_;
};

struct RunResult {
  std::vector<int> labels;
  std::map<std::string, double> metrics;
  Diagnostics diagnostics;
  std::vector<std::string> warnings;
  ConfigMap manifest;
  MatrixXd membership;    // n x K class memberships (multiclass runs)
  Index k_components = 0; // diagnostics column count for per-component data
};

namespace detail {

/// Canonical cache key: every field that influences the basis.
inline std::string basis_key(const ConfigMap& manifest) {
  static const char* sections[] = {"input.", "graph.", "hypergraph.", "spectral."};
  std::string key;
  for (const auto& [k, v] : manifest)
    for (const char* s : sections)
      if (k.rfind(s, 0) == 0 && k != "spectral.cache") key += k + "=" + v + ";";
  return key;
}

inline Metric resolve_metric(const ResolvedConfig& cfg, bool image_like) {
  if (cfg.metric == "euclidean") return Metric::euclidean;
  if (cfg.metric == "manhattan") return Metric::manhattan;
  return image_like ? Metric::manhattan : Metric::euclidean;
}

}  // namespace detail

/// Executes one fully resolved run. Label outputs are a pure function of the
/// manifest, so re-running a manifest reproduces them byte-identically.
inline RunResult run_segment(const ResolvedConfig& cfg, BasisCache* cache = nullptr) {
  RunResult result;
  result.manifest = cfg.to_map();

  Dataset data = load_dataset(cfg);
  if (data.truth.empty())
    throw std::invalid_argument("run: input provides no ground-truth labels; fidelity sampling "
                                "requires labels (provide input.truth_path)");
  const int k_classes = data.k;
  if (k_classes < 2) throw std::invalid_argument("run: need at least 2 classes in the truth");

  // operator over the chosen structure; owners stay alive for the whole run
  std::unique_ptr<WeightedGraph> graph;
  std::unique_ptr<Hypergraph> hyper;
  LinearOperator op;
  Index n = 0;
  if (cfg.graph_mode == "graph") {
    if (!data.features) throw std::invalid_argument("run: graph mode needs point/image input");
    const bool image_like = cfg.input_kind == "image" || cfg.input_kind == "two_region_image";
    const Metric metric = detail::resolve_metric(cfg, image_like);
    if (cfg.weight_kind == "gaussian")
      graph = std::make_unique<WeightedGraph>(
          gaussian_weights(*data.features, cfg.sigma, metric, cfg.knn));
    else
      graph = std::make_unique<WeightedGraph>(
          zmp_weights(*data.features, cfg.r_scale, metric, cfg.knn));
    op = laplacian(*graph, LaplacianKind::symmetric_normalized);
    n = graph->size();
  } else {
    if (!data.table) throw std::invalid_argument("run: hypergraph mode needs a table input");
    CategoricalTable table = *data.table;
    for (const auto& spec : cfg.hyper_bins) {
      const auto colon = spec.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: field 'hypergraph.bin' entries must be column:width");
      bin_numeric_column(table, spec.substr(0, colon), parse_double(spec.substr(colon + 1)));
    }
    std::vector<std::string> columns = cfg.hyper_columns;
    if (columns.empty()) {
      for (const auto& name : table.columns)
        if (name != cfg.label_column) columns.push_back(name);
    }
    hyper = std::make_unique<Hypergraph>(
        hyperedges_from_attributes(table, columns, cfg.hyper_weight, cfg.include_missing));
    op = hypergraph_laplacian(*hyper);
    n = hyper->vertices();
  }

  // spectral basis: in-memory cache, then the on-disk cache, then compute
  auto compute_basis = [&]() {
    if (!cfg.basis_cache.empty() && basis_cached(cfg.basis_cache)) {
      SpectralBasis b = load_basis(cfg.basis_cache);
      if (b.n() == n && b.m() == cfg.m) return b;
    }
    SpectralBasis b = smallest_eigenpairs(op, cfg.m, cfg.eigs);
    if (!cfg.basis_cache.empty()) save_basis(cfg.basis_cache, b);
    return b;
  };
  std::shared_ptr<const SpectralBasis> basis;
  if (cache)
    basis = cache->get_or_compute(detail::basis_key(result.manifest), compute_basis);
  else
    basis = std::make_shared<SpectralBasis>(compute_basis());

  // fidelity sample and derived seeds (separate streams for sampling and init)
  const std::uint64_t fid_seed = mix_seed(cfg.run_seed, 0, 0);
  const std::uint64_t init_seed = mix_seed(cfg.run_seed, 1, 0);
  std::vector<Index> fid_idx = sample_fidelity(data.truth, cfg.n_sample, fid_seed);

  const bool scalar_mode = cfg.solver_mode == "scalar" ||
                           (cfg.solver_mode == "auto" && k_classes <= 2);
  if (scalar_mode && k_classes > 2)
    throw std::invalid_argument("run: scalar mode needs a two-class truth");

  Diagnostics diag;
  if (scalar_mode) {
    FidelitySet fid;
    fid.indices = fid_idx;
    fid.values.resize(static_cast<Index>(fid_idx.size()));
    for (std::size_t t = 0; t < fid_idx.size(); ++t)
      fid.values[static_cast<Index>(t)] =
          data.truth[static_cast<std::size_t>(fid_idx[t])] == 1 ? 1.0 : -1.0;
    fid.omega0 = cfg.omega0;
    ScalarState state = make_initial_scalar(n, *basis, fid);
    auto [final_state, d] = run_scalar(state, *basis, fid, cfg.solver);
    diag = std::move(d);
    result.labels.resize(static_cast<std::size_t>(n));
    auto signs = classify_scalar(final_state);
    for (std::size_t i = 0; i < signs.size(); ++i) result.labels[i] = signs[i] == 1 ? 1 : 2;
    result.metrics["min_u"] = final_state.u.minCoeff();
    result.metrics["max_u"] = final_state.u.maxCoeff();
    result.metrics["overshoot"] =
        std::max(0.0, final_state.u.cwiseAbs().maxCoeff() - 1.0);
  } else {
    MulticlassFidelity fid;
    fid.indices = fid_idx;
    for (Index i : fid_idx) fid.labels.push_back(data.truth[static_cast<std::size_t>(i)]);
    fid.omega0 = cfg.omega0;
    fid.k = k_classes;
    if (cfg.solver.potential == Potential::smooth &&
        cfg.solver.c < cfg.omega0 + 1.0 / cfg.solver.epsilon)
      result.warnings.push_back("solver.c below omega0 + 1/epsilon; smooth splitting not convex");
    if (cfg.solver.potential == Potential::nonsmooth && cfg.solver.c < cfg.omega0)
      result.warnings.push_back("solver.c below omega0; non-smooth splitting not convex");
    SimplexState state = init_multiclass(n, k_classes, fid, init_seed);
    auto [final_state, d] = run_multiclass(state, *basis, fid, cfg.solver, &op);
    diag = std::move(d);
    result.labels = classify_multiclass(final_state);
    result.membership = final_state.u;
    result.k_components = k_classes;
    result.metrics["min_u"] = final_state.u.minCoeff();
    result.metrics["max_u"] = final_state.u.maxCoeff();
  }

  SegmentationResult seg{result.labels, data.truth};
  result.metrics["misclassification"] = misclassification(seg);
  result.metrics["misclassification_excl_fidelity"] = misclassification(seg, fid_idx, true);
  if (data.foc_reference.size() > 0) {
    result.metrics["foc"] =
        foc(data.foc_reference, segment_representative(data.foc_reference, result.labels));
  }
  result.metrics["steps"] = diag.steps.empty() ? 0.0 : diag.steps.back().step;
  result.metrics["converged"] = diag.converged ? 1.0 : 0.0;
  if (!diag.steps.empty()) result.metrics["final_rel_change"] = diag.steps.back().rel_change;
  result.diagnostics = std::move(diag);

  // side outputs that depend on dataset shape
  if (data.width > 0) {
    result.metrics["grid_width"] = data.width;
    result.metrics["grid_height"] = data.height;
  }
  return result;
}

/// Writes labels, diagnostics, metrics and the manifest into `dir`
/// (atomically, fixed formats). Multiclass runs also get membership.csv.
inline void write_run_outputs(const std::filesystem::path& dir, const RunResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::string out = "index,label\n";
    for (std::size_t i = 0; i < result.labels.size(); ++i)
      out += std::to_string(i) + "," + std::to_string(result.labels[i]) + "\n";
    write_file_atomic(dir / "labels.csv", out);
  }
  {
    std::string out = StepDiag::csv_header(result.k_components) + "\n";
    for (const auto& row : result.diagnostics.steps) out += row.csv_row() + "\n";
    write_file_atomic(dir / "diagnostics.csv", out);
  }
  if (result.membership.size() > 0) write_matrix_csv(dir / "membership.csv", result.membership);
  {
    std::string out;
    for (const auto& w : result.warnings) out += "# warning: " + w + "\n";
    out += "metric,value\n";
    for (const auto& [key, value] : result.metrics) out += key + "," + format_double(value) + "\n";
    write_file_atomic(dir / "metrics.csv", out);
  }
  write_file_atomic(dir / "manifest.cfg", serialize_config(result.manifest));
  const auto wit = result.metrics.find("grid_width");
  const auto hit = result.metrics.find("grid_height");
  if (wit != result.metrics.end() && hit != result.metrics.end()) {
    int k = 0;
    for (int label : result.labels) k = std::max(k, label);
    save_label_pgm((dir / "labels.pgm").string(), result.labels,
                   static_cast<int>(wit->second), static_cast<int>(hit->second), k);
  }
}

/// One sweep cell: the base config with the axis keys overridden.
struct SweepCell {
  std::size_t index = 0;
  std::vector<std::string> axis_values;
  ConfigMap overrides;
};

struct SweepSummaryRow {
  SweepCell cell;
  double mean_metric = std::numeric_limits<double>::quiet_NaN();
  int ok = 0;
  int failed = 0;
};

struct SweepOutcome {
  std::vector<SweepSummaryRow> rows;
  std::string metric;
};

/// Expands [sweep] axes into the cell grid (row-major, last axis fastest).
inline std::vector<SweepCell> expand_sweep_cells(const ConfigView& view) {
  const auto axes = view.get_list("sweep.axes");
  if (axes.empty()) throw std::invalid_argument("config: field 'sweep.axes' is required");
  std::vector<std::vector<std::string>> values;
  for (const auto& axis : axes) {
    auto v = view.get_list("sweep.values." + axis);
    if (v.empty())
      throw std::invalid_argument("config: field 'sweep.values." + axis + "' is required");
    values.push_back(std::move(v));
  }
  std::size_t total = 1;
  for (const auto& v : values) total *= v.size();
  std::vector<SweepCell> cells(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    SweepCell cell;
    cell.index = idx;
    cell.axis_values.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const std::size_t which = rem % values[a].size();
      rem /= values[a].size();
      cell.axis_values[a] = values[a][which];
      cell.overrides[axes[a]] = values[a][which];
    }
    cells[idx] = std::move(cell);
  }
  return cells;
}

/// Runs the sweep grid: `repeats` child runs per cell with seeds derived as
/// mix_seed(base_seed, cell, repeat). Child outputs land in
/// out_dir/cell<idx>/rep<r>/ so every run can be re-executed from its own
/// manifest. Per-run failures are recorded and the sweep continues.
inline SweepOutcome run_sweep(const ConfigMap& raw, const std::filesystem::path& out_dir,
                              int workers = 1, bool write_outputs = true) {
  ConfigView view(raw);
  const int repeats = static_cast<int>(view.get_int("sweep.repeats", 1));
  if (repeats < 1) throw std::invalid_argument("config: field 'sweep.repeats' must be >= 1");
  const std::uint64_t base_seed = view.get_seed("sweep.base_seed", 1);
  SweepOutcome outcome;
  outcome.metric = view.get_string("sweep.metric", "misclassification");

  auto cells = expand_sweep_cells(view);
  struct Task {
    std::size_t cell;
    int repeat;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int rep = 0; rep < repeats; ++rep) tasks.push_back({c, rep});

  std::vector<std::vector<double>> metric_values(cells.size());
  std::vector<std::vector<std::string>> errors(cells.size());
  for (auto& v : metric_values) v.assign(static_cast<std::size_t>(repeats),
                                         std::numeric_limits<double>::quiet_NaN());
  for (auto& e : errors) e.assign(static_cast<std::size_t>(repeats), "");

  BasisCache cache;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task task = tasks[t];
      ConfigMap child = raw;
      for (auto it = child.begin(); it != child.end();)
        it = it->first.rfind("sweep.", 0) == 0 ? child.erase(it) : std::next(it);
      for (const auto& [key, value] : cells[task.cell].overrides) child[key] = value;
      child["run.seed"] =
          std::to_string(mix_seed(base_seed, task.cell, static_cast<std::uint64_t>(task.repeat)));
      try {
        ResolvedConfig cfg = resolve_config(child);
        RunResult res = run_segment(cfg, &cache);
        const auto it = res.metrics.find(outcome.metric);
        if (it == res.metrics.end())
          throw std::runtime_error("metric '" + outcome.metric + "' not produced by the run");
        metric_values[task.cell][static_cast<std::size_t>(task.repeat)] = it->second;
        if (write_outputs) {
          const auto dir = out_dir / ("cell" + std::to_string(task.cell)) /
                           ("rep" + std::to_string(task.repeat));
          write_run_outputs(dir, res);
        }
      } catch (const std::exception& e) {
        errors[task.cell][static_cast<std::size_t>(task.repeat)] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nw = std::max(1, workers);
  for (int w = 0; w < nw - 1; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepSummaryRow row;
    row.cell = cells[c];
    double sum = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      const double v = metric_values[c][static_cast<std::size_t>(rep)];
      if (std::isnan(v)) {
        ++row.failed;
      } else {
        sum += v;
        ++row.ok;
      }
    }
    if (row.ok > 0) row.mean_metric = sum / row.ok;
    outcome.rows.push_back(std::move(row));
  }

  if (write_outputs) {
    ConfigView v2(raw);
    std::string out = "cell";
    for (const auto& axis : v2.get_list("sweep.axes")) out += "," + axis;
    out += ",mean_" + outcome.metric + ",runs_ok,runs_failed\n";
    for (const auto& row : outcome.rows) {
      out += std::to_string(row.cell.index);
      for (const auto& value : row.cell.axis_values) out += "," + value;
      out += "," + format_double(row.mean_metric) + "," + std::to_string(row.ok) + "," +
             std::to_string(row.failed) + "\n";
    }
    write_file_atomic(out_dir / "summary.csv", out);
    std::string errs;
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (int rep = 0; rep < repeats; ++rep)
        if (!errors[c][static_cast<std::size_t>(rep)].empty())
          errs += "cell" + std::to_string(c) + " rep" + std::to_string(rep) + ": " +
                  errors[c][static_cast<std::size_t>(rep)] + "\n";
    if (!errs.empty()) write_file_atomic(out_dir / "failures.log", errs);
  }
  return outcome;
}

}  // namespace digs
