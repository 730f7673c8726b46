#pragma once

#include "digs/csv.hpp"
#include "digs/graph.hpp"
#include "digs/hypergraph.hpp"
#include "digs/rng.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace digs {

/// Image loaded as one feature row per pixel (row-major pixel order), channel
/// intensities scaled to [0,1]. The grid shape is retained for rendering
/// labels back out.
struct ImageData {
  MatrixXd features;  // n x channels
  int width = 0;
  int height = 0;
  int channels = 1;
};

namespace detail {

inline int next_pnm_token(std::istream& is) {
  for (;;) {
    int ch = is.peek();
    if (ch == '#') {
      std::string skip;
      std::getline(is, skip);
    } else if (std::isspace(ch)) {
      is.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(is >> value) || value < 0) throw std::runtime_error("image: malformed header");
  return value;
}

}  // namespace detail

/// Loads PGM/PPM (P2/P3 ascii, P5/P6 binary) or a plain CSV intensity matrix.
inline ImageData load_image(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    MatrixXd m = read_matrix_csv(path);
    ImageData img;
    img.height = static_cast<int>(m.rows());
    img.width = static_cast<int>(m.cols());
    img.channels = 1;
    img.features.resize(m.size(), 1);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) img.features(r * m.cols() + c, 0) = m(r, c);
    return img;
  }

  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("image: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw std::runtime_error("image: unsupported format '" + magic + "' (want P2/P3/P5/P6)");
  const bool color = (magic == "P3" || magic == "P6");
  const bool binary = (magic == "P5" || magic == "P6");

  ImageData img;
  img.width = detail::next_pnm_token(is);
  img.height = detail::next_pnm_token(is);
  const int maxval = detail::next_pnm_token(is);
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535)
    throw std::runtime_error("image: malformed header in " + path);
  img.channels = color ? 3 : 1;
  const Index n = static_cast<Index>(img.width) * img.height;
  img.features.resize(n, img.channels);

  if (binary) {
    is.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(n) * img.channels * bytes);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size())
      throw std::runtime_error("image: truncated pixel data in " + path);
    std::size_t pos = 0;
    for (Index i = 0; i < n; ++i)
      for (int c = 0; c < img.channels; ++c) {
        int v = buf[pos++];
        if (bytes == 2) v = (v << 8) | buf[pos++];
        img.features(i, c) = static_cast<double>(v) / maxval;
      }
  } else {
    for (Index i = 0; i < n; ++i)
      for (int c = 0; c < img.channels; ++c) {
        int v;
        if (!(is >> v) || v < 0 || v > maxval)
          throw std::runtime_error("image: bad pixel value in " + path);
        img.features(i, c) = static_cast<double>(v) / maxval;
      }
  }
  return img;
}

/// Writes labels back over the image grid as an ascii PGM with class-mapped
/// intensities (class k of K maps to round(255 (k-1)/(K-1))).
inline void save_label_pgm(const std::string& path, const std::vector<int>& labels, int width,
                           int height, int k_classes) {
  if (static_cast<Index>(labels.size()) != static_cast<Index>(width) * height)
    throw std::invalid_argument("save_label_pgm: label count does not match grid");
  std::string out = "P2\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int label = labels[static_cast<std::size_t>(r) * width + c];
      const int level =
          k_classes <= 1 ? 0 : static_cast<int>(std::lround(255.0 * (label - 1) / (k_classes - 1)));
      out += std::to_string(std::clamp(level, 0, 255));
      out += (c + 1 == width) ? '\n' : ' ';
    }
  }
  write_file_atomic(path, out);
}

struct LabeledPoints {
  MatrixXd points;
  std::vector<int> labels;  // 1-based class ids
};

/// Two interleaved half circles with Gaussian perturbation, n/2 points per
/// class at evenly spaced angles. noise = 0 puts every point exactly on the
/// unit half-circles.
inline LabeledPoints make_two_moons(Index n_total, double noise, std::uint64_t seed) {
  if (n_total < 4 || n_total % 2 != 0)
    throw std::invalid_argument("make_two_moons: n_total must be even and >= 4");
  const Index half = n_total / 2;
  SplitMix64 rng(seed);
  LabeledPoints out;
  out.points.resize(n_total, 2);
  out.labels.resize(static_cast<std::size_t>(n_total));
  const double pi = 3.14159265358979323846;
  for (Index i = 0; i < half; ++i) {
    const double t = pi * static_cast<double>(i) / static_cast<double>(half - 1);
    out.points(i, 0) = std::cos(t) + noise * rng.normal();
    out.points(i, 1) = std::sin(t) + noise * rng.normal();
    out.labels[static_cast<std::size_t>(i)] = 1;
    out.points(half + i, 0) = 1.0 - std::cos(t) + noise * rng.normal();
    out.points(half + i, 1) = 0.5 - std::sin(t) + noise * rng.normal();
    out.labels[static_cast<std::size_t>(half + i)] = 2;
  }
  return out;
}

/// K Gaussian blobs at the corners of the square [-1,1]^2, n_total/K points
/// each. spread = 0 collapses every blob onto its corner.
inline LabeledPoints make_four_corners(Index n_total, int k, double spread, std::uint64_t seed) {
  if (k < 1 || k > 4) throw std::invalid_argument("make_four_corners: need 1 <= K <= 4");
  if (n_total < k || n_total % k != 0)
    throw std::invalid_argument("make_four_corners: n_total must be divisible by K");
  const double cx[4] = {-1.0, 1.0, -1.0, 1.0};
  const double cy[4] = {-1.0, -1.0, 1.0, 1.0};
  SplitMix64 rng(seed);
  LabeledPoints out;
  out.points.resize(n_total, 2);
  out.labels.resize(static_cast<std::size_t>(n_total));
  const Index per = n_total / k;
  for (int c = 0; c < k; ++c)
    for (Index i = 0; i < per; ++i) {
      const Index row = c * per + i;
      out.points(row, 0) = cx[c] + spread * rng.normal();
      out.points(row, 1) = cy[c] + spread * rng.normal();
      out.labels[static_cast<std::size_t>(row)] = c + 1;
    }
  return out;
}

/// Synthetic two-region test image. The clean reference is exactly two-valued
/// (background 0, foreground 1); the observed intensities are continuous so
/// the self-tuning weights are well defined: each region has a tight core
/// around its color plus a sparse tail reaching toward the (empty) mid gap,
/// which keeps the two intensity clusters connected under local scaling and
/// makes the models genuinely compete. Foreground is a disk covering roughly
/// a quarter of the pixels.
struct TwoRegionImage {
  MatrixXd observed;        // n x 1 feature column
  Eigen::VectorXd clean;    // exactly two-valued reference for FOC
  std::vector<int> labels;  // 1 = background, 2 = foreground
  int width = 0;
  int height = 0;
};

inline TwoRegionImage make_two_region_image(int width, int height, double noise,
                                            std::uint64_t seed, double tail_fraction = 0.10) {
  if (width < 4 || height < 4) throw std::invalid_argument("make_two_region_image: grid too small");
  if (!(noise > 0.0)) throw std::invalid_argument("make_two_region_image: noise must be > 0");
  const Index n = static_cast<Index>(width) * height;
  SplitMix64 rng(seed);
  TwoRegionImage img;
  img.width = width;
  img.height = height;
  img.observed.resize(n, 1);
  img.clean.resize(n);
  img.labels.resize(static_cast<std::size_t>(n));
  const double cx = 0.62 * width, cy = 0.38 * height;
  const double r = 0.28 * std::min(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Index i = static_cast<Index>(y) * width + x;
      const bool fg = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
      img.clean[i] = fg ? 1.0 : 0.0;
      img.labels[static_cast<std::size_t>(i)] = fg ? 2 : 1;
      double v;
      if (rng.uniform() < tail_fraction) {
        // sparse tail between the core and the mid gap
        v = fg ? rng.uniform(0.58, 0.85) : rng.uniform(0.15, 0.42);
      } else {
        v = (fg ? 1.0 : 0.0) + noise * rng.normal();
      }
      img.observed(i, 0) = v;
    }
  return img;
}

/// CSV with a header row -> CategoricalTable. Cells equal to the missing
/// marker (default "?") or empty are flagged missing.
inline CategoricalTable load_table(const std::string& path, const std::string& missing_marker = "?") {
  std::istringstream is(read_file(path));
  CategoricalTable table;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_table: empty file " + path);
  table.columns = split_csv_line(line);
  if (table.columns.empty()) throw std::runtime_error("load_table: missing header in " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.columns.size())
      throw std::runtime_error("load_table: ragged row " + std::to_string(table.cells.size() + 2) +
                               " in " + path);
    for (auto& cell : cells)
      if (cell == missing_marker) cell.clear();
    table.cells.push_back(std::move(cells));
  }
  if (table.cells.empty()) throw std::runtime_error("load_table: no data rows in " + path);
  return table;
}

/// Mushroom-style synthetic benchmark: a two-class table of categorical
/// attributes where each (class, column) pair prefers one value and rows
/// deviate with probability flip. The label column is named "class" with
/// values "e"/"p".
struct SyntheticTable {
  CategoricalTable table;
  std::vector<int> labels;  // 1-based
};

inline SyntheticTable make_categorical_dataset(Index n_rows, int n_attributes, int n_values,
                                               double flip, std::uint64_t seed) {
  if (n_rows < 2 || n_attributes < 1 || n_values < 2)
    throw std::invalid_argument("make_categorical_dataset: bad shape");
  if (!(flip >= 0.0 && flip < 1.0))
    throw std::invalid_argument("make_categorical_dataset: flip must be in [0,1)");
  SplitMix64 rng(seed);
  SyntheticTable out;
  out.table.columns.push_back("class");
  for (int a = 0; a < n_attributes; ++a) {
    char name[16];
    std::snprintf(name, sizeof(name), "attr%02d", a + 1);
    out.table.columns.push_back(name);
  }
  // preferred value of each (class, attribute) pair
  std::vector<std::vector<int>> preferred(2, std::vector<int>(static_cast<std::size_t>(n_attributes)));
  for (int cls = 0; cls < 2; ++cls)
    for (int a = 0; a < n_attributes; ++a)
      preferred[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a)] =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(n_values)));
  for (Index r = 0; r < n_rows; ++r) {
    const int cls = static_cast<int>(r % 2);
    std::vector<std::string> row;
    row.push_back(cls == 0 ? "e" : "p");
    for (int a = 0; a < n_attributes; ++a) {
      int v = preferred[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a)];
      if (rng.uniform() < flip) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_values)));
      row.push_back("v" + std::to_string(v));
    }
    out.table.cells.push_back(std::move(row));
    out.labels.push_back(cls + 1);
  }
  return out;
}

/// Numeric column -> binned categorical values ("bin<k>" with k =
/// floor(value/width)); width = 0 keeps exact string equality.
inline void bin_numeric_column(CategoricalTable& table, const std::string& column, double width) {
  const Index c = table.column_index(column);
  if (width <= 0.0) return;
  for (auto& row : table.cells) {
    auto& cell = row[static_cast<std::size_t>(c)];
    if (cell.empty()) continue;
    const double v = parse_double(cell);
    cell = "bin" + std::to_string(static_cast<long long>(std::floor(v / width)));
  }
}

}  // namespace digs
