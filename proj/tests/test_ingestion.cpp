#include "digs/ingestion.hpp"

#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

using namespace digs;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream os(path, std::ios::binary);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("ascii pgm scaling") {
  auto path = temp_file("digs_t.pgm", "P2\n# comment\n2 2\n255\n0 255\n0 255\n");
  ImageData img = load_image(path.string());
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  REQUIRE(img.channels == 1);
  REQUIRE(img.features(0, 0) == 0.0);
  REQUIRE(img.features(1, 0) == 1.0);
  REQUIRE(img.features(2, 0) == 0.0);
  REQUIRE(img.features(3, 0) == 1.0);
}

TEST_CASE("ascii ppm color channels") {
  auto path = temp_file("digs_t.ppm", "P3\n1 1\n255\n255 0 0\n");
  ImageData img = load_image(path.string());
  REQUIRE(img.channels == 3);
  REQUIRE(img.features(0, 0) == 1.0);
  REQUIRE(img.features(0, 1) == 0.0);
  REQUIRE(img.features(0, 2) == 0.0);
}

TEST_CASE("binary pgm/ppm round the same values") {
  std::string p5 = "P5\n2 1\n255\n";
  p5 += static_cast<char>(0);
  p5 += static_cast<char>(255);
  ImageData img = load_image(temp_file("digs_t5.pgm", p5).string());
  REQUIRE(img.features(0, 0) == 0.0);
  REQUIRE(img.features(1, 0) == 1.0);

  std::string p6 = "P6\n1 1\n255\n";
  p6 += static_cast<char>(10);
  p6 += static_cast<char>(20);
  p6 += static_cast<char>(30);
  ImageData img6 = load_image(temp_file("digs_t6.ppm", p6).string());
  REQUIRE(img6.features(0, 0) == Approx(10.0 / 255.0));
  REQUIRE(img6.features(0, 2) == Approx(30.0 / 255.0));
}

TEST_CASE("malformed images are rejected") {
  REQUIRE_THROWS_WITH(load_image(temp_file("digs_bad.pgm", "P9\n1 1\n255\n0\n").string()),
                      Catch::Contains("unsupported"));
  REQUIRE_THROWS_AS(load_image(temp_file("digs_bad2.pgm", "P2\n2 2\n255\n0 1\n").string()),
                    std::runtime_error);
  REQUIRE_THROWS_AS(
      load_image(temp_file("digs_bad3.csv", "1,2\n3\n").string()), std::runtime_error);
}

TEST_CASE("a 65x65 grid yields 4225 vertices") {
  auto img = make_two_region_image(65, 65, 0.03, 1);
  REQUIRE(img.observed.rows() == 4225);
  REQUIRE(img.clean.size() == 4225);
  REQUIRE(img.labels.size() == 4225);
  // clean reference is exactly two-valued
  for (Eigen::Index i = 0; i < img.clean.size(); ++i)
    REQUIRE((img.clean[i] == 0.0 || img.clean[i] == 1.0));
  // both regions present, background majority
  const auto fg = std::count(img.labels.begin(), img.labels.end(), 2);
  REQUIRE(fg > 400);
  REQUIRE(fg < 2112);
  // deterministic under the seed
  auto again = make_two_region_image(65, 65, 0.03, 1);
  REQUIRE((img.observed - again.observed).cwiseAbs().maxCoeff() == 0.0);
  auto other = make_two_region_image(65, 65, 0.03, 2);
  REQUIRE((img.observed - other.observed).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("two moons: balance, zero-noise support, determinism") {
  auto moons = make_two_moons(3000, 0.1, 4);
  REQUIRE(moons.points.rows() == 3000);
  REQUIRE(std::count(moons.labels.begin(), moons.labels.end(), 1) == 1500);
  REQUIRE(std::count(moons.labels.begin(), moons.labels.end(), 2) == 1500);

  auto clean = make_two_moons(200, 0.0, 4);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double r = clean.points.row(i).norm();
    REQUIRE(r == Approx(1.0).margin(1e-12));  // first moon on the unit circle
    REQUIRE(clean.points(i, 1) >= -1e-12);
  }
  auto a = make_two_moons(100, 0.2, 9);
  auto b = make_two_moons(100, 0.2, 9);
  REQUIRE((a.points - b.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("four corners: counts, collapse at zero spread, determinism") {
  auto fc = make_four_corners(2000, 4, 0.35, 3);
  for (int c = 1; c <= 4; ++c)
    REQUIRE(std::count(fc.labels.begin(), fc.labels.end(), c) == 500);

  auto tight = make_four_corners(8, 4, 0.0, 3);
  for (Eigen::Index i = 0; i < 8; ++i) {
    REQUIRE(std::abs(tight.points(i, 0)) == 1.0);
    REQUIRE(std::abs(tight.points(i, 1)) == 1.0);
  }
  auto again = make_four_corners(2000, 4, 0.35, 3);
  REQUIRE((fc.points - again.points).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(make_four_corners(10, 4, 0.1, 1), std::invalid_argument);
}

TEST_CASE("csv tables load with missing-value flags") {
  auto path = temp_file("digs_t.csv", "class,a,b\ne,x,1\np,?,2\ne,y,1\n");
  auto table = load_table(path.string());
  REQUIRE(table.rows() == 3);
  REQUIRE(table.cols() == 3);
  REQUIRE(table.columns[1] == "a");
  REQUIRE(table.is_missing(1, 1));
  REQUIRE_FALSE(table.is_missing(0, 1));
  REQUIRE_THROWS_WITH(load_table(temp_file("digs_rag.csv", "a,b\n1\n").string()),
                      Catch::Contains("ragged"));
}

TEST_CASE("synthetic categorical dataset shape and signal") {
  auto synth = make_categorical_dataset(400, 21, 4, 0.25, 11);
  REQUIRE(synth.table.rows() == 400);
  REQUIRE(synth.table.cols() == 22);  // class + 21 attributes
  REQUIRE(synth.labels.size() == 400);
  auto again = make_categorical_dataset(400, 21, 4, 0.25, 11);
  REQUIRE(synth.table.cells == again.table.cells);
  // class-correlated attributes: same-class rows agree more often
  int same = 0, cross = 0, same_n = 0, cross_n = 0;
  for (int r = 0; r < 40; ++r)
    for (int s = r + 1; s < 40; ++s) {
      int agree = 0;
      for (int c = 1; c <= 21; ++c)
        if (synth.table.cells[r][c] == synth.table.cells[s][c]) ++agree;
      if (synth.labels[r] == synth.labels[s]) {
        same += agree;
        ++same_n;
      } else {
        cross += agree;
        ++cross_n;
      }
    }
  REQUIRE(static_cast<double>(same) / same_n > static_cast<double>(cross) / cross_n + 2.0);
}

TEST_CASE("numeric binning rewrites cells") {
  CategoricalTable t;
  t.columns = {"g"};
  t.cells = {{"10"}, {"11"}, {"19"}, {""}};
  bin_numeric_column(t, "g", 10.0);
  REQUIRE(t.cells[0][0] == "bin1");
  REQUIRE(t.cells[1][0] == "bin1");
  REQUIRE(t.cells[2][0] == "bin1");
  REQUIRE(t.cells[3][0].empty());
  bin_numeric_column(t, "g", 0.0);  // width 0 keeps values
  REQUIRE(t.cells[0][0] == "bin1");
}

TEST_CASE("label pgm round trip preserves grid order") {
  std::vector<int> labels = {1, 2, 2, 1, 1, 2};
  auto path = std::filesystem::temp_directory_path() / "digs_labels.pgm";
  save_label_pgm(path.string(), labels, 3, 2, 2);
  ImageData img = load_image(path.string());
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  for (std::size_t i = 0; i < labels.size(); ++i)
    REQUIRE(img.features(static_cast<Eigen::Index>(i), 0) == (labels[i] == 2 ? 1.0 : 0.0));
}
