#include "oracles.hpp"

#include "gpmvc/dataio.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace gpmvc;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

fs::path small_dataset(const std::string& tag) {
  const fs::path dir = testing::temp_dir(tag);
  write_text(dir / "manifest.json",
             R"({"name": "small", "V": 2, "N": 4, "dims": [2, 1], "k": 2,
                 "views": ["a.csv", "b.csv"], "labels": "y.csv"})");
  write_text(dir / "a.csv", "0,10\n1,20\n2,30\n4,10\n");
  write_text(dir / "b.csv", "5\n5\n6\n7\n");
  write_text(dir / "y.csv", "0\n1\n0\n1\n");
  return dir;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("load_dataset reads and min-max scales every view") {
  const auto dir = small_dataset("load");
  const MultiViewDataset ds = load_dataset(dir / "manifest.json");
  CHECK(ds.num_views() == 2);
  CHECK(ds.num_samples() == 4);
  CHECK(ds.dims() == std::vector<int>{2, 1});
  CHECK(ds.k == 2);
  CHECK(ds.views[0](2, 0) == doctest::Approx(0.5));
  CHECK(ds.views[0](3, 1) == doctest::Approx(0.0));
  CHECK(ds.views[1](3, 0) == doctest::Approx(1.0));

  const MultiViewDataset raw = load_dataset(dir, {.minmax_scale = false});
  CHECK(raw.views[0](1, 1) == 20.0);
}

TEST_CASE("load_dataset rejects broken inputs") {
  const auto dir = small_dataset("broken");
  SUBCASE("row-count mismatch") {
    write_text(dir / "b.csv", "5\n5\n6\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("row-count mismatch"), ValidationError);
  }
  SUBCASE("label count") {
    write_text(dir / "y.csv", "0\n1\n0\n");
    CHECK_THROWS_AS(load_dataset(dir), ValidationError);
  }
  SUBCASE("non-numeric cell") {
    write_text(dir / "a.csv", "0,10\n1,abc\n2,30\n4,10\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("non-numeric"), ValidationError);
  }
  SUBCASE("missing view file") {
    fs::remove(dir / "a.csv");
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("missing file"), ValidationError);
  }
  SUBCASE("missing manifest") {
    CHECK_THROWS_AS(load_dataset(dir / "nope" / "manifest.json"), ValidationError);
  }
  SUBCASE("empty class") {
    write_text(dir / "y.csv", "0\n0\n0\n0\n");
    CHECK_THROWS_AS(load_dataset(dir), ValidationError);
  }
}

TEST_CASE("the 100 vs 99 row manifest fails with a row-count mismatch") {
  MultiViewDataset ds = testing::gaussian_views(100, {3, 2}, 2, 0.1, 1);
  const auto dir = testing::temp_dir("rows");
  save_dataset(ds, dir);
  Matrix short_view = ds.views[1].topRows(99);
  write_csv_matrix(short_view, dir / "view_1.csv");
  CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("row-count mismatch"), ValidationError);
}

TEST_CASE("single-view datasets load but cannot be split") {
  MultiViewDataset ds = testing::gaussian_views(12, {3}, 2, 0.1, 2);
  const auto dir = testing::temp_dir("single");
  save_dataset(ds, dir);
  const MultiViewDataset back = load_dataset(dir);
  CHECK(back.num_views() == 1);
  CHECK_THROWS_AS(make_partial_split(back, 0.5, 0), ValidationError);
}

TEST_CASE("save_dataset round-trips including image shapes") {
  const MultiViewDataset ds = testing::image_views(6, 4, 2, 3);
  const auto dir = testing::temp_dir("roundtrip");
  save_dataset(ds, dir);
  const MultiViewDataset back = load_dataset(dir, {.minmax_scale = false});
  REQUIRE(back.num_views() == 2);
  CHECK(back.labels == ds.labels);
  CHECK((back.views[1] - ds.views[1]).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(back.image_shapes[0].has_value());
  CHECK(back.image_shapes[0]->height == 4);
}

TEST_CASE("paired_count rounds half up") {
  CHECK(paired_count(0.5, 10) == 5);
  CHECK(paired_count(0.25, 10) == 3);
  CHECK(paired_count(0.15, 10) == 2);
  CHECK(paired_count(0.0, 10) == 0);
  CHECK(paired_count(1.0, 7) == 7);
}

TEST_CASE("make_partial_split examples") {
  SUBCASE("ratio 1 keeps everything paired") {
    const PartialSplit s = make_partial_split(10, 2, 1.0, 3);
    CHECK(s.paired_idx.size() == 10);
    CHECK(s.unpaired.empty());
  }
  SUBCASE("N=10, V=2, ratio 0.5 retains views 2/3 or 3/2") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const PartialSplit s = make_partial_split(10, 2, 0.5, seed);
      CHECK(s.paired_idx.size() == 5);
      int kept[2] = {0, 0};
      for (const auto& [i, v] : s.unpaired) ++kept[v];
      CHECK(((kept[0] == 2 && kept[1] == 3) || (kept[0] == 3 && kept[1] == 2)));
    }
  }
  SUBCASE("same ratio and seed give the same split") {
    const PartialSplit a = make_partial_split(50, 3, 0.3, 7);
    const PartialSplit b = make_partial_split(50, 3, 0.3, 7);
    CHECK(split_to_json(a).dump() == split_to_json(b).dump());
  }
  SUBCASE("ratios outside [0,1] are rejected") {
    CHECK_THROWS_WITH_AS(make_partial_split(10, 2, 1.5, 0), "ratio must be in [0,1]", ValidationError);
    CHECK_THROWS_AS(make_partial_split(10, 2, -0.1, 0), ValidationError);
  }
}

TEST_CASE("split queries agree with the partition") {
  const PartialSplit s = make_partial_split(30, 3, 0.4, 11);
  std::size_t observed_rows = 0;
  for (int v = 0; v < 3; ++v) {
    for (auto i : s.observed_samples(v)) {
      CHECK(s.observes(i, v));
      ++observed_rows;
    }
  }
  CHECK(observed_rows == 3 * s.paired_idx.size() + s.unpaired.size());
  for (auto i : s.paired_idx) CHECK(s.is_paired(i));
  for (const auto& [i, v] : s.unpaired) {
    CHECK_FALSE(s.is_paired(i));
    CHECK(s.observes(i, v));
  }
}

TEST_CASE("mask files round-trip and reject bad content") {
  const PartialSplit s = make_partial_split(20, 2, 0.5, 5);
  const auto dir = testing::temp_dir("mask");
  save_split(s, dir / "mask.json");
  const PartialSplit back = load_split(dir / "mask.json");
  CHECK(split_to_json(back).dump() == split_to_json(s).dump());

  nlohmann::json j = split_to_json(s);
  j["paired_idx"].push_back(j["paired_idx"][0]);
  CHECK_THROWS_AS(split_from_json(j), ValidationError);
  CHECK_THROWS_AS(load_split(dir / "absent.json"), ValidationError);
}

TEST_CASE("mean_impute examples") {
  MultiViewDataset ds;
  ds.k = 1;
  ds.labels = {0, 0, 0};
  ds.views = {Matrix{{1.0}, {3.0}, {100.0}}, Matrix{{0.0}, {1.0}, {2.0}}};
  ds.image_shapes.resize(2);
  PartialSplit s;
  s.num_samples = 3;
  s.num_views = 2;
  s.impartial_ratio = 2.0 / 3.0;
  s.paired_idx = {0, 1};
  s.unpaired = {{2, 1}};

  SUBCASE("missing row gets the column mean of observed rows") {
    const MultiViewDataset out = mean_impute(ds, s);
    CHECK(out.views[0](2, 0) == doctest::Approx(2.0));
    CHECK(out.views[0](0, 0) == 1.0);
    CHECK(out.views[1] == ds.views[1]);
  }
  SUBCASE("ratio 1 leaves the data unchanged") {
    const PartialSplit full = make_partial_split(3, 2, 1.0, 0);
    const MultiViewDataset out = mean_impute(ds, full);
    CHECK(out.views[0] == ds.views[0]);
    CHECK(out.views[1] == ds.views[1]);
  }
  SUBCASE("a view observed by nobody is an error") {
    PartialSplit none = s;
    none.paired_idx.clear();
    none.unpaired = {{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(mean_impute(ds, none), ValidationError);
  }
}

TEST_CASE("csv reader handles whitespace and rejects ragged rows") {
  const auto dir = testing::temp_dir("csv");
  write_text(dir / "m.csv", "1, 2\n 3,4\n\n");
  const Matrix m = read_csv_matrix(dir / "m.csv");
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == 3.0);
  write_text(dir / "r.csv", "1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(dir / "r.csv"), doctest::Contains("ragged"), ValidationError);
}

}  // TEST_SUITE
