#include "oracles.hpp"

#include "gpmvc/report.hpp"
#include "gpmvc/run_io.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace gpmvc;
namespace fs = std::filesystem;

namespace {

ClusterResult result(const std::string& mode, double ratio, std::uint64_t seed, double acc, double nmi_v,
                     double pur) {
  ClusterResult r;
  r.mode = mode;
  r.ratio = ratio;
  r.seed = seed;
  r.acc = acc;
  r.nmi = nmi_v;
  r.purity = pur;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("mean_std uses the population estimator") {
  const MeanStd a = mean_std({0.8, 0.9});
  CHECK(a.mean == doctest::Approx(0.85));
  CHECK(a.std == doctest::Approx(0.05));
  const MeanStd one = mean_std({0.7});
  CHECK(one.mean == 0.7);
  CHECK(one.std == 0.0);
}

TEST_CASE("aggregate groups by mode and ratio") {
  const std::vector<ClusterResult> rs{result("ALL", 0.5, 0, 0.8, 0.7, 0.85), result("ALL", 0.5, 1, 0.9, 0.8, 0.95),
                                      result("AE", 0.5, 0, 0.6, 0.5, 0.7), result("ALL", 0.1, 0, 0.5, 0.4, 0.6)};
  const auto rows = aggregate(rs);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mode == "AE");
  CHECK(rows[1].mode == "ALL");
  CHECK(rows[1].ratio == 0.1);
  CHECK(rows[2].runs == 2);
  CHECK(rows[2].acc.mean == doctest::Approx(0.85));
  CHECK(rows[2].acc.std == doctest::Approx(0.05));
  CHECK(rows[2].get(Metric::Purity).mean == doctest::Approx(0.9));

  const std::string csv = format_csv(rows);
  CHECK(csv.rfind("mode,ratio,runs,acc_mean,acc_std,nmi_mean,nmi_std,purity_mean,purity_std\n", 0) == 0);
  CHECK(csv.find("ALL,0.5,2,0.850000,0.050000") != std::string::npos);
}

TEST_CASE("metric tables in every style") {
  const std::vector<ClusterResult> rs{result("ALL", 0.5, 0, 0.8, 0.7, 0.85), result("ALL", 0.5, 1, 0.9, 0.8, 0.95),
                                      result("AE", 0.3, 0, 0.6, 0.5, 0.7)};
  const auto rows = aggregate(rs);
  const std::string md = format_metric_table(rows, Metric::Acc, TableStyle::Markdown);
  CHECK(md.rfind("| mode", 0) == 0);
  CHECK(md.find("0.8500±0.0500") != std::string::npos);
  CHECK(md.find("|---") != std::string::npos);
  std::istringstream lines(md);
  int n = 0;
  for (std::string l; std::getline(lines, l);) {
    CHECK(l.front() == '|');
    CHECK(l.back() == '|');
    ++n;
  }
  CHECK(n == 4);

  const std::string text = format_metric_table(rows, Metric::Nmi, TableStyle::Text);
  CHECK(text.rfind("NMI\n", 0) == 0);
  CHECK(text.find("0.7500±0.0500") != std::string::npos);

  const std::string csv = format_metric_table(rows, Metric::Acc, TableStyle::Csv);
  CHECK(csv.rfind("mode,ACC_mean@0.3,ACC_std@0.3,ACC_mean@0.5,ACC_std@0.5\n", 0) == 0);
}

TEST_CASE("one curve per mode in the plot") {
  const std::vector<ClusterResult> rs{result("ALL", 0.1, 0, 0.5, 0.4, 0.6), result("ALL", 0.5, 0, 0.8, 0.7, 0.85),
                                      result("AE", 0.1, 0, 0.4, 0.3, 0.5), result("AE", 0.5, 0, 0.6, 0.5, 0.7)};
  const auto dir = testing::temp_dir("plot");
  write_svg_plot(aggregate(rs), Metric::Purity, dir / "purity.svg");
  const std::string svg = slurp(dir / "purity.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t curves = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++curves;
  CHECK(curves == 2);
  CHECK(svg.find(">AE<") != std::string::npos);
  CHECK_THROWS_AS(write_svg_plot({}, Metric::Nmi, dir / "x.svg"), ValidationError);
}

TEST_CASE("collect_runs finds every metrics file and recomputes nothing") {
  const auto root = testing::temp_dir("collect");
  fs::create_directories(root / "a");
  write_metrics(result("ALL", 0.5, 0, 0.81, 0.7, 0.85), root / "a" / "metrics.json");
  fs::create_directories(root / "b" / "deep");
  write_metrics(result("ALL", 0.5, 1, 0.79, 0.7, 0.85), root / "b" / "deep" / "metrics.json");
  fs::create_directories(root / "empty");
  const auto runs = collect_runs(root);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].metrics.acc == 0.81);
  CHECK(runs[1].metrics.seed == 1);
  CHECK(collect_runs(root / "a").size() == 1);
  CHECK_THROWS_AS(collect_runs(root / "empty"), ValidationError);
  CHECK_THROWS_AS(collect_runs(root / "missing"), ValidationError);
}

TEST_CASE("run config JSON keeps the data path") {
  RunConfig c;
  c.train.epochs_per_step = 3;
  c.data = "/data/hw";
  const RunConfig back = run_config_from_json(to_json(c));
  REQUIRE(back.data.has_value());
  CHECK(back.data->string() == "/data/hw");
  CHECK(back.train.epochs_per_step == 3);
  CHECK_FALSE(back.baseline);
}

TEST_CASE("generated grids are 3 rows of count cells") {
  const MultiViewDataset ds = testing::image_views(12, 5, 2, 1);
  const PartialSplit split = make_partial_split(ds, 0.5, 0);
  NetworkConfig nc;
  nc.latent_dim = 4;
  nc.encoder_hidden = {8};
  nc.discriminator_hidden = {4, 4};
  const ModelState model = make_model(nc, ds.dims(), FusionMode::Projected, 0);
  const auto dir = testing::temp_dir("grid");
  const fs::path f = write_generated_grid(model, ds, split, 1, 0, 8, dir);
  CHECK(f.filename() == "view_1_from_0.pgm");
  std::ifstream in(f, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == 8 * 5 + 9);
  CHECK(h == 3 * 5 + 4);
  CHECK(maxval == 255);
  in.get();
  std::vector<char> px((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(px.size() == static_cast<std::size_t>(w * h));

  CHECK_THROWS_AS(write_generated_grid(model, ds, split, 1, 0, 0, dir), ValidationError);
  MultiViewDataset flat = ds;
  flat.image_shapes[0].reset();
  CHECK_THROWS_AS(write_generated_grid(model, flat, split, 1, 0, 4, dir), ValidationError);
  CHECK_FALSE(default_source_view(flat, 1).has_value());
  CHECK(default_source_view(ds, 1) == 0);
}

}  // TEST_SUITE
