#include "gpmvc/run_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

namespace gpmvc {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const RunConfig& c) {
  json j = to_json(c.train);
  if (c.data) j["data"] = fs::absolute(*c.data).lexically_normal().string();
  if (c.baseline) j["baseline"] = true;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.train = train_config_from_json(j);
  if (j.contains("data")) c.data = fs::path(j.at("data").get<std::string>());
  c.baseline = j.value("baseline", false);
  return c;
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("missing file: " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

namespace {

std::string fmt(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace

void write_train_log(const std::vector<LogRow>& log, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("cannot write " + path.string());
  os << "epoch,step,L_AE,d_loss,g_loss,L_cyc,L_FU,L_KL,total\n";
  for (const auto& r : log) {
    os << r.epoch << ',' << r.step << ',' << fmt(r.autoencoder) << ',' << fmt(r.d_loss) << ',' << fmt(r.g_loss)
       << ',' << fmt(r.cycle) << ',' << fmt(r.fusion) << ',' << fmt(r.clustering) << ',' << fmt(r.total) << '\n';
  }
}

void write_metrics(const ClusterResult& result, const fs::path& path) {
  write_json_file(metrics_to_json(result), path);
}

ClusterResult read_metrics(const fs::path& path) {
  const json j = read_json_file(path);
  ClusterResult r;
  try {
    r.acc = j.at("acc").get<double>();
    r.nmi = j.at("nmi").get<double>();
    r.purity = j.at("purity").get<double>();
    r.ratio = j.value("ratio", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
    r.mode = j.value("mode", std::string("ALL"));
    if (j.contains("beta")) r.beta = j.at("beta").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError("bad metrics file " + path.string() + ": " + e.what());
  }
  return r;
}

std::optional<int> default_source_view(const MultiViewDataset& dataset, int target_view) {
  for (int v = 0; v < static_cast<int>(dataset.num_views()); ++v) {
    if (v != target_view && dataset.image_shapes.size() > static_cast<std::size_t>(v) &&
        dataset.image_shapes[static_cast<std::size_t>(v)]) {
      return v;
    }
  }
  return std::nullopt;
}

fs::path write_generated_grid(const ModelState& model, const MultiViewDataset& dataset, const PartialSplit& split,
                              int target_view, int source_view, int count, const fs::path& dir) {
  const int nv = static_cast<int>(dataset.num_views());
  if (target_view < 0 || target_view >= nv) throw ValidationError("view index out of range");
  if (source_view < 0 || source_view >= nv || source_view == target_view) {
    throw ValidationError("source view must be a different valid view");
  }
  if (count < 1) throw ValidationError("count must be positive: nothing to dump");
  auto shape_of = [&](int v) -> ImageShape {
    if (dataset.image_shapes.size() <= static_cast<std::size_t>(v) || !dataset.image_shapes[static_cast<std::size_t>(v)]) {
      throw ValidationError("view " + std::to_string(v) +
                            " has no image metadata (image_shapes in the manifest); generated samples need image-valued views");
    }
    return *dataset.image_shapes[static_cast<std::size_t>(v)];
  };
  const ImageShape ts = shape_of(target_view);
  const ImageShape ss = shape_of(source_view);

  std::vector<Eigen::Index> rows;
  for (const auto& [i, kept] : split.unpaired) {
    if (kept == source_view && static_cast<int>(rows.size()) < count) rows.push_back(static_cast<Eigen::Index>(i));
  }
  for (auto i : split.paired_idx) {
    if (static_cast<int>(rows.size()) >= count) break;
    rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (rows.empty()) throw ValidationError("no sample observes the source view");

  const Matrix src = dataset.views[static_cast<std::size_t>(source_view)](rows, Eigen::all);
  const Matrix tgt = dataset.views[static_cast<std::size_t>(target_view)](rows, Eigen::all);
  const Matrix gen = generate(model, target_view, encode(model, source_view, src));

  const int gap = 1;
  const int cell_h = std::max(ts.height, ss.height);
  const int cell_w = std::max(ts.width, ss.width);
  const int cols = static_cast<int>(rows.size());
  const int width = cols * cell_w + (cols + 1) * gap;
  const int height = 3 * cell_h + 4 * gap;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 255);
  auto paint = [&](const Matrix& m, const ImageShape& s, int grid_row) {
    for (int c = 0; c < cols; ++c) {
      const int x0 = gap + c * (cell_w + gap);
      const int y0 = gap + grid_row * (cell_h + gap);
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
          const double val = std::clamp(m(c, y * s.width + x), 0.0, 1.0);
          pixels[static_cast<std::size_t>(y0 + y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x0 + x)] =
              static_cast<unsigned char>(std::lround(val * 255.0));
        }
      }
    }
  };
  paint(src, ss, 0);
  paint(gen, ts, 1);
  paint(tgt, ts, 2);

  fs::create_directories(dir);
  const fs::path out = dir / ("view_" + std::to_string(target_view) + "_from_" + std::to_string(source_view) + ".pgm");
  std::ofstream os(out, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot write " + out.string());
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  return out;
}

void write_run_directory(const fs::path& dir, const Trainer& trainer, const RunConfig& config,
                         const ClusterResult& result) {
  if (fs::exists(dir / "metrics.json")) std::cerr << "warning: overwriting run directory " << dir.string() << '\n';
  fs::create_directories(dir / "imputed");
  fs::create_directories(dir / "generated_samples");
  write_json_file(to_json(config), dir / "config.json");
  save_split(trainer.split(), dir / "mask.json");
  save_checkpoint(trainer.model(), trainer.centroids(), dir / "checkpoint.bin");
  write_train_log(trainer.log(), dir / "train_log.csv");
  write_metrics(result, dir / "metrics.json");
  const auto& views = trainer.completed_views();
  for (std::size_t v = 0; v < views.size(); ++v) {
    write_csv_matrix(views[v], dir / "imputed" / ("view_" + std::to_string(v) + ".csv"));
  }
}

ClusterResult run_pipeline(const MultiViewDataset& dataset, const PartialSplit& split, const TrainConfig& config,
                           const PipelineOptions& options) {
  Trainer trainer(dataset, split, config);
  trainer.step1();
  trainer.step2();
  trainer.step3();
  ClusterResult result = trainer.evaluate();
  if (options.run_dir) {
    RunConfig rc{.train = config, .data = options.data_path};
    write_run_directory(*options.run_dir, trainer, rc, result);
    if (options.generated_sample_count > 0) {
      for (int v = 0; v < static_cast<int>(dataset.num_views()); ++v) {
        if (dataset.image_shapes.size() <= static_cast<std::size_t>(v) || !dataset.image_shapes[static_cast<std::size_t>(v)]) {
          continue;
        }
        if (auto src = default_source_view(dataset, v)) {
          write_generated_grid(trainer.model(), dataset, split, v, *src, options.generated_sample_count,
                               *options.run_dir / "generated_samples");
        }
      }
    }
  }
  return result;
}

ClusterResult run_pipeline(const MultiViewDataset& dataset, double ratio, std::uint64_t seed, TrainConfig config,
                           const PipelineOptions& options) {
  config.seed = seed;
  return run_pipeline(dataset, make_partial_split(dataset, ratio, seed), config, options);
}

}  // namespace gpmvc
