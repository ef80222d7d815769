#include "gpmvc/dataio.hpp"

#include "gpmvc/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gpmvc {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> MultiViewDataset::dims() const {
  std::vector<int> d;
  d.reserve(views.size());
  for (const auto& v : views) d.push_back(static_cast<int>(v.cols()));
  return d;
}

void MultiViewDataset::validate() const {
  const std::size_t n = labels.size();
  if (views.empty()) throw ValidationError("dataset has no views");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (static_cast<std::size_t>(views[v].rows()) != n) {
      throw ValidationError("row-count mismatch: view " + std::to_string(v) + " has " +
                            std::to_string(views[v].rows()) + " rows, expected " +
                            std::to_string(n));
    }
    if (views[v].cols() == 0) throw ValidationError("view " + std::to_string(v) + " has no columns");
    if (!views[v].allFinite()) throw ValidationError("view " + std::to_string(v) + " has non-finite values");
  }
  if (k < 1) throw ValidationError("k must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int y : labels) {
    if (y < 0 || y >= k) throw ValidationError("label " + std::to_string(y) + " outside [0, k)");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no samples");
    }
  }
  if (!image_shapes.empty() && image_shapes.size() != views.size()) {
    throw ValidationError("image_shapes must have one entry per view");
  }
  for (std::size_t v = 0; v < image_shapes.size(); ++v) {
    if (image_shapes[v] && image_shapes[v]->height * image_shapes[v]->width != views[v].cols()) {
      throw ValidationError("image shape of view " + std::to_string(v) + " does not match its width");
    }
  }
}

bool PartialSplit::is_paired(std::size_t i) const { return !unpaired.contains(i); }

bool PartialSplit::observes(std::size_t i, int view) const {
  auto it = unpaired.find(i);
  return it == unpaired.end() || it->second == view;
}

std::vector<std::size_t> PartialSplit::observed_samples(int view) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_samples; ++i) {
    if (observes(i, view)) out.push_back(i);
  }
  return out;
}

void PartialSplit::validate() const {
  if (!(impartial_ratio >= 0.0 && impartial_ratio <= 1.0)) {
    throw ValidationError("ratio must be in [0,1]");
  }
  if (paired_idx.size() + unpaired.size() != num_samples) {
    throw ValidationError("mask does not cover every sample exactly once");
  }
  std::vector<char> seen(num_samples, 0);
  for (std::size_t i : paired_idx) {
    if (i >= num_samples || seen[i]) throw ValidationError("mask: bad paired index");
    seen[i] = 1;
  }
  for (const auto& [i, v] : unpaired) {
    if (i >= num_samples || seen[i]) throw ValidationError("mask: bad unpaired index");
    if (v < 0 || static_cast<std::size_t>(v) >= num_views) {
      throw ValidationError("mask: retained view out of range");
    }
    seen[i] = 1;
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

double parse_cell(std::string_view cell, const fs::path& path, std::size_t line) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
    cell.remove_suffix(1);
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw ValidationError("non-numeric cell '" + std::string(cell) + "' in " + path.string() +
                          " line " + std::to_string(line));
  }
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append_double(std::string& out, double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, ptr);
}

}  // namespace

Matrix read_csv_matrix(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::size_t n = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      values.push_back(parse_cell(cell, path, line_no));
      ++n;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = n;
    } else if (n != cols) {
      throw ValidationError("ragged row in " + path.string() + " line " + std::to_string(line_no));
    }
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (rows > 0) std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_csv_matrix(const Matrix& m, const fs::path& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      append_double(out, m(r, c));
    }
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f << out;
}

// ---------------------------------------------------------------------------
// Dataset

void minmax_scale_columns(Matrix& view) {
  for (Eigen::Index c = 0; c < view.cols(); ++c) {
    const double lo = view.col(c).minCoeff();
    const double hi = view.col(c).maxCoeff();
    const double span = hi - lo;
    if (span > 0.0) {
      view.col(c) = (view.col(c).array() - lo) / span;
    } else {
      view.col(c).setZero();
    }
  }
}

MultiViewDataset load_dataset(const fs::path& manifest_path, const LoadOptions& options) {
  fs::path manifest = manifest_path;
  if (fs::is_directory(manifest)) manifest /= "manifest.json";
  if (!fs::exists(manifest)) throw ValidationError("missing file: " + manifest.string());
  json j;
  try {
    j = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  const fs::path dir = manifest.parent_path();

  MultiViewDataset ds;
  try {
    ds.name = j.value("name", manifest.parent_path().filename().string());
    const auto num_views = j.at("V").get<std::size_t>();
    const auto n = j.at("N").get<std::size_t>();
    const auto dims = j.at("dims").get<std::vector<int>>();
    ds.k = j.at("k").get<int>();
    std::vector<std::string> files;
    if (j.contains("views")) {
      files = j.at("views").get<std::vector<std::string>>();
    } else {
      for (std::size_t v = 0; v < num_views; ++v) files.push_back("view_" + std::to_string(v) + ".csv");
    }
    const std::string label_file = j.value("labels", std::string("labels.csv"));
    if (dims.size() != num_views || files.size() != num_views) {
      throw ValidationError("manifest: V does not match dims/views lists");
    }

    for (std::size_t v = 0; v < num_views; ++v) {
      Matrix m = read_csv_matrix(dir / files[v]);
      if (static_cast<std::size_t>(m.rows()) != n) {
        throw ValidationError("row-count mismatch: " + files[v] + " has " + std::to_string(m.rows()) +
                              " rows, manifest says N=" + std::to_string(n));
      }
      if (m.cols() != dims[v]) {
        throw ValidationError("column-count mismatch: " + files[v] + " has " +
                              std::to_string(m.cols()) + " columns, manifest says " +
                              std::to_string(dims[v]));
      }
      if (options.minmax_scale) minmax_scale_columns(m);
      ds.views.push_back(std::move(m));
    }

    const Matrix lab = read_csv_matrix(dir / label_file);
    if (static_cast<std::size_t>(lab.size()) != n) {
      throw ValidationError("label count " + std::to_string(lab.size()) + " does not match N=" +
                            std::to_string(n));
    }
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = lab.data()[i];
      if (y != std::floor(y)) throw ValidationError("non-integer label in " + label_file);
      ds.labels[i] = static_cast<int>(y);
    }

    if (j.contains("image_shapes")) {
      for (const auto& s : j.at("image_shapes")) {
        if (s.is_null()) {
          ds.image_shapes.emplace_back();
        } else {
          ds.image_shapes.push_back(ImageShape{s.at(0).get<int>(), s.at(1).get<int>()});
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

void save_dataset(const MultiViewDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  j["name"] = dataset.name;
  j["V"] = dataset.num_views();
  j["N"] = dataset.num_samples();
  j["dims"] = dataset.dims();
  j["k"] = dataset.k;
  std::vector<std::string> files;
  for (std::size_t v = 0; v < dataset.num_views(); ++v) {
    files.push_back("view_" + std::to_string(v) + ".csv");
    write_csv_matrix(dataset.views[v], dir / files.back());
  }
  j["views"] = files;
  j["labels"] = "labels.csv";
  if (!dataset.image_shapes.empty()) {
    json shapes = json::array();
    for (const auto& s : dataset.image_shapes) {
      shapes.push_back(s ? json::array({s->height, s->width}) : json(nullptr));
    }
    j["image_shapes"] = shapes;
  }
  std::ofstream(dir / "manifest.json") << j.dump(2) << '\n';
  std::ofstream lab(dir / "labels.csv");
  for (int y : dataset.labels) lab << y << '\n';
}

// ---------------------------------------------------------------------------
// Missing-view pattern

std::size_t paired_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
}

PartialSplit make_partial_split(std::size_t num_samples, std::size_t num_views, double ratio,
                                std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ValidationError("ratio must be in [0,1]");
  if (num_views < 2) throw ValidationError("a partial split needs at least 2 views");

  PartialSplit split;
  split.impartial_ratio = ratio;
  split.seed = seed;
  split.num_samples = num_samples;
  split.num_views = num_views;

  Rng rng(seed);
  const auto order = rng.permutation(num_samples);
  const std::size_t n_paired = std::min(paired_count(ratio, num_samples), num_samples);
  split.paired_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_paired));
  std::sort(split.paired_idx.begin(), split.paired_idx.end());

  const std::size_t n_unpaired = num_samples - n_paired;
  std::vector<int> retained(n_unpaired);
  for (std::size_t u = 0; u < n_unpaired; ++u) retained[u] = static_cast<int>(u % num_views);
  rng.shuffle(retained);
  for (std::size_t u = 0; u < n_unpaired; ++u) split.unpaired.emplace(order[n_paired + u], retained[u]);
  return split;
}

PartialSplit make_partial_split(const MultiViewDataset& dataset, double ratio, std::uint64_t seed) {
  return make_partial_split(dataset.num_samples(), dataset.num_views(), ratio, seed);
}

MultiViewDataset mean_impute(const MultiViewDataset& dataset, const PartialSplit& split) {
  if (split.num_samples != dataset.num_samples() || split.num_views != dataset.num_views()) {
    throw ValidationError("mask shape does not match dataset");
  }
  MultiViewDataset out = dataset;
  for (std::size_t v = 0; v < dataset.num_views(); ++v) {
    const auto observed = split.observed_samples(static_cast<int>(v));
    if (observed.empty()) {
      throw ValidationError("view " + std::to_string(v) + " is observed by no sample");
    }
    if (observed.size() == dataset.num_samples()) continue;
    RowVector mean = RowVector::Zero(dataset.views[v].cols());
    for (std::size_t i : observed) mean += dataset.views[v].row(static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(observed.size());
    for (const auto& [i, kept] : split.unpaired) {
      if (kept != static_cast<int>(v)) out.views[v].row(static_cast<Eigen::Index>(i)) = mean;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mask files

json split_to_json(const PartialSplit& split) {
  json j;
  j["ratio"] = split.impartial_ratio;
  j["seed"] = split.seed;
  j["N"] = split.num_samples;
  j["V"] = split.num_views;
  j["paired_idx"] = split.paired_idx;
  json unp = json::object();
  for (const auto& [i, v] : split.unpaired) unp[std::to_string(i)] = v;
  j["unpaired"] = unp;
  return j;
}

PartialSplit split_from_json(const json& j) {
  PartialSplit s;
  try {
    s.impartial_ratio = j.at("ratio").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.paired_idx = j.at("paired_idx").get<std::vector<std::size_t>>();
    for (const auto& [key, value] : j.at("unpaired").items()) {
      s.unpaired.emplace(static_cast<std::size_t>(std::stoull(key)), value.get<int>());
    }
    s.num_samples = j.value("N", s.paired_idx.size() + s.unpaired.size());
    s.num_views = j.at("V").get<std::size_t>();
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed mask: ") + e.what());
  }
  std::sort(s.paired_idx.begin(), s.paired_idx.end());
  s.validate();
  return s;
}

void save_split(const PartialSplit& split, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f << split_to_json(split).dump(2) << '\n';
}

PartialSplit load_split(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("missing file: " + path.string());
  try {
    return split_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed mask: ") + e.what());
  }
}

}  // namespace gpmvc
