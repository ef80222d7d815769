#pragma once

#include "gpmvc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gpmvc {

/// Height and width of an image-valued view (row-major pixels).
struct ImageShape {
  int height = 0;
  int width = 0;
};

/// N samples observed in V views, plus ground-truth labels used only for
/// evaluation.
///
/// Invariants (checked by validate()): every view has N rows, dims()[v] is the
/// column count of views[v], labels lie in [0, k) and every class occurs.
struct MultiViewDataset {
  std::string name;
  std::vector<Matrix> views;
  std::vector<int> labels;
  int k = 0;
  // Per-view image metadata; empty optional for non-image views.
  std::vector<std::optional<ImageShape>> image_shapes;

  std::size_t num_views() const { return views.size(); }
  std::size_t num_samples() const { return labels.size(); }
  std::vector<int> dims() const;

  void validate() const;
};

/// Which samples observe every view (paired) and, for the others, the single
/// view they retain.
struct PartialSplit {
  double impartial_ratio = 1.0;
  std::uint64_t seed = 0;
  std::size_t num_samples = 0;
  std::size_t num_views = 0;
  std::vector<std::size_t> paired_idx;        // ascending
  std::map<std::size_t, int> unpaired;         // sample -> retained view

  bool is_paired(std::size_t i) const;
  bool observes(std::size_t i, int view) const;
  /// Samples that observe `view`, ascending.
  std::vector<std::size_t> observed_samples(int view) const;

  void validate() const;
};

struct LoadOptions {
  // Per-column min-max scaling of every view to [0, 1].
  bool minmax_scale = true;
};

/// Reads `manifest.json` (or a directory containing one), the per-view CSV
/// files and the label file. Throws ValidationError on any inconsistency.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path,
                              const LoadOptions& options = {});

/// Writes a dataset in the on-disk layout read by load_dataset.
void save_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir);

/// Maps every column of `view` affinely onto [0, 1]; constant columns become 0.
void minmax_scale_columns(Matrix& view);

/// round(ratio * n) with halves rounded up.
std::size_t paired_count(double ratio, std::size_t n);

/// Draws the missing-view pattern. Paired samples are a uniformly random
/// subset of size paired_count(ratio, N); each remaining sample keeps one view,
/// with retained views balanced to within one across views.
PartialSplit make_partial_split(const MultiViewDataset& dataset, double ratio,
                                std::uint64_t seed);
PartialSplit make_partial_split(std::size_t num_samples, std::size_t num_views,
                                double ratio, std::uint64_t seed);

/// Replaces each missing (sample, view) row with the column means of that
/// view's observed rows.
MultiViewDataset mean_impute(const MultiViewDataset& dataset, const PartialSplit& split);

nlohmann::json split_to_json(const PartialSplit& split);
PartialSplit split_from_json(const nlohmann::json& j);
void save_split(const PartialSplit& split, const std::filesystem::path& path);
PartialSplit load_split(const std::filesystem::path& path);

/// Dense CSV of doubles without header; one row per line.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const Matrix& m, const std::filesystem::path& path);

}  // namespace gpmvc
