#pragma once

#include "gpmvc/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpmvc {

/// Contents of config.json in a run directory: the training config plus the
/// dataset location when known.
struct RunConfig {
  TrainConfig train;
  std::optional<std::filesystem::path> data;
  bool baseline = false;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

/// Header: epoch,step,L_AE,d_loss,g_loss,L_cyc,L_FU,L_KL,total
void write_train_log(const std::vector<LogRow>& log, const std::filesystem::path& path);

void write_metrics(const ClusterResult& result, const std::filesystem::path& path);
ClusterResult read_metrics(const std::filesystem::path& path);

/// Triplet grid for `count` samples: real source images (row 1),
/// G_target(E_source(x)) (row 2) and the real target images (row 3), written
/// as an 8-bit binary PGM. Samples missing the target view and retaining the
/// source view come first, then paired samples.
/// Throws ValidationError when either view lacks image metadata or count < 1.
std::filesystem::path write_generated_grid(const ModelState& model, const MultiViewDataset& dataset,
                                           const PartialSplit& split, int target_view, int source_view,
                                           int count, const std::filesystem::path& dir);

/// First view other than `target_view` with image metadata, if any.
std::optional<int> default_source_view(const MultiViewDataset& dataset, int target_view);

/// Creates (or reuses, with a warning on stderr) a run directory and writes
/// every artifact of a finished trainer.
void write_run_directory(const std::filesystem::path& dir, const Trainer& trainer, const RunConfig& config,
                         const ClusterResult& result);

}  // namespace gpmvc
