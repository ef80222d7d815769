#pragma once

#include "gpmvc/clustering.hpp"
#include "gpmvc/dataio.hpp"
#include "gpmvc/losses.hpp"
#include "gpmvc/networks.hpp"
#include "gpmvc/optim.hpp"
#include "gpmvc/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gpmvc {

/// Which terms of the overall objective are active.
///   AE     reconstruction only (adversarial training skipped, l1 = l2 = l3 = 0)
///   AE+AT  reconstruction and adversarial terms (l2 = l3 = 0)
///   ALL    every term
enum class AblationMode { AE, AEAT, ALL };

AblationMode parse_ablation_mode(const std::string& name);
std::string to_string(AblationMode m);

enum class ProjectionInit { WeightedSum, Pca };

struct TrainConfig {
  int epochs_per_step = 20;
  int batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  AblationMode ablation_mode = AblationMode::ALL;
  LossWeights weights;
  double lambda_cyc = 10.0;
  double alpha = 1.0;
  FusionMode fusion_mode = FusionMode::Projected;
  // Projection set after Step 1: the principal subspace of the concatenated
  // paired latents, or the weighted sum it regularizes toward.
  ProjectionInit projection_init = ProjectionInit::Pca;
  // L1 translation error G_v(E_w(x_w)) vs x_v on paired samples, added to the
  // cycle terms of the adversarial loss.
  bool paired_translation = true;
  // Warm-started Lloyd refresh of the centroids at every Step 3 epoch.
  bool centroid_refresh = true;
  int kmeans_restarts = 10;
  NetworkConfig network;

  void validate() const;
  /// Loss weights after applying the ablation mode.
  LossWeights effective_weights() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// One row of train_log.csv.
struct LogRow {
  int step = 0;
  int epoch = 0;
  double autoencoder = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double cycle = 0.0;
  double fusion = 0.0;
  double clustering = 0.0;
  double total = 0.0;
};

/// Counters used to verify which data each stage touched.
struct TrainStats {
  std::vector<std::size_t> step1_rows_per_view;  // rows fed to encoder v in Step 1
  std::size_t step1_unpaired_rows = 0;            // must stay 0
  std::size_t imputations = 0;                    // (sample, view) rows generated after Step 2
  std::size_t step3_imputation_refreshes = 0;
  int reseeded_centroids = 0;
};

struct ClusterResult {
  std::vector<int> labels;
  double acc = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string mode;
  std::vector<double> beta;
};

nlohmann::json metrics_to_json(const ClusterResult& r);

/// Adds the gradient of view `view`'s d_loss to that discriminator's
/// parameters (and nothing else); `fake` is treated as a constant input.
/// Returns d_loss.
double discriminator_backward(ModelState& model, int view, const Matrix& real, const Matrix& fake);

struct ObjectiveTerms {
  double autoencoder = 0.0;
  double fusion = 0.0;
  double clustering = 0.0;  // KL(P || Q) averaged over the batch rows
};

/// Gradient of L_AE + l2 L_FU + l3 L_KL on one batch (row-aligned view
/// matrices, P held constant), accumulated into encoders, generators, fusion
/// parameters and centroids. Discriminators are untouched. Returns the
/// unweighted terms.
ObjectiveTerms non_adversarial_backward(ModelState& model, Parameter& centroids, std::span<const Matrix> views,
                                        const Matrix& p, const LossWeights& weights, double alpha);

/// Three-stage training on one dataset and missing-view pattern.
///
///   step1: encoders and generators on paired samples with the autoencoder
///          loss, then centroids from k-means on the fused paired latents.
///   step2: adversarial training (per-view GANs, cycle consistency) on all
///          samples, unpaired ones re-paired with random partners every
///          epoch; then every missing view is imputed as G_v(E_w(x_w)).
///   step3: the overall objective on the completed data; imputations,
///          common representation, centroids and target distribution are
///          refreshed at every epoch boundary.
class Trainer {
 public:
  Trainer(const MultiViewDataset& dataset, PartialSplit split, TrainConfig config);

  void step1();
  void step2();
  void step3();
  /// Final common representation, soft assignment and metrics.
  ClusterResult evaluate();

  const ModelState& model() const { return model_; }
  ModelState& model() { return model_; }
  const Matrix& centroids() const { return centroids_.value; }
  /// Observed rows as given; missing rows hold the latest imputation (or the
  /// hidden originals before step2 has run, which no stage reads).
  const std::vector<Matrix>& completed_views() const { return completed_; }
  const std::vector<LogRow>& log() const { return log_; }
  const TrainStats& stats() const { return stats_; }
  const PartialSplit& split() const { return split_; }
  const TrainConfig& config() const { return config_; }
  const ClusterState& cluster_state() const { return cluster_; }

  /// Fused latent of every sample of the completed data.
  Matrix common_representation() const;
  /// Fills every missing (sample, view) row from the sample's retained view.
  std::size_t impute_missing();

 private:
  struct Batch;
  struct AdversarialTerms {
    double d_loss = 0.0;  // summed over views
    double g_loss = 0.0;  // summed over views
    double cycle = 0.0;   // cycle terms plus paired translation terms
  };

  Batch make_batch(std::span<const std::size_t> rows, bool pseudo_pairs) const;
  /// One discriminator update, then accumulates `scale` times the
  /// generator-side gradient of L_AT into encoder and generator parameters.
  AdversarialTerms adversarial_step(const Batch& batch, Adam& d_opt, double scale);
  Matrix encode_all(int view, const Matrix& x) const;
  void fit_projection(std::span<const Matrix> latents);
  void refresh_cluster_state(bool lloyd_refresh);
  void push_log(LogRow row, std::size_t batches);

  const MultiViewDataset& dataset_;
  PartialSplit split_;
  TrainConfig config_;
  Rng rng_;
  ModelState model_;
  Parameter centroids_;
  ClusterState cluster_;
  std::vector<Matrix> completed_;
  Eigen::MatrixXi observed_;  // N x V
  std::vector<std::vector<std::size_t>> pools_;  // samples observing each view
  std::vector<std::vector<std::size_t>> partners_;  // [view][sample]
  std::vector<LogRow> log_;
  TrainStats stats_;
  bool step1_done_ = false;
  bool step2_done_ = false;
};

/// Mean-imputation baseline: mean_impute, the same encoders trained with the
/// autoencoder loss on every sample, then k-means on the fused latents.
ClusterResult run_mean_impute_baseline(const MultiViewDataset& dataset, const PartialSplit& split,
                                       const TrainConfig& config);

struct PipelineOptions {
  std::optional<std::filesystem::path> run_dir;
  // Recorded in config.json so later commands can reload the data.
  std::optional<std::filesystem::path> data_path;
  int generated_sample_count = 8;
};

/// Mask -> step1 -> step2 -> step3 -> assignment -> metrics. When a run
/// directory is given, writes config.json, mask.json, checkpoint.bin,
/// train_log.csv, metrics.json, imputed/view_<v>.csv and, for image-valued
/// views, generated_samples/.
ClusterResult run_pipeline(const MultiViewDataset& dataset, const PartialSplit& split,
                           const TrainConfig& config, const PipelineOptions& options = {});
ClusterResult run_pipeline(const MultiViewDataset& dataset, double ratio, std::uint64_t seed,
                           TrainConfig config, const PipelineOptions& options = {});

}  // namespace gpmvc
