#include "gpmvc/trainer.hpp"

#include "gpmvc/metrics.hpp"
#include "gpmvc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmvc {

using nlohmann::json;

namespace {

constexpr std::uint64_t kModelSeedTag = 1;
constexpr std::uint64_t kTrainSeedTag = 2;
constexpr std::uint64_t kKMeansSeedTag = 3;

using RowIndex = std::vector<Eigen::Index>;

Matrix gather(const Matrix& m, const RowIndex& rows) { return m(rows, Eigen::all); }

Matrix stack(const std::vector<Matrix>& parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return out;
}

KMeansOptions kmeans_options(const TrainConfig& c) {
  KMeansOptions o;
  o.restarts = c.kmeans_restarts;
  return o;
}

// Principal subspace of the concatenated latents: W = top-m eigenvectors of the
// covariance, b = -mean W. Signs fixed so each column's largest entry is positive.
void fit_pca_projection(std::span<const Matrix> latents, FusionParams& fusion) {
  const Eigen::Index m = fusion.latent_dim;
  Matrix c(latents[0].rows(), m * static_cast<Eigen::Index>(latents.size()));
  for (std::size_t v = 0; v < latents.size(); ++v) c.middleCols(static_cast<Eigen::Index>(v) * m, m) = latents[v];
  const RowVector mean = c.colwise().mean();
  c.rowwise() -= mean;
  const Eigen::MatrixXd cov = c.transpose() * c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw RuntimeFailure("eigendecomposition failed while fitting the projection");
  const Eigen::Index total = cov.rows();
  Matrix w(total, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd col = eig.eigenvectors().col(total - 1 - j);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    w.col(j) = col;
  }
  fusion.projection.value = w;
  fusion.projection_bias.value = -mean * w;
}

}  // namespace

AblationMode parse_ablation_mode(const std::string& name) {
  if (name == "AE") return AblationMode::AE;
  if (name == "AE+AT") return AblationMode::AEAT;
  if (name == "ALL") return AblationMode::ALL;
  throw ValidationError("unknown ablation mode '" + name + "' (expected AE, AE+AT or ALL)");
}

std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::AE: return "AE";
    case AblationMode::AEAT: return "AE+AT";
    case AblationMode::ALL: return "ALL";
  }
  return "ALL";
}

void TrainConfig::validate() const {
  if (epochs_per_step <= 0) throw ValidationError("epochs_per_step must be positive");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (!(lambda_cyc >= 0.0)) throw ValidationError("lambda_cyc must be nonnegative");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (kmeans_restarts <= 0) throw ValidationError("kmeans_restarts must be positive");
  weights.validate();
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (ablation_mode == AblationMode::AE) w.adversarial = 0.0;
  if (ablation_mode != AblationMode::ALL) {
    w.fusion = 0.0;
    w.clustering = 0.0;
  }
  return w;
}

json to_json(const TrainConfig& c) {
  json j = to_json(c.weights);
  j["epochs_per_step"] = c.epochs_per_step;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["ablation_mode"] = to_string(c.ablation_mode);
  j["lambda_cyc"] = c.lambda_cyc;
  j["alpha"] = c.alpha;
  j["fusion_mode"] = to_string(c.fusion_mode);
  j["projection_init"] = c.projection_init == ProjectionInit::Pca ? "pca" : "weighted_sum";
  j["paired_translation"] = c.paired_translation;
  j["centroid_refresh"] = c.centroid_refresh;
  j["kmeans_restarts"] = c.kmeans_restarts;
  j["network"] = to_json(c.network);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  TrainConfig c;
  try {
    c.epochs_per_step = j.value("epochs_per_step", c.epochs_per_step);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ablation_mode")) c.ablation_mode = parse_ablation_mode(j.at("ablation_mode").get<std::string>());
    c.weights = loss_weights_from_json(j);
    c.lambda_cyc = j.value("lambda_cyc", c.lambda_cyc);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("fusion_mode")) c.fusion_mode = parse_fusion_mode(j.at("fusion_mode").get<std::string>());
    if (j.contains("projection_init")) {
      const auto s = j.at("projection_init").get<std::string>();
      if (s == "pca") {
        c.projection_init = ProjectionInit::Pca;
      } else if (s == "weighted_sum") {
        c.projection_init = ProjectionInit::WeightedSum;
      } else {
        throw ValidationError("unknown projection_init '" + s + "'");
      }
    }
    c.paired_translation = j.value("paired_translation", c.paired_translation);
    c.centroid_refresh = j.value("centroid_refresh", c.centroid_refresh);
    c.kmeans_restarts = j.value("kmeans_restarts", c.kmeans_restarts);
    if (j.contains("network")) c.network = network_config_from_json(j.at("network"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

json metrics_to_json(const ClusterResult& r) {
  json j{{"acc", r.acc}, {"nmi", r.nmi}, {"purity", r.purity}, {"ratio", r.ratio}, {"seed", r.seed}, {"mode", r.mode}};
  if (!r.beta.empty()) j["beta"] = r.beta;
  return j;
}

// ---------------------------------------------------------------------------

double discriminator_backward(ModelState& model, int view, const Matrix& real, const Matrix& fake) {
  MlpTape real_tape, fake_tape;
  const Vector pr = discriminate(model, view, real, &real_tape);
  const Vector pf = discriminate(model, view, fake, &fake_tape);
  const GanGradients g = discriminator_loss_grad(pr, pf);
  discriminate_backward(model, view, real_tape, g.d_real);
  discriminate_backward(model, view, fake_tape, g.d_fake);
  return gan_losses(pr, pf).d_loss;
}

ObjectiveTerms non_adversarial_backward(ModelState& model, Parameter& centroids, std::span<const Matrix> views,
                                        const Matrix& p, const LossWeights& weights, double alpha) {
  const int nv = static_cast<int>(views.size());
  const double b = static_cast<double>(views[0].rows());
  std::vector<Matrix> z(nv), grad_z(nv), recon_grad(nv);
  std::vector<EncoderTape> et(nv);
  std::vector<MlpTape> gt(nv);
  ObjectiveTerms out;
  for (int v = 0; v < nv; ++v) {
    const Matrix& x = views[static_cast<std::size_t>(v)];
    z[v] = encode(model, v, x, &et[v]);
    const Matrix r = generate(model, v, z[v], &gt[v]);
    out.autoencoder += (x - r).squaredNorm() / b;
    recon_grad[v] = autoencoder_loss_grad(x, r);
    grad_z[v] = Matrix::Zero(z[v].rows(), z[v].cols());
  }
  out.fusion = fusion_loss(z, model.fusion);
  fusion_loss_backward(z, model.fusion, weights.fusion, grad_z);

  const Matrix fused = fuse(z, model.fusion);
  const KlGradients kl = kl_clustering_gradients(fused, centroids.value, p, alpha);
  out.clustering = kl.loss / b;
  if (weights.clustering > 0.0) {
    fuse_backward(z, model.fusion, (weights.clustering / b) * kl.grad_z, grad_z);
    centroids.grad += (weights.clustering / b) * kl.grad_centroids;
  }
  for (int v = 0; v < nv; ++v) {
    grad_z[v] += generate_backward(model, v, gt[v], recon_grad[v]);
    encode_backward(model, v, et[v], grad_z[v]);
  }
  return out;
}


struct Trainer::Batch {
  std::vector<std::size_t> samples;
  std::vector<Matrix> x;          // per view, B x d_v
  std::vector<RowIndex> genuine;  // per view: rows holding an actual observation
  std::vector<char> paired;       // per row
};

Trainer::Trainer(const MultiViewDataset& dataset, PartialSplit split, TrainConfig config)
    : dataset_(dataset),
      split_(std::move(split)),
      config_(std::move(config)),
      rng_(derive_seed(config_.seed, kTrainSeedTag)) {
  dataset_.validate();
  split_.validate();
  config_.validate();
  if (split_.num_samples != dataset_.num_samples() || split_.num_views != dataset_.num_views()) {
    throw ValidationError("mask does not match the dataset shape");
  }
  const auto dims = dataset_.dims();
  config_.network.validate(dims, dataset_.k);
  model_ = make_model(config_.network, dims, config_.fusion_mode, derive_seed(config_.seed, kModelSeedTag));
  const auto n = static_cast<Eigen::Index>(dataset_.num_samples());
  const auto nv = static_cast<int>(dataset_.num_views());
  observed_ = Eigen::MatrixXi::Zero(n, nv);
  pools_.resize(static_cast<std::size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    pools_[static_cast<std::size_t>(v)] = split_.observed_samples(v);
    if (pools_[static_cast<std::size_t>(v)].empty()) {
      throw ValidationError("view " + std::to_string(v) + " is observed by no sample");
    }
    for (auto i : pools_[static_cast<std::size_t>(v)]) observed_(static_cast<Eigen::Index>(i), v) = 1;
  }
  completed_ = dataset_.views;
  stats_.step1_rows_per_view.assign(dataset_.num_views(), 0);
  cluster_.alpha = config_.alpha;
}

Trainer::Batch Trainer::make_batch(std::span<const std::size_t> rows, bool pseudo_pairs) const {
  Batch b;
  b.samples.assign(rows.begin(), rows.end());
  const auto nv = dataset_.num_views();
  const auto bs = static_cast<Eigen::Index>(rows.size());
  b.x.resize(nv);
  b.genuine.resize(nv);
  b.paired.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) b.paired[r] = split_.is_paired(rows[r]) ? 1 : 0;
  for (std::size_t v = 0; v < nv; ++v) {
    const Matrix& src = pseudo_pairs ? dataset_.views[v] : completed_[v];
    b.x[v].resize(bs, src.cols());
    for (Eigen::Index r = 0; r < bs; ++r) {
      const std::size_t i = rows[static_cast<std::size_t>(r)];
      const bool obs = observed_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) != 0;
      std::size_t from = i;
      if (pseudo_pairs && !obs) from = partners_[v][i];
      b.x[v].row(r) = src.row(static_cast<Eigen::Index>(from));
      if (pseudo_pairs || obs) b.genuine[v].push_back(r);
    }
  }
  return b;
}

Matrix Trainer::encode_all(int view, const Matrix& x) const { return encode(model_, view, x); }

Trainer::AdversarialTerms Trainer::adversarial_step(const Batch& batch, Adam& d_opt, double scale) {
  const int nv = static_cast<int>(dataset_.num_views());
  const auto bs = static_cast<double>(batch.samples.size());
  AdversarialTerms out;

  // Forward: sources restricted to genuine rows of each view.
  std::vector<Matrix> src(nv);
  std::vector<EncoderTape> src_tape(nv);
  std::vector<Matrix> src_z(nv);
  for (int w = 0; w < nv; ++w) {
    src[w] = gather(batch.x[w], batch.genuine[w]);
    src_z[w] = encode(model_, w, src[w], &src_tape[w]);
  }
  // fake[v][w] = G_v(E_w(x_w)), w != v
  std::vector<std::vector<Matrix>> fake(nv, std::vector<Matrix>(nv));
  std::vector<std::vector<MlpTape>> fake_tape(nv, std::vector<MlpTape>(nv));
  for (int v = 0; v < nv; ++v) {
    for (int w = 0; w < nv; ++w) {
      if (w != v && src[w].rows() > 0) fake[v][w] = generate(model_, v, src_z[w], &fake_tape[v][w]);
    }
  }
  auto fakes_for = [&](int v) {
    std::vector<Matrix> parts;
    for (int w = 0; w < nv; ++w) {
      if (w != v && fake[v][w].rows() > 0) parts.push_back(fake[v][w]);
    }
    return stack(parts, batch.x[v].cols());
  };

  // Discriminator update on the current fakes.
  d_opt.zero_grad();
  for (int v = 0; v < nv; ++v) {
    const Matrix f = fakes_for(v);
    if (src[v].rows() == 0 || f.rows() == 0) continue;
    out.d_loss += discriminator_backward(model_, v, src[v], f);
  }
  d_opt.step();

  // Generator side: non-saturating GAN terms against the updated discriminators.
  std::vector<std::vector<Matrix>> grad_fake(nv, std::vector<Matrix>(nv));
  for (int v = 0; v < nv; ++v) {
    for (int w = 0; w < nv; ++w) {
      if (fake[v][w].rows() > 0) grad_fake[v][w] = Matrix::Zero(fake[v][w].rows(), fake[v][w].cols());
    }
  }
  for (int v = 0; v < nv; ++v) {
    const Matrix f = fakes_for(v);
    if (f.rows() == 0) continue;
    MlpTape tape;
    const Vector pf = discriminate(model_, v, f, &tape);
    const Vector gp = generator_loss_grad(pf);
    double g_loss = 0.0;
    for (Eigen::Index i = 0; i < pf.size(); ++i) g_loss -= std::log(std::clamp(pf(i), kProbEpsilon, 1.0 - kProbEpsilon));
    out.g_loss += g_loss / static_cast<double>(pf.size());
    const Matrix gf = discriminate_backward(model_, v, tape, scale * gp);
    Eigen::Index at = 0;
    for (int w = 0; w < nv; ++w) {
      if (w == v || fake[v][w].rows() == 0) continue;
      grad_fake[v][w] += gf.middleRows(at, fake[v][w].rows());
      at += fake[v][w].rows();
    }
  }

  const double cyc_scale = scale * config_.lambda_cyc;
  // Cycle w -> v -> w: G_w(E_v(G_v(E_w(x_w)))) against x_w.
  for (int v = 0; v < nv; ++v) {
    for (int w = 0; w < nv; ++w) {
      if (w == v || fake[v][w].rows() == 0) continue;
      EncoderTape et;
      MlpTape gt;
      const Matrix back = generate(model_, w, encode(model_, v, fake[v][w], &et), &gt);
      out.cycle += cycle_loss(src[w], back);
      if (cyc_scale == 0.0) continue;
      const Matrix dz = generate_backward(model_, w, gt, cyc_scale * cycle_loss_grad(src[w], back));
      grad_fake[v][w] += encode_backward(model_, v, et, dz);
    }
  }
  // Paired translation: G_v(E_w(x_w)) against the sample's own x_v.
  if (config_.paired_translation) {
    for (int w = 0; w < nv; ++w) {
      const RowIndex& rows = batch.genuine[w];
      for (int v = 0; v < nv; ++v) {
        if (w == v || fake[v][w].rows() == 0) continue;
        for (std::size_t s = 0; s < rows.size(); ++s) {
          const auto r = rows[s];
          if (!batch.paired[static_cast<std::size_t>(r)]) continue;
          const auto diff = (fake[v][w].row(static_cast<Eigen::Index>(s)) - batch.x[v].row(r)).eval();
          out.cycle += diff.cwiseAbs().sum() / bs;
          if (cyc_scale != 0.0) {
            grad_fake[v][w].row(static_cast<Eigen::Index>(s)) += (cyc_scale / bs) * diff.array().sign().matrix();
          }
        }
      }
    }
  }

  if (scale != 0.0) {
    std::vector<Matrix> grad_z(nv);
    for (int w = 0; w < nv; ++w) grad_z[w] = Matrix::Zero(src_z[w].rows(), src_z[w].cols());
    for (int v = 0; v < nv; ++v) {
      for (int w = 0; w < nv; ++w) {
        if (w == v || fake[v][w].rows() == 0) continue;
        grad_z[w] += generate_backward(model_, v, fake_tape[v][w], grad_fake[v][w]);
      }
    }
    for (int w = 0; w < nv; ++w) {
      if (src[w].rows() > 0) encode_backward(model_, w, src_tape[w], grad_z[w]);
    }
  }
  return out;
}

void Trainer::push_log(LogRow row, std::size_t batches) {
  const double n = static_cast<double>(std::max<std::size_t>(batches, 1));
  row.autoencoder /= n;
  row.d_loss /= n;
  row.g_loss /= n;
  row.cycle /= n;
  row.fusion /= n;
  row.clustering /= n;
  row.total /= n;
  log_.push_back(row);
}

void Trainer::fit_projection(std::span<const Matrix> latents) {
  if (config_.fusion_mode != FusionMode::Projected) return;
  if (config_.projection_init == ProjectionInit::Pca) {
    fit_pca_projection(latents, model_.fusion);
  } else {
    model_.fusion.reset_projection_to_weighted_sum();
  }
}

void Trainer::step1() {
  const auto k = static_cast<std::size_t>(dataset_.k);
  if (split_.paired_idx.size() < k) {
    throw ValidationError("Step 1 needs at least k = " + std::to_string(k) + " paired samples, mask has " +
                          std::to_string(split_.paired_idx.size()));
  }
  const int nv = static_cast<int>(dataset_.num_views());
  std::vector<Parameter*> params = model_.encoder_parameters();
  for (auto* p : model_.generator_parameters()) params.push_back(p);
  Adam opt(params, {.learning_rate = config_.learning_rate});

  std::vector<std::size_t> order = split_.paired_idx;
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  for (int epoch = 0; epoch < config_.epochs_per_step; ++epoch) {
    rng_.shuffle(order);
    LogRow row{.step = 1, .epoch = epoch};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(bs, order.size() - start));
      RowIndex idx(rows.begin(), rows.end());
      opt.zero_grad();
      double loss = 0.0;
      for (int v = 0; v < nv; ++v) {
        for (auto i : rows) {
          if (!split_.is_paired(i)) ++stats_.step1_unpaired_rows;
        }
        stats_.step1_rows_per_view[static_cast<std::size_t>(v)] += rows.size();
        const Matrix x = gather(dataset_.views[static_cast<std::size_t>(v)], idx);
        EncoderTape et;
        MlpTape gt;
        const Matrix r = generate(model_, v, encode(model_, v, x, &et), &gt);
        loss += (x - r).squaredNorm() / static_cast<double>(x.rows());
        const Matrix dz = generate_backward(model_, v, gt, autoencoder_loss_grad(x, r));
        encode_backward(model_, v, et, dz);
      }
      opt.step();
      row.autoencoder += loss;
      row.total += loss;
      ++batches;
    }
    push_log(row, batches);
  }

  const RowIndex paired(split_.paired_idx.begin(), split_.paired_idx.end());
  std::vector<Matrix> latents;
  for (int v = 0; v < nv; ++v) latents.push_back(encode_all(v, gather(dataset_.views[static_cast<std::size_t>(v)], paired)));
  fit_projection(latents);
  const Matrix z = fuse(latents, model_.fusion);
  centroids_ = Parameter(init_centroids(z, dataset_.k, derive_seed(config_.seed, kKMeansSeedTag), kmeans_options(config_)));
  cluster_.centroids = centroids_.value;
  step1_done_ = true;
}

std::size_t Trainer::impute_missing() {
  std::size_t count = 0;
  const int nv = static_cast<int>(dataset_.num_views());
  for (int w = 0; w < nv; ++w) {
    RowIndex rows;
    for (const auto& [i, kept] : split_.unpaired) {
      if (kept == w) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    const Matrix z = encode_all(w, gather(dataset_.views[static_cast<std::size_t>(w)], rows));
    for (int v = 0; v < nv; ++v) {
      if (v == w) continue;
      const Matrix gen = generate(model_, v, z);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        completed_[static_cast<std::size_t>(v)].row(rows[r]) = gen.row(static_cast<Eigen::Index>(r));
      }
      count += rows.size();
    }
  }
  return count;
}

void Trainer::step2() {
  if (!step1_done_) throw std::logic_error("step2 called before step1");
  const int nv = static_cast<int>(dataset_.num_views());
  const std::size_t n = dataset_.num_samples();
  if (config_.ablation_mode != AblationMode::AE) {
    std::vector<Parameter*> gen_params = model_.encoder_parameters();
    for (auto* p : model_.generator_parameters()) gen_params.push_back(p);
    Adam g_opt(gen_params, {.learning_rate = config_.learning_rate});
    Adam d_opt(model_.discriminator_parameters(), {.learning_rate = config_.learning_rate});
    partners_.assign(static_cast<std::size_t>(nv), std::vector<std::size_t>(n, 0));
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    for (int epoch = 0; epoch < config_.epochs_per_step; ++epoch) {
      // Re-pair every unpaired sample with random observations of its missing views.
      for (const auto& [i, kept] : split_.unpaired) {
        for (int v = 0; v < nv; ++v) {
          if (v == kept) continue;
          const auto& pool = pools_[static_cast<std::size_t>(v)];
          partners_[static_cast<std::size_t>(v)][i] = pool[rng_.uniform_index(pool.size())];
        }
      }
      const std::vector<std::size_t> order = rng_.permutation(n);
      LogRow row{.step = 2, .epoch = epoch};
      std::size_t batches = 0;
      for (std::size_t start = 0; start < n; start += bs) {
        const Batch batch = make_batch(std::span(order.data() + start, std::min(bs, n - start)), true);
        g_opt.zero_grad();
        const AdversarialTerms t = adversarial_step(batch, d_opt, 1.0);
        g_opt.step();
        row.d_loss += t.d_loss;
        row.g_loss += t.g_loss;
        row.cycle += t.cycle;
        row.total += t.g_loss + config_.lambda_cyc * t.cycle;
        ++batches;
      }
      push_log(row, batches);
    }
  }
  stats_.imputations += impute_missing();
  refresh_cluster_state(false);
  step2_done_ = true;
}

Matrix Trainer::common_representation() const {
  std::vector<Matrix> latents;
  for (int v = 0; v < static_cast<int>(dataset_.num_views()); ++v) {
    latents.push_back(encode_all(v, completed_[static_cast<std::size_t>(v)]));
  }
  return fuse(latents, model_.fusion);
}

void Trainer::refresh_cluster_state(bool lloyd_refresh) {
  const Matrix z = common_representation();
  if (lloyd_refresh) {
    KMeansOptions opts = kmeans_options(config_);
    centroids_.value = lloyd(z, centroids_.value, opts).centroids;
  }
  Matrix q = soft_assign(z, centroids_.value, config_.alpha);
  const int reseeded = reseed_empty_clusters(z, centroids_.value, q);
  if (reseeded > 0) {
    stats_.reseeded_centroids += reseeded;
    q = soft_assign(z, centroids_.value, config_.alpha);
  }
  cluster_.centroids = centroids_.value;
  cluster_.q = q;
  cluster_.p = target_distribution(q);
}

void Trainer::step3() {
  if (!step2_done_) throw std::logic_error("step3 called before step2");
  const std::size_t n = dataset_.num_samples();
  const LossWeights w = config_.effective_weights();

  std::vector<Parameter*> params = model_.encoder_parameters();
  for (auto* p : model_.generator_parameters()) params.push_back(p);
  for (auto* p : model_.fusion_parameters()) params.push_back(p);
  params.push_back(&centroids_);
  Adam opt(params, {.learning_rate = config_.learning_rate});
  Adam d_opt(model_.discriminator_parameters(), {.learning_rate = config_.learning_rate});
  const auto bs = static_cast<std::size_t>(config_.batch_size);

  for (int epoch = 0; epoch < config_.epochs_per_step; ++epoch) {
    if (epoch > 0) {
      impute_missing();
      ++stats_.step3_imputation_refreshes;
    }
    refresh_cluster_state(config_.centroid_refresh);
    const std::vector<std::size_t> order = rng_.permutation(n);
    LogRow row{.step = 3, .epoch = epoch};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(bs, n - start));
      const Batch batch = make_batch(rows, false);
      opt.zero_grad();

      double l_at = 0.0;
      if (w.adversarial > 0.0) {
        const AdversarialTerms t = adversarial_step(batch, d_opt, w.adversarial);
        l_at = t.g_loss + config_.lambda_cyc * t.cycle;
        row.d_loss += t.d_loss;
        row.g_loss += t.g_loss;
        row.cycle += t.cycle;
      }

      const Matrix p = gather(cluster_.p, RowIndex(rows.begin(), rows.end()));
      const ObjectiveTerms obj = non_adversarial_backward(model_, centroids_, batch.x, p, w, config_.alpha);
      opt.step();

      row.autoencoder += obj.autoencoder;
      row.fusion += obj.fusion;
      row.clustering += obj.clustering;
      row.total += total_objective(obj.autoencoder, l_at, obj.fusion, obj.clustering, w);
      ++batches;
    }
    push_log(row, batches);
  }
  impute_missing();
  refresh_cluster_state(config_.centroid_refresh && w.clustering == 0.0);
}

ClusterResult Trainer::evaluate() {
  ClusterResult r;
  r.labels = assign_clusters(cluster_.q);
  r.acc = clustering_accuracy(r.labels, dataset_.labels);
  r.nmi = nmi(r.labels, dataset_.labels);
  r.purity = purity(r.labels, dataset_.labels);
  r.ratio = split_.impartial_ratio;
  r.seed = config_.seed;
  r.mode = to_string(config_.ablation_mode);
  const Vector beta = model_.fusion.beta();
  r.beta.assign(beta.data(), beta.data() + beta.size());
  return r;
}

ClusterResult run_mean_impute_baseline(const MultiViewDataset& dataset, const PartialSplit& split,
                                       const TrainConfig& config) {
  config.validate();
  const MultiViewDataset filled = mean_impute(dataset, split);
  const auto dims = filled.dims();
  config.network.validate(dims, filled.k);
  ModelState model = make_model(config.network, dims, config.fusion_mode, derive_seed(config.seed, kModelSeedTag));
  std::vector<Parameter*> params = model.encoder_parameters();
  for (auto* p : model.generator_parameters()) params.push_back(p);
  Adam opt(params, {.learning_rate = config.learning_rate});
  Rng rng(derive_seed(config.seed, kTrainSeedTag));
  const std::size_t n = filled.num_samples();
  const int nv = static_cast<int>(filled.num_views());
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs_per_step; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += bs) {
      const RowIndex idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + bs)));
      opt.zero_grad();
      for (int v = 0; v < nv; ++v) {
        const Matrix x = gather(filled.views[static_cast<std::size_t>(v)], idx);
        EncoderTape et;
        MlpTape gt;
        const Matrix r = generate(model, v, encode(model, v, x, &et), &gt);
        encode_backward(model, v, et, generate_backward(model, v, gt, autoencoder_loss_grad(x, r)));
      }
      opt.step();
    }
  }
  std::vector<Matrix> latents;
  for (int v = 0; v < nv; ++v) latents.push_back(encode(model, v, filled.views[static_cast<std::size_t>(v)]));
  if (config.fusion_mode == FusionMode::Projected && config.projection_init == ProjectionInit::Pca) {
    fit_pca_projection(latents, model.fusion);
  }
  const Matrix z = fuse(latents, model.fusion);
  const KMeansResult km = kmeans(z, filled.k, derive_seed(config.seed, kKMeansSeedTag), kmeans_options(config));
  ClusterResult r;
  r.labels = km.labels;
  r.acc = clustering_accuracy(r.labels, dataset.labels);
  r.nmi = nmi(r.labels, dataset.labels);
  r.purity = purity(r.labels, dataset.labels);
  r.ratio = split.impartial_ratio;
  r.seed = config.seed;
  r.mode = "mean_impute";
  return r;
}

}  // namespace gpmvc
