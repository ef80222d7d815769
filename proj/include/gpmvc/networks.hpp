#pragma once

#include "gpmvc/fusion.hpp"
#include "gpmvc/parameter.hpp"
#include "gpmvc/rng.hpp"
#include "gpmvc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gpmvc {

enum class Activation { Linear, Relu, LeakyRelu, Sigmoid, Tanh };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Fully connected layer: y = act(x W + b), W is in x out.
struct Dense {
  Parameter weight;
  Parameter bias;
  Activation activation = Activation::Linear;

  Dense() = default;
  Dense(int in, int out, Activation act) : weight(in, out), bias(1, out), activation(act) {}
  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }
};

/// Intermediate values of one Mlp forward pass, needed for backward.
struct MlpTape {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

/// Stack of dense layers. Forward passes are const; gradients accumulate into
/// the layers' Parameter::grad during backward().
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {}

  /// Widths {in, h1, ..., out}; hidden layers use `hidden`, the last `output`.
  static Mlp make(const std::vector<int>& widths, Activation hidden, Activation output, Rng& rng);

  Matrix forward(const Matrix& x, MlpTape* tape = nullptr) const;
  /// Returns dL/dx and accumulates parameter gradients.
  Matrix backward(const MlpTape& tape, const Matrix& grad_out);

  bool empty() const { return layers_.empty(); }
  int in_features() const { return layers_.front().in_features(); }
  int out_features() const { return layers_.back().out_features(); }
  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

  void collect(std::vector<Parameter*>& out);

 private:
  std::vector<Dense> layers_;
};

/// Architecture of encoders, generators and discriminators.
struct NetworkConfig {
  int latent_dim = 0;                       // 0: 64 if any view is wider than 256, else 32
  std::vector<int> encoder_hidden{512, 256};
  std::vector<int> discriminator_hidden{256, 64};
  Activation hidden_activation = Activation::LeakyRelu;
  Activation latent_activation = Activation::Linear;
  Activation output_activation = Activation::Sigmoid;
  // Number of trailing encoder layers whose parameters all views share.
  int shared_layers = 1;

  int resolved_latent_dim(const std::vector<int>& dims) const;
  void validate(const std::vector<int>& dims, int k) const;
};

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

/// All learnable parameters of the model except the cluster centroids.
///
/// Encoder v is encoder_private[v] followed by encoder_shared; the shared
/// block exists once, so changing it changes every view's encoding.
struct ModelState {
  NetworkConfig config;
  std::vector<int> dims;
  int latent_dim = 0;
  std::vector<Mlp> encoder_private;
  Mlp encoder_shared;
  std::vector<Mlp> generators;
  std::vector<Mlp> discriminators;
  FusionParams fusion;

  std::size_t num_views() const { return dims.size(); }

  std::vector<Parameter*> encoder_parameters();
  std::vector<Parameter*> generator_parameters();
  std::vector<Parameter*> discriminator_parameters();
  std::vector<Parameter*> fusion_parameters();
  std::vector<Parameter*> all_parameters();
  void zero_grad();
};

/// Builds a freshly initialized model. Weights and biases of a layer with
/// fan-in n are drawn from U(-1/sqrt(n), 1/sqrt(n)).
ModelState make_model(const NetworkConfig& config, const std::vector<int>& dims,
                      FusionMode fusion_mode, std::uint64_t seed);

struct EncoderTape {
  MlpTape private_part;
  MlpTape shared_part;
};

Matrix encode(const ModelState& state, int view, const Matrix& x, EncoderTape* tape = nullptr);
/// Backward through encoder `view`; returns dL/dx.
Matrix encode_backward(ModelState& state, int view, const EncoderTape& tape, const Matrix& grad_z);

Matrix generate(const ModelState& state, int view, const Matrix& z, MlpTape* tape = nullptr);
Matrix generate_backward(ModelState& state, int view, const MlpTape& tape, const Matrix& grad_x);

/// Probability that each row is a real sample of `view`, as an N-vector.
Vector discriminate(const ModelState& state, int view, const Matrix& x, MlpTape* tape = nullptr);
Matrix discriminate_backward(ModelState& state, int view, const MlpTape& tape, const Vector& grad_p);

/// Binary checkpoint. Layout (little-endian):
///   "GPMVCKPT" | u32 version | u64 len | config JSON
///   | u64 count | count x (u64 keylen | key | u64 rows | u64 cols | f64 data[rows*cols])
/// Keys look like "encoder/0/layer1/weight", "encoder_shared/layer0/bias",
/// "fusion/projection/weight", "centroids".
void save_checkpoint(const ModelState& state, const Matrix& centroids,
                     const std::filesystem::path& path);
void load_checkpoint(const std::filesystem::path& path, ModelState& state, Matrix& centroids);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace gpmvc
