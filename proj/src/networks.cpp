#include "gpmvc/networks.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace gpmvc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kLeakySlope = 0.2;

void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::LeakyRelu:
      m = m.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
      break;
    case Activation::Sigmoid:
      m = m.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
      break;
    case Activation::Tanh:
      m = m.array().tanh().matrix();
      break;
  }
}

// grad *= act'(.) expressed through the activation output y.
void activation_backward(Matrix& grad, const Matrix& y, Activation a) {
  switch (a) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      grad = (y.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::LeakyRelu:
      grad = (y.array() > 0.0).select(grad, kLeakySlope * grad);
      break;
    case Activation::Sigmoid:
      grad.array() *= y.array() * (1.0 - y.array());
      break;
    case Activation::Tanh:
      grad.array() *= 1.0 - y.array().square();
      break;
  }
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "linear" || name == "identity") return Activation::Linear;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "linear";
}

// ---------------------------------------------------------------------------
// Mlp

Mlp Mlp::make(const std::vector<int>& widths, Activation hidden, Activation output, Rng& rng) {
  std::vector<Dense> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    Dense d(widths[l], widths[l + 1], last ? output : hidden);
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (Eigen::Index i = 0; i < d.weight.value.size(); ++i) d.weight.value.data()[i] = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < d.bias.value.size(); ++i) d.bias.value.data()[i] = rng.uniform(-bound, bound);
    layers.push_back(std::move(d));
  }
  return Mlp(std::move(layers));
}

Matrix Mlp::forward(const Matrix& x, MlpTape* tape) const {
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Matrix h = x;
  for (const auto& layer : layers_) {
    if (h.cols() != layer.in_features()) {
      throw ValidationError("layer expects width " + std::to_string(layer.in_features()) + ", got " +
                            std::to_string(h.cols()));
    }
    Matrix y = h * layer.weight.value;
    y.rowwise() += layer.bias.value.row(0);
    apply_activation(y, layer.activation);
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->outputs.push_back(y);
    }
    h = std::move(y);
  }
  return h;
}

Matrix Mlp::backward(const MlpTape& tape, const Matrix& grad_out) {
  Matrix g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto& layer = layers_[l];
    activation_backward(g, tape.outputs[l], layer.activation);
    layer.weight.grad.noalias() += tape.inputs[l].transpose() * g;
    layer.bias.grad += g.colwise().sum();
    g = g * layer.weight.value.transpose();
  }
  return g;
}

void Mlp::collect(std::vector<Parameter*>& out) {
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

// ---------------------------------------------------------------------------
// Config

int NetworkConfig::resolved_latent_dim(const std::vector<int>& dims) const {
  if (latent_dim > 0) return latent_dim;
  for (int d : dims) {
    if (d > 256) return 64;
  }
  return 32;
}

void NetworkConfig::validate(const std::vector<int>& dims, int k) const {
  if (dims.empty()) throw ValidationError("network needs at least one view");
  const int m = resolved_latent_dim(dims);
  if (m < k) throw ValidationError("latent_dim must be at least the number of clusters");
  for (int w : encoder_hidden) {
    if (w <= 0) throw ValidationError("encoder widths must be positive");
  }
  if (discriminator_hidden.size() != 2 || discriminator_hidden[0] <= 0 || discriminator_hidden[1] <= 0) {
    throw ValidationError("discriminator_hidden must list exactly 2 positive widths");
  }
  const int depth = static_cast<int>(encoder_hidden.size()) + 1;
  if (shared_layers < 0 || shared_layers > depth) throw ValidationError("shared_layers out of range");
  // The first shared layer sees the same input width for every view.
  if (shared_layers == depth) {
    for (int d : dims) {
      if (d != dims.front()) {
        throw ValidationError("sharing the whole encoder requires equal view widths");
      }
    }
  }
}

json to_json(const NetworkConfig& c) {
  return json{{"latent_dim", c.latent_dim},
              {"encoder_hidden", c.encoder_hidden},
              {"discriminator_hidden", c.discriminator_hidden},
              {"hidden_activation", to_string(c.hidden_activation)},
              {"latent_activation", to_string(c.latent_activation)},
              {"output_activation", to_string(c.output_activation)},
              {"shared_layers", c.shared_layers}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  try {
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.discriminator_hidden = j.value("discriminator_hidden", c.discriminator_hidden);
    c.hidden_activation = parse_activation(j.value("hidden_activation", to_string(c.hidden_activation)));
    c.latent_activation = parse_activation(j.value("latent_activation", to_string(c.latent_activation)));
    c.output_activation = parse_activation(j.value("output_activation", to_string(c.output_activation)));
    c.shared_layers = j.value("shared_layers", c.shared_layers);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad network config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Model

std::vector<Parameter*> ModelState::encoder_parameters() {
  std::vector<Parameter*> out;
  for (auto& e : encoder_private) e.collect(out);
  encoder_shared.collect(out);
  return out;
}

std::vector<Parameter*> ModelState::generator_parameters() {
  std::vector<Parameter*> out;
  for (auto& g : generators) g.collect(out);
  return out;
}

std::vector<Parameter*> ModelState::discriminator_parameters() {
  std::vector<Parameter*> out;
  for (auto& d : discriminators) d.collect(out);
  return out;
}

std::vector<Parameter*> ModelState::fusion_parameters() {
  return {&fusion.raw_weights, &fusion.projection, &fusion.projection_bias};
}

std::vector<Parameter*> ModelState::all_parameters() {
  auto out = encoder_parameters();
  for (auto* p : generator_parameters()) out.push_back(p);
  for (auto* p : discriminator_parameters()) out.push_back(p);
  for (auto* p : fusion_parameters()) out.push_back(p);
  return out;
}

void ModelState::zero_grad() {
  for (auto* p : all_parameters()) p->zero_grad();
}

ModelState make_model(const NetworkConfig& config, const std::vector<int>& dims, FusionMode fusion_mode,
                      std::uint64_t seed) {
  config.validate(dims, 0);
  ModelState s;
  s.config = config;
  s.dims = dims;
  s.latent_dim = config.resolved_latent_dim(dims);
  const int m = s.latent_dim;
  const int depth = static_cast<int>(config.encoder_hidden.size()) + 1;
  const int n_private = depth - config.shared_layers;

  Rng rng(seed);
  // Shared block first so its values do not depend on the number of views.
  {
    std::vector<int> widths;
    if (n_private == 0) {
      widths.push_back(dims.front());
    } else {
      widths.push_back(config.encoder_hidden[static_cast<std::size_t>(n_private - 1)]);
    }
    for (int l = n_private; l < depth - 1; ++l) widths.push_back(config.encoder_hidden[static_cast<std::size_t>(l)]);
    widths.push_back(m);
    if (config.shared_layers > 0) {
      s.encoder_shared = Mlp::make(widths, config.hidden_activation, config.latent_activation, rng);
    }
  }
  for (int d : dims) {
    std::vector<int> widths{d};
    for (int l = 0; l < n_private; ++l) {
      widths.push_back(l == depth - 1 ? m : config.encoder_hidden[static_cast<std::size_t>(l)]);
    }
    Activation last = n_private == depth ? config.latent_activation : config.hidden_activation;
    s.encoder_private.push_back(n_private > 0 ? Mlp::make(widths, config.hidden_activation, last, rng) : Mlp());

    std::vector<int> gw{m};
    for (auto it = config.encoder_hidden.rbegin(); it != config.encoder_hidden.rend(); ++it) gw.push_back(*it);
    gw.push_back(d);
    s.generators.push_back(Mlp::make(gw, config.hidden_activation, config.output_activation, rng));

    std::vector<int> dw{d, config.discriminator_hidden[0], config.discriminator_hidden[1], 1};
    s.discriminators.push_back(Mlp::make(dw, config.hidden_activation, Activation::Sigmoid, rng));
  }
  s.fusion = FusionParams::make(static_cast<int>(dims.size()), m, fusion_mode);
  return s;
}

Matrix encode(const ModelState& state, int view, const Matrix& x, EncoderTape* tape) {
  const auto v = static_cast<std::size_t>(view);
  if (v >= state.num_views()) throw ValidationError("view index out of range");
  if (x.cols() != state.dims[v]) {
    throw ValidationError("encode: view " + std::to_string(view) + " expects width " +
                          std::to_string(state.dims[v]) + ", got " + std::to_string(x.cols()));
  }
  const auto& priv = state.encoder_private[v];
  Matrix h = priv.empty() ? x : priv.forward(x, tape ? &tape->private_part : nullptr);
  if (state.encoder_shared.empty()) return h;
  return state.encoder_shared.forward(h, tape ? &tape->shared_part : nullptr);
}

Matrix encode_backward(ModelState& state, int view, const EncoderTape& tape, const Matrix& grad_z) {
  const auto v = static_cast<std::size_t>(view);
  Matrix g = state.encoder_shared.empty() ? grad_z : state.encoder_shared.backward(tape.shared_part, grad_z);
  auto& priv = state.encoder_private[v];
  return priv.empty() ? g : priv.backward(tape.private_part, g);
}

Matrix generate(const ModelState& state, int view, const Matrix& z, MlpTape* tape) {
  const auto v = static_cast<std::size_t>(view);
  if (v >= state.num_views()) throw ValidationError("view index out of range");
  if (z.cols() != state.latent_dim) {
    throw ValidationError("generate: expects latent width " + std::to_string(state.latent_dim) + ", got " +
                          std::to_string(z.cols()));
  }
  return state.generators[v].forward(z, tape);
}

Matrix generate_backward(ModelState& state, int view, const MlpTape& tape, const Matrix& grad_x) {
  return state.generators[static_cast<std::size_t>(view)].backward(tape, grad_x);
}

Vector discriminate(const ModelState& state, int view, const Matrix& x, MlpTape* tape) {
  const auto v = static_cast<std::size_t>(view);
  if (v >= state.num_views()) throw ValidationError("view index out of range");
  if (x.cols() != state.dims[v]) {
    throw ValidationError("discriminate: view " + std::to_string(view) + " expects width " +
                          std::to_string(state.dims[v]) + ", got " + std::to_string(x.cols()));
  }
  return state.discriminators[v].forward(x, tape).col(0);
}

Matrix discriminate_backward(ModelState& state, int view, const MlpTape& tape, const Vector& grad_p) {
  return state.discriminators[static_cast<std::size_t>(view)].backward(tape, Matrix(grad_p));
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

void named_tensors(ModelState& s, Matrix& centroids, std::vector<std::pair<std::string, Matrix*>>& out) {
  auto add_mlp = [&](const std::string& prefix, Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
      out.emplace_back(prefix + "/layer" + std::to_string(l) + "/weight", &mlp.layers()[l].weight.value);
      out.emplace_back(prefix + "/layer" + std::to_string(l) + "/bias", &mlp.layers()[l].bias.value);
    }
  };
  for (std::size_t v = 0; v < s.num_views(); ++v) add_mlp("encoder/" + std::to_string(v), s.encoder_private[v]);
  add_mlp("encoder_shared", s.encoder_shared);
  for (std::size_t v = 0; v < s.num_views(); ++v) add_mlp("generator/" + std::to_string(v), s.generators[v]);
  for (std::size_t v = 0; v < s.num_views(); ++v) add_mlp("discriminator/" + std::to_string(v), s.discriminators[v]);
  out.emplace_back("fusion/raw_weights", &s.fusion.raw_weights.value);
  out.emplace_back("fusion/projection/weight", &s.fusion.projection.value);
  out.emplace_back("fusion/projection/bias", &s.fusion.projection_bias.value);
  out.emplace_back("centroids", &centroids);
}

template <typename T>
void put(std::ostream& os, T x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T x{};
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
  if (!is) throw ValidationError("truncated checkpoint");
  return x;
}

constexpr char kMagic[8] = {'G', 'P', 'M', 'V', 'C', 'K', 'P', 'T'};

}  // namespace

void save_checkpoint(const ModelState& state, const Matrix& centroids, const fs::path& path) {
  ModelState s = state;
  Matrix c = centroids;
  std::vector<std::pair<std::string, Matrix*>> tensors;
  named_tensors(s, c, tensors);

  json meta{{"network", to_json(state.config)},
            {"dims", state.dims},
            {"latent_dim", state.latent_dim},
            {"fusion_mode", to_string(state.fusion.mode)}};
  const std::string meta_text = meta.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, meta_text.size());
  os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  put<std::uint64_t>(os, tensors.size());
  for (const auto& [key, m] : tensors) {
    put<std::uint64_t>(os, key.size());
    os.write(key.data(), static_cast<std::streamsize>(key.size()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m->rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m->cols()));
    os.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
  }
}

void load_checkpoint(const fs::path& path, ModelState& state, Matrix& centroids) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("missing file: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ValidationError("not a checkpoint file");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw ValidationError("unsupported checkpoint version");
  std::string meta_text(get<std::uint64_t>(is), '\0');
  is.read(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  const json meta = json::parse(meta_text);

  const auto cfg = network_config_from_json(meta.at("network"));
  const auto dims = meta.at("dims").get<std::vector<int>>();
  state = make_model(cfg, dims, parse_fusion_mode(meta.at("fusion_mode").get<std::string>()), 0);

  std::map<std::string, std::pair<Matrix, bool>> stored;
  const auto count = get<std::uint64_t>(is);
  for (std::uint64_t t = 0; t < count; ++t) {
    std::string key(get<std::uint64_t>(is), '\0');
    is.read(key.data(), static_cast<std::streamsize>(key.size()));
    const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(is));
    const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(is));
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw ValidationError("truncated checkpoint");
    stored.emplace(std::move(key), std::make_pair(std::move(m), false));
  }

  std::vector<std::pair<std::string, Matrix*>> tensors;
  named_tensors(state, centroids, tensors);
  for (auto& [key, target] : tensors) {
    auto it = stored.find(key);
    if (it == stored.end()) throw ValidationError("checkpoint lacks tensor " + key);
    if (key != "centroids" && (it->second.first.rows() != target->rows() || it->second.first.cols() != target->cols())) {
      throw ValidationError("checkpoint tensor " + key + " has the wrong shape");
    }
    *target = it->second.first;
  }
}

}  // namespace gpmvc
