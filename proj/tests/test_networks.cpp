#include "oracles.hpp"

#include "gpmvc/networks.hpp"

#include <doctest.h>

#include <fstream>

using namespace gpmvc;

namespace {

Matrix random_input(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(0.0, 1.0);
  return m;
}

NetworkConfig small_config() {
  NetworkConfig c;
  c.latent_dim = 4;
  c.encoder_hidden = {6, 5};
  c.discriminator_hidden = {5, 3};
  return c;
}

NetworkConfig identity_config(int d) {
  NetworkConfig c;
  c.latent_dim = d;
  c.encoder_hidden = {};
  c.output_activation = Activation::Linear;
  return c;
}

void set_identity(Dense& layer) {
  layer.weight.value.setIdentity();
  layer.bias.value.setZero();
}

double squared_norm_loss(const Matrix& out) { return out.squaredNorm(); }

}  // namespace

TEST_SUITE("networks") {

TEST_CASE("default architecture follows the view widths") {
  NetworkConfig c;
  CHECK(c.resolved_latent_dim({76, 216, 64}) == 32);
  CHECK(c.resolved_latent_dim({784, 784}) == 64);
  const ModelState s = make_model(c, {76, 216, 64}, FusionMode::Projected, 0);
  CHECK(s.latent_dim == 32);
  REQUIRE(s.encoder_private.size() == 3);
  CHECK(s.encoder_private[1].in_features() == 216);
  CHECK(s.encoder_private[1].out_features() == 256);
  CHECK(s.encoder_shared.in_features() == 256);
  CHECK(s.encoder_shared.out_features() == 32);
  // generator widths mirror the encoder
  const auto& g = s.generators[0].layers();
  REQUIRE(g.size() == 3);
  CHECK(g[0].in_features() == 32);
  CHECK(g[0].out_features() == 256);
  CHECK(g[1].out_features() == 512);
  CHECK(g[2].out_features() == 76);
  CHECK(s.discriminators[2].layers().size() == 3);
}

TEST_CASE("config validation") {
  NetworkConfig c = small_config();
  CHECK_THROWS_AS(c.validate({8, 8}, 5), ValidationError);  // m < k
  c.discriminator_hidden = {4};
  CHECK_THROWS_AS(c.validate({8, 8}, 2), ValidationError);
  c = small_config();
  c.shared_layers = 3;
  CHECK_THROWS_AS(c.validate({8, 9}, 2), ValidationError);
  CHECK_NOTHROW(c.validate({8, 8}, 2));
  const NetworkConfig back = network_config_from_json(to_json(small_config()));
  CHECK(back.encoder_hidden == small_config().encoder_hidden);
  CHECK(back.latent_dim == 4);
}

TEST_CASE("shape contracts and width errors") {
  const ModelState s = make_model(small_config(), {8, 3}, FusionMode::Projected, 1);
  const Matrix z = encode(s, 0, random_input(5, 8, 2));
  CHECK(z.rows() == 5);
  CHECK(z.cols() == 4);
  const Matrix x = generate(s, 1, random_input(5, 4, 3));
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 3);
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.maxCoeff() <= 1.0);
  const Vector p = discriminate(s, 0, random_input(7, 8, 4));
  CHECK(p.size() == 7);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0);

  CHECK_THROWS_AS(encode(s, 0, random_input(5, 3, 5)), ValidationError);
  CHECK_THROWS_AS(generate(s, 0, random_input(5, 3, 5)), ValidationError);
  CHECK_THROWS_AS(discriminate(s, 1, random_input(5, 8, 5)), ValidationError);
  CHECK_THROWS_AS(encode(s, 2, random_input(5, 8, 5)), ValidationError);
}

TEST_CASE("identity encoder and generator reproduce the input") {
  ModelState s = make_model(identity_config(5), {5, 5}, FusionMode::WeightedSum, 0);
  set_identity(s.encoder_shared.layers()[0]);
  for (auto& g : s.generators) set_identity(g.layers()[0]);
  const Matrix x = random_input(6, 5, 9);
  CHECK((encode(s, 0, x) - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((generate(s, 1, encode(s, 1, x)) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero final discriminator layer outputs exactly one half") {
  ModelState s = make_model(small_config(), {8, 3}, FusionMode::Projected, 2);
  auto& last = s.discriminators[0].layers().back();
  last.weight.value.setZero();
  last.bias.value.setZero();
  const Vector p = discriminate(s, 0, random_input(4, 8, 1));
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == 0.5);
}

TEST_CASE("maps are deterministic given parameters and seeds") {
  const ModelState a = make_model(small_config(), {8, 3}, FusionMode::Projected, 17);
  const ModelState b = make_model(small_config(), {8, 3}, FusionMode::Projected, 17);
  const Matrix x = random_input(3, 8, 0);
  CHECK(encode(a, 0, x) == encode(b, 0, x));
  CHECK(encode(a, 0, x) == encode(a, 0, x));
  const ModelState c = make_model(small_config(), {8, 3}, FusionMode::Projected, 18);
  CHECK(encode(a, 0, x) != encode(c, 0, x));
}

TEST_CASE("shared block couples every view, private blocks do not") {
  ModelState s = make_model(small_config(), {8, 8, 8}, FusionMode::Projected, 3);
  const Matrix x = random_input(4, 8, 6);
  std::vector<Matrix> before;
  for (int v = 0; v < 3; ++v) before.push_back(encode(s, v, x));

  s.encoder_shared.layers()[0].weight.value(0, 0) += 0.5;
  for (int v = 0; v < 3; ++v) CHECK((encode(s, v, x) - before[v]).cwiseAbs().maxCoeff() > 1e-6);
  s.encoder_shared.layers()[0].weight.value(0, 0) -= 0.5;

  s.encoder_private[1].layers()[0].weight.value.array() += 0.3;
  CHECK(encode(s, 0, x) == before[0]);
  CHECK((encode(s, 1, x) - before[1]).cwiseAbs().maxCoeff() > 1e-6);
  CHECK(encode(s, 2, x) == before[2]);
}

TEST_CASE("analytic gradients match central differences on 8-dim inputs") {
  const std::vector<Activation> hidden{Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid, Activation::Relu};
  for (Activation act : hidden) {
    CAPTURE(to_string(act));
    NetworkConfig c = small_config();
    c.hidden_activation = act;
    ModelState s = make_model(c, {8, 8}, FusionMode::Projected, 5);
    const Matrix x = random_input(5, 8, 7);
    const Matrix z = random_input(5, 4, 8);

    SUBCASE("encode") {
      std::vector<Parameter*> params = s.encoder_parameters();
      Matrix grad_x;
      const double err = testing::max_fd_error(
          params, [&] { return squared_norm_loss(encode(s, 1, x)); },
          [&] {
            EncoderTape t;
            const Matrix out = encode(s, 1, x, &t);
            grad_x = encode_backward(s, 1, t, 2.0 * out);
          });
      CHECK(err < 1e-4);
      // input gradient
      Matrix xp = x;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = xp.data()[i];
        xp.data()[i] = saved + testing::kFdStep;
        const double up = squared_norm_loss(encode(s, 1, xp));
        xp.data()[i] = saved - testing::kFdStep;
        const double down = squared_norm_loss(encode(s, 1, xp));
        xp.data()[i] = saved;
        worst = std::max(worst, testing::relative_error(grad_x.data()[i], (up - down) / (2 * testing::kFdStep)));
      }
      CHECK(worst < 1e-4);
    }
    SUBCASE("generate") {
      std::vector<Parameter*> params = s.generator_parameters();
      const double err = testing::max_fd_error(
          params, [&] { return squared_norm_loss(generate(s, 0, z)); },
          [&] {
            MlpTape t;
            const Matrix out = generate(s, 0, z, &t);
            generate_backward(s, 0, t, 2.0 * out);
          });
      CHECK(err < 1e-4);
    }
    SUBCASE("discriminate") {
      std::vector<Parameter*> params = s.discriminator_parameters();
      const double err = testing::max_fd_error(
          params, [&] { return discriminate(s, 0, x).squaredNorm(); },
          [&] {
            MlpTape t;
            const Vector p = discriminate(s, 0, x, &t);
            discriminate_backward(s, 0, t, 2.0 * p);
          });
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("activation names round-trip") {
  for (const char* name : {"linear", "relu", "leaky_relu", "sigmoid", "tanh"}) {
    CHECK(to_string(parse_activation(name)) == name);
  }
  CHECK_THROWS_AS(parse_activation("softplus"), ValidationError);
}

TEST_CASE("checkpoints restore every tensor") {
  ModelState s = make_model(small_config(), {8, 3}, FusionMode::Projected, 4);
  const Matrix centroids = random_input(3, 4, 1);
  const auto dir = testing::temp_dir("ckpt");
  save_checkpoint(s, centroids, dir / "c.bin");

  ModelState t = make_model(small_config(), {8, 3}, FusionMode::Projected, 99);
  Matrix loaded;
  load_checkpoint(dir / "c.bin", t, loaded);
  CHECK(loaded == centroids);
  const Matrix x = random_input(2, 8, 3);
  CHECK(encode(s, 0, x) == encode(t, 0, x));
  CHECK(discriminate(s, 0, x) == discriminate(t, 0, x));
  CHECK(t.fusion.projection.value == s.fusion.projection.value);

  // the stored architecture replaces the target's
  ModelState other = make_model(small_config(), {8, 4}, FusionMode::Projected, 4);
  load_checkpoint(dir / "c.bin", other, loaded);
  CHECK(other.dims == std::vector<int>{8, 3});
  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.bin", t, loaded), ValidationError);
}

}  // TEST_SUITE
