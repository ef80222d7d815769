#include "oracles.hpp"

#include "gpmvc/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace gpmvc;

TEST_SUITE("losses") {

TEST_CASE("autoencoder_loss examples") {
  const std::vector<Matrix> x{Matrix{{1.0, 2.0}}};
  CHECK(autoencoder_loss(x, x) == 0.0);
  const std::vector<Matrix> zero{Matrix::Zero(1, 2)};
  CHECK(autoencoder_loss(x, zero) == doctest::Approx(5.0));

  const std::vector<Matrix> a{Matrix{{0.5, 0.1}, {0.3, 0.9}}, Matrix{{0.2}, {0.4}}};
  const std::vector<Matrix> r{Matrix{{0.4, 0.3}, {0.2, 0.6}}, Matrix{{0.1}, {0.9}}};
  std::vector<Matrix> r2 = r;
  for (std::size_t v = 0; v < 2; ++v) r2[v] = a[v] + 2.0 * (r[v] - a[v]);
  CHECK(autoencoder_loss(a, r2) == doctest::Approx(4.0 * autoencoder_loss(a, r)));

  const std::vector<Matrix> bad{Matrix::Zero(1, 3)};
  CHECK_THROWS_AS(autoencoder_loss(x, bad), ValidationError);
  CHECK((autoencoder_loss_grad(Matrix{{1.0, 2.0}}, Matrix{{0.0, 0.0}}) - Matrix{{-2.0, -4.0}}).norm() < 1e-15);
}

TEST_CASE("gan_losses examples") {
  const Vector half = Vector::Constant(4, 0.5);
  const GanLosses g = gan_losses(half, half);
  CHECK(g.d_loss == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(g.g_loss == doctest::Approx(std::log(2.0)));

  const GanLosses perfect = gan_losses(Vector::Constant(3, 1.0), Vector::Constant(3, 0.0));
  CHECK(perfect.d_loss < 1e-6);
  CHECK(std::isfinite(perfect.g_loss));
  CHECK(perfect.g_loss == doctest::Approx(-std::log(kProbEpsilon)));

  const GanLosses won = gan_losses(half, Vector::Constant(3, 1.0 - kProbEpsilon));
  CHECK(won.g_loss < 1e-6);

  CHECK_THROWS_AS(gan_losses(Vector::Constant(2, 1.5), half), ValidationError);
  CHECK_THROWS_AS(gan_losses(Vector(0), half), ValidationError);
}

TEST_CASE("GAN probability gradients match central differences") {
  Vector real(3), fake(4);
  real << 0.9, 0.4, 0.7;
  fake << 0.2, 0.55, 0.1, 0.35;
  const GanGradients g = discriminator_loss_grad(real, fake);
  const Vector gg = generator_loss_grad(fake);
  const double h = testing::kFdStep;
  for (Eigen::Index i = 0; i < real.size(); ++i) {
    Vector up = real, down = real;
    up(i) += h;
    down(i) -= h;
    const double n = (gan_losses(up, fake).d_loss - gan_losses(down, fake).d_loss) / (2 * h);
    CHECK(testing::relative_error(g.d_real(i), n) < 1e-6);
  }
  for (Eigen::Index i = 0; i < fake.size(); ++i) {
    Vector up = fake, down = fake;
    up(i) += h;
    down(i) -= h;
    const double nd = (gan_losses(real, up).d_loss - gan_losses(real, down).d_loss) / (2 * h);
    const double ng = (gan_losses(real, up).g_loss - gan_losses(real, down).g_loss) / (2 * h);
    CHECK(testing::relative_error(g.d_fake(i), nd) < 1e-6);
    CHECK(testing::relative_error(gg(i), ng) < 1e-6);
  }
}

TEST_CASE("cycle_loss examples") {
  const Matrix x{{0.3, 0.8}};
  CHECK(cycle_loss(x, x) == 0.0);
  CHECK(cycle_loss(Matrix{{1.0, -1.0}}, Matrix{{0.0, 0.0}}) == doctest::Approx(2.0));
  CHECK(cycle_loss(Matrix{{1.0}, {3.0}}, Matrix{{0.0}, {0.0}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cycle_loss(x, Matrix::Zero(2, 2)), ValidationError);
  CHECK((cycle_loss_grad(Matrix{{1.0, 0.0, 2.0}}, Matrix{{0.0, 0.0, 3.0}}) - Matrix{{-1.0, 0.0, 1.0}}).norm() == 0.0);
}

TEST_CASE("adversarial_training_loss examples") {
  CHECK(adversarial_training_loss(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(adversarial_training_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.1}, 10.0) ==
        doctest::Approx(2.0));
  CHECK(adversarial_training_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.05, 0.05}) ==
        doctest::Approx(2.0));
}

TEST_CASE("total_objective examples") {
  const LossWeights zero{.adversarial = 0.0, .fusion = 0.0, .clustering = 0.0};
  CHECK(total_objective(2.0, 3.0, 4.0, 5.0, zero) == 2.0);
  CHECK(total_objective(2.0, 3.0, 4.0, 5.0, {}) == doctest::Approx(14.0));
  LossWeights w{.adversarial = 0.7, .fusion = 1.3, .clustering = 0.4};
  const double base = total_objective(2.0, 3.0, 4.0, 5.0, w);
  w.clustering *= 2.0;
  CHECK(total_objective(2.0, 3.0, 4.0, 5.0, w) - base == doctest::Approx(0.4 * 5.0));
  CHECK_THROWS_AS(total_objective(std::numeric_limits<double>::infinity(), 0, 0, 0, {}), ValidationError);
  CHECK_THROWS_AS(total_objective(std::nan(""), 0, 0, 0, {}), ValidationError);
}

TEST_CASE("loss weights validate and round-trip") {
  CHECK_THROWS_AS((LossWeights{.adversarial = -1.0}.validate()), ValidationError);
  const LossWeights w{.adversarial = 0.5, .fusion = 2.0, .clustering = 0.25};
  const LossWeights back = loss_weights_from_json(to_json(w));
  CHECK(back.adversarial == 0.5);
  CHECK(back.fusion == 2.0);
  CHECK(back.clustering == 0.25);
}

TEST_CASE("gradient oracle on 16-parameter toy models") {
  for (const auto& r : testing::run_gradient_checks(20)) {
    CAPTURE(r.name);
    CHECK(r.parameters == 16);
    CHECK(r.max_error < 1e-4);
  }
}

}  // TEST_SUITE
