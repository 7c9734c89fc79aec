#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "dime/forward.hpp"
#include "test_util.hpp"

using namespace dime;
using dime::test::fd_gradient;
using dime::test::rel_error;

TEST_CASE("linear model basics") {
  Rng rng(3);
  auto model = LinearGaussianModel::random(4, 6, 0.2, rng);
  Eigen::VectorXd x = rng.normal_vector(6);

  SUBCASE("noise-free simulation at tiny sigma") {
    LinearGaussianModel tight(model.matrix(), 1e-300);
    Rng r2(5);
    Measurement meas = tight.simulate(x, r2);
    CHECK((meas.y - model.matrix() * x).norm() < 1e-250);
  }
  SUBCASE("zero-residual log likelihood") {
    Eigen::VectorXd y = model.apply(x);
    double expected = -0.5 * 4 * std::log(2 * std::numbers::pi * 0.04);
    CHECK(model.log_likelihood(y, x) == doctest::Approx(expected));
    CHECK(model.likelihood_grad(y, x).norm() == doctest::Approx(0.0));
  }
  SUBCASE("unit residual in 1-D") {
    Eigen::MatrixXd A(1, 1);
    A << 1.0;
    LinearGaussianModel one(A, 1.0);
    Eigen::VectorXd y(1), x1(1);
    y << 1.0;
    x1 << 0.0;
    CHECK(one.log_likelihood(y, x1) ==
          doctest::Approx(-0.5 - 0.5 * std::log(2 * std::numbers::pi)));
  }
  SUBCASE("gradient closed form") {
    Eigen::VectorXd y = rng.normal_vector(4);
    Eigen::VectorXd expected = model.matrix().transpose() * (y - model.matrix() * x) / 0.04;
    CHECK(rel_error(model.likelihood_grad(y, x), expected) < 1e-12);
  }
}

TEST_CASE("likelihood gradients match finite differences for all models") {
  Rng rng(7);
  Eigen::VectorXd x = rng.normal_vector(5);

  auto check_model = [&](const ForwardModel& model) {
    Rng local(11);
    for (int i = 0; i < 30; ++i) {
      Eigen::VectorXd xr = local.normal_vector(model.input_dim());
      Eigen::VectorXd yr = local.normal_vector(model.output_dim());
      Eigen::VectorXd fd = fd_gradient(
          [&](const Eigen::VectorXd& z) { return model.log_likelihood(yr, z); }, xr, 1e-6);
      CHECK(rel_error(model.likelihood_grad(yr, xr), fd) < 1e-4);
    }
  };
  check_model(LinearGaussianModel::random(3, 5, 0.4, rng));
  check_model(GaussianPhaseRetrievalModel(3, 5, 0.3, rng));
  check_model(FourierPhaseRetrievalModel({5}, 0.3));
}

TEST_CASE("gaussian phase retrieval") {
  Rng rng(13);
  GaussianPhaseRetrievalModel model(40, 10, 0.3, rng);

  SUBCASE("x = 0 maps to pure noise with mean zero") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(10);
    CHECK(model.apply(zero).norm() == doctest::Approx(0.0));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(40);
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += model.simulate(zero, rng).y;
    // joint bound across 40 coordinates
    CHECK((sum / n).cwiseAbs().maxCoeff() < 4.5 * 0.3 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("entry variance is 1/m") {
    // E|A_ij|^2 = 1/m accumulated over rows: E|f(e_j)|^2 = 1 for unit vectors
    Rng r2(17);
    GaussianPhaseRetrievalModel wide(4000, 3, 0.3, r2);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(3, j);
      CHECK(wide.apply(e).squaredNorm() == doctest::Approx(1.0).epsilon(0.1));
    }
  }
  SUBCASE("global sign flip is an invariance") {
    Eigen::VectorXd x = rng.normal_vector(10);
    CHECK((model.apply(x) - model.apply(-x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fourier phase retrieval invariances") {
  FourierPhaseRetrievalModel model({8}, 0.3);
  Rng rng(19);
  Eigen::VectorXd x = rng.normal_vector(8);

  SUBCASE("impulse has a flat spectrum") {
    Eigen::VectorXd delta = Eigen::VectorXd::Unit(8, 0);
    Eigen::VectorXd mag = model.apply(delta);
    for (int i = 0; i < 8; ++i) CHECK(mag[i] == doctest::Approx(mag[0]).epsilon(1e-12));
  }
  SUBCASE("circular shifts") {
    Eigen::VectorXd base = model.apply(x);
    for (int s : {1, 3, 5}) {
      Eigen::VectorXd shifted(8);
      for (int i = 0; i < 8; ++i) shifted[(i + s) % 8] = x[i];
      CHECK((model.apply(shifted) - base).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("reflection") {
    Eigen::VectorXd base = model.apply(x);
    Eigen::VectorXd flipped(8);
    for (int i = 0; i < 8; ++i) flipped[(8 - i) % 8] = x[i];
    CHECK((model.apply(flipped) - base).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("2-D grid shifts and flips") {
    FourierPhaseRetrievalModel grid({4, 4}, 0.3);
    Eigen::VectorXd img = rng.normal_vector(16);
    Eigen::VectorXd base = grid.apply(img);
    Eigen::VectorXd shifted(16), flipped(16);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        shifted[((i + 1) % 4) * 4 + (j + 2) % 4] = img[i * 4 + j];
        flipped[((4 - i) % 4) * 4 + (4 - j) % 4] = img[i * 4 + j];
      }
    CHECK((grid.apply(shifted) - base).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((grid.apply(flipped) - base).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reduced chi squared") {
  Rng rng(23);
  auto model = LinearGaussianModel::random(50, 8, 0.3, rng);
  Eigen::VectorXd x = rng.normal_vector(8);

  SUBCASE("zero at an exact fit") {
    CHECK(model.reduced_chi_squared(model.apply(x), x) == doctest::Approx(0.0));
  }
  SUBCASE("expectation one under the noise model") {
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      Measurement meas = model.simulate(x, rng);
      double c = model.reduced_chi_squared(meas.y, x);
      sum += c;
      sum_sq += c * c;
    }
    double mean = sum / n;
    double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 3 * se);
  }
  SUBCASE("doubling sigma quarters the value") {
    Eigen::VectorXd y = model.apply(x).array() + 0.15;
    LinearGaussianModel doubled(model.matrix(), 0.6);
    CHECK(doubled.reduced_chi_squared(y, x) ==
          doctest::Approx(0.25 * model.reduced_chi_squared(y, x)));
  }
}

TEST_CASE("grad/loglik consistency via the piggybacked chi2") {
  Rng rng(29);
  GaussianPhaseRetrievalModel model(6, 4, 0.3, rng);
  Eigen::VectorXd x = rng.normal_vector(4);
  Eigen::VectorXd y = rng.normal_vector(6).cwiseAbs();
  auto [grad, chi2] = model.likelihood_grad_chi2(y, x);
  CHECK(rel_error(grad, model.likelihood_grad(y, x)) < 1e-14);
  CHECK(chi2 == doctest::Approx(model.reduced_chi_squared(y, x)));
}

TEST_CASE("measurement file round trip") {
  Rng rng(31);
  auto model = LinearGaussianModel::random(5, 3, 0.25, rng);
  Eigen::VectorXd x = rng.normal_vector(3);
  Measurement meas = model.simulate(x, rng);
  meas.meta.seed = 4242;

  std::string path = "measurement_roundtrip.txt";
  save_measurement(path, meas);
  Measurement loaded = load_measurement(path);
  std::remove(path.c_str());

  CHECK(loaded.meta.model_kind == "linear_gaussian");
  CHECK(loaded.meta.m == 5);
  CHECK(loaded.meta.n == 3);
  CHECK(loaded.meta.sigma_y == doctest::Approx(0.25));
  CHECK(loaded.meta.seed == 4242);
  CHECK((loaded.y - meas.y).norm() == doctest::Approx(0.0));
  REQUIRE(loaded.x_star.has_value());
  CHECK((*loaded.x_star - x).norm() == doctest::Approx(0.0));
}
