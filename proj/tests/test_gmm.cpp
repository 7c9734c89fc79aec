#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "dime/forward.hpp"
#include "dime/gmm.hpp"
#include "dime/quadrature.hpp"
#include "test_util.hpp"

using namespace dime;
using dime::test::fd_gradient;
using dime::test::rel_error;

namespace {

GaussianMixturePrior symmetric_pair_1d() {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::VectorXd m1(1), m2(1);
  m1 << -0.75;
  m2 << 0.75;
  return GaussianMixturePrior(w, {m1, m2},
                              {Covariance::isotropic(1, 0.25), Covariance::isotropic(1, 0.25)});
}

GaussianMixturePrior random_mixture_2d(uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  std::vector<Eigen::VectorXd> means;
  std::vector<Covariance> covs;
  for (int k = 0; k < 3; ++k) {
    means.push_back(rng.normal_vector(2));
    Eigen::MatrixXd b(2, 2);
    b << 1.0 + rng.uniform(), 0.3 * rng.normal(), 0.3 * rng.normal(), 1.0 + rng.uniform();
    covs.push_back(Covariance::full(0.2 * (b * b.transpose())));
  }
  return GaussianMixturePrior(w, std::move(means), std::move(covs));
}

}  // namespace

TEST_CASE("log_density basics") {
  SUBCASE("standard normal at its mode") {
    for (int d : {1, 3, 7}) {
      Eigen::VectorXd w(1);
      w << 1.0;
      GaussianMixturePrior p(w, {Eigen::VectorXd::Zero(d)}, {Covariance::isotropic(d, 1.0)});
      CHECK(p.log_density(Eigen::VectorXd::Zero(d)) ==
            doctest::Approx(-0.5 * d * std::log(2 * std::numbers::pi)));
    }
  }
  SUBCASE("symmetric mixture is even") {
    auto p = symmetric_pair_1d();
    Eigen::VectorXd x(1);
    for (double v : {0.1, 0.9, 2.4}) {
      x << v;
      double lp = p.log_density(x);
      x << -v;
      CHECK(p.log_density(x) == doctest::Approx(lp));
    }
  }
  SUBCASE("2-D density normalizes to 1 under grid quadrature") {
    auto p = random_mixture_2d(3);
    const int n = 600;
    const double lo = -6.0, hi = 6.0, h = (hi - lo) / n;
    double total = 0.0;
    Eigen::VectorXd x(2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        x << lo + (i + 0.5) * h, lo + (j + 0.5) * h;
        total += std::exp(p.log_density(x)) * h * h;
      }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
  SUBCASE("dimension mismatch") {
    auto p = symmetric_pair_1d();
    CHECK_THROWS_AS(p.log_density(Eigen::VectorXd::Zero(2)), std::invalid_argument);
  }
}

TEST_CASE("clean_score") {
  SUBCASE("single component closed form") {
    Rng rng(5);
    Eigen::VectorXd w(1);
    w << 1.0;
    Eigen::VectorXd mu = rng.normal_vector(3);
    Eigen::MatrixXd b(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = rng.normal();
    Eigen::MatrixXd S = b * b.transpose() + 3.0 * Eigen::MatrixXd::Identity(3, 3);
    GaussianMixturePrior p(w, {mu}, {Covariance::full(S)});
    Eigen::VectorXd x = rng.normal_vector(3);
    Eigen::VectorXd expected = -S.llt().solve(x - mu);
    CHECK(rel_error(p.clean_score(x), expected) < 1e-12);
  }
  SUBCASE("zero at the symmetric stationary point") {
    auto p = symmetric_pair_1d();
    CHECK(p.clean_score(Eigen::VectorXd::Zero(1)).norm() == doctest::Approx(0.0));
  }
  SUBCASE("finite differences over 100 random points") {
    auto p = random_mixture_2d(11);
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x = 2.0 * rng.normal_vector(2);
      Eigen::VectorXd fd =
          fd_gradient([&](const Eigen::VectorXd& z) { return p.log_density(z); }, x);
      CHECK(rel_error(p.clean_score(x), fd) < 1e-5);
    }
  }
}

TEST_CASE("noised_score") {
  auto schedule = NoiseSchedule::variance_exploding(0.05, 80.0);

  SUBCASE("zero-noise limit equals clean score") {
    auto p = random_mixture_2d(23);
    Rng rng(29);
    Eigen::VectorXd x = rng.normal_vector(2);
    CHECK(rel_error(p.noised_score(x, 0.0, schedule), p.clean_score(x)) < 1e-12);
  }
  SUBCASE("single component convolution closed form") {
    Rng rng(31);
    Eigen::VectorXd w(1);
    w << 1.0;
    Eigen::VectorXd mu = rng.normal_vector(2);
    GaussianMixturePrior p(w, {mu}, {Covariance::isotropic(2, 0.5)});
    auto vp = NoiseSchedule::variance_preserving(0.1, 3.0);
    double t = 1.4;
    auto v = vp.eval(t);
    Eigen::VectorXd x = rng.normal_vector(2);
    Eigen::VectorXd expected =
        -(x - v.a * mu) / (v.a * v.a * 0.5 + v.sigma * v.sigma);
    CHECK(rel_error(p.noised_score(x, t, vp), expected) < 1e-12);
  }
  SUBCASE("finite differences of the noised log density") {
    auto p = random_mixture_2d(37);
    Rng rng(41);
    for (double t : {0.3, 1.0, 5.0}) {
      for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd x = 3.0 * rng.normal_vector(2);
        Eigen::VectorXd fd = fd_gradient(
            [&](const Eigen::VectorXd& z) { return p.noised_log_density(z, t, schedule); }, x);
        CHECK(rel_error(p.noised_score(x, t, schedule), fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("tweedie_mean") {
  auto schedule = NoiseSchedule::variance_exploding(0.05, 80.0);

  SUBCASE("no denoising at sigma = 0") {
    auto p = random_mixture_2d(43);
    Eigen::VectorXd x(2);
    x << 0.3, -0.8;
    CHECK(rel_error(p.tweedie_mean(x, 0.0, schedule), x) < 1e-12);
  }
  SUBCASE("single component equals the joint-Gaussian conditional mean") {
    Rng rng(47);
    Eigen::VectorXd w(1);
    w << 1.0;
    Eigen::VectorXd mu = rng.normal_vector(2);
    Eigen::MatrixXd S(2, 2);
    S << 0.7, 0.2, 0.2, 0.4;
    GaussianMixturePrior p(w, {mu}, {Covariance::full(S)});

    dime::test::ConjugateCase cc;
    cc.mu0 = mu;
    cc.sigma0 = S;
    auto vp = NoiseSchedule::variance_preserving(0.1, 3.0);
    for (double t : {0.3, 1.1, 2.5}) {
      auto v = vp.eval(t);
      Eigen::VectorXd x_t = rng.normal_vector(2);
      Eigen::VectorXd expected = cc.conditional_mean(x_t, v.a, v.sigma);
      CHECK(rel_error(p.tweedie_mean(x_t, t, vp), expected) < 1e-8);
    }
  }
  SUBCASE("two components: responsibility-weighted conditional means") {
    auto p = symmetric_pair_1d();
    double t = 0.6;
    auto v = schedule.eval(t);
    Eigen::VectorXd x_t(1);
    x_t << 0.35;
    // direct mixture conditional in 1-D
    double var_noised = 0.25 + v.sigma * v.sigma;
    double l1 = std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi * var_noised) -
                0.5 * std::pow(x_t[0] + 0.75, 2) / var_noised;
    double l2 = std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi * var_noised) -
                0.5 * std::pow(x_t[0] - 0.75, 2) / var_noised;
    double r1 = std::exp(l1) / (std::exp(l1) + std::exp(l2));
    double r2 = 1.0 - r1;
    auto cond_mean = [&](double mu) {
      double c = 1.0 / (1.0 / 0.25 + 1.0 / (v.sigma * v.sigma));
      return c * (mu / 0.25 + x_t[0] / (v.sigma * v.sigma));
    };
    double expected = r1 * cond_mean(-0.75) + r2 * cond_mean(0.75);
    CHECK(p.tweedie_mean(x_t, t, schedule)[0] == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("posterior_covariance (improved approximation)") {
  auto ve = NoiseSchedule::variance_exploding(0.05, 80.0);

  SUBCASE("equal precisions") {
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(3), Covariance::isotropic(3, 1.0));
    // a = 1, sigma = 1 under the VE schedule at t = 1
    Covariance c = eg.posterior_covariance(1.0, ve);
    CHECK(c.diagonal_vector()[0] == doctest::Approx(0.5));
  }
  SUBCASE("paper component covariance at sigma = 0.1") {
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(2), Covariance::isotropic(2, 0.25));
    Covariance c = eg.posterior_covariance(0.1, ve);
    CHECK(c.diagonal_vector()[0] == doctest::Approx(1.0 / 104.0));
  }
  SUBCASE("prior covariance recovered as a -> 0") {
    auto vp = NoiseSchedule::variance_preserving(0.1, 9.0);  // a(9) = exp(-20.25)
    Eigen::MatrixXd S(2, 2);
    S << 0.7, 0.1, 0.1, 0.3;
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(2), Covariance::full(S));
    Covariance c = eg.posterior_covariance(9.0, vp);
    CHECK((c.dense() - S).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("sigma = 0 returns the zero-matrix limit") {
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(2), Covariance::isotropic(2, 0.25));
    CHECK(eg.posterior_covariance(0.0, ve).is_zero());
  }
  SUBCASE("matches brute-force Gaussian conditioning up to dim 10") {
    Rng rng(53);
    auto vp = NoiseSchedule::variance_preserving(0.1, 3.0);
    for (int d : {2, 5, 10}) {
      Eigen::MatrixXd b(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = rng.normal();
      Eigen::MatrixXd S = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
      EmpiricalGaussian eg(Eigen::VectorXd::Zero(d), Covariance::full(S));
      for (double t : {0.2, 1.0, 2.7}) {
        auto v = vp.eval(t);
        Eigen::MatrixXd noised = v.a * v.a * S;
        noised.diagonal().array() += v.sigma * v.sigma;
        Eigen::MatrixXd brute = S - v.a * S * noised.llt().solve(v.a * S);
        CHECK((eg.posterior_covariance(t, vp).dense() - brute).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
  SUBCASE("largest eigenvalue identity at lambda_max = 1") {
    Rng rng(59);
    int d = 6;
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = rng.normal();
    Eigen::MatrixXd S = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    S /= es.eigenvalues().maxCoeff();  // normalize lambda_max to 1
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(d), Covariance::full(S));
    auto vp = NoiseSchedule::variance_preserving(0.1, 3.0);
    for (double t : {0.4, 1.3, 2.9}) {
      auto v = vp.eval(t);
      double expected = v.sigma * v.sigma / (v.sigma * v.sigma + v.a * v.a);
      CHECK(std::abs(eg.posterior_covariance(t, vp).max_eigenvalue() - expected) < 1e-10);
    }
  }
}

TEST_CASE("heuristic covariance") {
  auto ve = NoiseSchedule::variance_exploding(0.05, 80.0);
  CHECK(heuristic_covariance(4, 0.1, ve).diagonal_vector()[0] == doctest::Approx(0.01));
  CHECK(heuristic_covariance(4, 80.0, ve).diagonal_vector()[0] == doctest::Approx(6400.0));
  // mismatch against the improved value at sigma = 1, prior 0.25 I
  EmpiricalGaussian eg(Eigen::VectorXd::Zero(4), Covariance::isotropic(4, 0.25));
  CHECK(heuristic_covariance(4, 1.0, ve).diagonal_vector()[0] == doctest::Approx(1.0));
  CHECK(eg.posterior_covariance(1.0, ve).diagonal_vector()[0] == doctest::Approx(0.2));
}

TEST_CASE("analytic_evidence_linear") {
  SUBCASE("1-D conjugate value") {
    Eigen::VectorXd w(1);
    w << 1.0;
    GaussianMixturePrior p(w, {Eigen::VectorXd::Zero(1)}, {Covariance::isotropic(1, 1.0)});
    Eigen::MatrixXd A(1, 1);
    A << 1.0;
    Eigen::VectorXd y(1);
    y << 0.0;
    CHECK(analytic_evidence_linear(p, A, 1.0, y) ==
          doctest::Approx(-0.5 * std::log(4 * std::numbers::pi)));
  }
  SUBCASE("2-D prior, 1-D measurement matches quadrature") {
    auto p = random_mixture_2d(61);
    Eigen::MatrixXd A(1, 2);
    A << 0.8, -0.4;
    Eigen::VectorXd y(1);
    y << 0.6;
    LinearGaussianModel model(A, 0.5);
    double quad = quadrature_evidence_oracle(p, model, y);
    CHECK(std::abs(analytic_evidence_linear(p, A, 0.5, y) - quad) < 1e-6);
  }
  SUBCASE("invariant to permuting components") {
    Rng rng(67);
    Eigen::VectorXd w(2);
    w << 0.3, 0.7;
    Eigen::VectorXd m1 = rng.normal_vector(3), m2 = rng.normal_vector(3);
    auto c1 = Covariance::isotropic(3, 0.4);
    auto c2 = Covariance::diagonal((Eigen::VectorXd(3) << 0.2, 0.5, 0.9).finished());
    GaussianMixturePrior p1(w, {m1, m2}, {c1, c2});
    Eigen::VectorXd w_swap(2);
    w_swap << 0.7, 0.3;
    GaussianMixturePrior p2(w_swap, {m2, m1}, {c2, c1});
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(2, 3);
    Eigen::VectorXd y = rng.normal_vector(2);
    CHECK(std::abs(analytic_evidence_linear(p1, A, 0.3, y) -
                   analytic_evidence_linear(p2, A, 0.3, y)) < 1e-12);
  }
}

TEST_CASE("sample_prior") {
  SUBCASE("degenerate component returns its mean exactly") {
    Eigen::VectorXd w(1);
    w << 1.0;
    Eigen::VectorXd mu(2);
    mu << 3.0, -4.0;
    GaussianMixturePrior p(w, {mu}, {Covariance::isotropic(2, 0.0)});
    Rng rng(71);
    CHECK((p.sample(rng) - mu).norm() == doctest::Approx(0.0));
  }
  SUBCASE("component frequencies match weights") {
    Eigen::VectorXd w(3);
    w << 0.2, 0.3, 0.5;
    std::vector<Eigen::VectorXd> means = {(Eigen::VectorXd(1) << -10.0).finished(),
                                          (Eigen::VectorXd(1) << 0.0).finished(),
                                          (Eigen::VectorXd(1) << 10.0).finished()};
    GaussianMixturePrior p(w, means,
                           {Covariance::isotropic(1, 0.01), Covariance::isotropic(1, 0.01),
                            Covariance::isotropic(1, 0.01)});
    Rng rng(73);
    const int n = 100000;
    Eigen::Vector3i counts = Eigen::Vector3i::Zero();
    for (int i = 0; i < n; ++i) {
      double v = p.sample(rng)[0];
      counts[v < -5 ? 0 : (v < 5 ? 1 : 2)]++;
    }
    for (int k = 0; k < 3; ++k) {
      double freq = static_cast<double>(counts[k]) / n;
      double se = std::sqrt(w[k] * (1 - w[k]) / n);
      CHECK(std::abs(freq - w[k]) < 3 * se);
    }
  }
  SUBCASE("sample covariance matches the mixture moment formula") {
    auto p = random_mixture_2d(79);
    Rng rng(83);
    std::vector<Eigen::VectorXd> draws;
    for (int i = 0; i < 100000; ++i) draws.push_back(p.sample(rng));
    auto m = dime::test::moments(draws);
    CHECK(dime::test::mean_within_se(m, p.mixture_mean()));
    // loose elementwise bound; mixture draws are non-Gaussian
    Eigen::MatrixXd expected = p.mixture_covariance(Covariance::Kind::Full).dense();
    CHECK((m.cov - expected).cwiseAbs().maxCoeff() < 0.05 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("exact conditional sampler matches the analytic mixture conditional") {
  auto p = symmetric_pair_1d();
  auto s = NoiseSchedule::variance_exploding(0.05, 80.0);
  double t = 0.7;
  auto v = s.eval(t);
  Eigen::VectorXd x_t(1);
  x_t << 0.4;

  // analytic conditional: responsibilities and per-component conditionals
  double var_noised = 0.25 + v.sigma * v.sigma;
  double l1 = -0.5 * std::pow(x_t[0] + 0.75, 2) / var_noised;
  double l2 = -0.5 * std::pow(x_t[0] - 0.75, 2) / var_noised;
  double r1 = std::exp(l1) / (std::exp(l1) + std::exp(l2)), r2 = 1 - r1;
  double c = 1.0 / (1.0 / 0.25 + 1.0 / (v.sigma * v.sigma));
  auto cm = [&](double mu) { return c * (mu / 0.25 + x_t[0] / (v.sigma * v.sigma)); };
  double mean_true = r1 * cm(-0.75) + r2 * cm(0.75);
  double second = r1 * (c + cm(-0.75) * cm(-0.75)) + r2 * (c + cm(0.75) * cm(0.75));
  double var_true = second - mean_true * mean_true;

  Rng rng(89);
  std::vector<Eigen::VectorXd> draws;
  for (int i = 0; i < 100000; ++i) draws.push_back(p.sample_conditional_x0(x_t, t, s, rng));
  auto m = dime::test::moments(draws);
  CHECK(std::abs(m.mean[0] - mean_true) < 3 * std::sqrt(m.cov(0, 0) / m.n));
  CHECK(std::abs(m.cov(0, 0) - var_true) < 0.03 * var_true);
}

TEST_CASE("pf_ode_velocity") {
  auto s = NoiseSchedule::variance_exploding(0.05, 5.0);

  SUBCASE("variance-exploding velocity is -c * score") {
    auto p = random_mixture_2d(97);
    Rng rng(101);
    Eigen::VectorXd x = rng.normal_vector(2);
    double t = 1.3;
    Eigen::VectorXd expected = -s.coefficient_c(t) * p.noised_score(x, t, s);
    CHECK(rel_error(p.pf_ode_velocity(x, t, s), expected) < 1e-12);
  }
  SUBCASE("zero velocity where the score vanishes") {
    auto p = symmetric_pair_1d();
    CHECK(p.pf_ode_velocity(Eigen::VectorXd::Zero(1), 1.0, s).norm() == doctest::Approx(0.0));
  }
  SUBCASE("backward integration reproduces the t_min marginal moments") {
    // single Gaussian: marginal at t is N(mu, S + t^2 I) under this schedule
    Eigen::VectorXd w(1);
    w << 1.0;
    Eigen::VectorXd mu(2);
    mu << 0.8, -0.3;
    Eigen::MatrixXd S(2, 2);
    S << 0.6, 0.15, 0.15, 0.4;
    GaussianMixturePrior p(w, {mu}, {Covariance::full(S)});
    Rng rng(103);

    const int n_samples = 10000, n_steps = 400;
    double t_hi = s.t_max(), t_lo = s.t_min();
    double dt = (t_hi - t_lo) / n_steps;
    std::vector<Eigen::VectorXd> ends;
    for (int i = 0; i < n_samples; ++i) {
      Eigen::MatrixXd cov_hi = S + t_hi * t_hi * Eigen::MatrixXd::Identity(2, 2);
      Eigen::VectorXd x = dime::test::sample_gaussian(mu, cov_hi, rng);
      double t = t_hi;
      for (int k = 0; k < n_steps; ++k) {
        // RK2 midpoint, integrating downward in t
        Eigen::VectorXd k1 = p.pf_ode_velocity(x, t, s);
        Eigen::VectorXd k2 = p.pf_ode_velocity(x - 0.5 * dt * k1, t - 0.5 * dt, s);
        x -= dt * k2;
        t -= dt;
      }
      ends.push_back(x);
    }
    auto m = dime::test::moments(ends);
    Eigen::MatrixXd expected = S + t_lo * t_lo * Eigen::MatrixXd::Identity(2, 2);
    CHECK((m.mean - mu).norm() < 0.02 * std::max(1.0, mu.norm()));
    CHECK((m.cov - expected).norm() < 0.02 * expected.norm());
  }
}

TEST_CASE("empirical gaussian construction") {
  SUBCASE("from_mixture representations") {
    auto p = symmetric_pair_1d();
    auto full = EmpiricalGaussian::from_mixture(p, Covariance::Kind::Full);
    auto iso = EmpiricalGaussian::from_mixture(p, Covariance::Kind::Isotropic);
    // mixture covariance = 0.25 + 0.75^2 in 1-D
    CHECK(full.sigma0().dense()(0, 0) == doctest::Approx(0.25 + 0.5625));
    CHECK(iso.sigma0().diagonal_vector()[0] == doctest::Approx(0.25 + 0.5625));
  }
  SUBCASE("jitter is applied before inversion") {
    EmpiricalGaussian eg(Eigen::VectorXd::Zero(2), Covariance::isotropic(2, 0.25), 0.01);
    auto ve = NoiseSchedule::variance_exploding(0.05, 80.0);
    double expected = 1.0 / (1.0 / 0.26 + 1.0 / 0.01);  // sigma_t = 0.1
    CHECK(eg.posterior_covariance(0.1, ve).diagonal_vector()[0] == doctest::Approx(expected));
  }
  SUBCASE("from_samples recovers moments") {
    Rng rng(107);
    Eigen::MatrixXd rows(5000, 2);
    for (int i = 0; i < rows.rows(); ++i) {
      rows(i, 0) = 1.0 + 0.5 * rng.normal();
      rows(i, 1) = -2.0 + 2.0 * rng.normal();
    }
    auto eg = EmpiricalGaussian::from_samples(rows, 0.0);
    CHECK(std::abs(eg.mu0()[0] - 1.0) < 0.05);
    CHECK(std::abs(eg.mu0()[1] + 2.0) < 0.15);
    CHECK(std::abs(eg.sigma0().dense()(0, 0) - 0.25) < 0.03);
    CHECK(std::abs(eg.sigma0().dense()(1, 1) - 4.0) < 0.35);
  }
}
