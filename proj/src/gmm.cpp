#include "dime/gmm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dime/errors.hpp"
#include "dime/math_util.hpp"

namespace dime {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2π)

double gaussian_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Covariance& cov) {
  Eigen::VectorXd d = x - mean;
  return -0.5 * (x.size() * kLog2Pi + cov.log_det() + cov.quad_form_inv(d));
}
}  // namespace

GaussianMixturePrior::GaussianMixturePrior(Eigen::VectorXd weights,
                                           std::vector<Eigen::VectorXd> means,
                                           std::vector<Covariance> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances)) {
  size_t k = static_cast<size_t>(weights_.size());
  if (k == 0 || means_.size() != k || covariances_.size() != k)
    throw ConfigError("gmm: weights/means/covariances size mismatch");
  if ((weights_.array() <= 0.0).any()) throw ConfigError("gmm: weights must be positive");
  if (std::abs(weights_.sum() - 1.0) > 1e-12) throw ConfigError("gmm: weights must sum to 1");
  dim_ = static_cast<int>(means_[0].size());
  for (size_t i = 0; i < k; ++i) {
    if (means_[i].size() != dim_ || covariances_[i].dim() != dim_)
      throw ConfigError("gmm: component dimension mismatch");
  }
}

void GaussianMixturePrior::check_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("gmm: input dimension mismatch");
}

Eigen::VectorXd GaussianMixturePrior::component_log_terms(const Eigen::VectorXd& x, double a,
                                                          double sigma,
                                                          std::vector<Covariance>* noised_out) const {
  int k = n_components();
  Eigen::VectorXd terms(k);
  for (int i = 0; i < k; ++i) {
    Covariance noised = covariances_[static_cast<size_t>(i)].scale_add_identity(a * a, sigma * sigma);
    terms[i] = std::log(weights_[i]) + gaussian_log_pdf(x, a * means_[static_cast<size_t>(i)], noised);
    if (noised_out) noised_out->push_back(std::move(noised));
  }
  return terms;
}

double GaussianMixturePrior::log_density(const Eigen::VectorXd& x) const {
  check_dim(x);
  return log_sum_exp(component_log_terms(x, 1.0, 0.0, nullptr));
}

Eigen::VectorXd GaussianMixturePrior::clean_score(const Eigen::VectorXd& x) const {
  check_dim(x);
  Eigen::VectorXd terms = component_log_terms(x, 1.0, 0.0, nullptr);
  double lse = log_sum_exp(terms);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < n_components(); ++i) {
    double resp = std::exp(terms[i] - lse);
    score -= resp * covariances_[static_cast<size_t>(i)].solve(x - means_[static_cast<size_t>(i)]);
  }
  return score;
}

double GaussianMixturePrior::noised_log_density(const Eigen::VectorXd& x, double t,
                                                const NoiseSchedule& s) const {
  check_dim(x);
  ScheduleValues v = s.eval(t);
  return log_sum_exp(component_log_terms(x, v.a, v.sigma, nullptr));
}

Eigen::VectorXd GaussianMixturePrior::noised_score(const Eigen::VectorXd& x, double t,
                                                   const NoiseSchedule& s) const {
  check_dim(x);
  ScheduleValues v = s.eval(t);
  std::vector<Covariance> noised;
  noised.reserve(static_cast<size_t>(n_components()));
  Eigen::VectorXd terms = component_log_terms(x, v.a, v.sigma, &noised);
  double lse = log_sum_exp(terms);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < n_components(); ++i) {
    double resp = std::exp(terms[i] - lse);
    score -= resp * noised[static_cast<size_t>(i)].solve(x - v.a * means_[static_cast<size_t>(i)]);
  }
  return score;
}

Eigen::VectorXd GaussianMixturePrior::tweedie_mean(const Eigen::VectorXd& x_t, double t,
                                                   const NoiseSchedule& s) const {
  ScheduleValues v = s.eval(t);
  if (v.sigma == 0.0) return x_t / v.a;
  return (x_t + v.sigma * v.sigma * noised_score(x_t, t, s)) / v.a;
}

Eigen::VectorXd GaussianMixturePrior::sample(Rng& rng) const {
  int k = rng.categorical(weights_);
  return means_[static_cast<size_t>(k)] + covariances_[static_cast<size_t>(k)].sample(rng);
}

Eigen::VectorXd GaussianMixturePrior::sample_conditional_x0(const Eigen::VectorXd& x_t, double t,
                                                            const NoiseSchedule& s,
                                                            Rng& rng) const {
  check_dim(x_t);
  ScheduleValues v = s.eval(t);
  if (v.sigma == 0.0) return x_t / v.a;
  Eigen::VectorXd terms = component_log_terms(x_t, v.a, v.sigma, nullptr);
  double lse = log_sum_exp(terms);
  Eigen::VectorXd resp = (terms.array() - lse).exp();
  int k = rng.categorical(resp);
  const Covariance& prior_cov = covariances_[static_cast<size_t>(k)];
  double ratio = v.a * v.a / (v.sigma * v.sigma);
  Covariance cond = prior_cov.precision_plus_identity_inverse(ratio);
  Eigen::VectorXd info = prior_cov.solve(means_[static_cast<size_t>(k)]) +
                         (v.a / (v.sigma * v.sigma)) * x_t;
  return cond.apply(info) + cond.sample(rng);
}

Eigen::VectorXd GaussianMixturePrior::pf_ode_velocity(const Eigen::VectorXd& x_t, double t,
                                                      const NoiseSchedule& s) const {
  ScheduleValues v = s.eval(t);
  double c = s.coefficient_c(t);
  return (v.a_prime / v.a) * x_t - c * noised_score(x_t, t, s);
}

Eigen::VectorXd GaussianMixturePrior::mixture_mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < n_components(); ++i) m += weights_[i] * means_[static_cast<size_t>(i)];
  return m;
}

Covariance GaussianMixturePrior::mixture_covariance(Covariance::Kind representation) const {
  Eigen::VectorXd mbar = mixture_mean();
  if (representation == Covariance::Kind::Full) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int i = 0; i < n_components(); ++i) {
      const Eigen::VectorXd& mu = means_[static_cast<size_t>(i)];
      m += weights_[i] * (covariances_[static_cast<size_t>(i)].dense() + mu * mu.transpose());
    }
    m -= mbar * mbar.transpose();
    return Covariance::full(std::move(m));
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < n_components(); ++i) {
    const Eigen::VectorXd& mu = means_[static_cast<size_t>(i)];
    diag += weights_[i] *
            (covariances_[static_cast<size_t>(i)].diagonal_vector() + mu.cwiseProduct(mu));
  }
  diag -= mbar.cwiseProduct(mbar);
  if (representation == Covariance::Kind::Diagonal) return Covariance::diagonal(std::move(diag));
  return Covariance::isotropic(dim_, diag.mean());
}

double GaussianMixturePrior::direction_variance(const Eigen::VectorXd& u) const {
  check_dim(u);
  Eigen::VectorXd mbar = mixture_mean();
  double v = 0.0;
  for (int i = 0; i < n_components(); ++i) {
    const Eigen::VectorXd& mu = means_[static_cast<size_t>(i)];
    double offset = u.dot(mu - mbar);
    v += weights_[i] * (u.dot(covariances_[static_cast<size_t>(i)].apply(u)) + offset * offset);
  }
  return v;
}

EmpiricalGaussian::EmpiricalGaussian(Eigen::VectorXd mu0, Covariance sigma0, double jitter)
    : mu0_(std::move(mu0)),
      sigma0_(std::move(sigma0)),
      jitter_(jitter),
      effective_(jitter > 0.0 ? sigma0_.add_jitter(jitter) : sigma0_) {
  if (mu0_.size() != sigma0_.dim()) throw ConfigError("empirical gaussian: dimension mismatch");
  if (jitter < 0.0) throw ConfigError("empirical gaussian: negative jitter");
}

EmpiricalGaussian EmpiricalGaussian::from_mixture(const GaussianMixturePrior& prior,
                                                  Covariance::Kind representation, double jitter) {
  return EmpiricalGaussian(prior.mixture_mean(), prior.mixture_covariance(representation), jitter);
}

EmpiricalGaussian EmpiricalGaussian::from_samples(const Eigen::MatrixXd& rows, double jitter) {
  if (rows.rows() < 2) throw ConfigError("empirical gaussian: need at least two samples");
  Eigen::VectorXd mu = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  cov.diagonal().array() += jitter;
  return EmpiricalGaussian(std::move(mu), Covariance::full(std::move(cov)), 0.0);
}

Covariance EmpiricalGaussian::posterior_covariance(double t, const NoiseSchedule& s) const {
  ScheduleValues v = s.eval(t);
  if (v.sigma == 0.0) return Covariance::isotropic(dim(), 0.0);  // exact zero-noise limit
  double ratio = v.a * v.a / (v.sigma * v.sigma);
  return effective_.precision_plus_identity_inverse(ratio);
}

Covariance heuristic_covariance(int dim, double t, const NoiseSchedule& s) {
  double sigma = s.sigma(t);
  return Covariance::isotropic(dim, sigma * sigma);
}

double analytic_evidence_linear(const GaussianMixturePrior& prior, const Eigen::MatrixXd& A,
                                double sigma_y, const Eigen::VectorXd& y) {
  if (A.cols() != prior.dim()) throw std::invalid_argument("evidence: A column mismatch");
  if (y.size() != A.rows()) throw std::invalid_argument("evidence: measurement dimension mismatch");
  if (!(sigma_y > 0.0)) throw std::invalid_argument("evidence: sigma_y must be positive");

  const int m = static_cast<int>(A.rows());
  Eigen::VectorXd terms(prior.n_components());
  for (int k = 0; k < prior.n_components(); ++k) {
    const Covariance& cov = prior.covariance(k);
    Eigen::MatrixXd innovation;
    switch (cov.kind()) {
      case Covariance::Kind::Isotropic:
        innovation = cov.diagonal_vector()[0] * (A * A.transpose());
        break;
      case Covariance::Kind::Diagonal: {
        Eigen::MatrixXd scaled = A * cov.diagonal_vector().cwiseSqrt().asDiagonal();
        innovation = scaled * scaled.transpose();
        break;
      }
      case Covariance::Kind::Full:
        innovation = A * cov.dense() * A.transpose();
        break;
    }
    innovation.diagonal().array() += sigma_y * sigma_y;
    Eigen::LLT<Eigen::MatrixXd> llt(innovation);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("evidence: innovation covariance factorization failed");
    Eigen::VectorXd r = y - A * prior.mean(k);
    double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double quad = r.dot(llt.solve(r));
    terms[k] = std::log(prior.weights()[k]) - 0.5 * (m * kLog2Pi + log_det + quad);
  }
  return log_sum_exp(terms);
}

}  // namespace dime
