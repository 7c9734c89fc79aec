#include "dime/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dime/math_util.hpp"

namespace dime {

namespace {

double grid_pass(const GaussianMixturePrior& prior, const ForwardModel& model,
                 const Eigen::VectorXd& y, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                 int points) {
  const int d = prior.dim();
  Eigen::VectorXd h = (hi - lo) / points;
  double log_cell = h.array().log().sum();

  std::vector<double> terms;
  terms.reserve(static_cast<size_t>(std::pow(points, d)));
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(d);
  Eigen::VectorXd x(d);
  while (true) {
    for (int k = 0; k < d; ++k) x[k] = lo[k] + (idx[k] + 0.5) * h[k];
    terms.push_back(prior.log_density(x) + model.log_likelihood(y, x));
    int k = 0;
    for (; k < d; ++k) {
      if (++idx[k] < points) break;
      idx[k] = 0;
    }
    if (k == d) break;
  }
  return log_sum_exp(terms) + log_cell;
}

}  // namespace

double quadrature_evidence_oracle(const GaussianMixturePrior& prior, const ForwardModel& model,
                                  const Eigen::VectorXd& y, const QuadratureSpec& spec) {
  const int d = prior.dim();
  if (d > 3) throw std::invalid_argument("quadrature oracle: unsupported above dimension 3");
  if (model.input_dim() != d) throw std::invalid_argument("quadrature oracle: dimension mismatch");

  // bounding box covering every component to half_width standard deviations
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (int k = 0; k < prior.n_components(); ++k) {
    Eigen::VectorXd sd = prior.covariance(k).diagonal_vector().cwiseSqrt();
    lo = lo.cwiseMin(prior.mean(k) - spec.half_width * sd);
    hi = hi.cwiseMax(prior.mean(k) + spec.half_width * sd);
  }

  int points = spec.points_per_axis;
  double prev = grid_pass(prior, model, y, lo, hi, points);
  for (int r = 0; r < spec.max_refinements; ++r) {
    points *= 2;
    double next = grid_pass(prior, model, y, lo, hi, points);
    if (std::abs(next - prev) < spec.convergence_tol) return next;
    prev = next;
  }
  return prev;
}

}  // namespace dime
