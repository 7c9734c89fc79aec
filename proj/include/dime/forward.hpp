#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dime/rng.hpp"

namespace dime {

struct MeasurementMeta {
  std::string model_kind;
  int m = 0;
  int n = 0;
  double sigma_y = 0.0;
  uint64_t seed = 0;
};

struct Measurement {
  Eigen::VectorXd y;
  MeasurementMeta meta;
  std::optional<Eigen::VectorXd> x_star;  // generating ground truth, when known
};

void save_measurement(const std::string& path, const Measurement& meas);
Measurement load_measurement(const std::string& path);

// Observation model y = f(x) + ε, ε ~ N(0, σ_y² I). The log-likelihood always
// includes its normalization constant; evidence values depend on it.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual double sigma_y() const = 0;
  virtual std::string kind() const = 0;

  // The deterministic map f(x).
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd likelihood_grad(const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& x) const = 0;
  // Gradient plus the reduced χ² of the same point, sharing one forward pass.
  virtual std::pair<Eigen::VectorXd, double> likelihood_grad_chi2(const Eigen::VectorXd& y,
                                                                  const Eigen::VectorXd& x) const;

  double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const;
  // ‖y − f(x)‖² / (m σ_y²); ≈ 1 for a statistically consistent fit.
  double reduced_chi_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const;

  Measurement simulate(const Eigen::VectorXd& x, Rng& rng) const;

 protected:
  void check_dims(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const;
};

class LinearGaussianModel : public ForwardModel {
 public:
  LinearGaussianModel(Eigen::MatrixXd A, double sigma_y);
  // Entries i.i.d. N(0, 1/m), the §-standard random sensing matrix.
  static LinearGaussianModel random(int m, int n, double sigma_y, Rng& rng);

  int input_dim() const override { return static_cast<int>(A_.cols()); }
  int output_dim() const override { return static_cast<int>(A_.rows()); }
  double sigma_y() const override { return sigma_y_; }
  std::string kind() const override { return "linear_gaussian"; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd likelihood_grad(const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& x) const override;
  std::pair<Eigen::VectorXd, double> likelihood_grad_chi2(const Eigen::VectorXd& y,
                                                          const Eigen::VectorXd& x) const override;

  const Eigen::MatrixXd& matrix() const { return A_; }

 private:
  Eigen::MatrixXd A_;
  double sigma_y_;
};

// Shared implementation for y = |B x| + ε with complex B. The magnitude is
// non-differentiable at |(Bx)_i| = 0; coordinates below `magnitude_floor`
// contribute a zero subgradient (a measure-zero event under continuous noise).
class MagnitudeModel : public ForwardModel {
 public:
  MagnitudeModel(Eigen::MatrixXd B_real, Eigen::MatrixXd B_imag, double sigma_y,
                 std::string kind_name);
  MagnitudeModel(std::pair<Eigen::MatrixXd, Eigen::MatrixXd> parts, double sigma_y,
                 std::string kind_name)
      : MagnitudeModel(std::move(parts.first), std::move(parts.second), sigma_y,
                       std::move(kind_name)) {}

  int input_dim() const override { return static_cast<int>(B_real_.cols()); }
  int output_dim() const override { return static_cast<int>(B_real_.rows()); }
  double sigma_y() const override { return sigma_y_; }
  std::string kind() const override { return kind_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd likelihood_grad(const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& x) const override;
  std::pair<Eigen::VectorXd, double> likelihood_grad_chi2(const Eigen::VectorXd& y,
                                                          const Eigen::VectorXd& x) const override;

  static constexpr double magnitude_floor = 1e-8;

 private:
  Eigen::VectorXd grad_impl(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                            double* chi2) const;

  Eigen::MatrixXd B_real_, B_imag_;
  double sigma_y_;
  std::string kind_;
};

// y = |A x| + ε with A ∈ C^{m×n}, entries of variance 1/m (real and imaginary
// parts each N(0, 1/(2m))).
class GaussianPhaseRetrievalModel : public MagnitudeModel {
 public:
  GaussianPhaseRetrievalModel(int m, int n, double sigma_y, Rng& rng);
};

// y = |F x| + ε over a 1-D or 2-D grid; F is the unitary discrete Fourier
// transform of the flattened signal. Circular shifts and flips of x leave
// |F x| invariant.
class FourierPhaseRetrievalModel : public MagnitudeModel {
 public:
  FourierPhaseRetrievalModel(std::vector<int> grid_shape, double sigma_y);
  const std::vector<int>& grid_shape() const { return shape_; }

 private:
  std::vector<int> shape_;
};

}  // namespace dime
