#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dime/rng.hpp"

namespace dime {

// Symmetric positive-definite matrix in one of three storage forms.
// Isotropic and diagonal forms keep every operation O(d) so the
// high-dimensional experiments never touch a dense factorization;
// the full form carries a Cholesky factor computed at construction.
//
// A zero isotropic covariance is allowed as a documented degenerate
// limit (it can be sampled from and applied, but not inverted).
class Covariance {
 public:
  enum class Kind { Isotropic, Diagonal, Full };

  static Covariance isotropic(int dim, double variance);
  static Covariance diagonal(Eigen::VectorXd variances);
  static Covariance full(Eigen::MatrixXd matrix);  // throws if not SPD

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_zero() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;  // Σ v
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;  // Σ⁻¹ v
  double quad_form_inv(const Eigen::VectorXd& v) const;   // vᵀ Σ⁻¹ v
  double log_det() const;
  double trace() const;
  double max_eigenvalue() const;

  // Draw from N(0, Σ).
  Eigen::VectorXd sample(Rng& rng) const;

  Covariance scale_add_identity(double s, double v) const;  // sΣ + vI
  Covariance add_jitter(double j) const { return scale_add_identity(1.0, j); }

  // [Σ⁻¹ + r I]⁻¹ for r ≥ 0.
  Covariance precision_plus_identity_inverse(double r) const;

  Eigen::MatrixXd dense() const;
  Eigen::VectorXd diagonal_vector() const;

 private:
  Covariance() = default;

  Kind kind_ = Kind::Isotropic;
  int dim_ = 0;
  double iso_variance_ = 0.0;
  Eigen::VectorXd diag_;
  Eigen::MatrixXd full_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace dime
