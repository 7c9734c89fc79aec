#include "dime/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace dime {

Covariance Covariance::isotropic(int dim, double variance) {
  if (dim < 1) throw std::invalid_argument("covariance: dimension must be >= 1");
  if (variance < 0.0) throw std::invalid_argument("covariance: negative variance");
  Covariance c;
  c.kind_ = Kind::Isotropic;
  c.dim_ = dim;
  c.iso_variance_ = variance;
  return c;
}

Covariance Covariance::diagonal(Eigen::VectorXd variances) {
  if (variances.size() < 1) throw std::invalid_argument("covariance: empty diagonal");
  if ((variances.array() <= 0.0).any())
    throw std::invalid_argument("covariance: diagonal entries must be positive");
  Covariance c;
  c.kind_ = Kind::Diagonal;
  c.dim_ = static_cast<int>(variances.size());
  c.diag_ = std::move(variances);
  return c;
}

Covariance Covariance::full(Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1)
    throw std::invalid_argument("covariance: matrix must be square");
  Covariance c;
  c.kind_ = Kind::Full;
  c.dim_ = static_cast<int>(matrix.rows());
  c.full_ = 0.5 * (matrix + matrix.transpose());  // enforce symmetry
  c.llt_.compute(c.full_);
  if (c.llt_.info() != Eigen::Success)
    throw std::invalid_argument("covariance: matrix is not positive definite");
  return c;
}

bool Covariance::is_zero() const { return kind_ == Kind::Isotropic && iso_variance_ == 0.0; }

Eigen::VectorXd Covariance::apply(const Eigen::VectorXd& v) const {
  switch (kind_) {
    case Kind::Isotropic: return iso_variance_ * v;
    case Kind::Diagonal: return diag_.cwiseProduct(v);
    case Kind::Full: return full_ * v;
  }
  return v;
}

Eigen::VectorXd Covariance::solve(const Eigen::VectorXd& v) const {
  switch (kind_) {
    case Kind::Isotropic:
      if (iso_variance_ <= 0.0) throw std::domain_error("covariance: degenerate solve");
      return v / iso_variance_;
    case Kind::Diagonal: return v.cwiseQuotient(diag_);
    case Kind::Full: return llt_.solve(v);
  }
  return v;
}

double Covariance::quad_form_inv(const Eigen::VectorXd& v) const { return v.dot(solve(v)); }

double Covariance::log_det() const {
  switch (kind_) {
    case Kind::Isotropic:
      if (iso_variance_ <= 0.0) throw std::domain_error("covariance: degenerate log_det");
      return dim_ * std::log(iso_variance_);
    case Kind::Diagonal: return diag_.array().log().sum();
    case Kind::Full: {
      return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    }
  }
  return 0.0;
}

double Covariance::trace() const {
  switch (kind_) {
    case Kind::Isotropic: return dim_ * iso_variance_;
    case Kind::Diagonal: return diag_.sum();
    case Kind::Full: return full_.trace();
  }
  return 0.0;
}

double Covariance::max_eigenvalue() const {
  switch (kind_) {
    case Kind::Isotropic: return iso_variance_;
    case Kind::Diagonal: return diag_.maxCoeff();
    case Kind::Full: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full_, Eigen::EigenvaluesOnly);
      return es.eigenvalues().maxCoeff();
    }
  }
  return 0.0;
}

Eigen::VectorXd Covariance::sample(Rng& rng) const {
  Eigen::VectorXd z = rng.normal_vector(dim_);
  switch (kind_) {
    case Kind::Isotropic: return std::sqrt(iso_variance_) * z;
    case Kind::Diagonal: return diag_.cwiseSqrt().cwiseProduct(z);
    case Kind::Full: return llt_.matrixL() * z;
  }
  return z;
}

Covariance Covariance::scale_add_identity(double s, double v) const {
  switch (kind_) {
    case Kind::Isotropic: return isotropic(dim_, s * iso_variance_ + v);
    case Kind::Diagonal: return diagonal(s * diag_.array() + v);
    case Kind::Full: {
      Eigen::MatrixXd m = s * full_;
      m.diagonal().array() += v;
      return full(std::move(m));
    }
  }
  return *this;
}

Covariance Covariance::precision_plus_identity_inverse(double r) const {
  if (r < 0.0) throw std::invalid_argument("covariance: negative precision shift");
  if (r == 0.0) return *this;
  switch (kind_) {
    case Kind::Isotropic:
      if (iso_variance_ <= 0.0) throw std::domain_error("covariance: degenerate inverse");
      return isotropic(dim_, 1.0 / (1.0 / iso_variance_ + r));
    case Kind::Diagonal: return diagonal((diag_.array().inverse() + r).inverse());
    case Kind::Full: {
      // Woodbury form Σ − Σ (Σ + I/r)⁻¹ Σ avoids forming Σ⁻¹ explicitly.
      Eigen::MatrixXd shifted = full_;
      shifted.diagonal().array() += 1.0 / r;
      Eigen::LLT<Eigen::MatrixXd> llt(shifted);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("covariance: factorization failed in posterior update");
      Eigen::MatrixXd m = full_ - full_ * llt.solve(full_);
      return full(std::move(m));
    }
  }
  return *this;
}

Eigen::MatrixXd Covariance::dense() const {
  switch (kind_) {
    case Kind::Isotropic:
      return iso_variance_ * Eigen::MatrixXd::Identity(dim_, dim_);
    case Kind::Diagonal: return diag_.asDiagonal();
    case Kind::Full: return full_;
  }
  return Eigen::MatrixXd::Identity(dim_, dim_);
}

Eigen::VectorXd Covariance::diagonal_vector() const {
  switch (kind_) {
    case Kind::Isotropic: return Eigen::VectorXd::Constant(dim_, iso_variance_);
    case Kind::Diagonal: return diag_;
    case Kind::Full: return full_.diagonal();
  }
  return Eigen::VectorXd::Zero(dim_);
}

}  // namespace dime
