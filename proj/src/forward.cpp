#include "dime/forward.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dime/errors.hpp"

namespace dime {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

void ForwardModel::check_dims(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw std::invalid_argument(kind() + ": state dimension mismatch");
  if (y.size() != output_dim())
    throw std::invalid_argument(kind() + ": measurement dimension mismatch");
}

double ForwardModel::log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  check_dims(y, x);
  double s2 = sigma_y() * sigma_y();
  double m = static_cast<double>(output_dim());
  double sq = (y - apply(x)).squaredNorm();
  return -sq / (2.0 * s2) - 0.5 * m * std::log(2.0 * std::numbers::pi * s2);
}

double ForwardModel::reduced_chi_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  check_dims(y, x);
  double sq = (y - apply(x)).squaredNorm();
  return sq / (static_cast<double>(output_dim()) * sigma_y() * sigma_y());
}

std::pair<Eigen::VectorXd, double> ForwardModel::likelihood_grad_chi2(
    const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  return {likelihood_grad(y, x), reduced_chi_squared(y, x)};
}

Measurement ForwardModel::simulate(const Eigen::VectorXd& x, Rng& rng) const {
  if (x.size() != input_dim()) throw std::invalid_argument(kind() + ": state dimension mismatch");
  Measurement meas;
  meas.y = apply(x) + sigma_y() * rng.normal_vector(output_dim());
  meas.meta = {kind(), output_dim(), input_dim(), sigma_y(), 0};
  meas.x_star = x;
  return meas;
}

LinearGaussianModel::LinearGaussianModel(Eigen::MatrixXd A, double sigma_y)
    : A_(std::move(A)), sigma_y_(sigma_y) {
  if (A_.rows() < 1 || A_.cols() < 1) throw ConfigError("linear model: empty matrix");
  if (!(sigma_y_ > 0.0)) throw ConfigError("linear model: sigma_y must be positive");
}

LinearGaussianModel LinearGaussianModel::random(int m, int n, double sigma_y, Rng& rng) {
  Eigen::MatrixXd A(m, n);
  double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = scale * rng.normal();
  return LinearGaussianModel(std::move(A), sigma_y);
}

Eigen::VectorXd LinearGaussianModel::apply(const Eigen::VectorXd& x) const { return A_ * x; }

Eigen::VectorXd LinearGaussianModel::likelihood_grad(const Eigen::VectorXd& y,
                                                     const Eigen::VectorXd& x) const {
  check_dims(y, x);
  return A_.transpose() * (y - A_ * x) / (sigma_y_ * sigma_y_);
}

std::pair<Eigen::VectorXd, double> LinearGaussianModel::likelihood_grad_chi2(
    const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  check_dims(y, x);
  Eigen::VectorXd r = y - A_ * x;
  double s2 = sigma_y_ * sigma_y_;
  double chi2 = r.squaredNorm() / (static_cast<double>(output_dim()) * s2);
  return {A_.transpose() * r / s2, chi2};
}

MagnitudeModel::MagnitudeModel(Eigen::MatrixXd B_real, Eigen::MatrixXd B_imag, double sigma_y,
                               std::string kind_name)
    : B_real_(std::move(B_real)), B_imag_(std::move(B_imag)), sigma_y_(sigma_y),
      kind_(std::move(kind_name)) {
  if (B_real_.rows() != B_imag_.rows() || B_real_.cols() != B_imag_.cols())
    throw ConfigError(kind_ + ": real/imaginary shape mismatch");
  if (!(sigma_y_ > 0.0)) throw ConfigError(kind_ + ": sigma_y must be positive");
}

Eigen::VectorXd MagnitudeModel::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd zr = B_real_ * x;
  Eigen::VectorXd zi = B_imag_ * x;
  return (zr.array().square() + zi.array().square()).sqrt();
}

Eigen::VectorXd MagnitudeModel::grad_impl(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                                          double* chi2) const {
  check_dims(y, x);
  Eigen::VectorXd zr = B_real_ * x;
  Eigen::VectorXd zi = B_imag_ * x;
  Eigen::VectorXd mag = (zr.array().square() + zi.array().square()).sqrt();
  Eigen::VectorXd r = y - mag;
  double s2 = sigma_y_ * sigma_y_;
  if (chi2) *chi2 = r.squaredNorm() / (static_cast<double>(output_dim()) * s2);
  // d|z_i|/dx = (Re z_i · Re B_i + Im z_i · Im B_i) / |z_i|; zero subgradient
  // below the magnitude floor.
  Eigen::VectorXd wr(mag.size()), wi(mag.size());
  for (int i = 0; i < mag.size(); ++i) {
    if (mag[i] < magnitude_floor) {
      wr[i] = 0.0;
      wi[i] = 0.0;
    } else {
      wr[i] = r[i] * zr[i] / mag[i];
      wi[i] = r[i] * zi[i] / mag[i];
    }
  }
  return (B_real_.transpose() * wr + B_imag_.transpose() * wi) / s2;
}

Eigen::VectorXd MagnitudeModel::likelihood_grad(const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& x) const {
  return grad_impl(y, x, nullptr);
}

std::pair<Eigen::VectorXd, double> MagnitudeModel::likelihood_grad_chi2(
    const Eigen::VectorXd& y, const Eigen::VectorXd& x) const {
  double chi2 = 0.0;
  Eigen::VectorXd g = grad_impl(y, x, &chi2);
  return {std::move(g), chi2};
}

namespace {
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gaussian_complex_matrix(int m, int n, Rng& rng) {
  Eigen::MatrixXd re(m, n), im(m, n);
  double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(m));  // entry variance 1/m
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      re(i, j) = scale * rng.normal();
      im(i, j) = scale * rng.normal();
    }
  return {std::move(re), std::move(im)};
}

// Unitary DFT of the row-major flattened grid.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dft_matrix(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 2)
    throw ConfigError("fourier model: grid shape must be 1-D or 2-D");
  for (int s : shape)
    if (s < 1) throw ConfigError("fourier model: grid extents must be positive");
  int h = shape[0];
  int w = shape.size() == 2 ? shape[1] : 1;
  int n = h * w;
  double norm = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd re(n, n), im(n, n);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      int row = u * w + v;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          int col = i * w + j;
          double phase = -2.0 * std::numbers::pi *
                         (static_cast<double>(u) * i / h + static_cast<double>(v) * j / w);
          re(row, col) = norm * std::cos(phase);
          im(row, col) = norm * std::sin(phase);
        }
    }
  return {std::move(re), std::move(im)};
}
}  // namespace

GaussianPhaseRetrievalModel::GaussianPhaseRetrievalModel(int m, int n, double sigma_y, Rng& rng)
    : MagnitudeModel(gaussian_complex_matrix(m, n, rng), sigma_y, "gaussian_phase_retrieval") {}

FourierPhaseRetrievalModel::FourierPhaseRetrievalModel(std::vector<int> grid_shape, double sigma_y)
    : MagnitudeModel(dft_matrix(grid_shape), sigma_y, "fourier_phase_retrieval"),
      shape_(std::move(grid_shape)) {}

void save_measurement(const std::string& path, const Measurement& meas) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("measurement: cannot open " + path + " for writing");
  out.precision(17);
  out << "# dime-measurement v1\n";
  out << "# model=" << meas.meta.model_kind << " m=" << meas.meta.m << " n=" << meas.meta.n
      << " sigma_y=" << meas.meta.sigma_y << " seed=" << meas.meta.seed << "\n";
  for (int i = 0; i < meas.y.size(); ++i) out << meas.y[i] << "\n";
  if (meas.x_star) {
    out << "# x_star\n";
    for (int i = 0; i < meas.x_star->size(); ++i) out << (*meas.x_star)[i] << "\n";
  }
}

Measurement load_measurement(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("measurement: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# dime-measurement", 0) != 0)
    throw std::runtime_error("measurement: bad header in " + path);
  if (!std::getline(in, line) || line.rfind("# model=", 0) != 0)
    throw std::runtime_error("measurement: missing model line in " + path);

  Measurement meas;
  {
    std::istringstream ss(line.substr(2));
    std::string token;
    while (ss >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      std::string key = token.substr(0, eq), value = token.substr(eq + 1);
      if (key == "model") meas.meta.model_kind = value;
      else if (key == "m") meas.meta.m = std::stoi(value);
      else if (key == "n") meas.meta.n = std::stoi(value);
      else if (key == "sigma_y") meas.meta.sigma_y = std::stod(value);
      else if (key == "seed") meas.meta.seed = std::stoull(value);
    }
  }
  std::vector<double> y_vals, x_vals;
  bool in_x = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# x_star", 0) == 0) {
      in_x = true;
      continue;
    }
    (in_x ? x_vals : y_vals).push_back(std::stod(line));
  }
  meas.y = Eigen::Map<Eigen::VectorXd>(y_vals.data(), static_cast<long>(y_vals.size()));
  if (!x_vals.empty())
    meas.x_star = Eigen::Map<Eigen::VectorXd>(x_vals.data(), static_cast<long>(x_vals.size()));
  return meas;
}

}  // namespace dime
