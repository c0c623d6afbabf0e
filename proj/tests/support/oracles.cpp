#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

namespace lmcl::testing {

double brute_force_alignment(std::span<const Layout> layouts) {
  double total = 0.0;
  for (const auto& l : layouts) {
    const auto& o = l.objects;
    double layout_total = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < o.size(); ++j) {
        if (j == i) continue;
        const auto& a = o[i].bbox;
        const auto& b = o[j].bbox;
        const double left = std::abs(a.x - b.x);
        const double centre = std::abs((a.x + a.w / 2) - (b.x + b.w / 2));
        const double right = std::abs((a.x + a.w) - (b.x + b.w));
        best = std::min({best, left, centre, right});
      }
      if (o.size() > 1) layout_total += best;
    }
    total += layout_total;
  }
  return total / static_cast<double>(layouts.size());
}

namespace {

Eigen::MatrixXd to_matrix(const Tensor& t) {
  Eigen::MatrixXd m(t.dim(0), t.dim(1));
  for (std::size_t r = 0; r < t.dim(0); ++r)
    for (std::size_t c = 0; c < t.dim(1); ++c) m(r, c) = t.at(r, c);
  return m;
}

}  // namespace

double fid_oracle(const Tensor& a, const Tensor& b) {
  const Eigen::MatrixXd A = to_matrix(a);
  const Eigen::MatrixXd B = to_matrix(b);
  const Eigen::RowVectorXd mu1 = A.colwise().mean();
  const Eigen::RowVectorXd mu2 = B.colwise().mean();
  const Eigen::MatrixXd da = A.rowwise() - mu1;
  const Eigen::MatrixXd db = B.rowwise() - mu2;
  const Eigen::MatrixXd c1 = da.transpose() * da / static_cast<double>(A.rows() - 1);
  const Eigen::MatrixXd c2 = db.transpose() * db / static_cast<double>(B.rows() - 1);

  Eigen::MatrixXd y = c1 * c2;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(y.rows(), y.cols());
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd yi = y.inverse();
    const Eigen::MatrixXd zi = z.inverse();
    const Eigen::MatrixXd y_next = 0.5 * (y + zi);
    z = 0.5 * (z + yi);
    const double change = (y_next - y).norm();
    y = y_next;
    if (change < 1e-15 * y.norm()) break;
  }
  return (mu1 - mu2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * y.trace();
}

Tensor diagonal_feature_set(const std::vector<double>& mean, const std::vector<double>& var) {
  const std::size_t d = mean.size();
  const std::size_t n = 2 * d;
  Tensor t({n, d});
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t r = 0; r < n; ++r) t.at(r, k) = mean[k];
    // Two rows at mean +- s e_k: squared deviations sum to 2 s^2 = var (n - 1).
    const double s = std::sqrt(var[k] * static_cast<double>(n - 1) / 2.0);
    t.at(2 * k, k) += s;
    t.at(2 * k + 1, k) -= s;
  }
  return t;
}

double diagonal_fid(const std::vector<double>& mu1, const std::vector<double>& var1, const std::vector<double>& mu2,
                    const std::vector<double>& var2) {
  double d = 0.0;
  for (std::size_t k = 0; k < mu1.size(); ++k) {
    d += (mu1[k] - mu2[k]) * (mu1[k] - mu2[k]);
    d += (std::sqrt(var1[k]) - std::sqrt(var2[k])) * (std::sqrt(var1[k]) - std::sqrt(var2[k]));
  }
  return d;
}

Layout random_layout(Rng& rng, std::size_t n, std::size_t vocab) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> c(0, vocab - 1);
  Layout l;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.05 + 0.5 * u(rng);
    const double h = 0.05 + 0.3 * u(rng);
    l.objects.push_back({c(rng), {(1.0 - w) * u(rng), (1.0 - h) * u(rng), w, h}, false});
  }
  assign_stop_flags(l.objects);
  return l;
}

Tensor random_features(Rng& rng, std::size_t n, std::size_t d, double shift) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd mix(d, d);
  for (Eigen::Index r = 0; r < mix.rows(); ++r)
    for (Eigen::Index c = 0; c < mix.cols(); ++c) mix(r, c) = g(rng) * 0.5 + (r == c ? 1.0 : 0.0);
  Tensor t({n, d});
  Eigen::VectorXd z(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : z) v = g(rng);
    const Eigen::VectorXd x = mix * z;
    for (std::size_t c = 0; c < d; ++c) t.at(r, c) = x(static_cast<Eigen::Index>(c)) + shift;
  }
  return t;
}

}  // namespace lmcl::testing
