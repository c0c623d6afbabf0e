#include "lmcl/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lmcl/discriminator.hpp"

namespace lmcl {

namespace {

// Distance from element `pos` of a sorted key list to its nearest neighbour.
double nearest_gap(const std::vector<double>& values, const std::vector<std::size_t>& sorted, std::size_t pos) {
  double best = std::numeric_limits<double>::infinity();
  const double v = values[sorted[pos]];
  if (pos > 0) best = std::min(best, std::abs(v - values[sorted[pos - 1]]));
  if (pos + 1 < sorted.size()) best = std::min(best, std::abs(v - values[sorted[pos + 1]]));
  return best;
}

}  // namespace

double layout_alignment(const Layout& layout) {
  const auto& objs = layout.objects;
  const std::size_t n = objs.size();
  if (n < 2) return 0.0;
  // Left edge, centre, right edge.
  std::array<std::vector<double>, 3> keys;
  for (auto& k : keys) k.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = objs[i].bbox;
    keys[0][i] = b.x;
    keys[1][i] = b.x + b.w / 2.0;
    keys[2][i] = b.x + b.w;
  }
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> sorted(n);
  for (const auto& k : keys) {
    std::iota(sorted.begin(), sorted.end(), 0);
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return k[a] < k[b]; });
    for (std::size_t p = 0; p < n; ++p) best[sorted[p]] = std::min(best[sorted[p]], nearest_gap(k, sorted, p));
  }
  double total = 0.0;
  for (double v : best) total += v;
  return total;
}

double alignment(std::span<const Layout> layouts) {
  if (layouts.empty()) throw std::invalid_argument("alignment: empty corpus");
  double total = 0.0;
  for (const auto& l : layouts) {
    if (l.objects.empty()) throw std::invalid_argument("alignment: layout without objects");
    total += layout_alignment(l);
  }
  return total / static_cast<double>(layouts.size());
}

namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("fid", t.shape());
  if (!t.all_finite()) throw std::invalid_argument("fid: non-finite features");
  const auto n = static_cast<Eigen::Index>(t.dim(0));
  const auto d = static_cast<Eigen::Index>(t.dim(1));
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(t.data().data(), n, d);
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centred = x.rowwise() - m.mean.transpose();
  m.cov = (centred.transpose() * centred) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double fid(const Tensor& a, const Tensor& b, std::vector<std::string>* warnings) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) throw ShapeError("fid", a.shape(), b.shape());
  if (warnings && std::min(a.dim(0), b.dim(0)) < kFidMinSamples) {
    warnings->push_back("fid computed from fewer than " + std::to_string(kFidMinSamples) +
                        " samples per set; the estimate is unstable");
  }
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  const Eigen::MatrixXd s1 = psd_sqrt(ma.cov);
  Eigen::MatrixXd inner = s1 * mb.cov * s1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d2 = (ma.mean - mb.mean).squaredNorm() + ma.cov.trace() + mb.cov.trace() - 2.0 * tr_sqrt;
  return std::max(d2, 0.0);
}

double fake_positive(std::span<const Layout> layouts, const Discriminator& disc) {
  if (layouts.empty()) throw std::invalid_argument("fake_positive: empty corpus");
  const auto labels = disc.classify(layouts);
  const auto fakes = std::count(labels.begin(), labels.end(), kFakeClass);
  return static_cast<double>(fakes) / static_cast<double>(layouts.size());
}

DiversityStats diversity_stats(std::span<const Layout> layouts, const Vocabulary& vocab) {
  DiversityStats s;
  s.layouts = layouts.size();
  std::map<std::string, std::size_t> counts;
  for (const auto& l : layouts) {
    std::string key;
    for (std::size_t i = 0; i < l.objects.size(); ++i) {
      if (i) key += ',';
      key += vocab.name(l.objects[i].category);
    }
    ++counts[key];
  }
  s.distinct = counts.size();
  for (const auto& [k, c] : counts) s.frequencies[k] = static_cast<double>(c) / static_cast<double>(layouts.size());
  return s;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["alignment"] = alignment;
  if (reference_alignment) j["reference_alignment"] = *reference_alignment;
  j["fid"] = fid ? nlohmann::json(*fid) : nlohmann::json(nullptr);
  j["fake_positive"] = fake_positive ? nlohmann::json(*fake_positive) : nlohmann::json(nullptr);
  j["diversity"] = {{"layouts", diversity.layouts}, {"distinct", diversity.distinct}, {"frequencies", diversity.frequencies}};
  j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace lmcl
