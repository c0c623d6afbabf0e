#include "lmcl/mcl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lmcl {

LossVariant LossVariant::parse(std::string_view text, double rwta_eps) {
  LossVariant v;
  v.epsilon = rwta_eps;
  if (text == "wta" || text == "vanilla_wta") {
    v.kind = LossKind::vanilla_wta;
  } else if (text == "rwta" || text == "relaxed_wta") {
    v.kind = LossKind::relaxed_wta;
  } else if (text == "ewta" || text == "evolving_wta") {
    v.kind = LossKind::evolving_wta;
  } else if (text == "mcl" || text == "mixture_wta") {
    v.kind = LossKind::mixture_wta;
  } else {
    throw std::invalid_argument("unknown loss variant '" + std::string(text) + "' (expected wta, rwta, ewta or mcl)");
  }
  v.validate();
  return v;
}

std::string_view LossVariant::cli_name() const {
  switch (kind) {
    case LossKind::vanilla_wta: return "wta";
    case LossKind::relaxed_wta: return "rwta";
    case LossKind::evolving_wta: return "ewta";
    case LossKind::mixture_wta: return "mcl";
  }
  return "?";
}

std::string_view LossVariant::long_name() const {
  switch (kind) {
    case LossKind::vanilla_wta: return "vanilla_wta";
    case LossKind::relaxed_wta: return "relaxed_wta";
    case LossKind::evolving_wta: return "evolving_wta";
    case LossKind::mixture_wta: return "mixture_wta";
  }
  return "?";
}

void LossVariant::validate() const {
  if (kind == LossKind::relaxed_wta && !(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("relaxed_wta epsilon must lie in (0, 1)");
  }
}

std::size_t EvolvingSchedule::stages() const {
  std::size_t s = 0;
  while ((std::size_t{1} << s) < m) ++s;
  return s;
}

std::size_t EvolvingSchedule::k_at(std::size_t step) const {
  const std::size_t n = stages();
  if (n == 0) return 1;
  const std::size_t stage = std::min(n - 1, step * n / std::max<std::size_t>(total_steps, 1));
  if (stage + 1 == n) return 1;
  return std::max<std::size_t>(1, m >> stage);
}

PredictorBank::PredictorBank(std::size_t m, std::size_t categories, std::size_t in, std::size_t hidden,
                             std::size_t out, std::string prefix)
    : m_(m), categories_(categories), out_(out) {
  if (m == 0) throw std::invalid_argument("predictor bank needs M >= 1");
  if (categories == 0 || in == 0 || hidden == 0 || out == 0) throw std::invalid_argument("predictor bank: zero width");
  nets_.reserve(m * categories);
  for (std::size_t c = 0; c < categories; ++c)
    for (std::size_t i = 0; i < m; ++i)
      nets_.push_back({prefix + ".c" + std::to_string(c) + ".h" + std::to_string(i), in, hidden, out});
}

void PredictorBank::init(ParamStore& store, Rng& rng) const {
  for (const auto& n : nets_) n.init(store, rng);
}

std::vector<Var> PredictorBank::predict(Tape& tape, const ParamStore& store, Var x, CategoryId category) const {
  if (category >= categories_) throw std::out_of_range("predictor bank: unknown category " + std::to_string(category));
  std::vector<Var> out;
  out.reserve(m_);
  for (std::size_t i = 0; i < m_; ++i) out.push_back(sigmoid(net(category, i).forward(tape, store, x)));
  return out;
}

MixtureLayer::MixtureLayer(std::size_t m, std::size_t categories, std::size_t in, std::size_t hidden,
                           std::string prefix)
    : categories_(categories), net_{std::move(prefix), in + categories, hidden, m} {
  if (m == 0) throw std::invalid_argument("mixture layer needs M >= 1");
}

void MixtureLayer::init(ParamStore& store, Rng& rng) const {
  net_.init(store, rng);
  // Zero output weights start phi exactly uniform; the hidden layer keeps its
  // random init so the output weights receive gradient from the first step.
  store.value(net_.prefix + ".w2").fill(0.0);
}

Var MixtureLayer::log_phi(Tape& tape, const ParamStore& store, Var x, std::span<const CategoryId> categories) const {
  const std::size_t B = x.shape()[0];
  if (categories.size() != B) throw ShapeError("mixture_layer", x.shape(), Shape{categories.size()});
  Tensor onehot({B, categories_});
  for (std::size_t b = 0; b < B; ++b) {
    if (categories[b] >= categories_) throw std::out_of_range("mixture layer: unknown category");
    onehot.at(b, categories[b]) = 1.0;
  }
  return log_softmax(net_.forward(tape, store, concat(x, tape.constant(std::move(onehot)), 1)), 1);
}

Var MixtureLayer::phi(Tape& tape, const ParamStore& store, Var x, std::span<const CategoryId> categories) const {
  return exp(log_phi(tape, store, x, categories));
}

Var l1_matrix(std::span<const Var> hypotheses, Var y) {
  if (hypotheses.empty()) throw std::invalid_argument("wta: no hypotheses (M = 0)");
  std::vector<Var> cols;
  cols.reserve(hypotheses.size());
  const std::size_t B = y.shape()[0];
  for (const auto& h : hypotheses) cols.push_back(reshape(sum(abs(sub(h, y)), 1), {B, 1}));
  return concat(cols, 1);
}

std::size_t select_winner(std::span<const double> l1) {
  if (l1.empty()) throw std::invalid_argument("wta: no hypotheses (M = 0)");
  std::size_t best = 0;
  for (std::size_t i = 1; i < l1.size(); ++i)
    if (l1[i] < l1[best]) best = i;
  return best;
}

Tensor wta_weights(const Tensor& l1, const LossVariant& variant, std::size_t k) {
  const std::size_t B = l1.dim(0);
  const std::size_t M = l1.dim(1);
  if (M == 0) throw std::invalid_argument("wta: no hypotheses (M = 0)");
  Tensor w({B, M});
  std::vector<std::size_t> order(M);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = l1.data().subspan(b * M, M);
    const std::size_t win = select_winner(row);
    switch (variant.kind) {
      case LossKind::vanilla_wta:
      case LossKind::mixture_wta:
        w.at(b, win) = 1.0;
        break;
      case LossKind::relaxed_wta:
        for (std::size_t i = 0; i < M; ++i) w.at(b, i) = i == win ? 1.0 : variant.epsilon;
        break;
      case LossKind::evolving_wta: {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return row[a] < row[c]; });
        for (std::size_t i = 0; i < std::min(std::max<std::size_t>(k, 1), M); ++i) w.at(b, order[i]) = 1.0;
        break;
      }
    }
  }
  return w;
}

Var wta_loss(Var l1, const LossVariant& variant, std::optional<Var> log_phi, std::size_t k,
             std::vector<std::size_t>* winners) {
  const Tensor& d = l1.value();
  if (d.rank() != 2) throw ShapeError("wta_loss", d.shape());
  const std::size_t B = d.dim(0);
  const std::size_t M = d.dim(1);
  if (M == 0) throw std::invalid_argument("wta: no hypotheses (M = 0)");
  if (winners) {
    for (std::size_t b = 0; b < B; ++b) winners->push_back(select_winner(d.data().subspan(b * M, M)));
  }
  Tape& tape = l1.tape();
  Var weighted = mul(l1, tape.constant(wta_weights(d, variant, k)));
  if (variant.kind == LossKind::mixture_wta) {
    if (!log_phi) throw std::invalid_argument("mixture_wta needs log phi");
    if (log_phi->shape() != d.shape()) throw ShapeError("wta_loss", d.shape(), log_phi->shape());
    weighted = mul(weighted, scale(clamp_min(*log_phi, std::log(kPhiFloor)), -1.0));
  }
  return scale(sum(weighted), 1.0 / static_cast<double>(B));
}

PairingStats pair_report(const Tensor& l1, const Tensor& phi, double tau) {
  if (l1.rank() != 2 || l1.shape() != phi.shape()) throw ShapeError("pair_report", l1.shape(), phi.shape());
  const std::size_t N = l1.dim(0);
  const std::size_t M = l1.dim(1);
  PairingStats s;
  s.paired.assign(M, false);
  s.wins.assign(M, 0);
  s.mean_phi.assign(M, 0.0);
  s.examples = N;
  for (std::size_t n = 0; n < N; ++n) {
    const auto row = l1.data().subspan(n * M, M);
    const std::size_t w = select_winner(row);
    ++s.wins[w];
    if (row[w] < tau) s.paired[w] = true;
    for (std::size_t i = 0; i < M; ++i) s.mean_phi[i] += phi.at(n, i);
  }
  s.paired_count = static_cast<std::size_t>(std::count(s.paired.begin(), s.paired.end(), true));
  if (N > 0) {
    for (auto& v : s.mean_phi) v /= static_cast<double>(N);
    for (std::size_t i = 0; i < M; ++i)
      if (!s.paired[i]) s.unpaired_mass += s.mean_phi[i];
  }
  return s;
}

std::size_t sample_predictor(std::span<const double> phi, const std::vector<bool>& paired, Rng& rng,
                             bool renormalize) {
  if (phi.empty()) throw std::invalid_argument("sample_predictor: empty phi");
  if (renormalize) {
    if (paired.size() != phi.size()) throw std::invalid_argument("sample_predictor: paired mask size mismatch");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < paired.size(); ++i)
      if (paired[i]) idx.push_back(i);
    if (idx.empty()) {
      throw std::invalid_argument("sample_predictor: no paired predictors; sample from raw phi instead");
    }
    return idx[std::uniform_int_distribution<std::size_t>(0, idx.size() - 1)(rng)];
  }
  std::discrete_distribution<std::size_t> dist(phi.begin(), phi.end());
  return dist(rng);
}

}  // namespace lmcl
