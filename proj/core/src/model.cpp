#include "lmcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "config_json.hpp"
#include "lmcl/checkpoint.hpp"

namespace lmcl {

namespace {

constexpr const char* kPairedMaskName = "meta.paired_mask";
constexpr const char* kManifestFormat = "layout-mcl-model";

std::filesystem::path sidecar_path(const std::filesystem::path& p) { return std::filesystem::path(p.string() + ".json"); }

}  // namespace

void ModelConfig::validate() const {
  encoder.validate();
  if (m == 0) throw std::invalid_argument("model config: M must be at least 1");
  if (predictor_hidden == 0 || mixture_hidden == 0 || head_hidden == 0) {
    throw std::invalid_argument("model config: hidden widths must be positive");
  }
  if (max_objects == 0) throw std::invalid_argument("model config: max_objects must be positive");
  if (!(pair_tau > 0.0)) throw std::invalid_argument("model config: pair_tau must be positive");
  loss.validate();
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.encoder = EncoderConfig::full();
  c.predictor_hidden = 128;
  c.mixture_hidden = 128;
  c.head_hidden = 128;
  return c;
}

std::vector<TrainingPair> teacher_forced_pairs(std::span<const Layout> layouts) {
  std::vector<TrainingPair> pairs;
  for (const auto& l : layouts) {
    const Prefix all(l.objects);
    for (std::size_t i = 0; i < all.size(); ++i) {
      LayoutObject next = all[i];
      next.stop = i + 1 == all.size();
      pairs.push_back({all.first(i), next});
    }
  }
  return pairs;
}

std::vector<std::vector<bool>> PairingSummary::paired_mask(std::size_t categories, std::size_t m) const {
  std::vector<std::vector<bool>> mask(categories, std::vector<bool>(m, false));
  for (std::size_t c = 0; c < std::min(categories, per_category.size()); ++c) {
    const auto& p = per_category[c].paired;
    for (std::size_t i = 0; i < std::min(m, p.size()); ++i) mask[c][i] = p[i];
  }
  return mask;
}

PairingSummary summarize_pairing(const BatchDiagnostics& diag, std::size_t categories, std::size_t m, double tau) {
  std::vector<std::vector<std::size_t>> rows(categories);
  for (std::size_t i = 0; i < diag.categories.size(); ++i) rows.at(diag.categories[i]).push_back(i);
  PairingSummary s;
  std::size_t total = 0;
  for (std::size_t c = 0; c < categories; ++c) {
    const auto& r = rows[c];
    if (r.empty()) {
      PairingStats empty;
      empty.paired.assign(m, false);
      empty.wins.assign(m, 0);
      empty.mean_phi.assign(m, 0.0);
      s.per_category.push_back(std::move(empty));
      continue;
    }
    Tensor l1({r.size(), m});
    Tensor phi({r.size(), m});
    for (std::size_t k = 0; k < r.size(); ++k) {
      std::copy(diag.l1[r[k]].begin(), diag.l1[r[k]].end(), l1.data().begin() + static_cast<std::ptrdiff_t>(k * m));
      std::copy(diag.phi[r[k]].begin(), diag.phi[r[k]].end(), phi.data().begin() + static_cast<std::ptrdiff_t>(k * m));
    }
    auto st = pair_report(l1, phi, tau);
    s.paired_total += st.paired_count;
    s.unpaired_mass += st.unpaired_mass * static_cast<double>(r.size());
    total += r.size();
    s.per_category.push_back(std::move(st));
  }
  if (total > 0) s.unpaired_mass /= static_cast<double>(total);
  return s;
}

LayoutModel::LayoutModel(Vocabulary vocab, ModelConfig config) : vocab_(std::move(vocab)), config_(config) {
  config_.validate();
  const std::size_t C = vocab_.size();
  if (C == 0) throw std::invalid_argument("model: empty vocabulary");
  encoder_ = Encoder(config_.encoder, C);
  const std::size_t S = config_.encoder.shared_width();
  bank_ = PredictorBank(config_.m, C, S, config_.predictor_hidden);
  mixture_ = MixtureLayer(config_.m, C, S, config_.mixture_hidden);
  category_head_ = {"head.category", S, config_.head_hidden, C};
  stop_head_ = {"head.stop", S, config_.head_hidden, 1};
}

void LayoutModel::init(std::uint64_t seed) {
  params_ = ParamStore();
  Rng rng = derive_rng(seed, 0x0de1);
  encoder_.init(params_, rng);
  category_head_.init(params_, rng);
  stop_head_.init(params_, rng);
  bank_.init(params_, rng);
  mixture_.init(params_, rng);
  paired_.clear();
  pairing_ = {};
}

Var LayoutModel::category_logits(Tape& tape, Var x) const { return category_head_.forward(tape, params_, x); }

Var LayoutModel::stop_logits(Tape& tape, Var x) const { return stop_head_.forward(tape, params_, x); }

Var LayoutModel::log_phi(Tape& tape, Var x, std::span<const CategoryId> categories) const {
  if (config_.loss.kind == LossKind::mixture_wta) return mixture_.log_phi(tape, params_, x, categories);
  const std::size_t B = x.shape()[0];
  return tape.constant(Tensor({B, config_.m}, -std::log(static_cast<double>(config_.m))));
}

LossTerms LayoutModel::total_loss(Tape& tape, std::span<const TrainingPair> batch, const LossWeights& weights,
                                  std::size_t k, BatchDiagnostics* diag) const {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  const std::size_t B = batch.size();
  const std::size_t C = vocab_.size();
  const std::size_t M = config_.m;

  std::vector<Prefix> prefixes;
  std::vector<std::size_t> cats;
  Tensor stop_t({B, 1});
  prefixes.reserve(B);
  cats.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    prefixes.push_back(batch[b].prefix);
    cats.push_back(batch[b].next.category);
    if (cats.back() >= C) throw std::out_of_range("total_loss: category outside vocabulary");
    stop_t[b] = batch[b].next.stop ? 1.0 : 0.0;
  }

  const Var x = encode(tape, prefixes);
  const Var l_c = scale(mean(pick(log_softmax(category_logits(tape, x), 1), cats)), -1.0);
  const Var z = stop_logits(tape, x);
  const Var l_s = mean(sub(softplus(z), mul(z, tape.constant(std::move(stop_t)))));

  std::vector<std::vector<std::size_t>> groups(C);
  for (std::size_t b = 0; b < B; ++b) groups[cats[b]].push_back(b);
  Var l_b;
  const bool mixture = config_.loss.kind == LossKind::mixture_wta;
  for (std::size_t c = 0; c < C; ++c) {
    const auto& rows = groups[c];
    if (rows.empty()) continue;
    const std::size_t G = rows.size();
    const Var xg = gather_rows(x, rows);
    Tensor y({G, 4});
    for (std::size_t r = 0; r < G; ++r) {
      const auto& bb = batch[rows[r]].next.bbox;
      y.at(r, 0) = bb.x;
      y.at(r, 1) = bb.y;
      y.at(r, 2) = bb.w;
      y.at(r, 3) = bb.h;
    }
    const auto hyps = hypotheses(tape, xg, c);
    const Var l1 = l1_matrix(hyps, tape.constant(std::move(y)));
    const std::vector<CategoryId> gc(G, c);
    const Var lp = log_phi(tape, xg, gc);
    const Var term = scale(wta_loss(l1, config_.loss, mixture ? std::optional<Var>(lp) : std::nullopt, k),
                           static_cast<double>(G) / static_cast<double>(B));
    l_b = l_b.valid() ? add(l_b, term) : term;

    if (diag) {
      const Tensor& lv = l1.value();
      const Tensor& pv = lp.value();
      for (std::size_t r = 0; r < G; ++r) {
        diag->categories.push_back(c);
        diag->l1.emplace_back(lv.data().begin() + static_cast<std::ptrdiff_t>(r * M),
                              lv.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * M));
        std::vector<double> phi(M);
        for (std::size_t i = 0; i < M; ++i) phi[i] = std::exp(pv.at(r, i));
        diag->phi.push_back(std::move(phi));
      }
    }
  }

  const Var total = add(add(scale(l_c, weights.category), scale(l_s, weights.stop)), scale(l_b, weights.bbox));
  return {total, l_c, l_s, l_b};
}

void LayoutModel::set_pairing(const PairingSummary& summary) {
  pairing_ = summary;
  paired_ = summary.paired_mask(vocab_.size(), config_.m);
}

std::string LayoutModel::manifest_json() const {
  nlohmann::json j = {{"format", kManifestFormat},
                      {"version", 1},
                      {"vocabulary", vocab_.names()},
                      {"config", config_},
                      {"parameters", params_.element_count()},
                      {"pairing", pairing_json(pairing_, vocab_)}};
  return j.dump(2);
}

void LayoutModel::save(const std::filesystem::path& path) const {
  ParamStore out = params_;
  Tensor mask({vocab_.size(), config_.m});
  for (std::size_t c = 0; c < paired_.size(); ++c)
    for (std::size_t i = 0; i < paired_[c].size(); ++i) mask.at(c, i) = paired_[c][i] ? 1.0 : 0.0;
  out.add(kPairedMaskName, std::move(mask));
  save_checkpoint(path, out);
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw CheckpointError("cannot write model manifest next to " + path.string());
  side << manifest_json() << '\n';
}

LayoutModel LayoutModel::load(const std::filesystem::path& path) {
  std::ifstream side(sidecar_path(path));
  if (!side) throw CheckpointError("missing model manifest " + sidecar_path(path).string());
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt model manifest: ") + e.what());
  }
  if (j.value("format", "") != kManifestFormat) throw CheckpointError("not a layout model manifest");

  std::optional<LayoutModel> model;
  try {
    model.emplace(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), j.at("config").get<ModelConfig>());
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("invalid model manifest: ") + e.what());
  }
  const ParamStore stored = load_checkpoint(path);
  model->init(0);
  auto& params = model->params_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto idx = stored.find(params.name(i));
    if (!idx) throw CheckpointError("checkpoint lacks parameter " + params.name(i));
    if (stored.value(*idx).shape() != params.value(i).shape()) {
      throw CheckpointError("shape mismatch for parameter " + params.name(i));
    }
    params.value(i) = stored.value(*idx);
  }
  if (j.contains("pairing")) model->pairing_ = pairing_from_json(j["pairing"]);
  model->paired_.assign(model->vocab_.size(), std::vector<bool>(model->config_.m, false));
  if (auto idx = stored.find(kPairedMaskName)) {
    const Tensor& mask = stored.value(*idx);
    if (mask.shape() != Shape{model->vocab_.size(), model->config_.m}) throw CheckpointError("bad paired mask shape");
    for (std::size_t c = 0; c < model->vocab_.size(); ++c)
      for (std::size_t i = 0; i < model->config_.m; ++i) model->paired_[c][i] = mask.at(c, i) != 0.0;
  }
  return std::move(*model);
}

CategoryId sample_category(std::span<const double> logits, double temperature, Rng& rng) {
  if (logits.empty()) throw std::invalid_argument("sample_category: no logits");
  if (!(temperature > 0.0)) throw std::invalid_argument("sample_category: temperature must be positive");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp((logits[i] - top) / temperature);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  return dist(rng);
}

bool stop_decision(double logit, std::size_t count, std::size_t max_objects) {
  if (count >= max_objects) return true;
  return 1.0 / (1.0 + std::exp(-logit)) > 0.5;
}

}  // namespace lmcl
