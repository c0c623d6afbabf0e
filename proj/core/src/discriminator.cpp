#include "lmcl/discriminator.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "config_json.hpp"
#include "lmcl/checkpoint.hpp"
#include "lmcl/trainer.hpp"

namespace lmcl {

namespace {

constexpr const char* kFormat = "layout-mcl-discriminator";

std::vector<Prefix> as_prefixes(std::span<const Layout> layouts) {
  std::vector<Prefix> out;
  out.reserve(layouts.size());
  for (const auto& l : layouts) out.emplace_back(l.objects);
  return out;
}

}  // namespace

Discriminator::Discriminator(Vocabulary vocab, EncoderConfig encoder)
    : vocab_(std::move(vocab)), encoder_(encoder, vocab_.size(), "disc.enc") {}

void Discriminator::init(std::uint64_t seed) {
  params_ = ParamStore();
  Rng rng = derive_rng(seed, 0xd15c);
  encoder_.init(params_, rng);
  const std::size_t S = encoder_.config().shared_width();
  params_.add("disc.penultimate.w", fan_in_uniform({S, kPenultimateWidth}, S, rng));
  params_.add("disc.penultimate.b", Tensor({1, kPenultimateWidth}));
  params_.add("disc.out.w", fan_in_uniform({kPenultimateWidth, 2}, kPenultimateWidth, rng));
  params_.add("disc.out.b", Tensor({1, 2}));
}

Var Discriminator::features(Tape& tape, std::span<const Layout> layouts) const {
  const auto prefixes = as_prefixes(layouts);
  const Var x = encoder_.encode(tape, params_, prefixes);
  return relu(dense(x, tape.param(params_, "disc.penultimate.w"), tape.param(params_, "disc.penultimate.b")));
}

Var Discriminator::logits_from_features(Tape& tape, Var f) const {
  return dense(f, tape.param(params_, "disc.out.w"), tape.param(params_, "disc.out.b"));
}

Tensor Discriminator::feature_matrix(std::span<const Layout> layouts, std::size_t batch) const {
  if (layouts.empty()) throw std::invalid_argument("discriminator: no layouts");
  Tensor out({layouts.size(), kPenultimateWidth});
  for (std::size_t start = 0; start < layouts.size(); start += batch) {
    const auto chunk = layouts.subspan(start, std::min(batch, layouts.size() - start));
    Tape tape;
    const Tensor& f = features(tape, chunk).value();
    std::copy(f.data().begin(), f.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(start * kPenultimateWidth));
  }
  return out;
}

std::vector<std::size_t> Discriminator::classify(std::span<const Layout> layouts, std::size_t batch) const {
  std::vector<std::size_t> labels;
  labels.reserve(layouts.size());
  for (std::size_t start = 0; start < layouts.size(); start += batch) {
    const auto chunk = layouts.subspan(start, std::min(batch, layouts.size() - start));
    Tape tape;
    const Tensor& z = logits_from_features(tape, features(tape, chunk)).value();
    for (std::size_t b = 0; b < chunk.size(); ++b) labels.push_back(z.at(b, kFakeClass) > z.at(b, kRealClass) ? kFakeClass : kRealClass);
  }
  return labels;
}

void Discriminator::save(const std::filesystem::path& path) const {
  save_checkpoint(path, params_);
  const nlohmann::json j = {{"format", kFormat}, {"vocabulary", vocab_.names()}, {"encoder", encoder_.config()}};
  std::ofstream side(path.string() + ".json", std::ios::trunc);
  if (!side) throw CheckpointError("cannot write discriminator manifest");
  side << j.dump(2) << '\n';
}

Discriminator Discriminator::load(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw CheckpointError("missing discriminator manifest " + path.string() + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt discriminator manifest: ") + e.what());
  }
  if (j.value("format", "") != kFormat) throw CheckpointError("not a discriminator manifest");
  Discriminator d(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), j.at("encoder").get<EncoderConfig>());
  d.init(0);
  const ParamStore stored = load_checkpoint(path);
  for (std::size_t i = 0; i < d.params_.size(); ++i) {
    const auto idx = stored.find(d.params_.name(i));
    if (!idx || stored.value(*idx).shape() != d.params_.value(i).shape()) {
      throw CheckpointError("discriminator checkpoint lacks or misshapes " + d.params_.name(i));
    }
    d.params_.value(i) = stored.value(*idx);
  }
  return d;
}

DiscriminatorTraining train_discriminator(const std::vector<Layout>& real, const Vocabulary& vocab,
                                          const DiscriminatorConfig& config) {
  if (real.size() < 2) throw std::invalid_argument("train_discriminator: need at least two real layouts");
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
    throw std::invalid_argument("train_discriminator: holdout fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(real.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng split_rng = derive_rng(config.seed, 0x5b11);
  std::shuffle(idx.begin(), idx.end(), split_rng);
  const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(real.size()) * config.holdout_fraction));

  DiscriminatorTraining out{Discriminator(vocab, config.encoder), 0.0, 0.0, {}, {}, {}};
  std::vector<Layout> train_set;
  std::vector<std::size_t> train_labels;
  Rng fake_rng = derive_rng(config.seed, 0xfa6e);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Layout& l = real[idx[i]];
    if (i < held) {
      out.heldout_real.push_back(l);
    } else {
      train_set.push_back(l);
      train_labels.push_back(kRealClass);
    }
  }
  // Fakes are derived per split so no held-out layout leaks into training.
  for (const auto& l : out.heldout_real) out.heldout_fake.push_back(perturb_fake(l, fake_rng, config.magnitude));
  const std::size_t n_train_real = train_set.size();
  for (std::size_t i = 0; i < n_train_real; ++i) {
    train_set.push_back(perturb_fake(train_set[i], fake_rng, config.magnitude));
    train_labels.push_back(kFakeClass);
  }

  Discriminator& d = out.discriminator;
  d.init(config.seed);
  AdamState adam = AdamState::for_params(d.params());
  std::vector<std::size_t> order(train_set.size());
  std::vector<Layout> batch;
  std::vector<std::size_t> labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = derive_rng(config.seed, 0xd15c0000ULL + epoch);
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(train_set[order[i]]);
        labels.push_back(train_labels[order[i]]);
      }
      Tape tape;
      const Var logits = d.logits_from_features(tape, d.features(tape, batch));
      const Var loss = scale(mean(pick(log_softmax(logits, 1), labels)), -1.0);
      auto grads = tape.backward(loss);
      clip_global_norm(grads, 5.0);
      adam_step(d.params(), grads, adam, config.learning_rate);
    }
  }

  const auto real_pred = d.classify(out.heldout_real);
  const auto fake_pred = d.classify(out.heldout_fake);
  const auto real_ok = std::count(real_pred.begin(), real_pred.end(), kRealClass);
  const auto fake_ok = std::count(fake_pred.begin(), fake_pred.end(), kFakeClass);
  out.heldout_real_accuracy = static_cast<double>(real_ok) / static_cast<double>(real_pred.size());
  out.heldout_accuracy = static_cast<double>(real_ok + fake_ok) / static_cast<double>(real_pred.size() + fake_pred.size());
  if (out.heldout_accuracy < 0.6) {
    out.warnings.push_back("discriminator held-out accuracy " + std::to_string(out.heldout_accuracy) +
                           " is below 0.6; FID from its features is weakly informative");
  }
  return out;
}

}  // namespace lmcl
