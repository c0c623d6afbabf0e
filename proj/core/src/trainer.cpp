#include "lmcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "config_json.hpp"
#include "lmcl/corpus.hpp"

namespace lmcl {

AdamState AdamState::for_params(const ParamStore& params) {
  AdamState s;
  s.m = params.zero_gradients();
  s.v = params.zero_gradients();
  return s;
}

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg,
               std::span<const double> lr_scale) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size() ||
      (!lr_scale.empty() && lr_scale.size() != params.size())) {
    throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(i);
    const Tensor& g = grads[i];
    if (g.shape() != p.shape()) throw ShapeError("adam_step", p.shape(), g.shape());
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const double rate = lr_scale.empty() ? lr : lr * lr_scale[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      p[j] -= rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
    }
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto& g : grads) g *= k;
  }
  return norm;
}

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("train config: learning rate must be non-negative");
  if (!(lr_final_factor > 0.0 && lr_final_factor <= 1.0)) {
    throw std::invalid_argument("train config: lr_final_factor must lie in (0, 1]");
  }
  if (batch_size == 0 || epochs == 0 || eval_batch == 0) {
    throw std::invalid_argument("train config: batch size, epochs and eval batch must be positive");
  }
  if (!(mixture_lr_factor >= 0.0)) throw std::invalid_argument("train config: mixture_lr_factor must be non-negative");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("train config: clip norm must be positive");
  if (weights.category < 0.0 || weights.stop < 0.0 || weights.bbox < 0.0) {
    throw std::invalid_argument("train config: loss weights must be non-negative");
  }
}

EvalResult evaluate(const LayoutModel& model, std::span<const TrainingPair> pairs, const LossWeights& weights,
                    std::size_t k, std::size_t batch) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: no pairs");
  EvalResult r;
  BatchDiagnostics diag;
  for (std::size_t start = 0; start < pairs.size(); start += batch) {
    const auto chunk = pairs.subspan(start, std::min(batch, pairs.size() - start));
    Tape tape;
    const auto terms = model.total_loss(tape, chunk, weights, k, &diag);
    const double w = static_cast<double>(chunk.size());
    r.category += terms.category.value().item() * w;
    r.stop += terms.stop.value().item() * w;
    r.bbox += terms.bbox.value().item() * w;
    r.total += terms.total.value().item() * w;
  }
  const double n = static_cast<double>(pairs.size());
  r.category /= n;
  r.stop /= n;
  r.bbox /= n;
  r.total /= n;
  r.pairing = summarize_pairing(diag, model.vocabulary().size(), model.config().m, model.config().pair_tau);
  return r;
}

std::string corpus_hash(const std::vector<Layout>& corpus, const Vocabulary& vocab) {
  std::ostringstream out;
  write_corpus(out, corpus, vocab);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : out.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << h;
  return hex.str();
}

namespace {

bool all_finite(const Gradients& grads) {
  return std::all_of(grads.begin(), grads.end(), [](const Tensor& g) { return g.all_finite(); });
}

nlohmann::json log_json(const EpochLog& e) {
  return {{"epoch", e.epoch},       {"l_c", e.category},        {"l_s", e.stop},
          {"l_b", e.bbox},          {"total", e.total},         {"paired", e.paired},
          {"unpaired_mass", e.unpaired_mass}, {"k", e.k},       {"learning_rate", e.learning_rate},
          {"seconds", e.seconds}};
}

void write_outputs(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result,
                   const std::string& hash, std::size_t layouts, std::size_t pairs) {
  {
    std::ofstream csv(dir / "log.csv", std::ios::trunc);
    csv << "epoch,l_c,l_s,l_b,total,paired,unpaired_mass,k,learning_rate,seconds\n";
    csv.precision(17);
    for (const auto& e : result.log) {
      csv << e.epoch << ',' << e.category << ',' << e.stop << ',' << e.bbox << ',' << e.total << ',' << e.paired << ','
          << e.unpaired_mass << ',' << e.k << ',' << e.learning_rate << ',' << e.seconds << '\n';
    }
  }
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : result.log) log.push_back(log_json(e));
  const nlohmann::json manifest = {
      {"config",
       {{"model", config.model},
        {"learning_rate", config.learning_rate},
        {"lr_final_factor", config.lr_final_factor},
        {"batch_size", config.batch_size},
        {"epochs", config.epochs},
        {"lambda_c", config.weights.category},
        {"lambda_s", config.weights.stop},
        {"lambda_b", config.weights.bbox},
        {"seed", config.seed},
        {"mixture_lr_factor", config.mixture_lr_factor},
        {"clip_norm", config.clip_norm},
        {"eval_batch", config.eval_batch},
        {"time_budget_seconds", config.time_budget_seconds},
        {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}}}}},
      {"corpus", {{"hash", hash}, {"layouts", layouts}, {"pairs", pairs}}},
      {"best_epoch", result.best_epoch},
      {"best_total", result.best_total},
      {"diverged", result.diverged},
      {"budget_exhausted", result.budget_exhausted},
      {"diagnostic", result.diagnostic},
      {"checkpoint", "model.ckpt"},
      {"log", log}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

}  // namespace

TrainResult train(const std::vector<Layout>& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& out_dir, const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  if (out_dir) std::filesystem::create_directories(*out_dir);

  LayoutModel model(vocab, config.model);
  model.init(config.seed);
  const auto pairs = teacher_forced_pairs(corpus);
  const std::size_t N = pairs.size();
  const std::size_t per_epoch = (N + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = per_epoch * config.epochs;
  const EvolvingSchedule schedule{config.model.m, total_steps};
  AdamState adam = AdamState::for_params(model.params());
  std::vector<double> lr_scale(model.params().size(), 1.0);
  for (std::size_t i = 0; i < lr_scale.size(); ++i) {
    if (model.params().name(i).starts_with("mix.")) lr_scale[i] = config.mixture_lr_factor;
  }

  TrainResult result{model, {}, 0, std::numeric_limits<double>::infinity(), false, false, {}};
  bool have_best = false;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  std::vector<std::size_t> order(N);
  std::vector<TrainingPair> batch;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = derive_rng(config.seed, 0xE90C0000ULL + epoch);
    std::shuffle(order.begin(), order.end(), shuffle);

    double lr = config.learning_rate;
    std::size_t k = 1;
    for (std::size_t start = 0; start < N; start += config.batch_size, ++step) {
      batch.clear();
      for (std::size_t i = start; i < std::min(N, start + config.batch_size); ++i) batch.push_back(pairs[order[i]]);
      const double progress = total_steps > 1 ? static_cast<double>(step) / static_cast<double>(total_steps - 1) : 0.0;
      lr = config.learning_rate * std::pow(config.lr_final_factor, progress);
      k = schedule.k_at(step);

      Tape tape;
      const auto terms = model.total_loss(tape, batch, config.weights, k);
      const double loss = terms.total.value().item();
      Gradients grads;
      if (std::isfinite(loss)) grads = tape.backward(terms.total);
      if (!std::isfinite(loss) || !all_finite(grads)) {
        result.diverged = true;
        std::ostringstream msg;
        msg << "non-finite " << (std::isfinite(loss) ? "gradient" : "loss") << " at epoch " << epoch << ", step "
            << step << "; keeping the checkpoint from epoch " << result.best_epoch;
        result.diagnostic = msg.str();
        break;
      }
      clip_global_norm(grads, config.clip_norm);
      adam_step(model.params(), grads, adam, lr, {}, lr_scale);
    }
    if (result.diverged) break;

    const auto eval = evaluate(model, pairs, config.weights, k, config.eval_batch);
    model.set_pairing(eval.pairing);
    EpochLog entry{epoch, eval.category, eval.stop, eval.bbox, eval.total, eval.pairing.paired_total,
                   eval.pairing.unpaired_mass, k, lr, elapsed()};
    if (!std::isfinite(eval.total)) {
      result.diverged = true;
      result.diagnostic = "non-finite evaluation loss at epoch " + std::to_string(epoch);
      break;
    }
    result.log.push_back(entry);
    if (!have_best || eval.total < result.best_total) {
      have_best = true;
      result.best_total = eval.total;
      result.best_epoch = epoch;
      result.model = model;
      if (out_dir) model.save(*out_dir / "model.ckpt");
    }
    if (on_epoch) on_epoch(entry);
    if (config.time_budget_seconds > 0.0 && elapsed() > config.time_budget_seconds && epoch < config.epochs) {
      result.budget_exhausted = true;
      result.diagnostic = "time budget exhausted after epoch " + std::to_string(epoch);
      break;
    }
  }
  if (out_dir) write_outputs(*out_dir, config, result, corpus_hash(corpus, vocab), corpus.size(), N);
  return result;
}

}  // namespace lmcl
