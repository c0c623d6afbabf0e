// Acceptance run: one PASS/FAIL line per criterion.
// LMCL_ACCEPTANCE=1,5,7 restricts the run to the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lmcl/discriminator.hpp"
#include "lmcl/generator.hpp"
#include "lmcl/metrics.hpp"
#include "lmcl/synth.hpp"
#include "lmcl/toylab.hpp"
#include "lmcl/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace lmcl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double l1(const Point2& a, const Point2& b) { return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]); }

ToyOptions toy_options(const char* variant, std::uint64_t seed) {
  ToyOptions o;
  o.variant = LossVariant::parse(variant);
  o.seed = seed;
  return o;
}

const std::vector<std::uint64_t> kToySeeds = {0, 1, 2, 3, 4};

// 1
void gradient_suite(Outcome& out) {
  const auto t0 = Clock::now();
  std::size_t checked = 0, failed_cases = 0;
  double worst = 0.0;
  for (auto& c : testing::gradient_cases()) {
    const auto r = testing::check_gradients(c.store, c.loss, c.per_tensor);
    checked += r.checked;
    worst = std::max(worst, r.worst_rel);
    if (!r.ok()) {
      ++failed_cases;
      out.detail << " " << c.name << ": " << r.worst;
    }
  }
  const double secs = seconds_since(t0);
  out.detail << " entries " << checked << ", worst rel " << worst << ", " << secs << "s";
  out.require(failed_cases == 0, std::to_string(failed_cases) + " cases over tolerance");
  out.require(checked > 0, "nothing checked");
  out.require(secs < 120.0, "runtime >= 120s");
}

// 2
void toy_reproduction(Outcome& out) {
  const ToyTask task;
  std::size_t converged = 0;
  double slowest = 0.0;
  for (auto seed : kToySeeds) {
    const auto t0 = Clock::now();
    const auto run = run_toy(task, toy_options("mcl", seed));
    slowest = std::max(slowest, seconds_since(t0));
    const auto& s = run.summary;
    out.detail << " seed " << seed << ": P " << s.paired_count << " unpaired " << s.unpaired_probability;
    if (!s.converged) {
      out.detail << " (not converged)";
      continue;
    }
    ++converged;
    const std::string tag = "seed " + std::to_string(seed);
    for (double d : s.nearest_l1) out.require(d < 0.02, tag + " coverage " + std::to_string(d));
    out.require(s.unpaired_probability < 0.01, tag + " unpaired mass");
    out.require(s.pairing_step && s.boosting_step && *s.pairing_step < *s.boosting_step,
                tag + " pairing before boosting");
  }
  out.detail << "; slowest seed " << slowest << "s";
  // A criterion that holds only for converging seeds needs most seeds to converge to mean anything.
  out.require(converged * 5 >= kToySeeds.size() * 4, "fewer than 80% of seeds converged");
  out.require(slowest < 120.0, "a seed took >= 120s");
}

// 3
void averaging_control(Outcome& out) {
  ToyTask task;
  task.m = 1;
  const auto run = run_toy(task, toy_options("wta", 0));
  const double d = l1(run.summary.hypotheses.at(0), task.centroid());
  out.detail << " L1 to centroid " << d;
  out.require(d < 0.03, "single predictor away from the centroid");
}

// 4
void variant_comparison(Outcome& out) {
  const ToyTask task;
  const std::vector<LossVariant> variants = {LossVariant::parse("mcl"), LossVariant::parse("ewta"),
                                             LossVariant::parse("rwta")};
  const auto stats = compare_variants(task, toy_options("mcl", 0), variants, kToySeeds);
  const auto& mcl = stats.at(0);
  const auto& ewta = stats.at(1);
  const auto& rwta = stats.at(2);
  out.detail << " mcl unpaired " << mcl.mean_unpaired << " ewta poor " << ewta.mean_poor << " (sd " << ewta.sd_poor
             << ")";
  for (const auto& r : mcl.runs) out.require(r.unpaired_probability < 0.01, "mcl unpaired >= 1%");
  out.require(ewta.mean_poor >= 0.05 && ewta.mean_poor <= 0.45, "ewta poor probability outside [5%, 45%]");
  const Point2 centre = task.centroid();
  out.detail << " rwta central per seed:";
  for (const auto& r : rwta.runs) {
    std::size_t central = 0;
    for (const auto& h : r.hypotheses) central += l1(h, centre) < 0.1;
    out.detail << " " << central;
    out.require(central >= 1, "rwta seed without a central hypothesis");
  }
}

// 5
void metric_oracles(Outcome& out) {
  Rng rng(5);
  std::vector<Layout> layouts;
  std::uniform_int_distribution<std::size_t> count(1, 10);
  for (int i = 0; i < 100; ++i) layouts.push_back(testing::random_layout(rng, count(rng), 5));
  const double a = alignment(layouts);
  const double b = testing::brute_force_alignment(layouts);
  out.detail << " alignment " << a << " vs oracle " << b;
  out.require(a == b, "alignment differs from the exhaustive oracle");

  const auto feats = testing::random_features(rng, 200, 8);
  const double self = fid(feats, feats);
  out.detail << "; fid(A,A) " << self;
  out.require(self < 1e-6, "fid(A,A) >= 1e-6");

  double worst = 0.0;
  std::uniform_real_distribution<double> mu(-1.0, 1.0), var(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 8);
    std::vector<double> m1(d), v1(d), m2(d), v2(d);
    for (std::size_t k = 0; k < d; ++k) {
      m1[k] = mu(rng);
      m2[k] = mu(rng);
      v1[k] = var(rng);
      v2[k] = var(rng);
    }
    const double got = fid(testing::diagonal_feature_set(m1, v1), testing::diagonal_feature_set(m2, v2));
    worst = std::max(worst, std::abs(got - testing::diagonal_fid(m1, v1, m2, v2)));
  }
  out.detail << "; diagonal worst " << worst;
  out.require(worst < 1e-6, "fid off the diagonal closed form");

  const auto shifted =
      testing::make_layout({{0, {0.10, 0.1, 0.20, 0.1}, false}, {1, {0.15, 0.5, 0.20, 0.2}, false}});
  const double hand = layout_alignment(shifted);
  out.detail << "; hand alignment " << hand;
  out.require(std::abs(hand - 0.10) < 1e-12, "hand alignment example != 0.10");

  const double d2 = fid(testing::diagonal_feature_set({0.0}, {1.0}), testing::diagonal_feature_set({1.0}, {1.0}));
  out.detail << "; hand fid " << d2;
  out.require(std::abs(d2 - 1.0) < 1e-12, "hand fid example != 1");
}

// 6
constexpr std::size_t kE2eLayouts = 2000;
constexpr std::size_t kE2eEpochs = 12;
constexpr double kE2eBudgetSeconds = 1800.0;

std::optional<LayoutModel> g_trained;

std::vector<Layout> perturb_all(const std::vector<Layout>& real, double magnitude, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layout> out;
  out.reserve(real.size());
  for (const auto& l : real) out.push_back(perturb_fake(l, rng, magnitude));
  return out;
}

void end_to_end(Outcome& out) {
  const Profile profile = Profile::double_column_doc;
  const auto vocab = profile_vocabulary(profile);
  const auto corpus = synth_grammar(1, kE2eLayouts, profile);

  TrainConfig cfg;
  cfg.model = ModelConfig::desk();
  cfg.model.m = 10;
  cfg.model.loss = LossVariant::parse("mcl");
  cfg.epochs = kE2eEpochs;
  cfg.seed = 0;
  // Stop early rather than overrun; the elapsed time is still checked below.
  cfg.time_budget_seconds = kE2eBudgetSeconds - 120.0;
  const auto t0 = Clock::now();
  auto result = train(corpus, vocab, cfg, std::nullopt, [](const EpochLog& e) {
    std::cerr << "  epoch " << e.epoch << " total " << e.total << " paired " << e.paired << " unpaired "
              << e.unpaired_mass << " (" << e.seconds << "s)\n";
  });
  const double train_secs = seconds_since(t0);
  out.detail << " trained " << result.log.size() << " epochs in " << train_secs << "s, best total " << result.best_total;
  out.require(!result.diverged, "training diverged: " + result.diagnostic);
  out.require(train_secs < kE2eBudgetSeconds, "training took >= 30 min");
  if (result.diverged) return;
  const LayoutModel& model = g_trained.emplace(std::move(result.model));

  // (a) invariants
  GenerationRequest free;
  free.count = 200;
  free.seed = 11;
  const auto generated = generate(free, model);
  std::size_t valid = 0;
  for (const auto& l : generated) valid += !validate_layout(l, vocab.size()).has_value();
  out.detail << "; (a) valid " << valid << "/200";
  out.require(valid * 100 >= 95 * generated.size(), "(a) fewer than 95% valid");

  // (b) both grammar modes after the same title
  GenerationRequest titled;
  titled.hard = {corpus.front().objects.front()};
  titled.hard.front().stop = false;
  titled.count = 100;
  titled.seed = 12;
  std::size_t figure_first = 0, text_first = 0;
  for (const auto& l : generate(titled, model)) {
    if (l.objects.size() < 2) continue;
    const auto c = vocab.name(l.objects[1].category);
    figure_first += c == "figure";
    text_first += c == "text";
  }
  out.detail << "; (b) figure-first " << figure_first << " text-first " << text_first;
  out.require(figure_first >= 20 && text_first >= 20, "(b) a mode below 20%");

  // (c) alignment
  const auto fakes = perturb_all(corpus, kDefaultFakeMagnitude, 13);
  const double a_real = alignment(corpus);
  const double a_gen = alignment(generated);
  const double a_fake = alignment(fakes);
  out.detail << "; (c) alignment real " << a_real << " gen " << a_gen << " fake " << a_fake;
  out.require(std::abs(a_gen - a_real) < std::abs(a_fake - a_real), "(c) generated alignment not closer than fakes");

  // (d) discriminator and FID
  DiscriminatorConfig dc;
  dc.magnitude = kDefaultFakeMagnitude;
  dc.seed = 14;
  const auto disc_real = synth_grammar(2, 1000, profile);
  const auto trained = train_discriminator(disc_real, vocab, dc);
  out.detail << "; (d) held-out accuracy " << trained.heldout_accuracy;
  out.require(trained.heldout_accuracy >= 0.85, "(d) discriminator accuracy < 85%");

  const auto reference = synth_grammar(3, 500, profile);
  const auto fake_eval = perturb_all(synth_grammar(4, generated.size(), profile), kDefaultFakeMagnitude, 15);
  const auto& d = trained.discriminator;
  const auto ref_f = d.feature_matrix(reference);
  const double fid_gen = fid(d.feature_matrix(generated), ref_f);
  const double fid_fake = fid(d.feature_matrix(fake_eval), ref_f);
  out.detail << " fid gen " << fid_gen << " fake " << fid_fake;
  out.require(fid_gen < fid_fake, "(d) FID(generated) >= FID(fake)");
}

// 7
void constraint_semantics(Outcome& out) {
  const auto vocab = profile_vocabulary(Profile::double_column_doc);
  std::optional<LayoutModel> fresh;
  if (!g_trained) {
    fresh.emplace(vocab, ModelConfig::desk());
    fresh->init(7);
    out.detail << " (untrained model)";
  }
  const LayoutModel& model = g_trained ? *g_trained : *fresh;
  const auto sources = synth_grammar(7, 50, Profile::double_column_doc);
  Rng rng(77);
  std::uniform_int_distribution<std::size_t> n_hard(0, 4), n_soft(0, 3), count(1, 5), cat(0, vocab.size() - 1);
  std::uniform_real_distribution<double> side(0.05, 0.6);
  std::bernoulli_distribution with_size(0.5);
  std::size_t candidates = 0, prefix_bad = 0, soft_bad = 0, repro_bad = 0;
  for (int i = 0; i < 50; ++i) {
    GenerationRequest req;
    const auto& src = sources[static_cast<std::size_t>(i)].objects;
    const std::size_t h = std::min(n_hard(rng), src.size());
    req.hard.assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(h));
    for (auto& o : req.hard) o.stop = false;
    const std::size_t s = n_soft(rng);
    for (std::size_t j = 0; j < s; ++j) {
      SoftConstraint c;
      c.category = cat(rng);
      if (with_size(rng)) c.size = SizeHint{side(rng), side(rng)};
      req.soft.push_back(c);
    }
    req.count = count(rng);
    req.seed = rng();
    const auto first = generate(req, model);
    const auto second = generate(req, model);
    repro_bad += first != second;
    for (const auto& l : first) {
      ++candidates;
      bool prefix_ok = l.objects.size() >= h + s;
      for (std::size_t k = 0; prefix_ok && k < h; ++k) {
        const auto& a = l.objects[k];
        const auto& b = req.hard[k];
        prefix_ok = a.category == b.category && a.bbox == b.bbox;
      }
      prefix_bad += !prefix_ok;
      bool soft_ok = l.objects.size() >= h + s;
      for (std::size_t k = 0; soft_ok && k < s; ++k) soft_ok = l.objects[h + k].category == req.soft[k].category;
      soft_bad += !soft_ok;
    }
  }
  out.detail << " candidates " << candidates << ", prefix violations " << prefix_bad << ", soft-order violations "
             << soft_bad << ", irreproducible requests " << repro_bad;
  out.require(candidates > 0, "no candidates");
  out.require(prefix_bad == 0, "hard prefix not embedded");
  out.require(soft_bad == 0, "soft order not honoured");
  out.require(repro_bad == 0, "seeded request not reproducible");
}

std::set<int> selected() {
  std::set<int> out;
  const char* env = std::getenv("LMCL_ACCEPTANCE");
  if (!env) return out;
  std::stringstream ss(env);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"gradient suite", gradient_suite},
      {"toy reproduction", toy_reproduction},
      {"averaging control", averaging_control},
      {"variant comparison", variant_comparison},
      {"metric oracles", metric_oracles},
      {"end-to-end pipeline", end_to_end},
      {"constraint semantics", constraint_semantics},
  };
  const auto only = selected();
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << ", "
              << seconds_since(t0) << "s):" << o.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
