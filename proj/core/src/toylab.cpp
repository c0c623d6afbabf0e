#include "lmcl/toylab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "lmcl/checkpoint.hpp"
#include "lmcl/trainer.hpp"

namespace lmcl {

ToyTask ToyTask::with_ground_truths(std::size_t k, std::size_t m) {
  ToyTask t;
  t.m = m;
  if (k == 3) return t;
  t.ground_truths.clear();
  for (std::size_t i = 0; i < k; ++i) {
    const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    t.ground_truths.push_back({0.5 + 0.3 * std::cos(a), 0.5 + 0.3 * std::sin(a)});
  }
  return t;
}

Point2 ToyTask::centroid() const {
  Point2 c{0.0, 0.0};
  for (const auto& p : ground_truths) {
    c[0] += p[0];
    c[1] += p[1];
  }
  const auto k = static_cast<double>(ground_truths.size());
  return {c[0] / k, c[1] / k};
}

void ToyTask::validate() const {
  if (ground_truths.empty()) throw std::invalid_argument("toy task needs at least one ground truth");
  if (m == 0) throw std::invalid_argument("toy task needs M >= 1");
  for (std::size_t i = 0; i < ground_truths.size(); ++i) {
    for (double v : ground_truths[i])
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("toy ground truths must lie in [0,1]^2");
    for (std::size_t j = 0; j < i; ++j)
      if (ground_truths[i] == ground_truths[j]) throw std::invalid_argument("toy ground truths must be distinct");
  }
}

namespace {

constexpr const char* kBankPrefix = "toy.bank";
constexpr const char* kMixPrefix = "toy.mix";

double l1(const Point2& a, const Point2& b) { return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]); }

struct State {
  std::vector<Point2> hyps;
  std::vector<double> phi;
};

// Distance table [K, M].
Tensor distances(const std::vector<Point2>& gts, const std::vector<Point2>& hyps) {
  Tensor d({gts.size(), hyps.size()});
  for (std::size_t k = 0; k < gts.size(); ++k)
    for (std::size_t i = 0; i < hyps.size(); ++i) d.at(k, i) = l1(gts[k], hyps[i]);
  return d;
}

double paired_mass(const Tensor& d, const std::vector<double>& phi) {
  std::set<std::size_t> winners;
  const std::size_t M = d.dim(1);
  for (std::size_t k = 0; k < d.dim(0); ++k) winners.insert(select_winner(d.data().subspan(k * M, M)));
  double mass = 0.0;
  for (auto w : winners) mass += phi[w];
  return mass;
}

bool all_covered(const Tensor& d, double threshold) {
  const std::size_t M = d.dim(1);
  for (std::size_t k = 0; k < d.dim(0); ++k) {
    const auto row = d.data().subspan(k * M, M);
    if (*std::min_element(row.begin(), row.end()) >= threshold) return false;
  }
  return true;
}

double expected_loss(const Tensor& d, const std::vector<double>& phi, const LossVariant& variant, std::size_t k) {
  const Tensor w = wta_weights(d, variant, k);
  const std::size_t M = d.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < d.dim(0); ++r) {
    const std::size_t win = select_winner(d.data().subspan(r * M, M));
    for (std::size_t i = 0; i < M; ++i) {
      double term = w.at(r, i) * d.at(r, i);
      if (variant.kind == LossKind::mixture_wta && i == win) term *= -std::max(std::log(phi[i]), std::log(kPhiFloor));
      total += term;
    }
  }
  return total / static_cast<double>(d.dim(0));
}

ToySummary summarize(const ToyTask& task, const ToyOptions& o, const State& s) {
  ToySummary out;
  out.hypotheses = s.hyps;
  const std::size_t M = s.hyps.size();
  const bool weighted = o.variant.kind == LossKind::mixture_wta;
  out.phi = weighted ? s.phi : std::vector<double>(M, 1.0 / static_cast<double>(M));
  const Tensor d = distances(task.ground_truths, s.hyps);
  out.paired.assign(M, false);
  for (std::size_t k = 0; k < task.ground_truths.size(); ++k) {
    const auto row = d.data().subspan(k * M, M);
    const std::size_t w = select_winner(row);
    out.nearest_l1.push_back(row[w]);
    if (row[w] < o.pair_tau) out.paired[w] = true;
  }
  for (std::size_t i = 0; i < M; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < task.ground_truths.size(); ++k) nearest = std::min(nearest, d.at(k, i));
    const bool stuck = nearest > o.stuck_delta;
    if (stuck) {
      ++out.stuck_count;
      out.poor_probability += out.phi[i];
    }
    if (out.paired[i]) {
      ++out.paired_count;
    } else {
      out.unpaired_probability += out.phi[i];
    }
  }
  out.converged = std::all_of(out.nearest_l1.begin(), out.nearest_l1.end(),
                              [&](double v) { return v < o.cover_threshold; });
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ToyRun run_toy(const ToyTask& task, const ToyOptions& o) {
  task.validate();
  o.variant.validate();
  if (o.steps == 0) throw std::invalid_argument("toy run needs at least one step");
  if (o.input_width == 0 || o.hidden == 0) throw std::invalid_argument("toy network widths must be positive");

  const std::size_t M = task.m;
  const PredictorBank bank(M, 1, o.input_width, o.hidden, 2, kBankPrefix);
  const MixtureLayer mixture(M, 1, o.input_width, o.hidden, kMixPrefix);
  ToyRun run;
  Rng init_rng = derive_rng(o.seed, 0x70e1);
  bank.init(run.params, init_rng);
  mixture.init(run.params, init_rng);
  Rng gt_rng = derive_rng(o.seed, 0x70e2);
  std::uniform_int_distribution<std::size_t> pick_gt(0, task.ground_truths.size() - 1);

  const bool train_mixture = o.variant.kind == LossKind::mixture_wta;
  std::vector<bool> is_mixture(run.params.size());
  for (std::size_t i = 0; i < run.params.size(); ++i) is_mixture[i] = run.params.name(i).starts_with(kMixPrefix);
  std::vector<double> lr_scale(run.params.size());
  AdamState adam = AdamState::for_params(run.params);
  const EvolvingSchedule schedule{M, o.steps};
  const Tensor input({1, o.input_width}, o.input_value);
  const std::vector<CategoryId> cat{0};

  State state;
  auto forward = [&](Tape& tape, std::vector<Var>& hyps) -> Var {
    const Var x = tape.constant(input);
    hyps = bank.predict(tape, run.params, x, 0);
    const Var lp = mixture.log_phi(tape, run.params, x, cat);
    state.hyps.assign(M, {});
    state.phi.assign(M, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
      state.hyps[i] = {hyps[i].value()[0], hyps[i].value()[1]};
      state.phi[i] = std::exp(lp.value()[i]);
    }
    return lp;
  };
  auto snapshot = [&](std::size_t step) {
    run.snapshots.push_back({step, state.hyps, train_mixture ? state.phi : std::vector<double>(M, 1.0 / static_cast<double>(M))});
  };

  run.expected_loss.reserve(o.steps);
  for (std::size_t step = 0; step < o.steps; ++step) {
    Tape tape;
    std::vector<Var> hyps;
    const Var log_phi = forward(tape, hyps);
    const std::size_t k = o.variant.kind == LossKind::evolving_wta ? schedule.k_at(step) : 1;
    const Tensor d = distances(task.ground_truths, state.hyps);
    if (step == 0) {
      const auto [lo, hi] = std::minmax_element(state.phi.begin(), state.phi.end());
      run.summary.initial_phi_spread = *hi - *lo;
    }
    if (step % o.snapshot_every == 0) snapshot(step);
    run.expected_loss.push_back(expected_loss(d, state.phi, o.variant, k));
    if (!run.summary.pairing_step && all_covered(d, o.cover_threshold)) run.summary.pairing_step = step;
    if (train_mixture && !run.summary.boosting_step && paired_mass(d, state.phi) > o.boost_threshold) {
      run.summary.boosting_step = step;
    }

    const Point2& gt = task.ground_truths[pick_gt(gt_rng)];
    const Var y = tape.constant(Tensor({1, 2}, {gt[0], gt[1]}));
    const Var loss = wta_loss(l1_matrix(hyps, y), o.variant,
                              train_mixture ? std::optional<Var>(log_phi) : std::nullopt, k);
    const Gradients grads = tape.backward(loss);
    const double decay = std::pow(o.lr_final_factor, static_cast<double>(step) / static_cast<double>(o.steps));
    for (std::size_t i = 0; i < lr_scale.size(); ++i) {
      lr_scale[i] = is_mixture[i] ? (train_mixture ? o.mixture_lr_factor : 0.0) : decay;
    }
    adam_step(run.params, grads, adam, o.learning_rate, {}, lr_scale);
  }

  Tape tape;
  std::vector<Var> hyps;
  forward(tape, hyps);
  snapshot(o.steps);
  const ToySummary tracked = run.summary;
  run.summary = summarize(task, o, state);
  run.summary.initial_phi_spread = tracked.initial_phi_spread;
  run.summary.pairing_step = tracked.pairing_step;
  run.summary.boosting_step = tracked.boosting_step;
  return run;
}

std::vector<VariantStats> compare_variants(const ToyTask& task, const ToyOptions& base,
                                           std::span<const LossVariant> variants,
                                           std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 5) throw std::invalid_argument("compare_variants needs at least five seeds");
  std::vector<VariantStats> out;
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (const auto& v : variants) {
    VariantStats stats;
    stats.variant = v;
    // Each run is single-threaded; seeds are spread over the available cores.
    for (std::size_t start = 0; start < seeds.size(); start += workers) {
      std::vector<std::future<ToySummary>> jobs;
      for (std::size_t i = start; i < std::min(seeds.size(), start + workers); ++i) {
        ToyOptions o = base;
        o.variant = v;
        o.seed = seeds[i];
        jobs.push_back(std::async(std::launch::async, [&task, o] { return run_toy(task, o).summary; }));
      }
      for (auto& j : jobs) stats.runs.push_back(j.get());
    }
    std::vector<double> unpaired, poor, stuck, worst;
    for (const auto& r : stats.runs) {
      unpaired.push_back(r.unpaired_probability);
      poor.push_back(r.poor_probability);
      stuck.push_back(static_cast<double>(r.stuck_count));
      worst.push_back(*std::max_element(r.nearest_l1.begin(), r.nearest_l1.end()));
    }
    stats.mean_unpaired = mean_of(unpaired);
    stats.sd_unpaired = sd_of(unpaired);
    stats.mean_poor = mean_of(poor);
    stats.sd_poor = sd_of(poor);
    stats.mean_stuck = mean_of(stuck);
    stats.sd_stuck = sd_of(stuck);
    stats.mean_max_nearest = mean_of(worst);
    out.push_back(std::move(stats));
  }
  return out;
}

void write_snapshots_csv(std::ostream& out, const ToyRun& run) {
  out << "step,hypothesis,x,y,phi\n";
  out.precision(17);
  for (const auto& s : run.snapshots)
    for (std::size_t i = 0; i < s.hypotheses.size(); ++i)
      out << s.step << ',' << i << ',' << s.hypotheses[i][0] << ',' << s.hypotheses[i][1] << ',' << s.phi[i] << '\n';
}

namespace {

nlohmann::json summary_to_json(const ToySummary& s) {
  nlohmann::json j;
  j["hypotheses"] = s.hypotheses;
  j["phi"] = s.phi;
  j["nearest_l1"] = s.nearest_l1;
  j["paired"] = s.paired;
  j["paired_count"] = s.paired_count;
  j["stuck_count"] = s.stuck_count;
  j["unpaired_probability"] = s.unpaired_probability;
  j["poor_probability"] = s.poor_probability;
  j["initial_phi_spread"] = s.initial_phi_spread;
  j["pairing_step"] = s.pairing_step ? nlohmann::json(*s.pairing_step) : nlohmann::json(nullptr);
  j["boosting_step"] = s.boosting_step ? nlohmann::json(*s.boosting_step) : nlohmann::json(nullptr);
  j["converged"] = s.converged;
  return j;
}

}  // namespace

std::string summary_json(const ToySummary& s) { return summary_to_json(s).dump(2); }

void save_toy(const std::filesystem::path& path, const ToyTask& task, const ToyOptions& options, const ToyRun& run) {
  save_checkpoint(path, run.params);
  const nlohmann::json j = {{"format", "layout-mcl-toy"},
                            {"variant", options.variant.long_name()},
                            {"m", task.m},
                            {"ground_truths", task.ground_truths},
                            {"steps", options.steps},
                            {"seed", options.seed},
                            {"summary", summary_to_json(run.summary)}};
  std::ofstream side(path.string() + ".json", std::ios::trunc);
  if (!side) throw CheckpointError("cannot write toy manifest " + path.string() + ".json");
  side << j.dump(2) << '\n';
}

}  // namespace lmcl
