#include <cstdio>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmcl/checkpoint.hpp"
#include "lmcl/corpus.hpp"
#include "lmcl/discriminator.hpp"
#include "lmcl/generator.hpp"
#include "lmcl/metrics.hpp"
#include "lmcl/service.hpp"
#include "lmcl/svg.hpp"
#include "lmcl/synth.hpp"
#include "lmcl/toylab.hpp"
#include "lmcl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

lmcl::Vocabulary pick_vocabulary(const std::string& vocab_file, const std::string& profile) {
  if (!vocab_file.empty()) return lmcl::Vocabulary::from_json_file(vocab_file);
  return lmcl::profile_vocabulary(lmcl::parse_profile(profile));
}

void print_report(const lmcl::LoadReport& r, const std::string& what) {
  std::cerr << what << ": " << r.loaded << " loaded, " << r.dropped_count << " dropped, " << r.malformed.size()
            << " malformed\n";
  for (const auto& [reason, n] : r.dropped_by_reason) std::cerr << "  dropped " << reason << ": " << n << '\n';
  for (const auto& w : r.warnings) std::cerr << "  warning: " << w << '\n';
}

struct TrainArgs {
  std::string data, vocab, out, loss = "mcl", preset = "desk";
  std::string profile = "double-column-doc";
  std::size_t synth = 2000, m = 10, epochs = 10, batch = 64, max_objects = lmcl::kDefaultMaxObjects, raster = 0;
  std::uint64_t seed = 0;
  double rwta_eps = 0.05, pair_tau = lmcl::kDefaultPairTau, band = lmcl::kDefaultBandTolerance, lr = 1e-3;
  double lr_final = 1.0, mixture_lr = 0.25, budget = 0.0;
};

int run_train(const TrainArgs& a) {
  const lmcl::Vocabulary vocab = pick_vocabulary(a.vocab, a.profile);
  std::vector<lmcl::Layout> corpus;
  if (a.data.empty()) {
    corpus = lmcl::synth_grammar(a.seed, a.synth, lmcl::parse_profile(a.profile));
    std::cerr << "synthesized " << corpus.size() << " " << a.profile << " layouts\n";
  } else {
    lmcl::FilterRules rules;
    rules.max_objects = a.max_objects;
    rules.band_tolerance = a.band;
    auto c = lmcl::load_corpus(a.data, vocab, rules);
    print_report(c.report, a.data);
    corpus = std::move(c.layouts);
  }
  lmcl::TrainConfig cfg;
  cfg.model = a.preset == "full" ? lmcl::ModelConfig::full() : lmcl::ModelConfig::desk();
  cfg.model.m = a.m;
  cfg.model.loss = lmcl::LossVariant::parse(a.loss, a.rwta_eps);
  cfg.model.pair_tau = a.pair_tau;
  cfg.model.max_objects = a.max_objects;
  if (a.raster) cfg.model.encoder.raster_res = a.raster;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.learning_rate = a.lr;
  cfg.lr_final_factor = a.lr_final;
  cfg.mixture_lr_factor = a.mixture_lr;
  cfg.time_budget_seconds = a.budget;
  fs::create_directories(a.out);
  const auto result = lmcl::train(corpus, vocab, cfg, fs::path(a.out), [](const lmcl::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " total " << e.total << " cat " << e.category << " stop " << e.stop << " bbox "
              << e.bbox << " paired " << e.paired << " unpaired " << e.unpaired_mass << " (" << e.seconds << "s)\n";
  });
  if (result.diverged) {
    std::cerr << "training diverged: " << result.diagnostic << '\n';
    return 2;
  }
  std::cout << "best epoch " << result.best_epoch << " total " << result.best_total << "; wrote " << a.out << "/model.ckpt\n";
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, hard, soft, out;
  std::size_t count = 5, max_objects = lmcl::kDefaultMaxObjects;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  bool svg = false;
};

int run_generate(const GenerateArgs& a) {
  const auto model = lmcl::LayoutModel::load(a.checkpoint);
  json req = {{"count", a.count}, {"seed", a.seed}, {"temperature", a.temperature}, {"max_objects", a.max_objects}};
  if (!a.hard.empty()) {
    json h = read_json(a.hard);
    // Accept a bare object array or a whole layout.
    req["hard"] = h.is_object() && h.contains("objects") ? h["objects"] : h;
  }
  if (!a.soft.empty()) req["soft"] = read_json(a.soft);
  const auto request = lmcl::parse_generation_request(req.dump(), model.vocabulary());
  const auto layouts = lmcl::generate(request, model);
  if (a.out.empty()) {
    lmcl::write_corpus(std::cout, layouts, model.vocabulary());
    return 0;
  }
  fs::create_directories(a.out);
  lmcl::save_corpus(fs::path(a.out) / "generated.jsonl", layouts, model.vocabulary());
  if (a.svg) {
    for (std::size_t i = 0; i < layouts.size(); ++i) {
      write_text(fs::path(a.out) / ("candidate_" + std::to_string(i) + ".svg"), lmcl::render_svg(layouts[i], model.vocabulary()));
    }
  }
  std::cout << "wrote " << layouts.size() << " layouts to " << a.out << '\n';
  return 0;
}

struct EvalArgs {
  std::string real, generated, discriminator, fit, report, vocab, profile = "double-column-doc";
  std::uint64_t seed = 0;
  std::size_t disc_epochs = 8;
};

int run_eval(const EvalArgs& a) {
  std::optional<lmcl::Discriminator> disc;
  if (!a.discriminator.empty() && a.fit.empty()) disc.emplace(lmcl::Discriminator::load(a.discriminator));
  const lmcl::Vocabulary vocab = disc ? disc->vocabulary() : pick_vocabulary(a.vocab, a.profile);

  lmcl::MetricReport report;
  lmcl::FilterRules as_is;
  as_is.canonicalize = false;
  const auto gen = lmcl::load_corpus(a.generated, vocab, as_is);
  print_report(gen.report, a.generated);
  report.alignment = lmcl::alignment(gen.layouts);
  report.diversity = lmcl::diversity_stats(gen.layouts, vocab);
  std::optional<lmcl::Corpus> real;
  if (!a.real.empty()) {
    real = lmcl::load_corpus(a.real, vocab);
    print_report(real->report, a.real);
    report.reference_alignment = lmcl::alignment(real->layouts);
  }
  if (!a.fit.empty()) {
    if (!real) throw std::runtime_error("--fit-discriminator needs --real");
    lmcl::DiscriminatorConfig dc;
    dc.seed = a.seed;
    dc.epochs = a.disc_epochs;
    auto trained = lmcl::train_discriminator(real->layouts, vocab, dc);
    std::cerr << "discriminator held-out accuracy " << trained.heldout_accuracy << '\n';
    for (const auto& w : trained.warnings) report.warnings.push_back(w);
    trained.discriminator.save(a.fit);
    disc.emplace(std::move(trained.discriminator));
  }
  if (disc) {
    report.fake_positive = lmcl::fake_positive(gen.layouts, *disc);
    if (real) {
      report.fid = lmcl::fid(disc->feature_matrix(gen.layouts), disc->feature_matrix(real->layouts), &report.warnings);
    } else {
      report.warnings.push_back("fid needs --real; omitted");
    }
  } else {
    report.warnings.push_back("no discriminator given; fid and fake_positive omitted");
  }
  const std::string text = report.to_json() + "\n";
  if (a.report.empty()) {
    std::cout << text;
  } else {
    write_text(a.report, text);
    std::cout << "wrote " << a.report << '\n';
  }
  return 0;
}

struct ToyArgs {
  std::string variant = "mcl", out;
  std::size_t gts = 3, m = 10, steps = 8000, seeds = 1;
  std::uint64_t seed = 0;
};

int run_toy(const ToyArgs& a) {
  const lmcl::ToyTask task = lmcl::ToyTask::with_ground_truths(a.gts, a.m);
  lmcl::ToyOptions base;
  base.steps = a.steps;
  if (!a.out.empty()) fs::create_directories(a.out);
  std::vector<lmcl::LossVariant> variants;
  if (a.variant == "all") {
    for (const char* v : {"mcl", "wta", "rwta", "ewta"}) variants.push_back(lmcl::LossVariant::parse(v));
  } else {
    variants.push_back(lmcl::LossVariant::parse(a.variant));
  }
  json table = json::array();
  for (const auto& v : variants) {
    std::vector<double> unpaired, poor, stuck;
    for (std::size_t s = 0; s < a.seeds; ++s) {
      lmcl::ToyOptions o = base;
      o.variant = v;
      o.seed = a.seed + s;
      const auto run = lmcl::run_toy(task, o);
      const auto& sum = run.summary;
      std::cout << v.cli_name() << " seed " << o.seed << ": paired " << sum.paired_count << " stuck " << sum.stuck_count
                << " unpaired_prob " << sum.unpaired_probability << " poor_prob " << sum.poor_probability
                << (sum.converged ? " converged" : " not-converged") << '\n';
      if (!a.out.empty()) {
        const std::string stem = std::string(v.cli_name()) + "_seed" + std::to_string(o.seed);
        std::ofstream csv(fs::path(a.out) / (stem + ".csv"), std::ios::trunc);
        lmcl::write_snapshots_csv(csv, run);
        write_text(fs::path(a.out) / (stem + ".json"), lmcl::summary_json(sum) + "\n");
        if (s == 0) lmcl::save_toy(fs::path(a.out) / (std::string(v.cli_name()) + ".ckpt"), task, o, run);
      }
      table.push_back({{"variant", v.long_name()},
                       {"seed", o.seed},
                       {"paired", sum.paired_count},
                       {"stuck", sum.stuck_count},
                       {"unpaired_probability", sum.unpaired_probability},
                       {"poor_probability", sum.poor_probability},
                       {"converged", sum.converged}});
    }
  }
  if (!a.out.empty()) write_text(fs::path(a.out) / "summary.json", table.dump(2) + "\n");
  return 0;
}

lmcl::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& checkpoint, const std::string& host, int port) {
  lmcl::Service service(lmcl::Service::load_snapshot(checkpoint));
  const int bound = service.bind(host, port);
  if (bound < 0) {
    std::cerr << "cannot bind " << host << ":" << port << '\n';
    return 1;
  }
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving " << checkpoint << " on http://" << host << ":" << bound << std::endl;
  service.serve();
  g_service = nullptr;
  return 0;
}

int run_inspect(const std::string& path) {
  const json j = read_json(path + ".json");
  const std::string format = j.value("format", "");
  std::cout << "checkpoint " << path << " (" << lmcl::file_hash(path) << ")\nformat " << format << '\n';
  if (format == "layout-mcl-toy") {
    const auto& s = j.at("summary");
    std::cout << "variant " << j.at("variant").get<std::string>() << ", M " << j.at("m") << ", ground truths "
              << j.at("ground_truths").size() << '\n';
    std::cout << "P " << s.at("paired_count") << '\n';
    std::cout << "unpaired phi mass " << s.at("unpaired_probability") << '\n';
    return 0;
  }
  std::cout << j.dump(2) << '\n';
  if (j.contains("pairing")) {
    std::cout << "P " << j["pairing"].at("paired_total") << '\n';
    std::cout << "unpaired phi mass " << j["pairing"].at("unpaired_mass") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layout-mcl: multi-choice layout generation"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a layout model");
  train->add_option("--data", ta.data, "JSON-lines corpus (omit to synthesize from --profile)");
  train->add_option("--profile", ta.profile, "synthetic profile and default vocabulary")
      ->check(CLI::IsMember({"single-column-doc", "double-column-doc", "mobile-app"}));
  train->add_option("--vocab", ta.vocab, "vocabulary JSON file");
  train->add_option("--synth", ta.synth, "layouts to synthesize when --data is absent");
  train->add_option("--loss", ta.loss, "wta | rwta | ewta | mcl");
  train->add_option("--m", ta.m, "hypotheses per category");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--batch", ta.batch);
  train->add_option("--lr", ta.lr);
  train->add_option("--lr-final-factor", ta.lr_final, "geometric learning-rate decay target");
  train->add_option("--mixture-lr-factor", ta.mixture_lr, "mixture layer rate as a fraction of --lr");
  train->add_option("--seed", ta.seed);
  train->add_option("--out", ta.out)->required();
  train->add_option("--rwta-eps", ta.rwta_eps);
  train->add_option("--pair-tau", ta.pair_tau);
  train->add_option("--max-objects", ta.max_objects);
  train->add_option("--band-tolerance", ta.band);
  train->add_option("--raster-res", ta.raster);
  train->add_option("--preset", ta.preset, "desk | full")->check(CLI::IsMember({"desk", "full"}));
  train->add_option("--time-budget", ta.budget, "seconds; 0 is unlimited");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "sample layouts from a checkpoint");
  gen->add_option("--checkpoint", ga.checkpoint)->required()->check(CLI::ExistingFile);
  gen->add_option("--hard", ga.hard, "JSON file: hard prefix objects")->check(CLI::ExistingFile);
  gen->add_option("--soft", ga.soft, "JSON file: soft constraints")->check(CLI::ExistingFile);
  gen->add_option("--count", ga.count);
  gen->add_option("--seed", ga.seed);
  gen->add_option("--temperature", ga.temperature);
  gen->add_option("--max-objects", ga.max_objects);
  gen->add_option("--out", ga.out, "output directory (stdout when omitted)");
  gen->add_flag("--svg", ga.svg, "also write one SVG per candidate");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score a generated corpus");
  eval->add_option("--generated", ea.generated)->required()->check(CLI::ExistingFile);
  eval->add_option("--real", ea.real)->check(CLI::ExistingFile);
  eval->add_option("--discriminator", ea.discriminator, "trained discriminator checkpoint");
  eval->add_option("--fit-discriminator", ea.fit, "train a discriminator on --real and save it here");
  eval->add_option("--disc-epochs", ea.disc_epochs);
  eval->add_option("--report", ea.report, "report path (stdout when omitted)");
  eval->add_option("--vocab", ea.vocab);
  eval->add_option("--profile", ea.profile);
  eval->add_option("--seed", ea.seed);

  ToyArgs ya;
  auto* toy = app.add_subcommand("toy", "2D multi-hypothesis toy experiment");
  toy->add_option("--variant", ya.variant, "wta | rwta | ewta | mcl | all");
  toy->add_option("--gts", ya.gts, "ground-truth count");
  toy->add_option("--m", ya.m);
  toy->add_option("--steps", ya.steps);
  toy->add_option("--seeds", ya.seeds);
  toy->add_option("--seed", ya.seed, "first seed");
  toy->add_option("--out", ya.out);

  std::string serve_ckpt, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP generation service");
  serve->add_option("--checkpoint", serve_ckpt)->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print a checkpoint manifest and pairing summary");
  inspect->add_option("checkpoint", inspect_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return run_train(ta);
    if (*gen) return run_generate(ga);
    if (*eval) return run_eval(ea);
    if (*toy) return run_toy(ya);
    if (*serve) return run_serve(serve_ckpt, host, port);
    if (*inspect) return run_inspect(inspect_path);
  } catch (const lmcl::RequestError& e) {
    std::cerr << "invalid request: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
