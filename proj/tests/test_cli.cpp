#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lmcl/synth.hpp"
#include "support/fixtures.hpp"

using json = nlohmann::json;
using lmcl::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(LMCL_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

}  // namespace

TEST_CASE("unknown flags and subcommands are rejected") {
  CHECK(run("").code != 0);
  CHECK(run("toy --no-such-flag").code != 0);
  CHECK(run("frobnicate").code != 0);
  CHECK(run("generate --checkpoint /nonexistent/model.ckpt").code != 0);
  CHECK(run("--help").code == 0);
}

TEST_CASE("toy run writes snapshots and a checkpoint that inspect reads") {
  TempDir dir("cli_toy");
  const auto r = run("toy --variant mcl --seed 0 --out " + quoted(dir.path()));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mcl seed 0") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "mcl_seed0.csv"));
  CHECK(std::filesystem::exists(dir / "mcl_seed0.json"));
  const auto summary = read_json(dir / "summary.json");
  REQUIRE(summary.size() == 1);
  CHECK(summary[0]["variant"] == "mixture_wta");

  std::ifstream csv(dir / "mcl_seed0.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,hypothesis,x,y,phi");

  const auto inspect = run("inspect " + quoted(dir / "mcl.ckpt"));
  REQUIRE(inspect.code == 0);
  CHECK(inspect.out.find("format layout-mcl-toy") != std::string::npos);
  CHECK(inspect.out.find("P 3\n") != std::string::npos);
}

TEST_CASE("train, generate and evaluate end to end") {
  TempDir dir("cli_pipeline");
  const auto model_dir = dir / "model";
  const auto t = run("train --profile mobile-app --synth 24 --epochs 1 --batch 16 --m 3 --seed 2 --out " +
                     quoted(model_dir));
  REQUIRE(t.code == 0);
  CHECK(std::filesystem::exists(model_dir / "model.ckpt"));
  CHECK(std::filesystem::exists(model_dir / "log.csv"));
  CHECK(std::filesystem::exists(model_dir / "manifest.json"));

  {
    std::ofstream hard(dir / "hard.json");
    hard << R"([{"category":"toolbar","bbox":[0.0,0.0,1.0,0.08]}])";
  }
  const auto gen_dir = dir / "gen";
  const auto g = run("generate --checkpoint " + quoted(model_dir / "model.ckpt") + " --hard " + quoted(dir / "hard.json") +
                     " --count 4 --seed 5 --svg --out " + quoted(gen_dir));
  REQUIRE(g.code == 0);
  CHECK(std::filesystem::exists(gen_dir / "generated.jsonl"));
  CHECK(std::filesystem::exists(gen_dir / "candidate_3.svg"));

  std::ifstream lines(gen_dir / "generated.jsonl");
  std::size_t count = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    ++count;
    const auto obj = json::parse(line)["objects"][0];
    CHECK(obj["category"] == "toolbar");
    CHECK(obj["bbox"] == json::array({0.0, 0.0, 1.0, 0.08}));
  }
  CHECK(count == 4);

  // Same seed, same output on stdout.
  const auto a = run("generate --checkpoint " + quoted(model_dir / "model.ckpt") + " --count 3 --seed 9");
  const auto b = run("generate --checkpoint " + quoted(model_dir / "model.ckpt") + " --count 3 --seed 9");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const auto e = run("eval --profile mobile-app --generated " + quoted(gen_dir / "generated.jsonl") + " --report " +
                     quoted(dir / "report.json"));
  REQUIRE(e.code == 0);
  const auto report = read_json(dir / "report.json");
  CHECK(report.contains("alignment"));
  CHECK(report["alignment"].get<double>() >= 0.0);
  CHECK(report["fid"].is_null());
  CHECK(report["fake_positive"].is_null());

  const auto inspect = run("inspect " + quoted(model_dir / "model.ckpt"));
  REQUIRE(inspect.code == 0);
  CHECK(inspect.out.find("P ") != std::string::npos);
}

TEST_CASE("invalid generate request exits nonzero") {
  TempDir dir("cli_bad");
  const auto model_dir = dir / "model";
  REQUIRE(run("train --profile mobile-app --synth 8 --epochs 1 --m 2 --out " + quoted(model_dir)).code == 0);
  {
    std::ofstream hard(dir / "hard.json");
    hard << R"([{"category":"sidebar","bbox":[0.0,0.0,1.0,0.08]}])";
  }
  const auto r = run("generate --checkpoint " + quoted(model_dir / "model.ckpt") + " --hard " + quoted(dir / "hard.json"));
  CHECK(r.code != 0);
}
