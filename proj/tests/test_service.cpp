#include <doctest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lmcl/checkpoint.hpp"
#include "lmcl/service.hpp"
#include "support/fixtures.hpp"

using namespace lmcl;
using json = nlohmann::json;
using lmcl::testing::TempDir;
using lmcl::testing::tiny_model_config;

namespace {

Vocabulary vocab() { return Vocabulary({"toolbar", "text", "figure", "button"}); }

std::filesystem::path write_model(const TempDir& dir, const std::string& name, std::uint64_t seed) {
  LayoutModel model(vocab(), tiny_model_config(3));
  model.init(seed);
  const auto path = dir / name;
  model.save(path);
  return path;
}

struct Running {
  Service service;
  int port = -1;
  std::thread thread;

  explicit Running(std::shared_ptr<const ModelSnapshot> snap) : service(std::move(snap)) {
    port = service.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { service.serve(); });
  }
  ~Running() {
    service.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

const char* kRequest =
    R"({"hard":[{"category":"toolbar","bbox":[0.0,0.0,1.0,0.08]}],"soft":[{"category":"figure","size":[0.4,0.3]}],"count":5,"seed":42})";

}  // namespace

TEST_CASE("direct handlers") {
  TempDir dir("service_direct");
  const auto path = write_model(dir, "m.ckpt", 1);
  Service s(Service::load_snapshot(path));

  const auto cats = s.categories();
  CHECK(cats.status == 200);
  CHECK(json::parse(cats.body)["categories"] == json(vocab().names()));

  const auto health = json::parse(s.health().body);
  CHECK(health["status"] == "ok");
  CHECK(health["checkpoint"] == file_hash(path));

  const auto reply = s.generate(kRequest);
  REQUIRE(reply.status == 200);
  const auto body = json::parse(reply.body);
  REQUIRE(body["candidates"].size() == 5);
  for (const auto& c : body["candidates"]) {
    const auto& first = c["layout"]["objects"][0];
    CHECK(first["category"] == "toolbar");
    CHECK(first["bbox"] == json::array({0.0, 0.0, 1.0, 0.08}));
    CHECK(c["layout"]["objects"][1]["category"] == "figure");
    CHECK_FALSE(c.contains("svg"));
  }
  CHECK(s.generate(kRequest).body == reply.body);
  CHECK(s.requests() == 4);
}

TEST_CASE("malformed requests name the field") {
  TempDir dir("service_bad");
  Service s(Service::load_snapshot(write_model(dir, "m.ckpt", 1)));
  auto field = [&](const char* body) {
    const auto r = s.generate(body);
    CHECK(r.status == 400);
    return json::parse(r.body)["field"].get<std::string>();
  };
  CHECK(field("{") == "body");
  CHECK(field(R"({"count":0})") == "count");
  CHECK(field(R"({"hard":[{"category":"sidebar","bbox":[0,0,1,1]}]})") == "hard[0].category");
  CHECK(field(R"({"soft":[{"category":"text","size":[0.5]}]})") == "soft[0].size");
  CHECK(field(R"({"format":"png"})") == "format");
}

TEST_CASE("svg format") {
  TempDir dir("service_svg");
  Service s(Service::load_snapshot(write_model(dir, "m.ckpt", 1)));
  const auto r = s.generate(R"({"count":2,"seed":1,"format":"svg"})");
  REQUIRE(r.status == 200);
  for (const auto& c : json::parse(r.body)["candidates"]) {
    const auto svg = c["svg"].get<std::string>();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<rect") != std::string::npos);
  }
}

TEST_CASE("corrupt checkpoint fails at startup") {
  TempDir dir("service_corrupt");
  const auto path = write_model(dir, "m.ckpt", 1);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "garbage";
  }
  CHECK_THROWS_AS(Service::load_snapshot(path), CheckpointError);
  CHECK_THROWS_AS(Service::load_snapshot(dir / "missing.ckpt"), CheckpointError);
}

TEST_CASE("hot swap replaces the snapshot") {
  TempDir dir("service_swap");
  const auto a = write_model(dir, "a.ckpt", 1);
  const auto b = write_model(dir, "b.ckpt", 2);
  Service s(Service::load_snapshot(a));
  const auto held = s.snapshot();
  const auto before = s.generate(kRequest).body;
  s.swap(Service::load_snapshot(b));
  CHECK(json::parse(s.health().body)["checkpoint"] == file_hash(b));
  CHECK(s.generate(kRequest).body != before);
  // A request that grabbed the old snapshot keeps a valid model.
  CHECK(held->checkpoint_hash == file_hash(a));
  CHECK(held->model.vocabulary() == vocab());
}

TEST_CASE("http endpoints") {
  TempDir dir("service_http");
  Running server(Service::load_snapshot(write_model(dir, "m.ckpt", 1)));
  auto client = server.client();

  const auto cats = client.Get("/api/categories");
  REQUIRE(cats);
  CHECK(cats->status == 200);
  CHECK(json::parse(cats->body)["categories"].size() == 4);
  CHECK(cats->get_header_value("Access-Control-Allow-Origin") == "*");

  const auto health = client.Get("/api/health");
  REQUIRE(health);
  CHECK(json::parse(health->body)["status"] == "ok");

  const auto gen = client.Post("/api/generate", kRequest, "application/json");
  REQUIRE(gen);
  CHECK(gen->status == 200);
  const auto again = client.Post("/api/generate", kRequest, "application/json");
  REQUIRE(again);
  CHECK(again->body == gen->body);

  const auto bad = client.Post("/api/generate", R"({"count":"many"})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["field"] == "count");

  const auto preflight = client.Options("/api/generate");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
}

TEST_CASE("promote a candidate and regenerate") {
  TempDir dir("service_promote");
  Running server(Service::load_snapshot(write_model(dir, "m.ckpt", 3)));
  auto client = server.client();
  const auto first = client.Post("/api/generate", kRequest, "application/json");
  REQUIRE(first);
  REQUIRE(first->status == 200);
  const auto chosen = json::parse(first->body)["candidates"][2]["layout"]["objects"];

  // The promoted candidate becomes the new hard prefix, as the designer loop does.
  json request = {{"hard", json::array()}, {"count", 3}, {"seed", 7}, {"max_objects", 10}};
  for (const auto& o : chosen) {
    if (request["hard"].size() == 9) break;
    request["hard"].push_back({{"category", o["category"]}, {"bbox", o["bbox"]}});
  }
  const auto second = client.Post("/api/generate", request.dump(), "application/json");
  REQUIRE(second);
  REQUIRE(second->status == 200);
  for (const auto& c : json::parse(second->body)["candidates"]) {
    const auto& objs = c["layout"]["objects"];
    REQUIRE(objs.size() >= request["hard"].size());
    for (std::size_t i = 0; i < request["hard"].size(); ++i) {
      CHECK(objs[i]["category"] == request["hard"][i]["category"]);
      CHECK(objs[i]["bbox"] == request["hard"][i]["bbox"]);
    }
  }
}

TEST_CASE("concurrent requests are served independently") {
  TempDir dir("service_concurrent");
  Running server(Service::load_snapshot(write_model(dir, "m.ckpt", 1)));
  std::vector<std::string> bodies(4);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    threads.emplace_back([&, i] {
      auto c = server.client();
      const auto r = c.Post("/api/generate", kRequest, "application/json");
      if (r) bodies[i] = r->body;
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& b : bodies) CHECK(b == bodies[0]);
  CHECK(!bodies[0].empty());
}
