#include "lmcl/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "json_wire.hpp"
#include "lmcl/checkpoint.hpp"
#include "lmcl/generator.hpp"
#include "lmcl/svg.hpp"

namespace lmcl {

namespace {

HttpReply json_reply(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }

HttpReply error_reply(int status, const std::string& field, const std::string& message) {
  return json_reply(status, {{"error", message}, {"field", field}});
}

}  // namespace

Service::Service(std::shared_ptr<const ModelSnapshot> snapshot) : snapshot_(std::move(snapshot)) {
  if (!snapshot_) throw std::invalid_argument("service needs a model snapshot");
}

Service::~Service() { stop(); }

std::shared_ptr<const ModelSnapshot> Service::load_snapshot(const std::filesystem::path& checkpoint) {
  auto snap = std::make_shared<ModelSnapshot>(ModelSnapshot{LayoutModel::load(checkpoint), file_hash(checkpoint)});
  if (snap->model.vocabulary().size() == 0) throw CheckpointError("checkpoint has an empty vocabulary");
  return snap;
}

void Service::swap(std::shared_ptr<const ModelSnapshot> next) {
  if (!next) throw std::invalid_argument("service needs a model snapshot");
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(next);
}

std::shared_ptr<const ModelSnapshot> Service::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

HttpReply Service::categories() const {
  ++requests_;
  return json_reply(200, {{"categories", snapshot()->model.vocabulary().names()}});
}

HttpReply Service::health() const {
  ++requests_;
  return json_reply(200, {{"status", "ok"}, {"checkpoint", snapshot()->checkpoint_hash}});
}

HttpReply Service::generate(std::string_view body) const {
  ++requests_;
  const auto snap = snapshot();
  const Vocabulary& vocab = snap->model.vocabulary();
  GenerationRequest request;
  bool svg = false;
  try {
    request = parse_generation_request(body, vocab);
    // The body parsed above, so this cannot throw.
    const auto j = nlohmann::json::parse(body);
    if (j.contains("format")) {
      if (j["format"] == "svg") {
        svg = true;
      } else if (j["format"] != "json") {
        return error_reply(400, "format", "expected \"json\" or \"svg\"");
      }
    }
  } catch (const RequestError& e) {
    return error_reply(400, e.field(), e.what());
  }
  std::vector<Layout> layouts;
  try {
    layouts = lmcl::generate(request, snap->model);
  } catch (const RequestError& e) {
    return error_reply(400, e.field(), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "", e.what());
  }
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& l : layouts) {
    nlohmann::json c = {{"layout", detail::layout_json(l, vocab)}};
    if (svg) c["svg"] = render_svg(l, vocab);
    candidates.push_back(std::move(c));
  }
  return json_reply(200, {{"candidates", std::move(candidates)}});
}

void Service::mount() {
  server_ = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server_->Get("/api/categories", [this, send](const httplib::Request&, httplib::Response& res) { send(res, categories()); });
  server_->Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  server_->Post("/api/generate",
                [this, send](const httplib::Request& req, httplib::Response& res) { send(res, generate(req.body)); });
  // Lets a browser client served from another origin call the API.
  server_->set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server_->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

int Service::bind(const std::string& host, int port) {
  mount();
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void Service::serve() {
  if (!server_) throw std::logic_error("service: bind() before serve()");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace lmcl
