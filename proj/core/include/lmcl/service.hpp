#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "lmcl/model.hpp"

namespace httplib {
class Server;
}

namespace lmcl {

/// Immutable model state shared by in-flight requests.
struct ModelSnapshot {
  LayoutModel model;
  std::string checkpoint_hash;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Generation service. Handlers are plain member functions so they can be
/// exercised without a socket; listen() mounts them on an HTTP server.
class Service {
 public:
  explicit Service(std::shared_ptr<const ModelSnapshot> snapshot);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads a checkpoint; throws CheckpointError with a diagnostic on failure.
  static std::shared_ptr<const ModelSnapshot> load_snapshot(const std::filesystem::path& checkpoint);

  /// Replaces the whole snapshot; requests already running keep the old one.
  void swap(std::shared_ptr<const ModelSnapshot> next);
  [[nodiscard]] std::shared_ptr<const ModelSnapshot> snapshot() const;

  [[nodiscard]] HttpReply categories() const;
  [[nodiscard]] HttpReply health() const;
  /// POST /api/generate. Malformed requests give 400 with {"error", "field"}.
  [[nodiscard]] HttpReply generate(std::string_view body) const;

  [[nodiscard]] std::uint64_t requests() const noexcept { return requests_.load(); }

  /// Binds host:port (port 0 picks a free one) and returns the bound port,
  /// or -1 on failure. serve() then blocks until stop().
  int bind(const std::string& host, int port);
  void serve();
  void stop();

 private:
  void mount();

  mutable std::mutex mutex_;
  std::shared_ptr<const ModelSnapshot> snapshot_;
  mutable std::atomic<std::uint64_t> requests_{0};
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace lmcl
