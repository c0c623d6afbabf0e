#include "fixtures.hpp"

#include <atomic>
#include <random>

#include <unistd.h>

namespace lmcl::testing {

EncoderConfig tiny_encoder() {
  EncoderConfig e;
  e.gru_layers = 2;
  e.gru_hidden = 4;
  e.conv_layers = 2;
  e.conv_channels = 2;
  e.conv_kernel = 3;
  e.raster_res = 8;
  e.spatial_width = 4;
  return e;
}

ModelConfig tiny_model_config(std::size_t m) {
  ModelConfig c;
  c.encoder = tiny_encoder();
  c.m = m;
  c.predictor_hidden = 8;
  c.mixture_hidden = 8;
  c.head_hidden = 8;
  return c;
}

Layout make_layout(std::initializer_list<LayoutObject> objects, double aspect) {
  Layout l;
  l.objects.assign(objects.begin(), objects.end());
  l.aspect = aspect;
  assign_stop_flags(l.objects);
  return l;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("lmcl-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace lmcl::testing
