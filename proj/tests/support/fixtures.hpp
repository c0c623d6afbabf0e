#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>

#include "lmcl/model.hpp"

namespace lmcl::testing {

/// Small encoder (hidden 4, two 2-channel conv layers on an 8x8 raster).
EncoderConfig tiny_encoder();
/// tiny_encoder with M hypotheses and width-8 heads.
ModelConfig tiny_model_config(std::size_t m = 3);

/// Objects in the given order with the stop flag on the last one.
Layout make_layout(std::initializer_list<LayoutObject> objects, double aspect = 1.0);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace lmcl::testing
