#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmcl/tensor.hpp"

namespace lmcl {

inline constexpr double kBoxEpsilon = 1e-6;
inline constexpr std::size_t kDefaultMaxObjects = 10;
inline constexpr double kDefaultBandTolerance = 0.02;

using CategoryId = std::size_t;

/// Canvas-normalised box; (x, y) is the top-left corner, origin at the canvas top-left.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct LayoutObject {
  CategoryId category = 0;
  BBox bbox;
  bool stop = false;

  friend bool operator==(const LayoutObject&, const LayoutObject&) = default;
};

struct Layout {
  std::vector<LayoutObject> objects;
  double aspect = 1.0;  // canvas width / height
  std::string source;

  friend bool operator==(const Layout&, const Layout&) = default;
};

using Prefix = std::span<const LayoutObject>;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  static Vocabulary from_json_file(const std::filesystem::path& path);
  static Vocabulary from_json(std::string_view text);
  [[nodiscard]] std::string to_json() const;

  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] const std::string& name(CategoryId id) const { return names_.at(id); }
  [[nodiscard]] std::optional<CategoryId> find(std::string_view name) const;
  [[nodiscard]] CategoryId id(std::string_view name) const;
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, CategoryId> lookup_;
};

/// True when the box lies in the unit canvas (edges may overshoot by kBoxEpsilon).
bool box_in_canvas(const BBox& b, double eps = kBoxEpsilon);

/// Reason the layout violates an invariant, or nullopt when valid.
std::optional<std::string> validate_layout(const Layout& layout, std::size_t vocab_size,
                                           std::size_t max_objects = kDefaultMaxObjects);

/// Sets stop on the last object only.
void assign_stop_flags(std::vector<LayoutObject>& objects);

/// Human reading order: objects whose top edges lie within `band_tolerance`
/// of a band's first (topmost) object share that band; bands run top to
/// bottom and objects within a band left to right. Stable and idempotent.
Layout reading_order(const Layout& layout, double band_tolerance = kDefaultBandTolerance);

/// Category-channel occupancy grid [C, R, R]: cell (c,i,j) is 1 when an object
/// of category c covers the cell centre ((j+0.5)/R, (i+0.5)/R).
Tensor rasterize(Prefix prefix, std::size_t vocab_size, std::size_t resolution);

/// Writes the same grid into `out` (length C*R*R), which must be zeroed.
void rasterize_into(Prefix prefix, std::size_t vocab_size, std::size_t resolution, std::span<double> out);

}  // namespace lmcl
