#include "lmcl/layout.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lmcl {

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw std::invalid_argument("vocabulary must not be empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw std::invalid_argument("vocabulary contains an empty category name");
    if (!lookup_.emplace(names_[i], i).second) {
      throw std::invalid_argument("duplicate category name: " + names_[i]);
    }
  }
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array()) throw std::invalid_argument("vocabulary JSON must be an array of strings");
  return Vocabulary(j.get<std::vector<std::string>>());
}

Vocabulary Vocabulary::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string Vocabulary::to_json() const { return nlohmann::json(names_).dump(); }

std::optional<CategoryId> Vocabulary::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

CategoryId Vocabulary::id(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw std::out_of_range("unknown category: " + std::string(name));
}

bool box_in_canvas(const BBox& b, double eps) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return unit(b.x) && unit(b.y) && unit(b.w) && unit(b.h) && b.x + b.w <= 1.0 + eps && b.y + b.h <= 1.0 + eps;
}

std::optional<std::string> validate_layout(const Layout& layout, std::size_t vocab_size, std::size_t max_objects) {
  const auto n = layout.objects.size();
  if (n == 0) return "layout has no objects";
  if (n > max_objects) return "layout has " + std::to_string(n) + " objects (max " + std::to_string(max_objects) + ")";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = layout.objects[i];
    if (o.category >= vocab_size) return "object " + std::to_string(i) + " has unknown category";
    if (!box_in_canvas(o.bbox)) return "object " + std::to_string(i) + " bbox outside the canvas";
    if (o.stop != (i + 1 == n)) return "stop flag must be set on the last object only";
  }
  return std::nullopt;
}

void assign_stop_flags(std::vector<LayoutObject>& objects) {
  for (std::size_t i = 0; i < objects.size(); ++i) objects[i].stop = i + 1 == objects.size();
}

Layout reading_order(const Layout& layout, double band_tolerance) {
  const auto& objs = layout.objects;
  std::vector<std::size_t> by_top(objs.size());
  std::iota(by_top.begin(), by_top.end(), 0);
  std::stable_sort(by_top.begin(), by_top.end(),
                   [&](std::size_t a, std::size_t b) { return objs[a].bbox.y < objs[b].bbox.y; });

  std::vector<std::size_t> order;
  order.reserve(objs.size());
  std::size_t start = 0;
  while (start < by_top.size()) {
    const double anchor = objs[by_top[start]].bbox.y;
    std::size_t end = start + 1;
    while (end < by_top.size() && objs[by_top[end]].bbox.y - anchor < band_tolerance) ++end;
    std::vector<std::size_t> band(by_top.begin() + static_cast<std::ptrdiff_t>(start),
                                  by_top.begin() + static_cast<std::ptrdiff_t>(end));
    std::stable_sort(band.begin(), band.end(), [&](std::size_t a, std::size_t b) {
      const auto& ba = objs[a].bbox;
      const auto& bb = objs[b].bbox;
      if (ba.x != bb.x) return ba.x < bb.x;
      return ba.y < bb.y;
    });
    order.insert(order.end(), band.begin(), band.end());
    start = end;
  }

  Layout out = layout;
  for (std::size_t i = 0; i < order.size(); ++i) out.objects[i] = objs[order[i]];
  assign_stop_flags(out.objects);
  return out;
}

void rasterize_into(Prefix prefix, std::size_t vocab_size, std::size_t resolution, std::span<double> out) {
  const double r = static_cast<double>(resolution);
  for (const auto& o : prefix) {
    if (o.category >= vocab_size) throw std::out_of_range("rasterize: category outside vocabulary");
    const auto& b = o.bbox;
    double* plane = out.data() + o.category * resolution * resolution;
    for (std::size_t i = 0; i < resolution; ++i) {
      const double cy = (static_cast<double>(i) + 0.5) / r;
      if (cy < b.y || cy > b.y + b.h) continue;
      for (std::size_t j = 0; j < resolution; ++j) {
        const double cx = (static_cast<double>(j) + 0.5) / r;
        if (cx >= b.x && cx <= b.x + b.w) plane[i * resolution + j] = 1.0;
      }
    }
  }
}

Tensor rasterize(Prefix prefix, std::size_t vocab_size, std::size_t resolution) {
  if (resolution == 0) throw std::invalid_argument("rasterize: resolution must be positive");
  Tensor grid({vocab_size, resolution, resolution});
  rasterize_into(prefix, vocab_size, resolution, grid.data());
  return grid;
}

}  // namespace lmcl
