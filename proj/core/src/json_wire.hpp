#pragma once

// JSON wire helpers shared by the corpus reader, request parsing and the
// service. Not installed: nlohmann/json stays out of the public headers.

#include <nlohmann/json.hpp>

#include "lmcl/layout.hpp"

namespace lmcl::detail {

inline nlohmann::json object_json(const LayoutObject& o, const Vocabulary& vocab) {
  return {{"category", vocab.name(o.category)}, {"bbox", {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h}}};
}

inline nlohmann::json layout_json(const Layout& layout, const Vocabulary& vocab) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : layout.objects) objs.push_back(object_json(o, vocab));
  nlohmann::json j = {{"canvas", {{"aspect", layout.aspect}}}, {"objects", std::move(objs)}};
  if (!layout.source.empty()) j["source"] = layout.source;
  return j;
}

}  // namespace lmcl::detail
