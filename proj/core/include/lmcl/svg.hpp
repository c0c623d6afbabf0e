#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "lmcl/layout.hpp"

namespace lmcl {

/// Fill colour for a category index (cycles through a fixed palette).
std::string_view category_color(CategoryId c);

/// One <rect> per object over a white canvas `width` pixels wide; the height
/// follows the layout aspect ratio.
std::string render_svg(const Layout& layout, const Vocabulary& vocab, double width = 240.0);

}  // namespace lmcl
