#include "lmcl/svg.hpp"

#include <array>
#include <iomanip>
#include <sstream>

namespace lmcl {

namespace {

constexpr std::array<std::string_view, 10> kPalette = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                       "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string_view category_color(CategoryId c) { return kPalette[c % kPalette.size()]; }

std::string render_svg(const Layout& layout, const Vocabulary& vocab, double width) {
  const double height = width / (layout.aspect > 0.0 ? layout.aspect : 1.0);
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << width << R"(" height=")" << height
      << R"(" viewBox="0 0 )" << width << ' ' << height << R"(">)";
  out << R"(<rect x="0" y="0" width=")" << width << R"(" height=")" << height
      << R"(" fill="#ffffff" stroke="#333333"/>)";
  for (const auto& o : layout.objects) {
    const auto name = o.category < vocab.size() ? vocab.name(o.category) : std::string("unknown");
    out << R"(<rect x=")" << o.bbox.x * width << R"(" y=")" << o.bbox.y * height << R"(" width=")"
        << o.bbox.w * width << R"(" height=")" << o.bbox.h * height << R"(" fill=")" << category_color(o.category)
        << R"(" fill-opacity="0.7" stroke="#222222" stroke-width="1"><title>)" << escape(name) << "</title></rect>";
  }
  out << "</svg>";
  return out.str();
}

}  // namespace lmcl
