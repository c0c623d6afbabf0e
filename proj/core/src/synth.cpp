#include "lmcl/synth.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace lmcl {

namespace {

constexpr double kDocAspect = 8.5 / 11.0;
constexpr double kMobileAspect = 9.0 / 16.0;
constexpr double kGap = 0.03;

// Document vocabulary ids.
enum Doc : CategoryId { text = 0, title, figure, table, list };
// Mobile vocabulary ids.
enum Mobile : CategoryId { toolbar = 0, image, m_text, icon, button, input, list_item };

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }
  std::size_t pick(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }

  void put(CategoryId c, double x, double y, double w, double h) { objects.push_back({c, {x, y, w, h}, false}); }

  std::vector<LayoutObject> objects;

 private:
  Rng& rng_;
};

double bottom(const LayoutObject& o) { return o.bbox.y + o.bbox.h; }

Layout double_column(Rng& rng) {
  Builder b(rng);
  const double tx = b.u(0.06, 0.10);
  b.put(title, tx, b.u(0.03, 0.05), 1.0 - 2.0 * tx, b.u(0.05, 0.07));
  double cursor = bottom(b.objects.back()) + kGap;

  const bool equal_split = b.coin();
  const double lx = 0.06 + b.u(-0.005, 0.005);
  const double lw = equal_split ? 0.42 : 0.28;
  const double rx = equal_split ? 0.52 : 0.38;
  const double rw = equal_split ? 0.42 : 0.56;

  auto band = [&] {
    const double h = b.u(0.16, 0.20);
    b.put(text, lx, cursor, lw, h);
    b.put(text, rx, cursor, rw, b.u(0.14, h));
    cursor += h + kGap;
  };
  auto fig = [&] {
    const double h = b.u(0.20, 0.26);
    b.put(figure, 0.06, cursor, 0.88, h);
    cursor += h + kGap;
  };

  if (b.coin()) {
    fig();
    band();
    band();
  } else {
    band();
    band();
    fig();
  }
  return {std::move(b.objects), kDocAspect, "synth:double-column-doc"};
}

Layout single_column(Rng& rng) {
  Builder b(rng);
  const double tx = b.u(0.08, 0.12);
  b.put(title, tx, b.u(0.03, 0.06), 1.0 - 2.0 * tx, b.u(0.05, 0.08));
  double cursor = bottom(b.objects.back()) + kGap;

  const std::size_t blocks = b.pick(2, 5);
  const double slot = (0.97 - cursor) / static_cast<double>(blocks);
  static constexpr CategoryId kinds[] = {text, text, figure, table, list};
  for (std::size_t i = 0; i < blocks; ++i) {
    const CategoryId c = kinds[b.pick(0, 4)];
    const double h = (slot - kGap) * b.u(0.6, 1.0);
    if (c == figure && b.coin()) {
      b.put(c, 0.25, cursor, 0.5, h);
    } else {
      b.put(c, 0.1, cursor, 0.8, h);
    }
    cursor += slot;
  }
  return {std::move(b.objects), kDocAspect, "synth:single-column-doc"};
}

Layout mobile(Rng& rng) {
  Builder b(rng);
  b.put(toolbar, 0.0, 0.0, 1.0, b.u(0.07, 0.09));
  double cursor = bottom(b.objects.back()) + kGap;
  if (b.coin()) {
    const double h = b.u(0.30, 0.40);
    b.put(image, 0.05, cursor, 0.9, h);
    cursor += h + kGap;
    b.put(m_text, 0.05, cursor, 0.9, b.u(0.10, 0.20));
  } else {
    const double ix = b.u(0.04, 0.06);
    b.put(input, ix, cursor, 1.0 - 2.0 * ix, 0.06);
    cursor += 0.06 + kGap;
    b.put(list_item, 0.05, cursor, 0.9, b.u(0.30, 0.45));
  }
  const double bx = b.u(0.25, 0.30);
  b.put(button, bx, b.u(0.84, 0.88), 1.0 - 2.0 * bx, 0.07);
  return {std::move(b.objects), kMobileAspect, "synth:mobile-app"};
}

}  // namespace

Profile parse_profile(std::string_view name) {
  if (name == "single-column-doc") return Profile::single_column_doc;
  if (name == "double-column-doc") return Profile::double_column_doc;
  if (name == "mobile-app") return Profile::mobile_app;
  throw std::invalid_argument("unknown profile '" + std::string(name) +
                              "' (expected single-column-doc, double-column-doc or mobile-app)");
}

std::string_view profile_name(Profile p) {
  switch (p) {
    case Profile::single_column_doc: return "single-column-doc";
    case Profile::double_column_doc: return "double-column-doc";
    case Profile::mobile_app: return "mobile-app";
  }
  return "unknown";
}

Vocabulary profile_vocabulary(Profile p) {
  if (p == Profile::mobile_app) return Vocabulary({"toolbar", "image", "text", "icon", "button", "input", "list_item"});
  return Vocabulary({"text", "title", "figure", "table", "list"});
}

std::vector<Layout> synth_grammar(std::uint64_t seed, std::size_t n, Profile profile) {
  Rng rng = derive_rng(seed, 0x5e17);
  std::vector<Layout> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Layout l;
    switch (profile) {
      case Profile::single_column_doc: l = single_column(rng); break;
      case Profile::double_column_doc: l = double_column(rng); break;
      case Profile::mobile_app: l = mobile(rng); break;
    }
    out.push_back(reading_order(l));
  }
  return out;
}

Layout perturb_fake(const Layout& layout, Rng& rng, double magnitude) {
  Layout out = layout;
  if (magnitude == 0.0) return out;
  std::uniform_real_distribution<double> noise(-magnitude, magnitude);
  for (auto& o : out.objects) {
    auto& b = o.bbox;
    b.x += noise(rng);
    b.y += noise(rng);
    b.w = std::clamp(b.w + noise(rng), 0.0, 1.0);
    b.h = std::clamp(b.h + noise(rng), 0.0, 1.0);
    b.x = std::max(b.x, 0.0);
    b.y = std::max(b.y, 0.0);
    if (b.x + b.w > 1.0) b.x = 1.0 - b.w;
    if (b.y + b.h > 1.0) b.y = 1.0 - b.h;
  }
  return out;
}

}  // namespace lmcl
