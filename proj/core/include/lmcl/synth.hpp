#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lmcl/layout.hpp"
#include "lmcl/params.hpp"

namespace lmcl {

enum class Profile { single_column_doc, double_column_doc, mobile_app };

Profile parse_profile(std::string_view name);
std::string_view profile_name(Profile p);

/// Category vocabulary the profile draws from.
Vocabulary profile_vocabulary(Profile p);

/// `n` layouts from the profile's template grammar, already in reading order.
///
/// double-column-doc: title, then either a full-width figure followed by two
///   text|text bands, or the two bands followed by the figure (50/50). The
///   column split is equal or asymmetric (50/50).
/// single-column-doc: title plus 2 to 5 stacked blocks; figures sit either
///   full width or centred at half width.
/// mobile-app: toolbar at the top, then image+text or input+list_item (50/50),
///   then a bottom button.
std::vector<Layout> synth_grammar(std::uint64_t seed, std::size_t n, Profile profile);

inline constexpr double kDefaultFakeMagnitude = 0.25;

/// Adds independent U(-m, m) noise to every bbox coordinate, then clamps back
/// into the canvas (w, h into [0,1]; x, y at least 0 and shifted left/up when
/// the box would overflow).
Layout perturb_fake(const Layout& layout, Rng& rng, double magnitude = kDefaultFakeMagnitude);

}  // namespace lmcl
