#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lmcl/layout.hpp"

namespace lmcl {

struct FilterRules {
  std::size_t max_objects = kDefaultMaxObjects;
  double band_tolerance = kDefaultBandTolerance;
  // Inclusive canvas aspect (width / height) window. Unset means unbounded;
  // portrait-only imports pass max_aspect < 1.
  std::optional<double> min_aspect;
  std::optional<double> max_aspect;
  bool canonicalize = true;  // apply reading_order to retained layouts
};

struct MalformedLine {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadReport {
  std::size_t lines = 0;  // non-blank lines seen
  std::size_t loaded = 0;
  std::size_t dropped_count = 0;
  std::map<std::string, std::size_t> dropped_by_reason;
  std::vector<MalformedLine> malformed;
  std::vector<std::string> warnings;
};

struct Corpus {
  std::vector<Layout> layouts;
  LoadReport report;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses JSON-lines layouts. Malformed lines are skipped and recorded; more
/// than half malformed throws CorpusError.
Corpus read_corpus(std::istream& in, const Vocabulary& vocab, const FilterRules& rules = {});
Corpus load_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const FilterRules& rules = {});

void write_corpus(std::ostream& out, const std::vector<Layout>& layouts, const Vocabulary& vocab);
void save_corpus(const std::filesystem::path& path, const std::vector<Layout>& layouts, const Vocabulary& vocab);

/// One layout in the JSON-lines wire form (no trailing newline).
std::string layout_to_json(const Layout& layout, const Vocabulary& vocab);
/// Parses a single wire-form layout without filtering; throws CorpusError on schema errors.
Layout layout_from_json(std::string_view text, const Vocabulary& vocab);

}  // namespace lmcl
