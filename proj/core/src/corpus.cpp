#include "lmcl/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "json_wire.hpp"

namespace lmcl {

namespace {

struct Rejected {
  std::string reason;
};

// Schema problems throw CorpusError (malformed); rule violations return a reason.
std::optional<Rejected> apply_rules(const nlohmann::json& j, const Vocabulary& vocab, const FilterRules& rules,
                                    Layout& out) {
  if (!j.is_object()) throw CorpusError("line is not a JSON object");
  if (!j.contains("objects") || !j["objects"].is_array()) throw CorpusError("missing \"objects\" array");
  out.aspect = 1.0;
  if (j.contains("canvas")) {
    const auto& c = j["canvas"];
    if (!c.is_object() || !c.contains("aspect") || !c["aspect"].is_number()) {
      throw CorpusError("\"canvas\" must be an object with a numeric \"aspect\"");
    }
    out.aspect = c["aspect"].get<double>();
    if (!(out.aspect > 0.0)) throw CorpusError("canvas aspect must be positive");
  }
  if (j.contains("source")) {
    if (!j["source"].is_string()) throw CorpusError("\"source\" must be a string");
    out.source = j["source"].get<std::string>();
  }

  std::optional<Rejected> rejected;
  const auto& objs = j["objects"];
  out.objects.clear();
  out.objects.reserve(objs.size());
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto& o = objs[i];
    const auto where = "object " + std::to_string(i);
    if (!o.is_object() || !o.contains("category") || !o["category"].is_string()) {
      throw CorpusError(where + ": missing string \"category\"");
    }
    const auto& bb = o.contains("bbox") ? o["bbox"] : nlohmann::json();
    if (!bb.is_array() || bb.size() != 4) throw CorpusError(where + ": \"bbox\" must be [x, y, w, h]");
    for (const auto& v : bb) {
      if (!v.is_number()) throw CorpusError(where + ": bbox entries must be numbers");
    }
    LayoutObject obj;
    obj.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
    const auto name = o["category"].get<std::string>();
    if (auto id = vocab.find(name)) {
      obj.category = *id;
    } else if (!rejected) {
      rejected = Rejected{"unknown_category"};
    }
    if (!rejected && !box_in_canvas(obj.bbox)) rejected = Rejected{"bbox_out_of_range"};
    out.objects.push_back(obj);
  }
  if (rejected) return rejected;
  if (out.objects.empty()) return Rejected{"empty_layout"};
  if (out.objects.size() > rules.max_objects) return Rejected{"too_many_objects"};
  if ((rules.min_aspect && out.aspect < *rules.min_aspect) || (rules.max_aspect && out.aspect > *rules.max_aspect)) {
    return Rejected{"aspect_filtered"};
  }
  assign_stop_flags(out.objects);
  return std::nullopt;
}

}  // namespace

Corpus read_corpus(std::istream& in, const Vocabulary& vocab, const FilterRules& rules) {
  Corpus corpus;
  auto& report = corpus.report;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.lines;
    Layout layout;
    try {
      const auto j = nlohmann::json::parse(line);
      if (auto rejected = apply_rules(j, vocab, rules, layout)) {
        ++report.dropped_count;
        ++report.dropped_by_reason[rejected->reason];
        continue;
      }
    } catch (const nlohmann::json::exception& e) {
      report.malformed.push_back({lineno, e.what()});
      continue;
    } catch (const CorpusError& e) {
      report.malformed.push_back({lineno, e.what()});
      continue;
    }
    corpus.layouts.push_back(rules.canonicalize ? reading_order(layout, rules.band_tolerance) : std::move(layout));
  }
  report.loaded = corpus.layouts.size();
  if (report.lines == 0) report.warnings.emplace_back("corpus is empty");
  if (report.lines > 0 && 2 * report.malformed.size() > report.lines) {
    throw CorpusError(std::to_string(report.malformed.size()) + " of " + std::to_string(report.lines) +
                      " lines are malformed (first at line " + std::to_string(report.malformed.front().line) +
                      ": " + report.malformed.front().message + ")");
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const FilterRules& rules) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus " + path.string());
  return read_corpus(in, vocab, rules);
}

std::string layout_to_json(const Layout& layout, const Vocabulary& vocab) {
  return detail::layout_json(layout, vocab).dump();
}

Layout layout_from_json(std::string_view text, const Vocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(e.what());
  }
  Layout layout;
  FilterRules rules;
  rules.max_objects = static_cast<std::size_t>(-1);
  if (auto rejected = apply_rules(j, vocab, rules, layout)) throw CorpusError("layout rejected: " + rejected->reason);
  return layout;
}

void write_corpus(std::ostream& out, const std::vector<Layout>& layouts, const Vocabulary& vocab) {
  for (const auto& l : layouts) out << layout_to_json(l, vocab) << '\n';
  if (!out) throw CorpusError("failed writing corpus");
}

void save_corpus(const std::filesystem::path& path, const std::vector<Layout>& layouts, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CorpusError("cannot open " + path.string() + " for writing");
  write_corpus(out, layouts, vocab);
}

}  // namespace lmcl
