#include "lmcl/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

namespace lmcl {

void GenerationRequest::validate(std::size_t vocab_size) const {
  if (count == 0) throw RequestError("count", "must be at least 1");
  if (max_objects == 0) throw RequestError("max_objects", "must be at least 1");
  if (hard.size() + soft.size() > max_objects) {
    throw RequestError("hard", "hard (" + std::to_string(hard.size()) + ") plus soft (" + std::to_string(soft.size()) +
                                   ") constraints exceed max_objects " + std::to_string(max_objects));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw RequestError("temperature", "must be positive");
  if (!(aspect > 0.0)) throw RequestError("aspect", "must be positive");
  for (std::size_t i = 0; i < hard.size(); ++i) {
    const auto field = "hard[" + std::to_string(i) + "]";
    if (hard[i].category >= vocab_size) throw RequestError(field + ".category", "unknown category");
    if (!box_in_canvas(hard[i].bbox)) throw RequestError(field + ".bbox", "box must lie inside the unit canvas");
  }
  for (std::size_t i = 0; i < soft.size(); ++i) {
    const auto field = "soft[" + std::to_string(i) + "]";
    if (soft[i].category >= vocab_size) throw RequestError(field + ".category", "unknown category");
    if (const auto& s = soft[i].size) {
      if (!(s->w >= 0.0 && s->w <= 1.0 && s->h >= 0.0 && s->h <= 1.0)) {
        throw RequestError(field + ".size", "width and height must lie in [0, 1]");
      }
    }
  }
}

namespace {

CategoryId category_field(const nlohmann::json& j, const std::string& field, const Vocabulary& vocab) {
  if (!j.is_object() || !j.contains("category") || !j["category"].is_string()) {
    throw RequestError(field + ".category", "expected a category name");
  }
  const auto name = j["category"].get<std::string>();
  if (auto id = vocab.find(name)) return *id;
  throw RequestError(field + ".category", "unknown category '" + name + "'");
}

std::vector<double> number_array(const nlohmann::json& j, std::size_t n, const std::string& field) {
  if (!j.is_array() || j.size() != n) throw RequestError(field, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw RequestError(field, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

template <typename T>
T number_field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_unsigned()) throw RequestError(key, "expected a non-negative integer");
  } else if (!v.is_number()) {
    throw RequestError(key, "expected a number");
  }
  return v.get<T>();
}

}  // namespace

GenerationRequest parse_generation_request(std::string_view json, const Vocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw RequestError("body", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw RequestError("body", "expected a JSON object");

  GenerationRequest r;
  if (j.contains("hard")) {
    if (!j["hard"].is_array()) throw RequestError("hard", "expected an array of objects");
    for (std::size_t i = 0; i < j["hard"].size(); ++i) {
      const auto field = "hard[" + std::to_string(i) + "]";
      const auto& o = j["hard"][i];
      LayoutObject obj;
      obj.category = category_field(o, field, vocab);
      const auto bb = number_array(o.value("bbox", nlohmann::json()), 4, field + ".bbox");
      obj.bbox = {bb[0], bb[1], bb[2], bb[3]};
      r.hard.push_back(obj);
    }
  }
  if (j.contains("soft")) {
    if (!j["soft"].is_array()) throw RequestError("soft", "expected an array of constraints");
    for (std::size_t i = 0; i < j["soft"].size(); ++i) {
      const auto field = "soft[" + std::to_string(i) + "]";
      const auto& s = j["soft"][i];
      SoftConstraint sc;
      sc.category = category_field(s, field, vocab);
      if (s.contains("size") && !s["size"].is_null()) {
        const auto wh = number_array(s["size"], 2, field + ".size");
        sc.size = SizeHint{wh[0], wh[1]};
      }
      r.soft.push_back(sc);
    }
  }
  r.count = number_field<std::size_t>(j, "count", r.count);
  r.seed = number_field<std::uint64_t>(j, "seed", r.seed);
  r.max_objects = number_field<std::size_t>(j, "max_objects", r.max_objects);
  r.temperature = number_field<double>(j, "temperature", r.temperature);
  r.aspect = number_field<double>(j, "aspect", r.aspect);
  if (j.contains("renormalize")) {
    if (!j["renormalize"].is_boolean()) throw RequestError("renormalize", "expected a boolean");
    r.renormalize = j["renormalize"].get<bool>();
  }
  r.validate(vocab.size());
  return r;
}

void reweight_by_size(std::span<double> weights, std::span<const SizeHint> hypothesis_sizes, const SizeHint& hint,
                      double bandwidth) {
  if (weights.size() != hypothesis_sizes.size()) throw std::invalid_argument("reweight_by_size: size mismatch");
  double total = 0.0;
  std::size_t closest = 0;
  double closest_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d = std::abs(hypothesis_sizes[i].w - hint.w) + std::abs(hypothesis_sizes[i].h - hint.h);
    if (weights[i] > 0.0 && d < closest_d) {
      closest_d = d;
      closest = i;
    }
    weights[i] *= std::exp(-d / bandwidth);
    total += weights[i];
  }
  if (total > 0.0) {
    for (auto& w : weights) w /= total;
  } else {
    std::fill(weights.begin(), weights.end(), 0.0);
    weights[closest] = 1.0;
  }
}

std::vector<Layout> generate(const GenerationRequest& request, const LayoutModel& model) {
  const auto& vocab = model.vocabulary();
  request.validate(vocab.size());
  const std::size_t M = model.config().m;
  const bool renormalize = request.renormalize.value_or(model.config().renormalize);
  const auto& paired = model.paired_mask();

  std::vector<std::vector<LayoutObject>> objs(request.count, request.hard);
  for (auto& o : objs)
    for (auto& obj : o) obj.stop = false;
  std::vector<Rng> rngs;
  rngs.reserve(request.count);
  for (std::size_t i = 0; i < request.count; ++i) rngs.push_back(derive_rng(request.seed, i));
  std::vector<std::size_t> active;
  if (request.hard.size() < request.max_objects) {
    for (std::size_t i = 0; i < request.count; ++i) active.push_back(i);
  }

  for (std::size_t step = 0; !active.empty(); ++step) {
    Tape tape;
    std::vector<Prefix> prefixes;
    prefixes.reserve(active.size());
    for (auto a : active) prefixes.emplace_back(objs[a]);
    const Var x = model.encode(tape, prefixes);
    const Tensor logits = model.category_logits(tape, x).value();
    const Tensor stops = model.stop_logits(tape, x).value();
    const std::size_t C = logits.dim(1);

    const bool forced = step < request.soft.size();
    std::vector<CategoryId> cats(active.size());
    for (std::size_t r = 0; r < active.size(); ++r) {
      cats[r] = forced ? request.soft[step].category
                       : sample_category(logits.data().subspan(r * C, C), request.temperature, rngs[active[r]]);
    }

    std::vector<BBox> boxes(active.size());
    for (CategoryId c = 0; c < C; ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < active.size(); ++r)
        if (cats[r] == c) rows.push_back(r);
      if (rows.empty()) continue;
      const Var xg = gather_rows(x, rows);
      const auto hyps = model.hypotheses(tape, xg, c);
      const std::vector<CategoryId> gc(rows.size(), c);
      const Tensor lp = model.log_phi(tape, xg, gc).value();
      const bool have_paired = c < paired.size() && std::find(paired[c].begin(), paired[c].end(), true) != paired[c].end();

      for (std::size_t g = 0; g < rows.size(); ++g) {
        Rng& rng = rngs[active[rows[g]]];
        std::vector<double> w(M);
        for (std::size_t i = 0; i < M; ++i) w[i] = std::exp(lp.at(g, i));
        std::size_t pick;
        const auto& hint = forced ? request.soft[step].size : std::nullopt;
        if (hint) {
          if (renormalize && have_paired) {
            for (std::size_t i = 0; i < M; ++i) w[i] = paired[c][i] ? 1.0 : 0.0;
          }
          std::vector<SizeHint> sizes(M);
          for (std::size_t i = 0; i < M; ++i) sizes[i] = {hyps[i].value().at(g, 2), hyps[i].value().at(g, 3)};
          reweight_by_size(w, sizes, *hint);
          pick = sample_predictor(w, {}, rng, false);
        } else {
          pick = sample_predictor(w, have_paired ? paired[c] : std::vector<bool>{}, rng, renormalize && have_paired);
        }
        const Tensor& h = hyps[pick].value();
        BBox b{h.at(g, 0), h.at(g, 1), h.at(g, 2), h.at(g, 3)};
        b.w = std::min(b.w, 1.0 - b.x);
        b.h = std::min(b.h, 1.0 - b.y);
        boxes[rows[g]] = b;
      }
    }

    std::vector<std::size_t> still;
    for (std::size_t r = 0; r < active.size(); ++r) {
      auto& o = objs[active[r]];
      o.push_back({cats[r], boxes[r], false});
      const bool soft_left = step + 1 < request.soft.size();
      const bool stop = o.size() >= request.max_objects || (!soft_left && stop_decision(stops[r], o.size(), request.max_objects));
      if (!stop) still.push_back(active[r]);
    }
    active = std::move(still);
  }

  std::vector<Layout> out;
  out.reserve(request.count);
  for (auto& o : objs) {
    Layout l;
    l.objects = std::move(o);
    l.aspect = request.aspect;
    assign_stop_flags(l.objects);
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace lmcl
