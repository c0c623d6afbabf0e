#pragma once

// JSON (de)serialisation of configuration structs for manifests and
// checkpoint sidecars. Private to the library.

#include <nlohmann/json.hpp>

#include "lmcl/model.hpp"

namespace lmcl {

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"gru_layers", c.gru_layers},       {"gru_hidden", c.gru_hidden}, {"conv_layers", c.conv_layers},
       {"conv_channels", c.conv_channels}, {"conv_kernel", c.conv_kernel}, {"raster_res", c.raster_res},
       {"spatial_width", c.spatial_width}, {"shared_width", c.shared_width()}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  j.at("gru_layers").get_to(c.gru_layers);
  j.at("gru_hidden").get_to(c.gru_hidden);
  j.at("conv_layers").get_to(c.conv_layers);
  j.at("conv_channels").get_to(c.conv_channels);
  j.at("conv_kernel").get_to(c.conv_kernel);
  j.at("raster_res").get_to(c.raster_res);
  j.at("spatial_width").get_to(c.spatial_width);
}

inline void to_json(nlohmann::json& j, const LossVariant& v) {
  j = {{"kind", v.long_name()}, {"epsilon", v.epsilon}};
}

inline void from_json(const nlohmann::json& j, LossVariant& v) {
  v = LossVariant::parse(j.at("kind").get<std::string>(), j.value("epsilon", 0.05));
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"encoder", c.encoder},
       {"m", c.m},
       {"predictor_hidden", c.predictor_hidden},
       {"mixture_hidden", c.mixture_hidden},
       {"head_hidden", c.head_hidden},
       {"loss", c.loss},
       {"renormalize", c.renormalize},
       {"pair_tau", c.pair_tau},
       {"max_objects", c.max_objects}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("encoder").get_to(c.encoder);
  j.at("m").get_to(c.m);
  j.at("predictor_hidden").get_to(c.predictor_hidden);
  j.at("mixture_hidden").get_to(c.mixture_hidden);
  j.at("head_hidden").get_to(c.head_hidden);
  j.at("loss").get_to(c.loss);
  j.at("renormalize").get_to(c.renormalize);
  j.at("pair_tau").get_to(c.pair_tau);
  j.at("max_objects").get_to(c.max_objects);
}

inline nlohmann::json pairing_json(const PairingSummary& s, const Vocabulary& vocab) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t c = 0; c < s.per_category.size(); ++c) {
    const auto& p = s.per_category[c];
    per.push_back({{"category", c < vocab.size() ? vocab.name(c) : std::to_string(c)},
                   {"examples", p.examples},
                   {"paired_count", p.paired_count},
                   {"unpaired_mass", p.unpaired_mass},
                   {"paired", p.paired},
                   {"wins", p.wins},
                   {"mean_phi", p.mean_phi}});
  }
  return {{"paired_total", s.paired_total}, {"unpaired_mass", s.unpaired_mass}, {"per_category", std::move(per)}};
}

inline PairingSummary pairing_from_json(const nlohmann::json& j) {
  PairingSummary s;
  j.at("paired_total").get_to(s.paired_total);
  j.at("unpaired_mass").get_to(s.unpaired_mass);
  for (const auto& p : j.at("per_category")) {
    PairingStats st;
    p.at("examples").get_to(st.examples);
    p.at("paired_count").get_to(st.paired_count);
    p.at("unpaired_mass").get_to(st.unpaired_mass);
    p.at("paired").get_to(st.paired);
    p.at("wins").get_to(st.wins);
    p.at("mean_phi").get_to(st.mean_phi);
    s.per_category.push_back(std::move(st));
  }
  return s;
}

}  // namespace lmcl
