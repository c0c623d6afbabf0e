#include "lmcl/encoder.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace lmcl {

void EncoderConfig::validate() const {
  if (gru_layers == 0 || gru_hidden == 0 || conv_layers == 0 || conv_channels == 0 || raster_res == 0 ||
      spatial_width == 0) {
    throw std::invalid_argument("encoder config: every width and count must be positive");
  }
  if (conv_kernel % 2 == 0) throw std::invalid_argument("encoder config: conv kernel must be odd");
  if (raster_res < 8) throw std::invalid_argument("encoder config: raster resolution must be at least 8");
  const std::size_t pools = conv_layers / 2;
  if (pools >= 8 || raster_res % (std::size_t{1} << pools) != 0 || pooled_res() == 0) {
    throw std::invalid_argument("encoder config: raster resolution must be divisible by 2^(conv_layers/2)");
  }
}

EncoderConfig EncoderConfig::desk() {
  EncoderConfig c;
  c.gru_layers = 2;
  c.gru_hidden = 32;
  c.conv_layers = 2;
  c.conv_channels = 8;
  c.raster_res = 16;
  c.spatial_width = 32;
  return c;
}

EncoderConfig EncoderConfig::full() { return EncoderConfig{}; }

Encoder::Encoder(EncoderConfig config, std::size_t vocab_size, std::string prefix)
    : config_(config), vocab_size_(vocab_size), prefix_(std::move(prefix)) {
  config_.validate();
  if (vocab_size_ == 0) throw std::invalid_argument("encoder: empty vocabulary");
}

void Encoder::init(ParamStore& store, Rng& rng) const {
  const auto& c = config_;
  const std::size_t tw = token_width();
  store.add(name("start"), fan_in_uniform({1, tw}, tw, rng));
  for (std::size_t l = 0; l < c.gru_layers; ++l) {
    const std::size_t in = l == 0 ? tw : 2 * c.gru_hidden;
    add_gru_params(store, name("gru" + std::to_string(l) + ".fwd"), in, c.gru_hidden, rng);
    add_gru_params(store, name("gru" + std::to_string(l) + ".bwd"), in, c.gru_hidden, rng);
  }
  const std::size_t k = c.conv_kernel;
  for (std::size_t l = 0; l < c.conv_layers; ++l) {
    const std::size_t cin = l == 0 ? vocab_size_ : c.conv_channels;
    store.add(name("conv" + std::to_string(l) + ".k"), fan_in_uniform({c.conv_channels, cin, k, k}, cin * k * k, rng));
    store.add(name("conv" + std::to_string(l) + ".b"), Tensor({c.conv_channels}));
  }
  const std::size_t flat = c.conv_channels * c.pooled_res() * c.pooled_res();
  store.add(name("spatial.w"), fan_in_uniform({flat, c.spatial_width}, flat, rng));
  store.add(name("spatial.b"), Tensor({1, c.spatial_width}));
  const std::size_t fused = c.shared_width();
  store.add(name("fuse.w"), fan_in_uniform({fused, fused}, fused, rng));
  store.add(name("fuse.b"), Tensor({1, fused}));
}

Encoder::Tokens Encoder::tokenize(PrefixBatch batch) const {
  const std::size_t B = batch.size();
  const std::size_t H = config_.gru_hidden;
  const std::size_t tw = token_width();
  std::size_t longest = 0;
  for (const auto& p : batch) longest = std::max(longest, p.size());

  Tokens tokens;
  tokens.steps.assign(longest, Tensor({B, tw}));
  tokens.masks.assign(longest + 1, Tensor({B, H}, 1.0));
  for (std::size_t b = 0; b < B; ++b) {
    const auto& p = batch[b];
    for (std::size_t t = 0; t < longest; ++t) {
      if (t < p.size()) {
        const auto& o = p[t];
        if (o.category >= vocab_size_) throw std::out_of_range("encoder: category outside vocabulary");
        double* row = tokens.steps[t].data().data() + b * tw;
        row[o.category] = 1.0;
        row[vocab_size_ + 0] = o.bbox.x;
        row[vocab_size_ + 1] = o.bbox.y;
        row[vocab_size_ + 2] = o.bbox.w;
        row[vocab_size_ + 3] = o.bbox.h;
      } else {
        double* m = tokens.masks[t + 1].data().data() + b * H;
        std::fill(m, m + H, 0.0);
      }
    }
  }
  return tokens;
}

Var Encoder::encode_sequence(Tape& tape, const ParamStore& store, PrefixBatch batch) const {
  if (batch.empty()) throw std::invalid_argument("encoder: empty batch");
  const std::size_t B = batch.size();
  Tokens tokens = tokenize(batch);

  const bool ragged = std::any_of(batch.begin(), batch.end(),
                                  [&](const Prefix& p) { return p.size() != batch.front().size(); });

  std::vector<Var> seq;
  seq.reserve(tokens.steps.size() + 1);
  seq.push_back(matmul(tape.constant(Tensor({B, 1}, 1.0)), tape.param(store, name("start"))));
  for (auto& s : tokens.steps) seq.push_back(tape.constant(std::move(s)));
  std::vector<Var> masks;
  if (ragged) {
    masks.reserve(tokens.masks.size());
    for (auto& m : tokens.masks) masks.push_back(tape.constant(std::move(m)));
  }

  BiGruStates states;
  for (std::size_t l = 0; l < config_.gru_layers; ++l) {
    const auto fwd = bind_gru(tape, store, name("gru" + std::to_string(l) + ".fwd"));
    const auto bwd = bind_gru(tape, store, name("gru" + std::to_string(l) + ".bwd"));
    states = bigru(seq, fwd, bwd, masks);
    if (l + 1 < config_.gru_layers) {
      for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = concat(states.forward[t], states.backward[t], 1);
    }
  }
  return concat(states.forward.back(), states.backward.front(), 1);
}

Var Encoder::encode_spatial(Tape& tape, const ParamStore& store, PrefixBatch batch) const {
  if (batch.empty()) throw std::invalid_argument("encoder: empty batch");
  const auto& c = config_;
  const std::size_t B = batch.size();
  const std::size_t R = c.raster_res;
  const std::size_t plane = vocab_size_ * R * R;
  Tensor raster({B, vocab_size_, R, R});
  for (std::size_t b = 0; b < B; ++b) {
    rasterize_into(batch[b], vocab_size_, R, raster.data().subspan(b * plane, plane));
  }
  Var x = tape.constant(std::move(raster));
  for (std::size_t l = 0; l < c.conv_layers; ++l) {
    x = conv2d(x, tape.param(store, name("conv" + std::to_string(l) + ".k")));
    x = relu(channel_bias(x, tape.param(store, name("conv" + std::to_string(l) + ".b"))));
    if (l % 2 == 1) x = avg_pool2(x);
  }
  const std::size_t flat = c.conv_channels * c.pooled_res() * c.pooled_res();
  x = reshape(x, {B, flat});
  return dense(x, tape.param(store, name("spatial.w")), tape.param(store, name("spatial.b")));
}

Var Encoder::fuse(Tape& tape, const ParamStore& store, Var x_layout, Var x_spatial) const {
  return relu(dense(concat(x_layout, x_spatial, 1), tape.param(store, name("fuse.w")), tape.param(store, name("fuse.b"))));
}

Var Encoder::encode(Tape& tape, const ParamStore& store, PrefixBatch batch) const {
  return fuse(tape, store, encode_sequence(tape, store, batch), encode_spatial(tape, store, batch));
}

}  // namespace lmcl
