#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "lmcl/layout.hpp"
#include "lmcl/nn.hpp"

namespace lmcl {

struct EncoderConfig {
  std::size_t gru_layers = 2;
  std::size_t gru_hidden = 128;
  std::size_t conv_layers = 5;
  std::size_t conv_channels = 32;
  std::size_t conv_kernel = 3;
  std::size_t raster_res = 32;
  std::size_t spatial_width = 128;

  /// Width of X_layout: final forward and final backward top-layer states.
  [[nodiscard]] std::size_t sequence_width() const noexcept { return 2 * gru_hidden; }
  [[nodiscard]] std::size_t shared_width() const noexcept { return sequence_width() + spatial_width; }
  /// Side length of the feature map after the conv stack.
  [[nodiscard]] std::size_t pooled_res() const noexcept { return raster_res >> (conv_layers / 2); }

  /// Throws std::invalid_argument when a field is zero or the raster cannot be pooled evenly.
  void validate() const;

  static EncoderConfig desk();
  static EncoderConfig full();

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

using PrefixBatch = std::span<const Prefix>;

/// Joint sequence (stacked BiGRU) and spatial (conv over the rasterised
/// prefix) encoder. Every prefix is fed to the GRU behind a learned start
/// token, so empty prefixes are valid input.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderConfig config, std::size_t vocab_size, std::string prefix = "enc");

  void init(ParamStore& store, Rng& rng) const;

  /// [B, 2H]
  [[nodiscard]] Var encode_sequence(Tape& tape, const ParamStore& store, PrefixBatch batch) const;
  /// [B, spatial_width]
  [[nodiscard]] Var encode_spatial(Tape& tape, const ParamStore& store, PrefixBatch batch) const;
  /// relu(W [X_layout, X_spatial] + b): [B, shared_width]
  [[nodiscard]] Var encode(Tape& tape, const ParamStore& store, PrefixBatch batch) const;
  /// Fusion applied to branch outputs computed elsewhere.
  [[nodiscard]] Var fuse(Tape& tape, const ParamStore& store, Var x_layout, Var x_spatial) const;

  /// Token width: one-hot category plus (x, y, w, h).
  [[nodiscard]] std::size_t token_width() const noexcept { return vocab_size_ + 4; }
  [[nodiscard]] const EncoderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return vocab_size_; }
  [[nodiscard]] const std::string& prefix() const noexcept { return prefix_; }

  /// Object tokens of a right-padded batch: one [B, C+4] tensor per position
  /// of the longest prefix, plus one [B, H] validity mask per GRU step
  /// (masks[0] covers the start token and is all ones).
  struct Tokens {
    std::vector<Tensor> steps;
    std::vector<Tensor> masks;
  };
  [[nodiscard]] Tokens tokenize(PrefixBatch batch) const;

 private:
  [[nodiscard]] std::string name(const std::string& leaf) const { return prefix_ + "." + leaf; }

  EncoderConfig config_;
  std::size_t vocab_size_ = 0;
  std::string prefix_ = "enc";
};

}  // namespace lmcl
