#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lmcl/encoder.hpp"
#include "lmcl/synth.hpp"

namespace lmcl {

inline constexpr std::size_t kRealClass = 0;
inline constexpr std::size_t kFakeClass = 1;
inline constexpr std::size_t kPenultimateWidth = 512;

struct DiscriminatorConfig {
  EncoderConfig encoder = EncoderConfig::desk();
  double magnitude = kDefaultFakeMagnitude;
  double holdout_fraction = 0.2;
  std::size_t epochs = 8;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Real-vs-fake classifier: encoder backbone over complete layouts, a
/// 512-unit ReLU penultimate layer and two logits (real = 0, fake = 1).
class Discriminator {
 public:
  Discriminator(Vocabulary vocab, EncoderConfig encoder);

  void init(std::uint64_t seed);

  /// Penultimate activations [B, 512] and, from them, logits [B, 2].
  [[nodiscard]] Var features(Tape& tape, std::span<const Layout> layouts) const;
  [[nodiscard]] Var logits_from_features(Tape& tape, Var features) const;

  /// Penultimate features [N, 512], evaluated in batches.
  [[nodiscard]] Tensor feature_matrix(std::span<const Layout> layouts, std::size_t batch = 128) const;
  /// argmax class per layout.
  [[nodiscard]] std::vector<std::size_t> classify(std::span<const Layout> layouts, std::size_t batch = 128) const;

  [[nodiscard]] const Vocabulary& vocabulary() const noexcept { return vocab_; }
  [[nodiscard]] ParamStore& params() noexcept { return params_; }
  [[nodiscard]] const ParamStore& params() const noexcept { return params_; }

  void save(const std::filesystem::path& path) const;
  static Discriminator load(const std::filesystem::path& path);

 private:
  Vocabulary vocab_;
  Encoder encoder_;
  ParamStore params_;
};

struct DiscriminatorTraining {
  Discriminator discriminator;
  double heldout_accuracy = 0.0;       // over held-out reals and their fakes
  double heldout_real_accuracy = 0.0;  // held-out reals classified real
  std::vector<Layout> heldout_real;
  std::vector<Layout> heldout_fake;
  std::vector<std::string> warnings;
};

/// Splits `real` into train and held-out parts first, then derives one
/// perturbed fake per real layout within each part.
DiscriminatorTraining train_discriminator(const std::vector<Layout>& real, const Vocabulary& vocab,
                                          const DiscriminatorConfig& config);

}  // namespace lmcl
