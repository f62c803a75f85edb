#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fft.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace wmlab {

enum class Scheme { TreeRing, GaussianShading, StableSignature };

std::string_view scheme_name(Scheme s) noexcept;
Scheme parse_scheme(std::string_view name);

struct DetectionResult {
  Scheme scheme = Scheme::TreeRing;
  /// Tree-Ring: spectral distance (lower means watermarked).
  /// Bit schemes: bit accuracy in [0, 1].
  double statistic = 0.0;
  std::optional<double> p_value;
  std::optional<std::vector<std::uint8_t>> decoded_bits;
};

// ---------------------------------------------------------------------------
// Tree-Ring

struct TreeRingKey {
  std::vector<int> radii;
  std::size_t channel = 0;
  std::vector<Complex> ring_values;  // one per radius
  std::uint64_t seed = 0;
  double sigma = 20.0;

  /// Ring values drawn with independent N(0, sigma^2) real and imaginary parts.
  static TreeRingKey generate(std::uint64_t seed, std::vector<int> radii = default_radii(),
                              std::size_t channel = 0, double sigma = 20.0);
  static std::vector<int> default_radii();
};

/// Precomputed ring mask and patterned spectrum for one latent plane size.
class TreeRingPattern {
 public:
  TreeRingPattern(const TreeRingKey& key, std::size_t height, std::size_t width);

  /// Unshifted FFT bin indices on the ring mask, ascending.
  const std::vector<std::size_t>& mask_bins() const noexcept { return bins_; }
  /// Target value for each entry of mask_bins(); conjugate-symmetric.
  const std::vector<Complex>& targets() const noexcept { return targets_; }

  Tensor3 embed(const Tensor3& z_T) const;
  /// sum |X - K|^2 over the mask divided by the mean in-mask |X|^2; +inf when
  /// the input has no energy on the mask.
  double distance(const Tensor3& z_hat) const;

 private:
  std::size_t channel_, h_, w_;
  std::vector<std::size_t> bins_;
  std::vector<Complex> targets_;
};

Tensor3 treering_embed(const TreeRingKey& key, const Tensor3& z_T);
/// p = (1 + #{null <= eta}) / (N + 1).
DetectionResult treering_detect(const TreeRingKey& key, const Tensor3& z_hat,
                                std::span<const double> null_scores);
double empirical_p_value(double eta, std::span<const double> null_scores);

// ---------------------------------------------------------------------------
// Gaussian Shading

struct GaussianShadingKey {
  std::array<std::uint8_t, 32> cipher_key{};
  std::array<std::uint8_t, 12> nonce{};
  std::vector<std::uint8_t> message;  // one 0/1 entry per bit
  std::size_t replication = 64;

  std::size_t capacity() const noexcept { return message.size() * replication; }
  static GaussianShadingKey generate(std::uint64_t seed, std::size_t message_bits = 256,
                                     std::size_t replication = 64);
};

/// ChaCha20 (IETF) keystream expanded to one bit per latent element.
std::vector<std::uint8_t> keystream_bits(const GaussianShadingKey& key, std::size_t count);

Tensor3 gaussianshading_sample(const GaussianShadingKey& key, Rng& rng, std::size_t channels,
                               std::size_t height, std::size_t width);
DetectionResult gaussianshading_decode(const GaussianShadingKey& key, const Tensor3& z_hat);
/// Agreement of all raw (pre-vote) bits with the replicated message.
double gaussianshading_raw_accuracy(const GaussianShadingKey& key, const Tensor3& z_hat);

/// Standard normal quantile.
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Spread-spectrum pixel-domain surrogate for the 48-bit decoder signature.

struct SpreadSpectrumKey {
  std::vector<std::uint8_t> signature;  // one 0/1 entry per bit
  std::uint64_t template_seed = 0;
  double amplitude = kDefaultAmplitude;

  static constexpr double kDefaultAmplitude = 1.0 / 1024.0;
  static SpreadSpectrumKey generate(std::uint64_t seed, std::size_t bits = 48,
                                    double amplitude = kDefaultAmplitude);
};

/// Balanced +/-1 templates, one per signature bit, for a given sample count.
class SpreadSpectrumTemplates {
 public:
  SpreadSpectrumTemplates(std::uint64_t seed, std::size_t bits, std::size_t length);

  std::size_t bits() const noexcept { return bits_; }
  std::size_t length() const noexcept { return length_; }
  std::span<const std::int8_t> row(std::size_t j) const noexcept {
    return {values_.data() + j * length_, length_};
  }

  /// Shared, cached instance.
  static std::shared_ptr<const SpreadSpectrumTemplates> get(std::uint64_t seed, std::size_t bits,
                                                            std::size_t length);

 private:
  std::size_t bits_, length_;
  std::vector<std::int8_t> values_;
};

Tensor3 spreadspectrum_embed(const SpreadSpectrumKey& key, const Tensor3& image);
DetectionResult spreadspectrum_decode(const SpreadSpectrumKey& key, const Tensor3& image);

// ---------------------------------------------------------------------------

using WatermarkKey = std::variant<TreeRingKey, GaussianShadingKey, SpreadSpectrumKey>;

Scheme key_scheme(const WatermarkKey& key) noexcept;
WatermarkKey generate_key(Scheme scheme, std::uint64_t seed);

double bit_accuracy(std::span<const std::uint8_t> decoded, std::span<const std::uint8_t> truth);

}  // namespace wmlab
