#include "watermarks.hpp"

#include <sodium.h>

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "error.hpp"

namespace wmlab {

namespace {
constexpr std::uint64_t kTreeRingStream = 0x7472656572696e67ull;  // "treering"
constexpr std::uint64_t kShadingStream = 0x73686164696e6700ull;
constexpr std::uint64_t kSignatureStream = 0x7369676e61747572ull;
constexpr std::uint64_t kTemplateStream = 0x74656d706c617465ull;
}  // namespace

std::string_view scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::TreeRing: return "tree-ring";
    case Scheme::GaussianShading: return "gaussian-shading";
    case Scheme::StableSignature: return "stable-signature";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "tree-ring") return Scheme::TreeRing;
  if (name == "gaussian-shading") return Scheme::GaussianShading;
  if (name == "stable-signature") return Scheme::StableSignature;
  fail(ErrorKind::Parameter, "unknown scheme '" + std::string(name) +
                                 "' (expected tree-ring, gaussian-shading or stable-signature)");
}

double bit_accuracy(std::span<const std::uint8_t> decoded, std::span<const std::uint8_t> truth) {
  require(decoded.size() == truth.size() && !truth.empty(), ErrorKind::Shape,
          "bit vectors differ in length");
  std::size_t match = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) match += (decoded[i] & 1) == (truth[i] & 1);
  return static_cast<double>(match) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Tree-Ring

std::vector<int> TreeRingKey::default_radii() { return {2, 3, 4, 5, 6, 7, 8, 9, 10}; }

TreeRingKey TreeRingKey::generate(std::uint64_t seed, std::vector<int> radii,
                                  std::size_t channel, double sigma) {
  TreeRingKey key;
  key.radii = std::move(radii);
  key.channel = channel;
  key.seed = seed;
  key.sigma = sigma;
  Rng rng(seed, kTreeRingStream);
  for (std::size_t i = 0; i < key.radii.size(); ++i) {
    const double re = sigma * rng.normal();
    const double im = sigma * rng.normal();
    key.ring_values.emplace_back(re, im);
  }
  return key;
}

TreeRingPattern::TreeRingPattern(const TreeRingKey& key, std::size_t height, std::size_t width)
    : channel_(key.channel), h_(height), w_(width) {
  require(key.radii.size() == key.ring_values.size(), ErrorKind::Key,
          "tree-ring key needs one ring value per radius");
  const int nyquist = static_cast<int>(std::min(height, width) / 2);
  std::map<int, Complex> value_of;
  for (std::size_t i = 0; i < key.radii.size(); ++i) {
    const int r = key.radii[i];
    require(r >= 0 && r < nyquist, ErrorKind::Key,
            "ring radius " + std::to_string(r) + " reaches the Nyquist ring (" +
                std::to_string(nyquist) + ")");
    value_of[r] = key.ring_values[i];
  }
  auto signed_freq = [](std::size_t k, std::size_t n) {
    return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
  };
  for (std::size_t ky = 0; ky < height; ++ky)
    for (std::size_t kx = 0; kx < width; ++kx) {
      const long fy = signed_freq(ky, height), fx = signed_freq(kx, width);
      const int r = static_cast<int>(std::lround(std::hypot(double(fy), double(fx))));
      auto it = value_of.find(r);
      if (it == value_of.end()) continue;
      Complex v = it->second;
      if (fy == 0 && fx == 0)
        v = Complex(v.real(), 0.0);
      else if (fy < 0 || (fy == 0 && fx < 0))
        v = std::conj(v);
      bins_.push_back(ky * width + kx);
      targets_.push_back(v);
    }
}

Tensor3 TreeRingPattern::embed(const Tensor3& z_T) const {
  require(channel_ < z_T.channels(), ErrorKind::Key,
          "tree-ring channel " + std::to_string(channel_) + " out of range");
  require(z_T.height() == h_ && z_T.width() == w_, ErrorKind::Shape,
          "tree-ring pattern built for a different plane size");
  Tensor3 out = z_T;
  if (bins_.empty()) return out;
  auto spec = fft2(z_T.plane(channel_), h_, w_);
  for (std::size_t i = 0; i < bins_.size(); ++i) spec[bins_[i]] = targets_[i];
  const auto plane = ifft2(spec, h_, w_);
  auto o = out.plane(channel_);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(plane[i].real());
  return out;
}

double TreeRingPattern::distance(const Tensor3& z_hat) const {
  require(channel_ < z_hat.channels() && z_hat.height() == h_ && z_hat.width() == w_,
          ErrorKind::Shape, "tree-ring detect: latent shape mismatch");
  const auto spec = fft2(z_hat.plane(channel_), h_, w_);
  double eta = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    eta += std::norm(spec[bins_[i]] - targets_[i]);
    energy += std::norm(spec[bins_[i]]);
  }
  // Scale-free: measured against the input's own in-mask energy, so inputs that
  // lost energy (block shuffles, flat fills) do not drift toward the key.
  if (!(energy > 0.0)) return std::numeric_limits<double>::infinity();
  return eta / (energy / static_cast<double>(bins_.size()));
}

Tensor3 treering_embed(const TreeRingKey& key, const Tensor3& z_T) {
  return TreeRingPattern(key, z_T.height(), z_T.width()).embed(z_T);
}

double empirical_p_value(double eta, std::span<const double> null_scores) {
  require(!null_scores.empty(), ErrorKind::Calibration,
          "tree-ring detection needs a non-empty null population");
  const auto below = std::count_if(null_scores.begin(), null_scores.end(),
                                   [eta](double s) { return s <= eta; });
  return (1.0 + static_cast<double>(below)) / (static_cast<double>(null_scores.size()) + 1.0);
}

DetectionResult treering_detect(const TreeRingKey& key, const Tensor3& z_hat,
                                std::span<const double> null_scores) {
  require(!null_scores.empty(), ErrorKind::Calibration,
          "tree-ring detection needs a non-empty null population");
  const double eta = TreeRingPattern(key, z_hat.height(), z_hat.width()).distance(z_hat);
  return {Scheme::TreeRing, eta, empirical_p_value(eta, null_scores), std::nullopt};
}

// ---------------------------------------------------------------------------
// Gaussian Shading

namespace {

void random_bytes(Rng& rng, std::span<std::uint8_t> out) {
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u32() >> 24);
}

void ensure_sodium() {
  static const int ok = sodium_init();
  require(ok >= 0, ErrorKind::Key, "libsodium initialisation failed");
}

}  // namespace

GaussianShadingKey GaussianShadingKey::generate(std::uint64_t seed, std::size_t message_bits,
                                                std::size_t replication) {
  GaussianShadingKey key;
  Rng rng(seed, kShadingStream);
  random_bytes(rng, key.cipher_key);
  random_bytes(rng, key.nonce);
  key.message.resize(message_bits);
  for (auto& b : key.message) b = static_cast<std::uint8_t>(rng.next_u32() >> 31);
  key.replication = replication;
  return key;
}

std::vector<std::uint8_t> keystream_bits(const GaussianShadingKey& key, std::size_t count) {
  ensure_sodium();
  std::vector<unsigned char> bytes((count + 7) / 8);
  crypto_stream_chacha20_ietf(bytes.data(), bytes.size(), key.nonce.data(),
                              key.cipher_key.data());
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = (bytes[i >> 3] >> (i & 7)) & 1u;
  return bits;
}

double normal_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

namespace {
void check_capacity(const GaussianShadingKey& key, std::size_t elements) {
  require(!key.message.empty() && key.replication > 0, ErrorKind::Key,
          "gaussian-shading key has an empty message");
  require(key.capacity() == elements, ErrorKind::Key,
          "gaussian-shading capacity " + std::to_string(key.message.size()) + " x " +
              std::to_string(key.replication) + " != latent size " + std::to_string(elements));
}
}  // namespace

Tensor3 gaussianshading_sample(const GaussianShadingKey& key, Rng& rng, std::size_t channels,
                               std::size_t height, std::size_t width) {
  Tensor3 z(channels, height, width);
  check_capacity(key, z.size());
  const auto ks = keystream_bits(key, z.size());
  const std::size_t m = key.message.size();
  auto data = z.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int s = ks[i] ^ (key.message[i % m] & 1);
    const double u = rng.uniform_open();
    data[i] = static_cast<float>(normal_quantile((s + u) / 2.0));
  }
  return z;
}

namespace {
std::vector<std::uint8_t> raw_bits(const GaussianShadingKey& key, const Tensor3& z_hat) {
  check_capacity(key, z_hat.size());
  auto bits = keystream_bits(key, z_hat.size());
  auto data = z_hat.data();
  for (std::size_t i = 0; i < data.size(); ++i) bits[i] ^= data[i] > 0.0f ? 1 : 0;
  return bits;
}
}  // namespace

DetectionResult gaussianshading_decode(const GaussianShadingKey& key, const Tensor3& z_hat) {
  if (z_hat.size() != key.capacity())
    fail(ErrorKind::Shape, "gaussian-shading decode: latent size " +
                               std::to_string(z_hat.size()) + " != capacity " +
                               std::to_string(key.capacity()));
  const auto bits = raw_bits(key, z_hat);
  const std::size_t m = key.message.size();
  std::vector<std::size_t> votes(m, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) votes[i % m] += bits[i];
  std::vector<std::uint8_t> decoded(m);
  // Strict majority; a tie decodes to 0.
  for (std::size_t b = 0; b < m; ++b) decoded[b] = 2 * votes[b] > key.replication ? 1 : 0;
  const double acc = bit_accuracy(decoded, key.message);
  return {Scheme::GaussianShading, acc, std::nullopt, std::move(decoded)};
}

double gaussianshading_raw_accuracy(const GaussianShadingKey& key, const Tensor3& z_hat) {
  const auto bits = raw_bits(key, z_hat);
  const std::size_t m = key.message.size();
  std::size_t match = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) match += bits[i] == (key.message[i % m] & 1);
  return static_cast<double>(match) / static_cast<double>(bits.size());
}

// ---------------------------------------------------------------------------
// Spread spectrum

SpreadSpectrumKey SpreadSpectrumKey::generate(std::uint64_t seed, std::size_t bits,
                                              double amplitude) {
  SpreadSpectrumKey key;
  Rng rng(seed, kSignatureStream);
  key.signature.resize(bits);
  for (auto& b : key.signature) b = static_cast<std::uint8_t>(rng.next_u32() >> 31);
  key.template_seed = rng.next_u64();
  key.amplitude = amplitude;
  return key;
}

SpreadSpectrumTemplates::SpreadSpectrumTemplates(std::uint64_t seed, std::size_t bits,
                                                 std::size_t length)
    : bits_(bits), length_(length), values_(bits * length) {
  for (std::size_t j = 0; j < bits; ++j) {
    auto row = std::span<std::int8_t>(values_.data() + j * length, length);
    for (std::size_t i = 0; i < length; ++i) row[i] = i < length / 2 ? 1 : -1;
    Rng rng(seed, stream_id({kTemplateStream, j}));
    for (std::size_t i = length; i > 1; --i) std::swap(row[i - 1], row[rng.below(i)]);
  }
}

std::shared_ptr<const SpreadSpectrumTemplates> SpreadSpectrumTemplates::get(std::uint64_t seed,
                                                                            std::size_t bits,
                                                                            std::size_t length) {
  static std::mutex mutex;
  static std::map<std::tuple<std::uint64_t, std::size_t, std::size_t>,
                  std::shared_ptr<const SpreadSpectrumTemplates>>
      cache;
  std::lock_guard lock(mutex);
  const auto id = std::make_tuple(seed, bits, length);
  if (auto it = cache.find(id); it != cache.end()) return it->second;
  // Templates for a 512x512 image take ~37 MB; keep only a few alive.
  if (cache.size() >= 4) cache.clear();
  auto tpl = std::make_shared<const SpreadSpectrumTemplates>(seed, bits, length);
  cache.emplace(id, tpl);
  return tpl;
}

namespace {
void check_ss_input(const SpreadSpectrumKey& key, const Tensor3& image) {
  require(image.channels() == 3, ErrorKind::Shape,
          "spread-spectrum expects a 3-channel image");
  require(!key.signature.empty(), ErrorKind::Key, "spread-spectrum key has no signature bits");
  require(key.amplitude >= 0.0 && std::isfinite(key.amplitude), ErrorKind::Key,
          "spread-spectrum amplitude must be finite and non-negative");
}
}  // namespace

Tensor3 spreadspectrum_embed(const SpreadSpectrumKey& key, const Tensor3& image) {
  check_ss_input(key, image);
  if (key.amplitude == 0.0) return image;
  const auto tpl = SpreadSpectrumTemplates::get(key.template_seed, key.signature.size(), image.size());
  std::vector<double> acc(image.size(), 0.0);
  for (std::size_t j = 0; j < key.signature.size(); ++j) {
    const double sign = key.signature[j] ? 1.0 : -1.0;
    const auto row = tpl->row(j);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sign * row[i];
  }
  Tensor3 out = image;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<float>(std::clamp(data[i] + key.amplitude * acc[i], 0.0, 1.0));
  return out;
}

DetectionResult spreadspectrum_decode(const SpreadSpectrumKey& key, const Tensor3& image) {
  check_ss_input(key, image);
  const auto tpl = SpreadSpectrumTemplates::get(key.template_seed, key.signature.size(), image.size());
  const auto data = image.data();
  std::vector<std::uint8_t> decoded(key.signature.size());
  for (std::size_t j = 0; j < decoded.size(); ++j) {
    const auto row = tpl->row(j);
    double corr = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) corr += data[i] * row[i];
    decoded[j] = corr > 0.0 ? 1 : 0;
  }
  const double acc = bit_accuracy(decoded, key.signature);
  return {Scheme::StableSignature, acc, std::nullopt, std::move(decoded)};
}

// ---------------------------------------------------------------------------

Scheme key_scheme(const WatermarkKey& key) noexcept {
  switch (key.index()) {
    case 0: return Scheme::TreeRing;
    case 1: return Scheme::GaussianShading;
    default: return Scheme::StableSignature;
  }
}

WatermarkKey generate_key(Scheme scheme, std::uint64_t seed) {
  switch (scheme) {
    case Scheme::TreeRing: return TreeRingKey::generate(seed);
    case Scheme::GaussianShading: return GaussianShadingKey::generate(seed);
    case Scheme::StableSignature: return SpreadSpectrumKey::generate(seed);
  }
  fail(ErrorKind::Parameter, "unknown scheme");
}

}  // namespace wmlab
