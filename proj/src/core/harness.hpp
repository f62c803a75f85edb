#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "perturbations.hpp"
#include "watermarks.hpp"

namespace wmlab {

struct SweepEntry {
  Family family = Family::None;
  std::vector<double> strengths;
};

// Run-config JSON (all fields optional except where noted):
//   {"images": 16, "schemes": ["tree-ring", ...], "key_seed": 1,
//    "keys": {"tree-ring": "tr.json"}, "sweeps": [{"family": "impulse",
//    "strengths": [0.1, 0.2]}], "seeds": [0, 1, 2, 3, 4], "null_count": 200,
//    "fpr": 0.001, "output_dir": "out", "semantic_manifest": "bundle/",
//    "mask_fractions": [0.1, 0.25], "channel": {...}}
// Unperturbed rows appear only for {"family": "none"} or an empty sweep list.
struct RunConfig {
  std::size_t images = 16;
  std::vector<Scheme> schemes = {Scheme::TreeRing, Scheme::GaussianShading,
                                 Scheme::StableSignature};
  std::uint64_t key_seed = 1;
  std::map<Scheme, std::filesystem::path> keyfiles;
  std::vector<SweepEntry> sweeps;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t null_count = 200;
  double fpr = 0.001;
  std::filesystem::path output_dir = "wmlab-out";
  std::optional<std::filesystem::path> semantic_manifest;
  std::vector<double> mask_fractions;
  ChannelConfig channel;
};

nlohmann::json channel_to_json(const ChannelConfig& c);
ChannelConfig channel_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const RunConfig& cfg);
/// Relative key/manifest paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Throws a validation error on unknown strengths, missing keyfiles, etc.
void validate_config(const RunConfig& cfg);
/// SHA-256 of the canonical config JSON, lowercase hex.
std::string config_hash(const RunConfig& cfg);

/// Direction of the detection statistic for a scheme.
Direction scheme_direction(Scheme s) noexcept;

/// Embedding, inversion and null calibration on top of one toy channel.
/// Thread-safe after construction; null populations are computed on demand.
class Pipeline {
 public:
  Pipeline(const ChannelConfig& channel, std::map<Scheme, WatermarkKey> keys,
           std::size_t null_count);

  const ToyChannel& channel() const noexcept { return channel_; }
  const WatermarkKey& key(Scheme s) const;
  std::size_t null_count() const noexcept { return null_count_; }

  /// Unwatermarked generation for (image id, seed).
  Tensor3 clean_image(std::uint64_t image_id, std::uint64_t seed) const;
  /// Initial latent carrying the watermark (latent schemes only).
  Tensor3 watermarked_latent(Scheme s, std::uint64_t image_id, std::uint64_t seed) const;
  /// Watermarked pixel image for any scheme.
  Tensor3 watermarked_image(Scheme s, std::uint64_t image_id, std::uint64_t seed) const;

  /// Accepts a latent-shaped tensor (scored directly) or a channel-shaped
  /// image (inverted first for latent schemes).
  DetectionResult detect(Scheme s, const Tensor3& input) const;

  /// Null statistics from null_count fresh unwatermarked inputs, either
  /// pixel images (default) or raw initial latents.
  const std::vector<double>& null_scores(Scheme s, bool latent_domain = false) const;

 private:
  ToyChannel channel_;
  std::map<Scheme, WatermarkKey> keys_;
  std::size_t null_count_;
  std::map<Scheme, std::shared_ptr<const TreeRingPattern>> patterns_;
  struct NullCache;
  std::shared_ptr<NullCache> nulls_;
};

/// Keys for cfg.schemes: loaded from keyfiles when given, otherwise
/// generated from key_seed.
std::map<Scheme, WatermarkKey> config_keys(const RunConfig& cfg);

struct EvalRecord {
  std::string image_id;
  Scheme scheme = Scheme::TreeRing;
  std::string family;
  std::string variant;
  double strength = 0.0;
  std::uint64_t seed = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double stat = 0.0;
  std::optional<double> p_value;
  bool detected = false;
  std::optional<double> vlma;
  std::optional<double> blipa;
  std::optional<double> triplet_sim;
  std::optional<double> mask_area;
};

inline constexpr const char* kRecordsHeader =
    "image_id,scheme,family,variant,strength,seed,psnr_db,ssim,stat,p_value,detected,vlma,blipa,"
    "triplet_sim,mask_area";
std::string format_double(double v);
std::string record_csv_row(const EvalRecord& r);

struct SweepSummary {
  std::size_t records = 0;
  std::vector<std::string> skips;
  std::vector<std::string> warnings;
};

/// Writes records.csv, aggregates.csv, nulls.csv, maps/<family>.csv,
/// optionally mask_fraction.csv, and run.json into cfg.output_dir.
SweepSummary run_sweep(const RunConfig& cfg, std::size_t threads = 1);

/// Evaluates every (image, seed, scheme, spec) tuple of the config without
/// touching the filesystem (semantic manifest rows excluded).
std::vector<EvalRecord> evaluate_records(const RunConfig& cfg, const Pipeline& pipe,
                                         std::size_t threads = 1);

struct FractionPoint {
  double fraction = 0.0;
  Scheme scheme = Scheme::TreeRing;
  std::size_t n = 0;
  double stat_mean = 0.0;
  std::optional<double> p_value_mean;
  double mask_area_mean = 0.0;
  std::vector<double> stats;
  std::vector<double> p_values;
};

/// Masked regeneration with mock fill at each fraction (0 leaves the image
/// untouched, 1 replaces every pixel).
std::vector<FractionPoint> mask_fraction_study(const RunConfig& cfg, const Pipeline& pipe,
                                               const std::vector<double>& fractions,
                                               std::size_t threads = 1);
std::string fraction_csv(const std::vector<FractionPoint>& points);

}  // namespace wmlab
