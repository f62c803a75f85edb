#include "harness.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "keyfile.hpp"
#include "manifest.hpp"
#include "rng.hpp"
#include "tensor_io.hpp"

namespace wmlab {

using nlohmann::json;

namespace {

constexpr std::uint64_t kImageTag = 0x494d47;      // "IMG"
constexpr std::uint64_t kNullTag = 0x4e554c4c;     // "NULL"
constexpr std::uint64_t kPerturbTag = 0x50455254;  // "PERT"
constexpr std::uint64_t kFractionTag = 0x46524143; // "FRAC"
constexpr std::uint64_t kNullSeed = 0x6e756c6c5eedull;

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string image_label(std::uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%04" PRIu64, id);
  return buf;
}

std::string variant_of(Family f) {
  if (f == Family::None) return "identity";
  if (f == Family::MaskedRegen) return "mock";
  return "baseline";
}

std::uint64_t perturb_seed(std::uint64_t image, std::uint64_t seed, Family f, double strength) {
  return stream_id({kPerturbTag, image, seed, static_cast<std::uint64_t>(f),
                    std::bit_cast<std::uint64_t>(strength)});
}

struct SpecEntry {
  Family family;
  double strength;
};

std::vector<SpecEntry> expand_specs(const RunConfig& cfg) {
  // The unperturbed baseline appears when listed as {"family": "none"} or when
  // the config has no perturbations at all.
  std::vector<SpecEntry> specs;
  for (const auto& s : cfg.sweeps) {
    if (s.family == Family::None) {
      if (std::none_of(specs.begin(), specs.end(),
                       [](const SpecEntry& e) { return e.family == Family::None; }))
        specs.insert(specs.begin(), {Family::None, 0.0});
      continue;
    }
    for (double v : s.strengths) specs.push_back({s.family, v});
  }
  if (specs.empty()) specs.push_back({Family::None, 0.0});
  return specs;
}

bool is_detected(Scheme s, double stat, double threshold) {
  return scheme_direction(s) == Direction::HigherIsDetected ? stat > threshold : stat < threshold;
}

double threshold_for(const Pipeline& pipe, Scheme s, double fpr) {
  const auto& nulls = pipe.null_scores(s);
  const double probe = 0.0;
  return tpr_at_fpr(nulls, std::span<const double>(&probe, 1), scheme_direction(s), fpr).threshold;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

json channel_to_json(const ChannelConfig& c) {
  return {{"steps", c.steps},
          {"denoiser_seed", c.denoiser_seed},
          {"codec_seed", c.codec_seed},
          {"latent_shape", {c.latent_channels, c.latent_height, c.latent_width}},
          {"upscale", c.upscale},
          {"denoiser_gain", c.denoiser_gain},
          {"codec_scale", c.codec_scale}};
}

ChannelConfig channel_from_json(const json& j) {
  static const std::set<std::string> known = {"steps",   "denoiser_seed", "codec_seed",
                                              "latent_shape", "upscale", "denoiser_gain",
                                              "codec_scale"};
  require(j.is_object(), ErrorKind::Validation, "channel config must be a JSON object");
  for (const auto& [k, v] : j.items())
    require(known.count(k) > 0, ErrorKind::Validation, "channel config: unknown field '" + k + "'");
  ChannelConfig c;
  c.steps = j.value("steps", c.steps);
  c.denoiser_seed = j.value("denoiser_seed", c.denoiser_seed);
  c.codec_seed = j.value("codec_seed", c.codec_seed);
  if (j.contains("latent_shape")) {
    const auto shape = j.at("latent_shape").get<std::vector<std::size_t>>();
    require(shape.size() == 3, ErrorKind::Validation, "channel.latent_shape must have 3 entries");
    c.latent_channels = shape[0];
    c.latent_height = shape[1];
    c.latent_width = shape[2];
  }
  c.upscale = j.value("upscale", c.upscale);
  c.denoiser_gain = j.value("denoiser_gain", c.denoiser_gain);
  c.codec_scale = j.value("codec_scale", c.codec_scale);
  return c;
}

json config_to_json(const RunConfig& cfg) {
  json schemes = json::array();
  for (Scheme s : cfg.schemes) schemes.push_back(scheme_name(s));
  json keys = json::object();
  for (const auto& [s, p] : cfg.keyfiles) keys[std::string(scheme_name(s))] = p.string();
  json sweeps = json::array();
  for (const auto& s : cfg.sweeps)
    sweeps.push_back({{"family", family_name(s.family)}, {"strengths", s.strengths}});
  json j = {{"images", cfg.images},     {"schemes", schemes},       {"key_seed", cfg.key_seed},
            {"keys", keys},             {"sweeps", sweeps},         {"seeds", cfg.seeds},
            {"null_count", cfg.null_count}, {"fpr", cfg.fpr},
            {"output_dir", cfg.output_dir.string()},
            {"mask_fractions", cfg.mask_fractions},
            {"channel", channel_to_json(cfg.channel)}};
  if (cfg.semantic_manifest) j["semantic_manifest"] = cfg.semantic_manifest->string();
  return j;
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {
      "images",     "schemes", "key_seed", "keys",           "sweeps",         "seeds",
      "null_count", "fpr",     "output_dir", "semantic_manifest", "mask_fractions", "channel"};
  require(j.is_object(), ErrorKind::Validation, "run config must be a JSON object");
  for (const auto& [k, v] : j.items())
    require(known.count(k) > 0, ErrorKind::Validation, "run config: unknown field '" + k + "'");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  RunConfig cfg;
  try {
    cfg.images = j.value("images", cfg.images);
    if (j.contains("schemes")) {
      cfg.schemes.clear();
      for (const auto& s : j.at("schemes")) cfg.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    cfg.key_seed = j.value("key_seed", cfg.key_seed);
    if (j.contains("keys"))
      for (const auto& [name, p] : j.at("keys").items())
        cfg.keyfiles[parse_scheme(name)] = resolve(p.get<std::string>());
    if (j.contains("sweeps"))
      for (const auto& s : j.at("sweeps")) {
        SweepEntry e;
        e.family = parse_family(s.at("family").get<std::string>());
        e.strengths = s.value("strengths", std::vector<double>{});
        cfg.sweeps.push_back(std::move(e));
      }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.null_count = j.value("null_count", cfg.null_count);
    cfg.fpr = j.value("fpr", cfg.fpr);
    if (j.contains("output_dir")) cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("semantic_manifest"))
      cfg.semantic_manifest = resolve(j.at("semantic_manifest").get<std::string>());
    cfg.mask_fractions = j.value("mask_fractions", std::vector<double>{});
    if (j.contains("channel")) cfg.channel = channel_from_json(j.at("channel"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("run config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parameter) fail(ErrorKind::Validation, e.what());
    throw;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate_config(const RunConfig& cfg) {
  auto check = [](bool ok, const std::string& msg) {
    require(ok, ErrorKind::Validation, "run config: " + msg);
  };
  check(!cfg.schemes.empty(), "at least one scheme is required");
  check(std::set<Scheme>(cfg.schemes.begin(), cfg.schemes.end()).size() == cfg.schemes.size(),
        "schemes must not repeat");
  check(!cfg.seeds.empty(), "at least one seed is required");
  check(cfg.null_count >= 1, "null_count must be positive");
  check(cfg.fpr > 0.0 && cfg.fpr < 1.0, "fpr must be in (0, 1)");
  check(cfg.channel.steps >= 1, "channel.steps must be positive");
  check(cfg.channel.latent_channels >= 1 && cfg.channel.latent_channels <= 5,
        "channel latent channels must be in 1..5");
  for (const auto& [s, p] : cfg.keyfiles) {
    check(std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end(),
          "keyfile given for unused scheme " + std::string(scheme_name(s)));
    check(std::filesystem::is_regular_file(p), "keyfile " + p.string() + " does not exist");
  }
  const std::size_t height = cfg.channel.latent_height * cfg.channel.upscale;
  const std::size_t width = cfg.channel.latent_width * cfg.channel.upscale;
  for (const auto& s : cfg.sweeps) {
    for (double v : s.strengths) {
      try {
        validate_strength(s.family, v);
      } catch (const Error& e) {
        fail(ErrorKind::Validation, std::string("run config: ") + e.what());
      }
      if (s.family == Family::Downsample)
        check(v < static_cast<double>(std::min(height, width)),
              "downsample factor must be smaller than the image");
      if (s.family == Family::CompleteShuffle)
        check(height % static_cast<std::size_t>(v) == 0 && width % static_cast<std::size_t>(v) == 0,
              "complete_shuffle block must divide the image size");
    }
    if (s.family == Family::PartialShuffle)
      check(height % kPartialShuffleBlock == 0 && width % kPartialShuffleBlock == 0,
            "partial_shuffle needs image sides divisible by 16");
  }
  for (double f : cfg.mask_fractions)
    check(f >= 0.0 && (f <= 0.9 || f == 1.0), "mask fractions must be in [0, 0.9] or exactly 1");
}

std::string config_hash(const RunConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest{};
  crypto_hash_sha256(digest.data(), reinterpret_cast<const unsigned char*>(text.data()),
                     text.size());
  return to_hex(digest);
}

Direction scheme_direction(Scheme s) noexcept {
  return s == Scheme::TreeRing ? Direction::LowerIsDetected : Direction::HigherIsDetected;
}

// ---------------------------------------------------------------------------
// Pipeline

struct Pipeline::NullCache {
  std::mutex mutex;
  std::map<std::pair<Scheme, bool>, std::vector<double>> scores;
};

Pipeline::Pipeline(const ChannelConfig& channel, std::map<Scheme, WatermarkKey> keys,
                   std::size_t null_count)
    : channel_(channel),
      keys_(std::move(keys)),
      null_count_(null_count),
      nulls_(std::make_shared<NullCache>()) {
  for (const auto& [s, k] : keys_) {
    require(key_scheme(k) == s, ErrorKind::Key,
            "key for " + std::string(scheme_name(s)) + " has the wrong scheme");
    if (s == Scheme::TreeRing)
      patterns_[s] = std::make_shared<const TreeRingPattern>(
          std::get<TreeRingKey>(k), channel.latent_height, channel.latent_width);
  }
}

const WatermarkKey& Pipeline::key(Scheme s) const {
  const auto it = keys_.find(s);
  require(it != keys_.end(), ErrorKind::Key,
          "no key loaded for scheme " + std::string(scheme_name(s)));
  return it->second;
}

Tensor3 Pipeline::clean_image(std::uint64_t image_id, std::uint64_t seed) const {
  return channel_.generate_image(
      sample_gaussian_latent(channel_.config(), seed, stream_id({kImageTag, image_id})));
}

Tensor3 Pipeline::watermarked_latent(Scheme s, std::uint64_t image_id, std::uint64_t seed) const {
  const auto& cfg = channel_.config();
  switch (s) {
    case Scheme::TreeRing:
      return patterns_.at(s)->embed(
          sample_gaussian_latent(cfg, seed, stream_id({kImageTag, image_id})));
    case Scheme::GaussianShading: {
      Rng rng(seed, stream_id({kImageTag, image_id, 1}));
      return gaussianshading_sample(std::get<GaussianShadingKey>(key(s)), rng,
                                    cfg.latent_channels, cfg.latent_height, cfg.latent_width);
    }
    case Scheme::StableSignature:
      break;
  }
  fail(ErrorKind::Parameter, "stable-signature is a pixel-domain scheme without a latent");
}

Tensor3 Pipeline::watermarked_image(Scheme s, std::uint64_t image_id, std::uint64_t seed) const {
  if (s == Scheme::StableSignature)
    return spreadspectrum_embed(std::get<SpreadSpectrumKey>(key(s)), clean_image(image_id, seed));
  return channel_.generate_image(watermarked_latent(s, image_id, seed));
}

DetectionResult Pipeline::detect(Scheme s, const Tensor3& input) const {
  if (s == Scheme::StableSignature) {
    require(input.channels() == 3, ErrorKind::Shape,
            "stable-signature detection needs a 3-channel image");
    return spreadspectrum_decode(std::get<SpreadSpectrumKey>(key(s)), input);
  }
  const bool latent = channel_.is_latent_shape(input);
  require(latent || channel_.is_image_shape(input), ErrorKind::Shape,
          "input matches neither the channel latent nor the channel image shape");
  const Tensor3 z = latent ? input : channel_.invert_image(input);
  if (s == Scheme::GaussianShading)
    return gaussianshading_decode(std::get<GaussianShadingKey>(key(s)), z);
  const double eta = patterns_.at(s)->distance(z);
  return {Scheme::TreeRing, eta, empirical_p_value(eta, null_scores(s, latent)), std::nullopt};
}

const std::vector<double>& Pipeline::null_scores(Scheme s, bool latent_domain) const {
  std::lock_guard lock(nulls_->mutex);
  const auto id = std::make_pair(s, latent_domain && s != Scheme::StableSignature);
  if (auto it = nulls_->scores.find(id); it != nulls_->scores.end()) return it->second;
  std::vector<double> scores(null_count_);
  const auto& cfg = channel_.config();
  for (std::size_t n = 0; n < null_count_; ++n) {
    const Tensor3 z = sample_gaussian_latent(cfg, kNullSeed, stream_id({kNullTag, n}));
    if (id.second) {
      scores[n] = s == Scheme::TreeRing
                      ? patterns_.at(s)->distance(z)
                      : gaussianshading_decode(std::get<GaussianShadingKey>(key(s)), z).statistic;
      continue;
    }
    const Tensor3 img = channel_.generate_image(z);
    switch (s) {
      case Scheme::TreeRing:
        scores[n] = patterns_.at(s)->distance(channel_.invert_image(img));
        break;
      case Scheme::GaussianShading:
        scores[n] = gaussianshading_decode(std::get<GaussianShadingKey>(key(s)),
                                           channel_.invert_image(img))
                        .statistic;
        break;
      case Scheme::StableSignature:
        scores[n] = spreadspectrum_decode(std::get<SpreadSpectrumKey>(key(s)), img).statistic;
        break;
    }
  }
  return nulls_->scores.emplace(id, std::move(scores)).first->second;
}

std::map<Scheme, WatermarkKey> config_keys(const RunConfig& cfg) {
  std::map<Scheme, WatermarkKey> keys;
  for (Scheme s : cfg.schemes) {
    const auto it = cfg.keyfiles.find(s);
    if (it != cfg.keyfiles.end()) {
      auto k = load_key(it->second);
      require(key_scheme(k) == s, ErrorKind::Validation,
              "keyfile " + it->second.string() + " holds a " +
                  std::string(scheme_name(key_scheme(k))) + " key");
      keys.emplace(s, std::move(k));
    } else {
      keys.emplace(s, generate_key(s, stream_id({cfg.key_seed, static_cast<std::uint64_t>(s)})));
    }
  }
  return keys;
}

// ---------------------------------------------------------------------------
// Records

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string record_csv_row(const EvalRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string s;
  s += r.image_id + ',' + std::string(scheme_name(r.scheme)) + ',' + r.family + ',' + r.variant +
       ',' + format_double(r.strength) + ',' + std::to_string(r.seed) + ',' +
       format_double(r.psnr_db) + ',' + format_double(r.ssim) + ',' + format_double(r.stat) + ',' +
       opt(r.p_value) + ',' + (r.detected ? "1" : "0") + ',' + opt(r.vlma) + ',' + opt(r.blipa) +
       ',' + opt(r.triplet_sim) + ',' + opt(r.mask_area);
  return s;
}

std::vector<EvalRecord> evaluate_records(const RunConfig& cfg, const Pipeline& pipe,
                                         std::size_t threads) {
  const auto specs = expand_specs(cfg);
  std::map<Scheme, double> thresholds;
  for (Scheme s : cfg.schemes) thresholds[s] = threshold_for(pipe, s, cfg.fpr);

  struct Item {
    std::uint64_t image, seed;
    Scheme scheme;
  };
  std::vector<Item> items;
  for (std::uint64_t i = 0; i < cfg.images; ++i)
    for (std::uint64_t seed : cfg.seeds)
      for (Scheme s : cfg.schemes) items.push_back({i, seed, s});

  std::vector<std::vector<EvalRecord>> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t k) {
    const auto& it = items[k];
    const Tensor3 marked = pipe.watermarked_image(it.scheme, it.image, it.seed);
    for (const auto& spec : specs) {
      double area = std::nan("");
      const PerturbationSpec ps{spec.family, spec.strength,
                                perturb_seed(it.image, it.seed, spec.family, spec.strength)};
      const Tensor3 attacked = apply_perturbation(ps, marked, &area);
      const auto det = pipe.detect(it.scheme, attacked);
      EvalRecord r;
      r.image_id = image_label(it.image);
      r.scheme = it.scheme;
      r.family = family_name(spec.family);
      r.variant = variant_of(spec.family);
      r.strength = spec.strength;
      r.seed = it.seed;
      r.psnr_db = psnr(marked, attacked);
      r.ssim = ssim(marked, attacked);
      r.stat = det.statistic;
      r.p_value = det.p_value;
      r.detected = is_detected(it.scheme, det.statistic, thresholds.at(it.scheme));
      if (!std::isnan(area)) r.mask_area = area;
      out[k].push_back(std::move(r));
    }
  });
  std::vector<EvalRecord> records;
  for (auto& v : out)
    for (auto& r : v) records.push_back(std::move(r));
  return records;
}

namespace {

void semantic_records(const RunConfig& cfg, const Pipeline& pipe,
                      std::vector<EvalRecord>& records, SweepSummary& summary) {
  const auto& dir = *cfg.semantic_manifest;
  if (!std::filesystem::is_regular_file(dir / "manifest.json")) {
    summary.skips.push_back("semantic manifest " + (dir / "manifest.json").string() +
                            " not found; semantic rows skipped");
    return;
  }
  const auto manifest = ingest_semantic_manifest(dir);
  for (const auto& rec : manifest) {
    for (const auto& w : rec.warnings) summary.warnings.push_back("record " + rec.id + ": " + w);
    if (!rec.usable()) {
      std::string why;
      for (const auto& e : rec.errors) why += (why.empty() ? "" : "; ") + e;
      summary.skips.push_back("record " + rec.id + " skipped: " + why);
      continue;
    }
    const Tensor3 original = image_read(rec.original);
    const Tensor3 edited = image_read(rec.edited);
    std::optional<double> blipa, vlma, triplet;
    if (rec.emb_original && rec.emb_edited)
      blipa = caption_agreement(vector_read(*rec.emb_original), vector_read(*rec.emb_edited));
    if (rec.vlm_emb_original && rec.vlm_emb_edited)
      vlma = caption_agreement(vector_read(*rec.vlm_emb_original), vector_read(*rec.vlm_emb_edited));
    if (rec.triplets_original && rec.triplets_edited)
      triplet = triplet_similarity(make_triplet_set(read_triplets(*rec.triplets_original)),
                                   make_triplet_set(read_triplets(*rec.triplets_edited)));
    if (original.height() < 11 || original.width() < 11) {
      summary.skips.push_back("record " + rec.id + " skipped: image smaller than the SSIM window");
      continue;
    }
    const double p = psnr(original, edited), s = ssim(original, edited);
    for (Scheme scheme : cfg.schemes) {
      DetectionResult det;
      try {
        det = pipe.detect(scheme, edited);
      } catch (const Error& e) {
        summary.skips.push_back("record " + rec.id + " / " + std::string(scheme_name(scheme)) +
                                " skipped: " + e.what());
        continue;
      }
      EvalRecord r;
      r.image_id = rec.id;
      r.scheme = scheme;
      r.family = "semantic";
      r.variant = rec.variant;
      r.strength = 0.0;
      r.seed = 0;
      r.psnr_db = p;
      r.ssim = s;
      r.stat = det.statistic;
      r.p_value = det.p_value;
      r.detected = is_detected(scheme, det.statistic, threshold_for(pipe, scheme, cfg.fpr));
      r.vlma = vlma;
      r.blipa = blipa;
      r.triplet_sim = triplet;
      r.mask_area = rec.mask_area;
      records.push_back(std::move(r));
    }
  }
}

struct Stats {
  std::vector<double> v;
  void add(double x) { v.push_back(x); }
  double mean() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  double sd() const {
    if (v.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  std::string mean_or_empty() const { return v.empty() ? std::string() : format_double(mean()); }
};

struct Cell {
  Scheme scheme;
  std::string family, variant;
  double strength;
  Stats psnr, ssim, stat, p, blipa, vlma, triplet, area;
  std::size_t detected = 0;
};

std::vector<Cell> aggregate(const std::vector<EvalRecord>& records) {
  std::vector<Cell> cells;
  std::map<std::tuple<Scheme, std::string, std::string, std::uint64_t>, std::size_t> index;
  for (const auto& r : records) {
    const auto key =
        std::make_tuple(r.scheme, r.family, r.variant, std::bit_cast<std::uint64_t>(r.strength));
    auto [it, fresh] = index.emplace(key, cells.size());
    if (fresh) cells.push_back(Cell{r.scheme, r.family, r.variant, r.strength, {}, {}, {}, {}, {}, {}, {}, {}});
    Cell& c = cells[it->second];
    c.psnr.add(r.psnr_db);
    c.ssim.add(r.ssim);
    c.stat.add(r.stat);
    if (r.p_value) c.p.add(*r.p_value);
    if (r.blipa) c.blipa.add(*r.blipa);
    if (r.vlma) c.vlma.add(*r.vlma);
    if (r.triplet_sim) c.triplet.add(*r.triplet_sim);
    if (r.mask_area) c.area.add(*r.mask_area);
    c.detected += r.detected;
  }
  return cells;
}

}  // namespace

SweepSummary run_sweep(const RunConfig& cfg, std::size_t threads) {
  validate_config(cfg);
  const Pipeline pipe(cfg.channel, config_keys(cfg), cfg.null_count);
  for (Scheme s : cfg.schemes) pipe.null_scores(s);

  SweepSummary summary;
  auto records = evaluate_records(cfg, pipe, threads);
  if (cfg.semantic_manifest) semantic_records(cfg, pipe, records, summary);
  summary.records = records.size();

  const auto& dir = cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir / "maps", ec);
  require(!ec, ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());

  {
    std::string csv = std::string(kRecordsHeader) + "\n";
    for (const auto& r : records) csv += record_csv_row(r) + "\n";
    write_text(dir / "records.csv", csv);
  }

  {
    std::string csv = "scheme,index,stat\n";
    for (Scheme s : cfg.schemes) {
      const auto& nulls = pipe.null_scores(s);
      for (std::size_t i = 0; i < nulls.size(); ++i)
        csv += std::string(scheme_name(s)) + ',' + std::to_string(i) + ',' +
               format_double(nulls[i]) + "\n";
    }
    write_text(dir / "nulls.csv", csv);
  }

  const auto cells = aggregate(records);
  std::map<std::pair<std::string, Scheme>, std::map<double, const Cell*>> maps;
  std::map<const Cell*, TprResult> tprs;
  {
    std::string csv =
        "scheme,family,variant,strength,n,psnr_mean,psnr_std,ssim_mean,ssim_std,stat_mean,"
        "stat_std,p_value_mean,detected_rate,tpr,tpr_warning,blipa_mean,vlma_mean,"
        "triplet_sim_mean,mask_area_mean\n";
    for (const auto& c : cells) {
      const auto t = tpr_at_fpr(pipe.null_scores(c.scheme), c.stat.v, scheme_direction(c.scheme),
                                cfg.fpr);
      tprs[&c] = t;
      const auto n = c.stat.v.size();
      csv += std::string(scheme_name(c.scheme)) + ',' + c.family + ',' + c.variant + ',' +
             format_double(c.strength) + ',' + std::to_string(n) + ',' +
             format_double(c.psnr.mean()) + ',' + format_double(c.psnr.sd()) + ',' +
             format_double(c.ssim.mean()) + ',' + format_double(c.ssim.sd()) + ',' +
             format_double(c.stat.mean()) + ',' + format_double(c.stat.sd()) + ',' +
             c.p.mean_or_empty() + ',' +
             format_double(static_cast<double>(c.detected) / static_cast<double>(n)) + ',' +
             format_double(t.tpr) + ',' + (t.small_null_warning ? "1" : "0") + ',' +
             c.blipa.mean_or_empty() + ',' + c.vlma.mean_or_empty() + ',' +
             c.triplet.mean_or_empty() + ',' + c.area.mean_or_empty() + "\n";
      if (c.family != "none" && c.family != "semantic")
        maps[{c.family, c.scheme}][c.strength] = &c;
    }
    write_text(dir / "aggregates.csv", csv);
  }

  {
    std::map<std::string, std::vector<Scheme>> families;
    for (const auto& [k, v] : maps) families[k.first].push_back(k.second);
    for (const auto& [family, schemes] : families) {
      std::set<double> strengths;
      for (Scheme s : schemes)
        for (const auto& [v, c] : maps[{family, s}]) strengths.insert(v);
      std::string csv = "strength";
      for (Scheme s : schemes) {
        const std::string n(scheme_name(s));
        csv += ',' + n + "_stat_mean," + n + "_tpr," + n + "_ssim_mean";
      }
      csv += "\n";
      for (double v : strengths) {
        csv += format_double(v);
        for (Scheme s : schemes) {
          const auto& m = maps[{family, s}];
          const auto it = m.find(v);
          if (it == m.end()) {
            csv += ",,,";
            continue;
          }
          csv += ',' + format_double(it->second->stat.mean()) + ',' +
                 format_double(tprs.at(it->second).tpr) + ',' +
                 format_double(it->second->ssim.mean());
        }
        csv += "\n";
      }
      write_text(dir / "maps" / (family + ".csv"), csv);
    }
  }

  if (!cfg.mask_fractions.empty())
    write_text(dir / "mask_fraction.csv",
               fraction_csv(mask_fraction_study(cfg, pipe, cfg.mask_fractions, threads)));

  json thresholds = json::object();
  for (Scheme s : cfg.schemes)
    thresholds[std::string(scheme_name(s))] = threshold_for(pipe, s, cfg.fpr);
  const json run = {{"tool", "wmlab 0.1.0"},
                    {"config", config_to_json(cfg)},
                    {"config_hash", config_hash(cfg)},
                    {"records", summary.records},
                    {"thresholds", thresholds},
                    {"skips", summary.skips},
                    {"warnings", summary.warnings}};
  write_text(dir / "run.json", run.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------

std::vector<FractionPoint> mask_fraction_study(const RunConfig& cfg, const Pipeline& pipe,
                                               const std::vector<double>& fractions,
                                               std::size_t threads) {
  for (double f : fractions)
    require(f >= 0.0 && (f <= 0.9 || f == 1.0), ErrorKind::Parameter,
            "mask fractions must be in [0, 0.9] or exactly 1");
  for (Scheme s : cfg.schemes) pipe.null_scores(s);

  struct Item {
    std::uint64_t image, seed;
    Scheme scheme;
  };
  std::vector<Item> items;
  for (std::uint64_t i = 0; i < cfg.images; ++i)
    for (std::uint64_t seed : cfg.seeds)
      for (Scheme s : cfg.schemes) items.push_back({i, seed, s});

  struct Sample {
    double stat;
    std::optional<double> p;
    double area;
  };
  std::vector<std::vector<Sample>> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t k) {
    const auto& it = items[k];
    const Tensor3 marked = pipe.watermarked_image(it.scheme, it.image, it.seed);
    const std::size_t h = marked.height(), w = marked.width();
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const double f = fractions[fi];
      const std::uint64_t s = stream_id({kFractionTag, it.image, it.seed, fi});
      BinaryMask mask = f >= 1.0   ? BinaryMask(h, w, true)
                        : f <= 0.0 ? BinaryMask(h, w, false)
                                   : synth_mask(MaskShape::Ellipse, h, w, f, s);
      const Tensor3 edited = masked_regenerate(marked, mask, nullptr, s);
      const auto det = pipe.detect(it.scheme, edited);
      out[k].push_back({det.statistic, det.p_value, mask.area_fraction()});
    }
  });

  std::vector<FractionPoint> points;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi)
    for (Scheme s : cfg.schemes) {
      FractionPoint p;
      p.fraction = fractions[fi];
      p.scheme = s;
      double area = 0.0;
      for (std::size_t k = 0; k < items.size(); ++k) {
        if (items[k].scheme != s) continue;
        const auto& sample = out[k][fi];
        p.stats.push_back(sample.stat);
        if (sample.p) p.p_values.push_back(*sample.p);
        area += sample.area;
      }
      p.n = p.stats.size();
      double sum = 0.0;
      for (double v : p.stats) sum += v;
      p.stat_mean = p.n ? sum / static_cast<double>(p.n) : 0.0;
      if (!p.p_values.empty()) {
        double ps = 0.0;
        for (double v : p.p_values) ps += v;
        p.p_value_mean = ps / static_cast<double>(p.p_values.size());
      }
      p.mask_area_mean = p.n ? area / static_cast<double>(p.n) : 0.0;
      points.push_back(std::move(p));
    }
  return points;
}

std::string fraction_csv(const std::vector<FractionPoint>& points) {
  std::string csv = "fraction,scheme,n,stat_mean,p_value_mean,mask_area_mean\n";
  for (const auto& p : points)
    csv += format_double(p.fraction) + ',' + std::string(scheme_name(p.scheme)) + ',' +
           std::to_string(p.n) + ',' + format_double(p.stat_mean) + ',' +
           (p.p_value_mean ? format_double(*p.p_value_mean) : std::string()) + ',' +
           format_double(p.mask_area_mean) + "\n";
  return csv;
}

}  // namespace wmlab
