#include "wmlab/wmlab.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "channel.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "keyfile.hpp"
#include "manifest.hpp"
#include "metrics.hpp"
#include "perturbations.hpp"
#include "tensor_io.hpp"
#include "watermarks.hpp"

struct wmlab_tensor {
  wmlab::Tensor3 t;
};
struct wmlab_key {
  wmlab::WatermarkKey k;
  std::string scheme;
};
struct wmlab_channel {
  wmlab::ToyChannel ch;
};

namespace {

thread_local std::string g_last_error;

constexpr std::uint64_t kEmbedStream = 0x454d4244;  // "EMBD"

wmlab_status status_of(wmlab::ErrorKind k) {
  using wmlab::ErrorKind;
  switch (k) {
    case ErrorKind::Parameter: return WMLAB_ERR_PARAMETER;
    case ErrorKind::Shape: return WMLAB_ERR_SHAPE;
    case ErrorKind::Format: return WMLAB_ERR_FORMAT;
    case ErrorKind::Capacity: return WMLAB_ERR_CAPACITY;
    case ErrorKind::Key: return WMLAB_ERR_KEY;
    case ErrorKind::Calibration: return WMLAB_ERR_CALIBRATION;
    case ErrorKind::Degenerate: return WMLAB_ERR_DEGENERATE;
    case ErrorKind::Validation: return WMLAB_ERR_VALIDATION;
    case ErrorKind::Io: return WMLAB_ERR_IO;
  }
  return WMLAB_ERR_INTERNAL;
}

template <typename Fn>
wmlab_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return WMLAB_OK;
  } catch (const wmlab::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WMLAB_ERR_CAPACITY;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WMLAB_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  wmlab::require(p != nullptr, wmlab::ErrorKind::Parameter, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

wmlab_tensor* wrap(wmlab::Tensor3 t) { return new wmlab_tensor{std::move(t)}; }

}  // namespace

extern "C" {

const char* wmlab_last_error(void) { return g_last_error.c_str(); }

const char* wmlab_status_name(wmlab_status status) {
  switch (status) {
    case WMLAB_OK: return "ok";
    case WMLAB_ERR_PARAMETER: return "parameter error";
    case WMLAB_ERR_SHAPE: return "shape error";
    case WMLAB_ERR_FORMAT: return "format error";
    case WMLAB_ERR_CAPACITY: return "capacity error";
    case WMLAB_ERR_KEY: return "key error";
    case WMLAB_ERR_CALIBRATION: return "calibration error";
    case WMLAB_ERR_DEGENERATE: return "degenerate input";
    case WMLAB_ERR_VALIDATION: return "validation error";
    case WMLAB_ERR_IO: return "I/O error";
    case WMLAB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* wmlab_version(void) { return "0.1.0"; }

void wmlab_string_free(char* s) { std::free(s); }

wmlab_status wmlab_tensor_create(size_t channels, size_t height, size_t width, const float* data,
                                 wmlab_tensor** out) {
  return guarded([&] {
    need(out, "out");
    wmlab::Tensor3 t(channels, height, width);
    if (data) std::memcpy(t.data().data(), data, t.size() * sizeof(float));
    wmlab::require(t.all_finite(), wmlab::ErrorKind::Parameter, "tensor data must be finite");
    *out = wrap(std::move(t));
  });
}

void wmlab_tensor_free(wmlab_tensor* t) { delete t; }

wmlab_status wmlab_tensor_shape(const wmlab_tensor* t, size_t* channels, size_t* height,
                                size_t* width) {
  return guarded([&] {
    need(t, "tensor");
    if (channels) *channels = t->t.channels();
    if (height) *height = t->t.height();
    if (width) *width = t->t.width();
  });
}

const float* wmlab_tensor_data(const wmlab_tensor* t) { return t ? t->t.data().data() : nullptr; }

wmlab_status wmlab_image_read(const char* path, wmlab_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(wmlab::image_read(path));
  });
}

wmlab_status wmlab_image_write(const wmlab_tensor* t, const char* path) {
  return guarded([&] {
    need(t, "tensor");
    need(path, "path");
    wmlab::image_write(t->t, path);
  });
}

wmlab_status wmlab_channel_create(const char* config_json, wmlab_channel** out) {
  return guarded([&] {
    need(out, "out");
    wmlab::ChannelConfig cfg;
    if (config_json) {
      try {
        cfg = wmlab::channel_from_json(nlohmann::json::parse(config_json));
      } catch (const nlohmann::json::exception& e) {
        wmlab::fail(wmlab::ErrorKind::Parameter, std::string("channel config: ") + e.what());
      }
    }
    *out = new wmlab_channel{wmlab::ToyChannel(cfg)};
  });
}

void wmlab_channel_free(wmlab_channel* ch) { delete ch; }

wmlab_status wmlab_channel_sample_latent(const wmlab_channel* ch, uint64_t seed, uint64_t stream,
                                         wmlab_tensor** out) {
  return guarded([&] {
    need(ch, "channel");
    need(out, "out");
    *out = wrap(wmlab::sample_gaussian_latent(ch->ch.config(), seed, stream));
  });
}

wmlab_status wmlab_channel_generate(const wmlab_channel* ch, const wmlab_tensor* z_T,
                                    wmlab_tensor** image) {
  return guarded([&] {
    need(ch, "channel");
    need(z_T, "latent");
    need(image, "out");
    *image = wrap(ch->ch.generate_image(z_T->t));
  });
}

wmlab_status wmlab_channel_invert(const wmlab_channel* ch, const wmlab_tensor* image,
                                  wmlab_tensor** z_T) {
  return guarded([&] {
    need(ch, "channel");
    need(image, "image");
    need(z_T, "out");
    *z_T = wrap(ch->ch.invert_image(image->t));
  });
}

wmlab_status wmlab_key_generate(const char* scheme, uint64_t seed, wmlab_key** out) {
  return guarded([&] {
    need(scheme, "scheme");
    need(out, "out");
    const auto s = wmlab::parse_scheme(scheme);
    *out = new wmlab_key{wmlab::generate_key(s, seed), std::string(wmlab::scheme_name(s))};
  });
}

wmlab_status wmlab_key_load(const char* path, wmlab_key** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto k = wmlab::load_key(path);
    const std::string name(wmlab::scheme_name(wmlab::key_scheme(k)));
    *out = new wmlab_key{std::move(k), name};
  });
}

wmlab_status wmlab_key_save(const wmlab_key* key, const char* path) {
  return guarded([&] {
    need(key, "key");
    need(path, "path");
    wmlab::save_key(key->k, path);
  });
}

const char* wmlab_key_scheme(const wmlab_key* key) { return key ? key->scheme.c_str() : ""; }

void wmlab_key_free(wmlab_key* key) { delete key; }

wmlab_status wmlab_embed(const wmlab_channel* ch, const wmlab_key* key, const wmlab_tensor* input,
                         uint64_t seed, int want_image, wmlab_tensor** out) {
  return guarded([&] {
    using namespace wmlab;
    need(ch, "channel");
    need(key, "key");
    need(out, "out");
    const auto& c = ch->ch;
    const Scheme scheme = key_scheme(key->k);
    Tensor3 result;
    switch (scheme) {
      case Scheme::TreeRing: {
        Tensor3 z = input ? input->t : sample_gaussian_latent(c.config(), seed, kEmbedStream);
        require(c.is_latent_shape(z), ErrorKind::Shape,
                "tree-ring embedding expects an initial latent of the channel shape");
        result = treering_embed(std::get<TreeRingKey>(key->k), z);
        break;
      }
      case Scheme::GaussianShading: {
        require(input == nullptr, ErrorKind::Parameter,
                "gaussian-shading samples its own latent; no input is accepted");
        Rng rng(seed, kEmbedStream);
        const auto& cfg = c.config();
        result = gaussianshading_sample(std::get<GaussianShadingKey>(key->k), rng,
                                        cfg.latent_channels, cfg.latent_height, cfg.latent_width);
        break;
      }
      case Scheme::StableSignature: {
        const Tensor3 carrier =
            input ? input->t
                  : c.generate_image(sample_gaussian_latent(c.config(), seed, kEmbedStream));
        *out = wrap(spreadspectrum_embed(std::get<SpreadSpectrumKey>(key->k), carrier));
        return;
      }
    }
    *out = wrap(want_image ? c.generate_image(result) : std::move(result));
  });
}

wmlab_status wmlab_detect(const wmlab_channel* ch, const wmlab_key* key, const wmlab_tensor* input,
                          size_t null_count, char** result_json) {
  return guarded([&] {
    using namespace wmlab;
    need(ch, "channel");
    need(key, "key");
    need(input, "input");
    need(result_json, "out");
    const Scheme scheme = key_scheme(key->k);
    require(scheme != Scheme::TreeRing || null_count > 0, ErrorKind::Calibration,
            "tree-ring detection needs a non-empty null population");
    const Pipeline pipe(ch->ch.config(), {{scheme, key->k}}, null_count);
    const auto det = pipe.detect(scheme, input->t);
    nlohmann::json j = {{"scheme", scheme_name(scheme)}, {"statistic", det.statistic}};
    if (det.p_value) j["p_value"] = *det.p_value;
    if (det.decoded_bits) {
      j["bit_accuracy"] = det.statistic;
      j["decoded_bits"] = bits_to_hex(*det.decoded_bits);
    }
    *result_json = dup_string(j.dump());
  });
}

wmlab_status wmlab_perturb(const char* family, double strength, uint64_t seed,
                           const wmlab_tensor* image, wmlab_tensor** out, double* mask_area) {
  return guarded([&] {
    need(family, "family");
    need(image, "image");
    need(out, "out");
    double area = std::nan("");
    const wmlab::PerturbationSpec spec{wmlab::parse_family(family), strength, seed};
    *out = wrap(wmlab::apply_perturbation(spec, image->t, &area));
    if (mask_area) *mask_area = area;
  });
}

wmlab_status wmlab_masked_regenerate(const wmlab_tensor* image, const wmlab_tensor* mask,
                                     const wmlab_tensor* fill, uint64_t seed,
                                     wmlab_tensor** out) {
  return guarded([&] {
    need(image, "image");
    need(mask, "mask");
    need(out, "out");
    const auto m = wmlab::mask_from_tensor(mask->t);
    *out = wrap(wmlab::masked_regenerate(image->t, m, fill ? &fill->t : nullptr, seed));
  });
}

wmlab_status wmlab_synth_mask(const char* shape, size_t height, size_t width, double area,
                              uint64_t seed, wmlab_tensor** out) {
  return guarded([&] {
    need(shape, "shape");
    need(out, "out");
    const auto m = wmlab::synth_mask(wmlab::parse_mask_shape(shape), height, width, area, seed);
    wmlab::Tensor3 t(1, height, width);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) t.at(0, y, x) = m.get(y, x) ? 1.0f : 0.0f;
    *out = wrap(std::move(t));
  });
}

wmlab_status wmlab_metric(const char* name, const wmlab_tensor* a, const wmlab_tensor* b,
                          double* out) {
  return guarded([&] {
    need(name, "name");
    need(a, "a");
    need(b, "b");
    need(out, "out");
    const std::string n(name);
    if (n == "psnr")
      *out = wmlab::psnr(a->t, b->t);
    else if (n == "ssim")
      *out = wmlab::ssim(a->t, b->t);
    else
      wmlab::fail(wmlab::ErrorKind::Parameter, "unknown metric '" + n + "' (expected psnr or ssim)");
  });
}

wmlab_status wmlab_caption_agreement(const float* e1, const float* e2, size_t n, double* out) {
  return guarded([&] {
    need(e1, "e1");
    need(e2, "e2");
    need(out, "out");
    *out = wmlab::caption_agreement({e1, n}, {e2, n});
  });
}

wmlab_status wmlab_triplet_similarity(const char* path_a, const char* path_b, double* out) {
  return guarded([&] {
    need(path_a, "path_a");
    need(path_b, "path_b");
    need(out, "out");
    *out = wmlab::triplet_similarity(wmlab::make_triplet_set(wmlab::read_triplets(path_a)),
                                     wmlab::make_triplet_set(wmlab::read_triplets(path_b)));
  });
}

wmlab_status wmlab_tpr_at_fpr(const double* null_scores, size_t null_count,
                              const double* positives, size_t positive_count,
                              int higher_is_detected, double fpr, double* tpr, double* threshold,
                              int* small_null_warning) {
  return guarded([&] {
    wmlab::require((null_scores || null_count == 0) && (positives || positive_count == 0),
                   wmlab::ErrorKind::Parameter, "score arrays are NULL");
    const auto r = wmlab::tpr_at_fpr(
        {null_scores, null_count}, {positives, positive_count},
        higher_is_detected ? wmlab::Direction::HigherIsDetected : wmlab::Direction::LowerIsDetected,
        fpr);
    if (tpr) *tpr = r.tpr;
    if (threshold) *threshold = r.threshold;
    if (small_null_warning) *small_null_warning = r.small_null_warning ? 1 : 0;
  });
}

wmlab_status wmlab_sweep(const char* config_path, const char* output_dir, int has_key_seed,
                         uint64_t key_seed, size_t threads, char** summary_json) {
  return guarded([&] {
    need(config_path, "config_path");
    auto cfg = wmlab::load_config(config_path);
    if (output_dir) cfg.output_dir = output_dir;
    if (has_key_seed) cfg.key_seed = key_seed;
    const auto summary = wmlab::run_sweep(cfg, threads == 0 ? 1 : threads);
    if (summary_json) {
      const nlohmann::json j = {{"records", summary.records},
                                {"skips", summary.skips},
                                {"warnings", summary.warnings},
                                {"output_dir", cfg.output_dir.string()}};
      *summary_json = dup_string(j.dump());
    }
  });
}

wmlab_status wmlab_validate_manifest(const char* dir, char** report_json) {
  bool record_errors = false;
  const auto status = guarded([&] {
    need(dir, "dir");
    const auto records = wmlab::ingest_semantic_manifest(dir);
    nlohmann::json list = nlohmann::json::array();
    std::size_t errors = 0, warnings = 0;
    for (const auto& r : records) {
      errors += r.errors.size();
      warnings += r.warnings.size();
      nlohmann::json item = {{"id", r.id},
                             {"variant", r.variant},
                             {"errors", r.errors},
                             {"warnings", r.warnings}};
      if (r.mask_area) item["mask_area"] = *r.mask_area;
      list.push_back(std::move(item));
    }
    record_errors = errors > 0;
    if (report_json) {
      const nlohmann::json j = {{"records", list},
                                {"record_count", records.size()},
                                {"error_count", errors},
                                {"warning_count", warnings}};
      *report_json = dup_string(j.dump());
    }
    if (record_errors) g_last_error = std::to_string(errors) + " record error(s) in manifest";
  });
  if (status == WMLAB_OK && record_errors) return WMLAB_ERR_VALIDATION;
  return status;
}

}  // extern "C"
