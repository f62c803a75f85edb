#ifndef WMLAB_WMLAB_H
#define WMLAB_WMLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(WMLAB_BUILDING_LIBRARY)
#define WMLAB_API __attribute__((visibility("default")))
#else
#define WMLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wmlab_status {
  WMLAB_OK = 0,
  WMLAB_ERR_PARAMETER = 1,
  WMLAB_ERR_SHAPE = 2,
  WMLAB_ERR_FORMAT = 3,
  WMLAB_ERR_CAPACITY = 4,
  WMLAB_ERR_KEY = 5,
  WMLAB_ERR_CALIBRATION = 6,
  WMLAB_ERR_DEGENERATE = 7,
  WMLAB_ERR_VALIDATION = 8,
  WMLAB_ERR_IO = 9,
  WMLAB_ERR_INTERNAL = 10
} wmlab_status;

typedef struct wmlab_tensor wmlab_tensor;
typedef struct wmlab_key wmlab_key;
typedef struct wmlab_channel wmlab_channel;

/* Message for the most recent failure on the calling thread ("" if none). */
WMLAB_API const char* wmlab_last_error(void);
WMLAB_API const char* wmlab_status_name(wmlab_status status);
WMLAB_API const char* wmlab_version(void);
/* Releases strings returned through char** out-parameters. */
WMLAB_API void wmlab_string_free(char* s);

/* Tensors: float32, row-major (channel, y, x). */
WMLAB_API wmlab_status wmlab_tensor_create(size_t channels, size_t height, size_t width,
                                           const float* data, wmlab_tensor** out);
WMLAB_API void wmlab_tensor_free(wmlab_tensor* t);
WMLAB_API wmlab_status wmlab_tensor_shape(const wmlab_tensor* t, size_t* channels,
                                          size_t* height, size_t* width);
WMLAB_API const float* wmlab_tensor_data(const wmlab_tensor* t);
/* WTNS for ".wtns" paths, 8-bit RGB PNG otherwise. */
WMLAB_API wmlab_status wmlab_image_read(const char* path, wmlab_tensor** out);
WMLAB_API wmlab_status wmlab_image_write(const wmlab_tensor* t, const char* path);

/* Toy generator channel. config_json may be NULL for defaults. */
WMLAB_API wmlab_status wmlab_channel_create(const char* config_json, wmlab_channel** out);
WMLAB_API void wmlab_channel_free(wmlab_channel* ch);
WMLAB_API wmlab_status wmlab_channel_sample_latent(const wmlab_channel* ch, uint64_t seed,
                                                   uint64_t stream, wmlab_tensor** out);
WMLAB_API wmlab_status wmlab_channel_generate(const wmlab_channel* ch, const wmlab_tensor* z_T,
                                              wmlab_tensor** image);
WMLAB_API wmlab_status wmlab_channel_invert(const wmlab_channel* ch, const wmlab_tensor* image,
                                            wmlab_tensor** z_T);

/* Keys. scheme is "tree-ring", "gaussian-shading" or "stable-signature". */
WMLAB_API wmlab_status wmlab_key_generate(const char* scheme, uint64_t seed, wmlab_key** out);
WMLAB_API wmlab_status wmlab_key_load(const char* path, wmlab_key** out);
WMLAB_API wmlab_status wmlab_key_save(const wmlab_key* key, const char* path);
WMLAB_API const char* wmlab_key_scheme(const wmlab_key* key);
WMLAB_API void wmlab_key_free(wmlab_key* key);

/* Embeds the key's watermark.
 *   tree-ring: patterns `input` (an initial latent) or a fresh latent drawn
 *              from `seed` when input is NULL.
 *   gaussian-shading: samples a keyed latent from `seed`; input must be NULL.
 *   stable-signature: marks `input` (an image) or a fresh channel generation.
 * Latent schemes return the initial latent unless want_image is nonzero, in
 * which case the latent is run through the channel. */
WMLAB_API wmlab_status wmlab_embed(const wmlab_channel* ch, const wmlab_key* key,
                                   const wmlab_tensor* input, uint64_t seed, int want_image,
                                   wmlab_tensor** out);

/* Detects on a latent or channel image. Tree-Ring p-values use null_count
 * fresh unwatermarked inputs of the same domain. Result is JSON:
 * {"scheme", "statistic", "p_value"?, "bit_accuracy"?, "decoded_bits"?}. */
WMLAB_API wmlab_status wmlab_detect(const wmlab_channel* ch, const wmlab_key* key,
                                    const wmlab_tensor* input, size_t null_count,
                                    char** result_json);

/* Applies one perturbation family. mask_area receives the replaced area
 * fraction for masked_regen and NaN otherwise (may be NULL). */
WMLAB_API wmlab_status wmlab_perturb(const char* family, double strength, uint64_t seed,
                                     const wmlab_tensor* image, wmlab_tensor** out,
                                     double* mask_area);
/* Masked regeneration with an explicit mask (first channel > 0.5) and an
 * optional external fill; fill NULL selects the seeded mock fill. */
WMLAB_API wmlab_status wmlab_masked_regenerate(const wmlab_tensor* image,
                                               const wmlab_tensor* mask,
                                               const wmlab_tensor* fill, uint64_t seed,
                                               wmlab_tensor** out);
/* shape is "rect" or "ellipse"; the mask comes back as a 1-channel 0/1 tensor. */
WMLAB_API wmlab_status wmlab_synth_mask(const char* shape, size_t height, size_t width,
                                        double area, uint64_t seed, wmlab_tensor** out);

/* name is "psnr" or "ssim". */
WMLAB_API wmlab_status wmlab_metric(const char* name, const wmlab_tensor* a,
                                    const wmlab_tensor* b, double* out);
WMLAB_API wmlab_status wmlab_caption_agreement(const float* e1, const float* e2, size_t n,
                                               double* out);
/* Triplet files are JSON arrays of [subject, predicate, object]. */
WMLAB_API wmlab_status wmlab_triplet_similarity(const char* path_a, const char* path_b,
                                                double* out);
WMLAB_API wmlab_status wmlab_tpr_at_fpr(const double* null_scores, size_t null_count,
                                        const double* positives, size_t positive_count,
                                        int higher_is_detected, double fpr, double* tpr,
                                        double* threshold, int* small_null_warning);

/* Runs a sweep from a run-config file. output_dir overrides the config's
 * when non-NULL; key_seed overrides when has_key_seed is nonzero. The summary
 * is JSON: {"records", "skips", "warnings", "output_dir"}. */
WMLAB_API wmlab_status wmlab_sweep(const char* config_path, const char* output_dir,
                                   int has_key_seed, uint64_t key_seed, size_t threads,
                                   char** summary_json);

/* Validates a semantic-edit bundle directory. Returns WMLAB_ERR_VALIDATION on
 * schema errors or when any record has errors; the report JSON is filled in
 * whenever the manifest parses. */
WMLAB_API wmlab_status wmlab_validate_manifest(const char* dir, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
