#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tensor.hpp"

namespace wmlab {

enum class Family {
  None,
  SeamCarve,
  Downsample,
  Impulse,
  Interleave,
  Occlusion,
  Erosion,
  Dilation,
  PartialShuffle,
  CompleteShuffle,
  MaskedRegen,
};

std::string_view family_name(Family f) noexcept;
Family parse_family(std::string_view name);
std::vector<Family> all_families();

/// One attack instance: family + strength + seed.
struct PerturbationSpec {
  Family family = Family::None;
  double strength = 0.0;
  std::uint64_t seed = 0;
};

/// Throws a parameter error when `strength` is outside the family's domain.
void validate_strength(Family family, double strength);

// Seam carving -------------------------------------------------------------

/// Backward energy |dL/dx| + |dL/dy| of a single-channel plane, central
/// differences with clamped borders.
std::vector<double> seam_energy(const Tensor3& gray);
/// Minimum-cost 8-connected vertical seam by dynamic programming; column
/// index per row. Ties resolve to the leftmost candidate.
std::vector<std::size_t> find_vertical_seam(const std::vector<double>& energy,
                                            std::size_t height, std::size_t width);
Tensor3 remove_vertical_seam(const Tensor3& img, const std::vector<std::size_t>& seam);
/// Removes floor(fraction * width) seams, then rescales back to the input width.
Tensor3 seam_carve(const Tensor3& img, double fraction);
/// Like seam_carve but returns the carved image and each removed seam,
/// without the final rescale.
Tensor3 seam_carve_raw(const Tensor3& img, std::size_t seams,
                       std::vector<std::vector<std::size_t>>* removed = nullptr);

// Resampling ---------------------------------------------------------------

/// Bilinear resize with half-pixel centres and clamped borders.
Tensor3 resize_bilinear(const Tensor3& img, std::size_t height, std::size_t width);
Tensor3 downsample_up(const Tensor3& img, int factor);

// Pixel-loss families ------------------------------------------------------

Tensor3 impulse_erase(const Tensor3& img, double p, std::uint64_t seed);
Tensor3 interleave_black(const Tensor3& img, int period);
Tensor3 occlude_rows(const Tensor3& img, double fraction, std::uint64_t seed);

// Morphology ---------------------------------------------------------------

enum class MorphOp { Erode, Dilate };
Tensor3 morphology(const Tensor3& img, MorphOp op, int kernel);

// Block shuffles -----------------------------------------------------------

inline constexpr std::size_t kPartialShuffleBlock = 16;
Tensor3 partial_block_shuffle(const Tensor3& img, std::size_t swaps, std::size_t block,
                              std::uint64_t seed);
Tensor3 complete_block_shuffle(const Tensor3& img, std::size_t block, std::uint64_t seed);

// Masked regeneration ------------------------------------------------------

/// Mock inpainting content: a per-channel Gaussian field, 9x9 box-blurred,
/// then matched to the mean/std of the unmasked pixels (whole image when the
/// mask covers everything). Clamped to [0, 1].
Tensor3 mock_fill(const Tensor3& img, const BinaryMask& mask, std::uint64_t seed);
/// (1 - M) * img + M * fill. Pixels outside the mask are copied bit-exactly.
Tensor3 composite(const Tensor3& img, const BinaryMask& mask, const Tensor3& fill);
/// Uses `external_fill` when given, otherwise mock_fill.
Tensor3 masked_regenerate(const Tensor3& img, const BinaryMask& mask,
                          const Tensor3* external_fill, std::uint64_t seed);
Tensor3 masked_regenerate(const Tensor3& img, const BinaryMask& mask,
                          const std::filesystem::path& external_fill);

enum class MaskShape { Rect, Ellipse };
MaskShape parse_mask_shape(std::string_view name);
/// Seeded random placement with area fraction in (0, 0.9]; the achieved
/// fraction lands within +/-0.02 of the request. Ellipses up to 0.5 stay
/// inside the frame.
BinaryMask synth_mask(MaskShape shape, std::size_t height, std::size_t width, double area,
                      std::uint64_t seed);

// Dispatch -----------------------------------------------------------------

/// Applies `spec` with a synthetic ellipse mask and mock fill for
/// masked_regen (strength = area fraction; 1.0 replaces everything).
Tensor3 apply_perturbation(const PerturbationSpec& spec, const Tensor3& img,
                           double* mask_area = nullptr);

Tensor3 box_blur(const Tensor3& img, int size);

}  // namespace wmlab
