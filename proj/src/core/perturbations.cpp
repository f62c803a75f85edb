#include "perturbations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"
#include "rng.hpp"
#include "tensor_io.hpp"

namespace wmlab {

namespace {

constexpr std::uint64_t kImpulseStream = 1;
constexpr std::uint64_t kOcclusionStream = 2;
constexpr std::uint64_t kPartialShuffleStream = 3;
constexpr std::uint64_t kCompleteShuffleStream = 4;
constexpr std::uint64_t kFillStream = 5;
constexpr std::uint64_t kMaskStream = 6;

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

void set_black(Tensor3& img, std::size_t y, std::size_t x) {
  for (std::size_t c = 0; c < img.channels(); ++c) img.at(c, y, x) = 0.0f;
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::None: return "none";
    case Family::SeamCarve: return "seam_carve";
    case Family::Downsample: return "downsample";
    case Family::Impulse: return "impulse";
    case Family::Interleave: return "interleave";
    case Family::Occlusion: return "occlusion";
    case Family::Erosion: return "erosion";
    case Family::Dilation: return "dilation";
    case Family::PartialShuffle: return "partial_shuffle";
    case Family::CompleteShuffle: return "complete_shuffle";
    case Family::MaskedRegen: return "masked_regen";
  }
  return "unknown";
}

std::vector<Family> all_families() {
  return {Family::None,       Family::SeamCarve,      Family::Downsample,
          Family::Impulse,    Family::Interleave,     Family::Occlusion,
          Family::Erosion,    Family::Dilation,       Family::PartialShuffle,
          Family::CompleteShuffle, Family::MaskedRegen};
}

Family parse_family(std::string_view name) {
  for (Family f : all_families())
    if (family_name(f) == name) return f;
  fail(ErrorKind::Parameter, "unknown perturbation family '" + std::string(name) + "'");
}

void validate_strength(Family family, double s) {
  auto bad = [&](const std::string& domain) {
    fail(ErrorKind::Parameter, std::string(family_name(family)) + " strength " +
                                   std::to_string(s) + " outside domain " + domain);
  };
  if (!std::isfinite(s)) bad("(finite values only)");
  switch (family) {
    case Family::None:
      break;
    case Family::SeamCarve:
      if (s < 0.0 || s > 0.5) bad("[0, 0.5]");
      break;
    case Family::Downsample:
      if (!is_integer(s) || s < 2 || s > 32) bad("{2..32}");
      break;
    case Family::Impulse:
      if (s < 0.0 || s > 1.0) bad("[0, 1]");
      break;
    case Family::Interleave:
      if (!is_integer(s) || s < 2) bad("integers >= 2");
      break;
    case Family::Occlusion:
      if (s <= 0.0 || s > 1.0) bad("(0, 1]");
      break;
    case Family::Erosion:
    case Family::Dilation:
      if (!is_integer(s) || s < 3 || s > 11 || static_cast<long>(s) % 2 == 0)
        bad("odd integers {3..11}");
      break;
    case Family::PartialShuffle:
      if (!is_integer(s) || s < 0) bad("integers >= 0");
      break;
    case Family::CompleteShuffle:
      if (s != 4 && s != 8 && s != 16 && s != 32) bad("{4, 8, 16, 32}");
      break;
    case Family::MaskedRegen:
      if (s < 0.0 || (s > 0.9 && s != 1.0)) bad("[0, 0.9] or exactly 1");
      break;
  }
}

// ---------------------------------------------------------------------------

Tensor3 resize_bilinear(const Tensor3& img, std::size_t height, std::size_t width) {
  require(height > 0 && width > 0 && !img.empty(), ErrorKind::Shape,
          "resize to an empty image");
  if (height == img.height() && width == img.width()) return img;
  struct Tap {
    std::size_t i0, i1;
    double f;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = (o + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      const std::size_t i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, s - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(img.height(), height), tx = taps(img.width(), width);
  Tensor3 out(img.channels(), height, width);
  std::vector<double> row(img.width());
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < height; ++y) {
      const auto& [y0, y1, fy] = ty[y];
      for (std::size_t x = 0; x < img.width(); ++x)
        row[x] = (1.0 - fy) * img.at(c, y0, x) + fy * img.at(c, y1, x);
      for (std::size_t x = 0; x < width; ++x) {
        const auto& [x0, x1, fx] = tx[x];
        out.at(c, y, x) = static_cast<float>((1.0 - fx) * row[x0] + fx * row[x1]);
      }
    }
  return out;
}

Tensor3 downsample_up(const Tensor3& img, int factor) {
  validate_strength(Family::Downsample, factor);
  require(static_cast<std::size_t>(factor) < std::min(img.height(), img.width()),
          ErrorKind::Parameter, "downsample factor must be smaller than the image");
  const std::size_t dh = (img.height() + factor - 1) / factor;
  const std::size_t dw = (img.width() + factor - 1) / factor;
  return resize_bilinear(resize_bilinear(img, dh, dw), img.height(), img.width());
}

Tensor3 impulse_erase(const Tensor3& img, double p, std::uint64_t seed) {
  validate_strength(Family::Impulse, p);
  Tensor3 out = img;
  Rng rng(seed, kImpulseStream);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      if (rng.bernoulli(p)) set_black(out, y, x);
  return out;
}

Tensor3 interleave_black(const Tensor3& img, int period) {
  validate_strength(Family::Interleave, period);
  Tensor3 out = img;
  for (std::size_t y = 0; y < img.height(); y += static_cast<std::size_t>(period))
    for (std::size_t x = 0; x < img.width(); ++x) set_black(out, y, x);
  return out;
}

Tensor3 occlude_rows(const Tensor3& img, double fraction, std::uint64_t seed) {
  validate_strength(Family::Occlusion, fraction);
  Tensor3 out = img;
  const std::size_t h = img.height();
  const auto band = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(h)));
  if (band == 0 || h == 0) return out;
  Rng rng(seed, kOcclusionStream);
  const std::size_t start = rng.below(h);
  for (std::size_t i = 0; i < band; ++i)
    for (std::size_t x = 0; x < img.width(); ++x) set_black(out, (start + i) % h, x);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Sliding min/max along a line with replicate borders.
template <typename Pick>
void sliding_extreme(const float* in, float* out, std::size_t n, std::size_t stride, int radius,
                     Pick pick) {
  for (std::size_t i = 0; i < n; ++i) {
    float v = in[i * stride];
    for (int d = -radius; d <= radius; ++d) {
      const long j = std::clamp<long>(static_cast<long>(i) + d, 0, static_cast<long>(n) - 1);
      v = pick(v, in[static_cast<std::size_t>(j) * stride]);
    }
    out[i * stride] = v;
  }
}

}  // namespace

Tensor3 morphology(const Tensor3& img, MorphOp op, int kernel) {
  validate_strength(op == MorphOp::Erode ? Family::Erosion : Family::Dilation, kernel);
  const int r = kernel / 2;
  const std::size_t h = img.height(), w = img.width();
  // A square structuring element separates into a row pass and a column pass.
  Tensor3 tmp(img.channels(), h, w), out(img.channels(), h, w);
  auto run = [&](auto pick) {
    for (std::size_t c = 0; c < img.channels(); ++c) {
      const float* src = img.plane(c).data();
      float* mid = tmp.plane(c).data();
      float* dst = out.plane(c).data();
      for (std::size_t y = 0; y < h; ++y) sliding_extreme(src + y * w, mid + y * w, w, 1, r, pick);
      for (std::size_t x = 0; x < w; ++x) sliding_extreme(mid + x, dst + x, h, w, r, pick);
    }
  };
  if (op == MorphOp::Erode)
    run([](float a, float b) { return std::min(a, b); });
  else
    run([](float a, float b) { return std::max(a, b); });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_blocks(const Tensor3& img, std::size_t block) {
  require(block > 0 && img.height() % block == 0 && img.width() % block == 0, ErrorKind::Shape,
          "image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
              " is not divisible into " + std::to_string(block) + "-pixel blocks");
}

void copy_block(const Tensor3& src, std::size_t src_block, Tensor3& dst, std::size_t dst_block,
                std::size_t block) {
  const std::size_t per_row = src.width() / block;
  const std::size_t sy = src_block / per_row * block, sx = src_block % per_row * block;
  const std::size_t dy = dst_block / per_row * block, dx = dst_block % per_row * block;
  for (std::size_t c = 0; c < src.channels(); ++c)
    for (std::size_t y = 0; y < block; ++y)
      for (std::size_t x = 0; x < block; ++x) dst.at(c, dy + y, dx + x) = src.at(c, sy + y, sx + x);
}

}  // namespace

Tensor3 partial_block_shuffle(const Tensor3& img, std::size_t swaps, std::size_t block,
                              std::uint64_t seed) {
  check_blocks(img, block);
  const std::size_t nblocks = (img.height() / block) * (img.width() / block);
  std::vector<std::size_t> perm(nblocks);
  for (std::size_t i = 0; i < nblocks; ++i) perm[i] = i;
  if (nblocks >= 2) {
    Rng rng(seed, kPartialShuffleStream);
    for (std::size_t s = 0; s < swaps; ++s) {
      // Each transposition picks two distinct blocks; pairs are drawn with
      // replacement across swaps.
      const std::size_t a = rng.below(nblocks);
      std::size_t b = rng.below(nblocks - 1);
      if (b >= a) ++b;
      std::swap(perm[a], perm[b]);
    }
  }
  Tensor3 out = img;
  for (std::size_t p = 0; p < nblocks; ++p)
    if (perm[p] != p) copy_block(img, perm[p], out, p, block);
  return out;
}

Tensor3 complete_block_shuffle(const Tensor3& img, std::size_t block, std::uint64_t seed) {
  validate_strength(Family::CompleteShuffle, static_cast<double>(block));
  check_blocks(img, block);
  const std::size_t nblocks = (img.height() / block) * (img.width() / block);
  std::vector<std::size_t> perm(nblocks);
  for (std::size_t i = 0; i < nblocks; ++i) perm[i] = i;
  Rng rng(seed, kCompleteShuffleStream);
  for (std::size_t i = nblocks; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Tensor3 out(img.channels(), img.height(), img.width());
  for (std::size_t p = 0; p < nblocks; ++p) copy_block(img, perm[p], out, p, block);
  return out;
}

// ---------------------------------------------------------------------------

Tensor3 box_blur(const Tensor3& img, int size) {
  require(size >= 1 && size % 2 == 1, ErrorKind::Parameter, "box blur size must be odd");
  const int r = size / 2;
  const std::size_t h = img.height(), w = img.width();
  Tensor3 tmp(img.channels(), h, w), out(img.channels(), h, w);
  auto blur_line = [r](const float* in, float* o, std::size_t n, std::size_t stride) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) {
        const long j = std::clamp<long>(static_cast<long>(i) + d, 0, static_cast<long>(n) - 1);
        acc += in[static_cast<std::size_t>(j) * stride];
      }
      o[i * stride] = static_cast<float>(acc / (2 * r + 1));
    }
  };
  for (std::size_t c = 0; c < img.channels(); ++c) {
    const float* src = img.plane(c).data();
    float* mid = tmp.plane(c).data();
    float* dst = out.plane(c).data();
    for (std::size_t y = 0; y < h; ++y) blur_line(src + y * w, mid + y * w, w, 1);
    for (std::size_t x = 0; x < w; ++x) blur_line(mid + x, dst + x, h, w);
  }
  return out;
}

Tensor3 mock_fill(const Tensor3& img, const BinaryMask& mask, std::uint64_t seed) {
  require(mask.height() == img.height() && mask.width() == img.width(), ErrorKind::Shape,
          "mask dimensions do not match the image");
  const bool use_all = mask.count() == mask.height() * mask.width();
  Rng rng(seed, kFillStream);
  Tensor3 noise(img.channels(), img.height(), img.width());
  for (float& v : noise.data()) v = static_cast<float>(rng.normal());
  Tensor3 fill = box_blur(noise, 9);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x)
        if (use_all || !mask.get(y, x)) {
          const double v = img.at(c, y, x);
          sum += v;
          sq += v * v;
          ++n;
        }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));

    auto plane = fill.plane(c);
    double fsum = 0.0, fsq = 0.0;
    for (float v : plane) {
      fsum += v;
      fsq += static_cast<double>(v) * v;
    }
    const double fmean = fsum / static_cast<double>(plane.size());
    const double fsd =
        std::sqrt(std::max(1e-30, fsq / static_cast<double>(plane.size()) - fmean * fmean));
    for (float& v : plane)
      v = static_cast<float>(std::clamp(mean + sd * (v - fmean) / fsd, 0.0, 1.0));
  }
  return fill;
}

Tensor3 composite(const Tensor3& img, const BinaryMask& mask, const Tensor3& fill) {
  require(mask.height() == img.height() && mask.width() == img.width(), ErrorKind::Shape,
          "mask dimensions do not match the image");
  require(fill.same_shape(img), ErrorKind::Shape, "fill image dimensions do not match");
  Tensor3 out = img;
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x)
        if (mask.get(y, x)) out.at(c, y, x) = fill.at(c, y, x);
  return out;
}

Tensor3 masked_regenerate(const Tensor3& img, const BinaryMask& mask, const Tensor3* external_fill,
                          std::uint64_t seed) {
  require(mask.height() == img.height() && mask.width() == img.width(), ErrorKind::Shape,
          "mask dimensions do not match the image");
  if (mask.count() == 0) return img;
  if (external_fill) return composite(img, mask, *external_fill);
  return composite(img, mask, mock_fill(img, mask, seed));
}

Tensor3 masked_regenerate(const Tensor3& img, const BinaryMask& mask,
                          const std::filesystem::path& external_fill) {
  const Tensor3 fill = image_read(external_fill);
  return masked_regenerate(img, mask, &fill, 0);
}

// ---------------------------------------------------------------------------

MaskShape parse_mask_shape(std::string_view name) {
  if (name == "rect") return MaskShape::Rect;
  if (name == "ellipse") return MaskShape::Ellipse;
  fail(ErrorKind::Parameter, "unknown mask shape '" + std::string(name) + "'");
}

namespace {

BinaryMask rasterize_ellipse(std::size_t h, std::size_t w, double cy, double cx, double ay,
                             double ax) {
  BinaryMask m(h, w);
  const long y0 = std::max(0L, static_cast<long>(std::floor(cy - ay)));
  const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(cy + ay)));
  for (long y = y0; y <= y1; ++y) {
    const double dy = (y + 0.5 - cy) / ay;
    if (dy * dy > 1.0) continue;
    const double half = ax * std::sqrt(1.0 - dy * dy);
    const long x0 = std::max(0L, static_cast<long>(std::ceil(cx - half - 0.5)));
    const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::floor(cx + half - 0.5)));
    for (long x = x0; x <= x1; ++x) m.set(static_cast<std::size_t>(y), static_cast<std::size_t>(x), true);
  }
  return m;
}

}  // namespace

BinaryMask synth_mask(MaskShape shape, std::size_t h, std::size_t w, double area,
                      std::uint64_t seed) {
  require(area > 0.0 && area <= 0.9, ErrorKind::Parameter, "mask area fraction must be in (0, 0.9]");
  require(h > 0 && w > 0, ErrorKind::Shape, "mask dimensions must be positive");
  Rng rng(seed, kMaskStream);
  const double target = area * static_cast<double>(h * w);
  // Aspect ratio relative to the frame, log-uniform in [1/1.5, 1.5].
  const double aspect = std::exp((2.0 * rng.uniform() - 1.0) * std::log(1.5));

  if (shape == MaskShape::Rect) {
    double rh = std::sqrt(target / aspect * static_cast<double>(h) / static_cast<double>(w));
    rh = std::clamp(std::round(rh), 1.0, static_cast<double>(h));
    double rw = std::clamp(std::round(target / rh), 1.0, static_cast<double>(w));
    rh = std::clamp(std::round(target / rw), 1.0, static_cast<double>(h));
    const auto bh = static_cast<std::size_t>(rh), bw = static_cast<std::size_t>(rw);
    const std::size_t y0 = rng.below(h - bh + 1), x0 = rng.below(w - bw + 1);
    BinaryMask m(h, w);
    for (std::size_t y = y0; y < y0 + bh; ++y)
      for (std::size_t x = x0; x < x0 + bw; ++x) m.set(y, x, true);
    return m;
  }

  // Ellipse: pick semi-axes for the requested area; keep it inside the frame
  // when it fits, otherwise centre it and let the frame clip.
  double ay = std::sqrt(target / std::numbers::pi / aspect * static_cast<double>(h) /
                        static_cast<double>(w));
  double ax = target / std::numbers::pi / ay;
  const double hh = static_cast<double>(h) / 2.0, hw = static_cast<double>(w) / 2.0;
  if (ay > hh) {
    ay = hh;
    ax = target / std::numbers::pi / ay;
  }
  if (ax > hw) {
    ax = hw;
    ay = std::min(hh, target / std::numbers::pi / ax);
  }
  const bool fits = std::numbers::pi * ax * ay >= target * 0.999;
  const double cy = fits ? ay + rng.uniform() * (static_cast<double>(h) - 2 * ay) : hh;
  const double cx = fits ? ax + rng.uniform() * (static_cast<double>(w) - 2 * ax) : hw;
  const double ratio = ax / ay;
  // Bisect on the minor axis so the rasterized count tracks the target.
  const double max_scale = std::hypot(static_cast<double>(h), static_cast<double>(w));
  double lo = 0.0, hi = fits ? std::min(ay, hw / ratio) : max_scale;
  if (fits) {
    // Never grow beyond the frame-fitting size.
    hi = std::min(hh, hw / ratio);
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const auto m = rasterize_ellipse(h, w, cy, cx, mid, mid * ratio);
    if (static_cast<double>(m.count()) < target)
      lo = mid;
    else
      hi = mid;
  }
  auto below_m = rasterize_ellipse(h, w, cy, cx, lo, lo * ratio);
  auto above_m = rasterize_ellipse(h, w, cy, cx, hi, hi * ratio);
  return std::abs(static_cast<double>(above_m.count()) - target) <
                 std::abs(static_cast<double>(below_m.count()) - target)
             ? above_m
             : below_m;
}

// ---------------------------------------------------------------------------

Tensor3 apply_perturbation(const PerturbationSpec& spec, const Tensor3& img, double* mask_area) {
  validate_strength(spec.family, spec.strength);
  if (mask_area) *mask_area = std::nan("");
  const double s = spec.strength;
  switch (spec.family) {
    case Family::None: return img;
    case Family::SeamCarve: return seam_carve(img, s);
    case Family::Downsample: return downsample_up(img, static_cast<int>(s));
    case Family::Impulse: return impulse_erase(img, s, spec.seed);
    case Family::Interleave: return interleave_black(img, static_cast<int>(s));
    case Family::Occlusion: return occlude_rows(img, s, spec.seed);
    case Family::Erosion: return morphology(img, MorphOp::Erode, static_cast<int>(s));
    case Family::Dilation: return morphology(img, MorphOp::Dilate, static_cast<int>(s));
    case Family::PartialShuffle:
      return partial_block_shuffle(img, static_cast<std::size_t>(s), kPartialShuffleBlock, spec.seed);
    case Family::CompleteShuffle:
      return complete_block_shuffle(img, static_cast<std::size_t>(s), spec.seed);
    case Family::MaskedRegen: {
      BinaryMask mask;
      if (s >= 1.0)
        mask = BinaryMask(img.height(), img.width(), true);
      else if (s <= 0.0)
        mask = BinaryMask(img.height(), img.width(), false);
      else
        mask = synth_mask(MaskShape::Ellipse, img.height(), img.width(), s, spec.seed);
      if (mask_area) *mask_area = mask.area_fraction();
      return masked_regenerate(img, mask, nullptr, spec.seed);
    }
  }
  fail(ErrorKind::Parameter, "unknown perturbation family");
}

}  // namespace wmlab
