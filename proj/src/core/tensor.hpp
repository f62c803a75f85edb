#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wmlab {

/// Row-major (channel, y, x) float tensor. Latents are 4 x h x w, normalized
/// images are 3 x H x W with values in [0, 1].
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t height, std::size_t width,
          float fill = 0.0f);
  Tensor3(std::size_t channels, std::size_t height, std::size_t width,
          std::vector<float> data);

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return h_ * w_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * h_ + y) * w_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * h_ + y) * w_ + x];
  }

  std::span<float> plane(std::size_t c) noexcept {
    return {data_.data() + c * h_ * w_, h_ * w_};
  }
  std::span<const float> plane(std::size_t c) const noexcept {
    return {data_.data() + c * h_ * w_, h_ * w_};
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool same_shape(const Tensor3& other) const noexcept {
    return c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t c_ = 0;
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<float> data_;
};

/// 8-bit interleaved RGB, only used at file boundaries.
struct ImageU8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;
};

Tensor3 to_tensor(const ImageU8& img);
ImageU8 to_u8(const Tensor3& img);

/// BT.601 luma of a 3-channel image.
Tensor3 to_gray(const Tensor3& img);

/// Clamp every value into [lo, hi]; returns the number of clamped samples.
std::size_t clamp_inplace(Tensor3& t, float lo = 0.0f, float hi = 1.0f);

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, bool value = false);

  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t count() const noexcept { return count_; }
  double area_fraction() const noexcept;

  bool get(std::size_t y, std::size_t x) const noexcept {
    return bits_[y * w_ + x] != 0;
  }
  void set(std::size_t y, std::size_t x, bool value) noexcept;

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.h_ == b.h_ && a.w_ == b.w_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Mask from a 1- or 3-channel tensor: a pixel is set when its first channel
/// exceeds 0.5.
BinaryMask mask_from_tensor(const Tensor3& t);
Tensor3 mask_to_tensor(const BinaryMask& m);

}  // namespace wmlab
