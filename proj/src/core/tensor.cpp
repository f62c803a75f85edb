#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace wmlab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Key: return "key error";
    case ErrorKind::Calibration: return "calibration error";
    case ErrorKind::Degenerate: return "degenerate-input error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width,
                 float fill)
    : c_(channels), h_(height), w_(width),
      data_(channels * height * width, fill) {}

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width,
                 std::vector<float> data)
    : c_(channels), h_(height), w_(width), data_(std::move(data)) {
  require(data_.size() == c_ * h_ * w_, ErrorKind::Shape,
          "tensor data length " + std::to_string(data_.size()) +
              " does not match " + std::to_string(c_) + "x" +
              std::to_string(h_) + "x" + std::to_string(w_));
}

bool Tensor3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

Tensor3 to_tensor(const ImageU8& img) {
  require(img.rgb.size() == 3 * img.height * img.width, ErrorKind::Shape,
          "rgb buffer length does not match image dimensions");
  Tensor3 t(3, img.height, img.width);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t.at(c, y, x) = img.rgb[(y * img.width + x) * 3 + c] / 255.0f;
  return t;
}

ImageU8 to_u8(const Tensor3& t) {
  require(t.channels() == 3, ErrorKind::Shape, "expected a 3-channel image");
  ImageU8 img{t.height(), t.width(),
              std::vector<std::uint8_t>(3 * t.height() * t.width())};
  for (std::size_t y = 0; y < t.height(); ++y)
    for (std::size_t x = 0; x < t.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(t.at(c, y, x), 0.0f, 1.0f);
        img.rgb[(y * t.width() + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  return img;
}

Tensor3 to_gray(const Tensor3& img) {
  require(img.channels() == 3, ErrorKind::Shape,
          "to_gray expects 3 channels, got " +
              std::to_string(img.channels()));
  Tensor3 out(1, img.height(), img.width());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto y = out.plane(0);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  return out;
}

std::size_t clamp_inplace(Tensor3& t, float lo, float hi) {
  std::size_t clamped = 0;
  for (float& v : t.data()) {
    if (v < lo) {
      v = lo;
      ++clamped;
    } else if (v > hi) {
      v = hi;
      ++clamped;
    }
  }
  return clamped;
}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, bool value)
    : h_(height), w_(width), count_(value ? height * width : 0),
      bits_(height * width, value ? 1 : 0) {}

double BinaryMask::area_fraction() const noexcept {
  if (bits_.empty()) return 0.0;
  return static_cast<double>(count_) / static_cast<double>(bits_.size());
}

void BinaryMask::set(std::size_t y, std::size_t x, bool value) noexcept {
  auto& b = bits_[y * w_ + x];
  if ((b != 0) == value) return;
  b = value ? 1 : 0;
  if (value)
    ++count_;
  else
    --count_;
}

BinaryMask mask_from_tensor(const Tensor3& t) {
  require(t.channels() == 1 || t.channels() == 3, ErrorKind::Shape,
          "mask tensor must have 1 or 3 channels");
  BinaryMask m(t.height(), t.width());
  for (std::size_t y = 0; y < t.height(); ++y)
    for (std::size_t x = 0; x < t.width(); ++x)
      if (t.at(0, y, x) > 0.5f) m.set(y, x, true);
  return m;
}

Tensor3 mask_to_tensor(const BinaryMask& m) {
  Tensor3 t(3, m.height(), m.width());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < m.height(); ++y)
      for (std::size_t x = 0; x < m.width(); ++x)
        t.at(c, y, x) = m.get(y, x) ? 1.0f : 0.0f;
  return t;
}

}  // namespace wmlab
