#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "rng.hpp"

namespace wmlab {

Tensor3 synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed, 0x5E7);
  Tensor3 img(3, height, width);
  std::array<double, 3> c0{}, c1{};
  for (auto& v : c0) v = 0.15 + 0.7 * rng.uniform();
  for (auto& v : c1) v = 0.15 + 0.7 * rng.uniform();
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  const double gx = std::cos(angle), gy = std::sin(angle);
  const double hn = static_cast<double>(height), wn = static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double t = 0.5 + 0.5 * (gx * (x / wn - 0.5) + gy * (y / hn - 0.5)) * 1.4;
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(c0[c] + std::clamp(t, 0.0, 1.0) * (c1[c] - c0[c]));
    }

  const std::size_t shapes = 2 + rng.below(4);
  for (std::size_t s = 0; s < shapes; ++s) {
    std::array<double, 3> col{};
    for (auto& v : col) v = 0.05 + 0.9 * rng.uniform();
    const double cy = rng.uniform() * hn, cx = rng.uniform() * wn;
    const double ry = (0.05 + 0.15 * rng.uniform()) * hn, rx = (0.05 + 0.15 * rng.uniform()) * wn;
    const bool disc = rng.bernoulli(0.5);
    const auto y0 = static_cast<std::size_t>(std::max(0.0, cy - ry));
    const auto y1 = static_cast<std::size_t>(std::min(hn, cy + ry));
    const auto x0 = static_cast<std::size_t>(std::max(0.0, cx - rx));
    const auto x1 = static_cast<std::size_t>(std::min(wn, cx + rx));
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) {
        if (disc) {
          const double dy = (y + 0.5 - cy) / ry, dx = (x + 0.5 - cx) / rx;
          if (dy * dy + dx * dx > 1.0) continue;
        }
        for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(col[c]);
      }
  }

  const double fy = 2.0 + 20.0 * rng.uniform(), fx = 2.0 + 20.0 * rng.uniform();
  const double amp = 0.03 + 0.05 * rng.uniform();
  // Fine grain: smoothed noise with a correlation length of a few pixels,
  // rescaled to unit std after the two 3-tap passes (each divides it by sqrt 3).
  const double grain_amp = (0.08 + 0.04 * rng.uniform()) * 3.0;
  std::vector<double> grain(height * width);
  Rng grng(seed, 0x6AA1);
  for (double& g : grain) g = grng.normal();
  std::vector<double> smooth(height * width);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int d = -1; d <= 1; ++d) {
          const auto xx = std::clamp<long>(static_cast<long>(x) + d, 0, static_cast<long>(width) - 1);
          const auto yy = std::clamp<long>(static_cast<long>(y) + d, 0, static_cast<long>(height) - 1);
          acc += pass == 0 ? grain[y * width + xx] : grain[yy * width + x];
        }
        smooth[y * width + x] = acc / 3.0;
      }
    grain.swap(smooth);
  }
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double tex = amp * std::sin(2.0 * std::numbers::pi * (fy * y / hn)) *
                             std::cos(2.0 * std::numbers::pi * (fx * x / wn)) +
                         grain_amp * grain[y * width + x];
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = std::clamp(static_cast<float>(img.at(c, y, x) + tex), 0.0f, 1.0f);
    }
  return img;
}

Tensor3 constant_image(std::size_t height, std::size_t width, float value) {
  return Tensor3(3, height, width, value);
}

}  // namespace wmlab
