#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "perturbations.hpp"

namespace wmlab {

std::vector<double> seam_energy(const Tensor3& gray) {
  require(gray.channels() == 1, ErrorKind::Shape, "seam energy expects one channel");
  const std::size_t h = gray.height(), w = gray.width();
  std::vector<double> e(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t yu = y == 0 ? 0 : y - 1, yd = y + 1 == h ? y : y + 1;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = x == 0 ? 0 : x - 1, xr = x + 1 == w ? x : x + 1;
      const double dx = static_cast<double>(gray.at(0, y, xr)) - gray.at(0, y, xl);
      const double dy = static_cast<double>(gray.at(0, yd, x)) - gray.at(0, yu, x);
      e[y * w + x] = 0.5 * (std::abs(dx) + std::abs(dy));
    }
  }
  return e;
}

std::vector<std::size_t> find_vertical_seam(const std::vector<double>& energy,
                                            std::size_t height, std::size_t width) {
  require(energy.size() == height * width && height > 0 && width > 0, ErrorKind::Shape,
          "energy map does not match dimensions");
  std::vector<double> cost(energy.begin(), energy.begin() + width);
  cost.resize(height * width);
  for (std::size_t y = 1; y < height; ++y) {
    const double* prev = &cost[(y - 1) * width];
    double* cur = &cost[y * width];
    for (std::size_t x = 0; x < width; ++x) {
      double best = prev[x];
      if (x > 0) best = std::min(best, prev[x - 1]);
      if (x + 1 < width) best = std::min(best, prev[x + 1]);
      cur[x] = energy[y * width + x] + best;
    }
  }
  std::vector<std::size_t> seam(height);
  const double* last = &cost[(height - 1) * width];
  seam[height - 1] = static_cast<std::size_t>(std::min_element(last, last + width) - last);
  for (std::size_t y = height - 1; y > 0; --y) {
    const std::size_t x = seam[y];
    const double* prev = &cost[(y - 1) * width];
    std::size_t pick = x;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t cand = x == 0 ? 0 : x - 1; cand <= std::min(x + 1, width - 1); ++cand)
      if (prev[cand] < best) {
        best = prev[cand];
        pick = cand;
      }
    seam[y - 1] = pick;
  }
  return seam;
}

Tensor3 remove_vertical_seam(const Tensor3& img, const std::vector<std::size_t>& seam) {
  require(seam.size() == img.height() && img.width() >= 2, ErrorKind::Shape,
          "seam does not match image height");
  const std::size_t h = img.height(), w = img.width();
  Tensor3 out(img.channels(), h, w - 1);
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t cut = seam[y];
      std::size_t ox = 0;
      for (std::size_t x = 0; x < w; ++x)
        if (x != cut) out.at(c, y, ox++) = img.at(c, y, x);
    }
  return out;
}

Tensor3 seam_carve_raw(const Tensor3& img, std::size_t seams,
                       std::vector<std::vector<std::size_t>>* removed) {
  require(img.channels() == 3, ErrorKind::Shape, "seam carving expects a 3-channel image");
  require(seams < img.width(), ErrorKind::Parameter, "cannot remove every column");
  Tensor3 cur = img;
  Tensor3 gray = to_gray(img);
  for (std::size_t i = 0; i < seams; ++i) {
    const auto energy = seam_energy(gray);
    auto seam = find_vertical_seam(energy, gray.height(), gray.width());
    cur = remove_vertical_seam(cur, seam);
    gray = remove_vertical_seam(gray, seam);
    if (removed) removed->push_back(std::move(seam));
  }
  return cur;
}

Tensor3 seam_carve(const Tensor3& img, double fraction) {
  require(fraction >= 0.0 && fraction <= 0.5, ErrorKind::Parameter,
          "seam-carve fraction must be in [0, 0.5]");
  require(img.width() >= 3, ErrorKind::Parameter, "seam carving needs width >= 3");
  const auto seams = static_cast<std::size_t>(std::floor(fraction * img.width()));
  if (seams == 0) return img;
  return resize_bilinear(seam_carve_raw(img, seams), img.height(), img.width());
}

}  // namespace wmlab
