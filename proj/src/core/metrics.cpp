#include "metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "error.hpp"

namespace wmlab {

double psnr(const Tensor3& a, const Tensor3& b) {
  require(a.same_shape(b), ErrorKind::Shape, "psnr inputs differ in shape");
  require(!a.empty(), ErrorKind::Shape, "psnr of empty images");
  const auto da = a.data(), db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(da.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> g{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of a plane; result is (h-10) x (w-10).
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t h, std::size_t w,
                                 const std::array<double, kWin>& g) {
  const std::size_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * in[y * w + x + k];
      tmp[y * ow + x] = acc;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

std::vector<double> luma_plane(const Tensor3& t) {
  if (t.channels() == 1) return {t.data().begin(), t.data().end()};
  const Tensor3 g = to_gray(t);
  return {g.data().begin(), g.data().end()};
}

}  // namespace

double ssim(const Tensor3& a, const Tensor3& b) {
  require(a.same_shape(b), ErrorKind::Shape, "ssim inputs differ in shape");
  require(a.height() >= kWin && a.width() >= kWin, ErrorKind::Shape,
          "ssim needs images of at least 11x11");
  const std::size_t h = a.height(), w = a.width();
  const auto x = luma_plane(a), y = luma_plane(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  static const auto g = gaussian_window();
  const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g),
             sxy = filter_valid(xy, h, w, g);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

TprResult tpr_at_fpr(std::span<const double> null_scores, std::span<const double> positive_scores,
                     Direction direction, double fpr) {
  require(!null_scores.empty() && !positive_scores.empty(), ErrorKind::Calibration,
          "TPR needs nonempty null and positive score sets");
  require(fpr > 0.0 && fpr < 1.0, ErrorKind::Parameter, "fpr must be in (0, 1)");
  const double sign = direction == Direction::HigherIsDetected ? 1.0 : -1.0;
  std::vector<double> null;
  null.reserve(null_scores.size());
  for (double v : null_scores) null.push_back(sign * v);
  std::sort(null.begin(), null.end());
  const std::size_t n = null.size();
  // Allow at most floor(q N) nulls strictly above the threshold.
  const auto allowed = static_cast<std::size_t>(std::floor(fpr * static_cast<double>(n)));
  TprResult r;
  r.threshold = sign * null[n - 1 - std::min(allowed, n - 1)];
  r.small_null_warning = static_cast<double>(n) < std::ceil(1.0 / fpr);
  const double tau = sign * r.threshold;
  std::size_t hits = 0;
  for (double v : positive_scores)
    if (sign * v > tau) ++hits;
  r.tpr = static_cast<double>(hits) / static_cast<double>(positive_scores.size());
  return r;
}

double caption_agreement(std::span<const float> e1, std::span<const float> e2) {
  require(e1.size() == e2.size() && !e1.empty(), ErrorKind::Shape,
          "embedding vectors must have equal nonzero length");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    dot += static_cast<double>(e1[i]) * e2[i];
    n1 += static_cast<double>(e1[i]) * e1[i];
    n2 += static_cast<double>(e2[i]) * e2[i];
  }
  require(n1 > 0.0 && n2 > 0.0, ErrorKind::Degenerate, "zero embedding vector");
  return std::clamp(dot / (std::sqrt(n1) * std::sqrt(n2)), -1.0, 1.0);
}

std::string normalize_term(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char ch : s) {
    if (std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

TripletSet make_triplet_set(const std::vector<std::array<std::string, 3>>& raw) {
  TripletSet set;
  for (const auto& t : raw)
    set.emplace(normalize_term(t[0]), normalize_term(t[1]), normalize_term(t[2]));
  return set;
}

double triplet_similarity(const TripletSet& a, const TripletSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace wmlab
