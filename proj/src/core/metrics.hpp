#pragma once

#include <array>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tensor.hpp"

namespace wmlab {

/// 10 log10(1 / MSE) over all samples; identical inputs give kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Tensor3& a, const Tensor3& b);

/// Luma SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// L = 1, averaged over every fully contained window position.
double ssim(const Tensor3& a, const Tensor3& b);

enum class Direction { HigherIsDetected, LowerIsDetected };

struct TprResult {
  double tpr = 0.0;
  /// Direction-adjusted threshold; a positive counts when it is strictly
  /// beyond this value.
  double threshold = 0.0;
  /// Set when the null set is smaller than ceil(1 / fpr).
  bool small_null_warning = false;
};

TprResult tpr_at_fpr(std::span<const double> null_scores, std::span<const double> positive_scores,
                     Direction direction, double fpr = 0.001);

/// Cosine similarity clamped to [-1, 1].
double caption_agreement(std::span<const float> e1, std::span<const float> e2);

using Triplet = std::tuple<std::string, std::string, std::string>;
using TripletSet = std::set<Triplet>;

/// Lowercases and collapses internal whitespace runs to one space.
std::string normalize_term(const std::string& s);
TripletSet make_triplet_set(const std::vector<std::array<std::string, 3>>& raw);
/// Jaccard index; two empty sets score 1.
double triplet_similarity(const TripletSet& a, const TripletSet& b);

}  // namespace wmlab
