#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fft.hpp"
#include "tensor.hpp"

namespace wmlab {

/// Linear beta schedule; alpha_bar[0] = 1 and alpha_bar[t] = prod_{s<=t}(1 - beta[s]).
struct DiffusionSchedule {
  std::vector<double> beta;       // index 1..T (beta[0] unused, 0)
  std::vector<double> alpha_bar;  // index 0..T

  static DiffusionSchedule linear(std::size_t steps, double beta_start = 1e-4,
                                  double beta_end = 2e-2);
  std::size_t steps() const noexcept { return alpha_bar.size() - 1; }
};

struct ChannelConfig {
  std::size_t steps = 50;
  std::uint64_t denoiser_seed = 0x5EED0001;
  std::uint64_t codec_seed = 0x5EED0002;
  std::size_t latent_channels = 4;
  std::size_t latent_height = 64;
  std::size_t latent_width = 64;
  std::size_t upscale = 8;
  /// L1 norm of each 3x3 denoiser kernel; 0 gives the zero denoiser.
  double denoiser_gain = 0.5;
  double codec_scale = 0.5;

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct DecodeResult {
  Tensor3 image;
  std::size_t saturated = 0;  // samples clamped into [0, 1]
};

/// Deterministic stand-in for a latent diffusion generator. The denoiser is a
/// fixed per-channel 3x3 circular convolution, so every DDIM step is linear
/// and diagonal in the 2-D Fourier domain, which makes inversion exact. The
/// codec maps each latent cell to an 8x8 RGB block through four orthonormal
/// smooth patterns (three colour DCs and a luma cosine ramp) mixed by a seeded
/// orthogonal matrix.
class ToyChannel {
 public:
  explicit ToyChannel(const ChannelConfig& cfg = {});

  const ChannelConfig& config() const noexcept { return cfg_; }
  const DiffusionSchedule& schedule() const noexcept { return schedule_; }

  std::size_t image_height() const noexcept { return cfg_.latent_height * cfg_.upscale; }
  std::size_t image_width() const noexcept { return cfg_.latent_width * cfg_.upscale; }
  bool is_latent_shape(const Tensor3& t) const noexcept;
  bool is_image_shape(const Tensor3& t) const noexcept;

  /// eps_theta(z_t, t); time-independent for the toy denoiser.
  Tensor3 denoise(const Tensor3& z) const;

  Tensor3 ddim_generate(const Tensor3& z_T) const;
  Tensor3 ddim_invert(const Tensor3& z_0) const;

  DecodeResult decode_checked(const Tensor3& z_0) const;
  Tensor3 decode(const Tensor3& z_0) const { return decode_checked(z_0).image; }
  Tensor3 encode(const Tensor3& image) const;

  Tensor3 generate_image(const Tensor3& z_T) const { return decode(ddim_generate(z_T)); }
  Tensor3 invert_image(const Tensor3& image) const { return ddim_invert(encode(image)); }

  /// Per-step DDIM coefficients: z_{t-1} = a_t z_t + b_t eps(z_t).
  std::pair<double, double> step_coefficients(std::size_t t) const;

  /// Row-major 192 x 4 codec matrix (unshuffled pixel index x latent channel).
  const std::vector<double>& codec_matrix() const noexcept { return codec_; }
  const std::vector<std::array<double, 9>>& kernels() const noexcept { return kernels_; }

 private:
  void check_latent(const Tensor3& z, const char* op) const;

  ChannelConfig cfg_;
  DiffusionSchedule schedule_;
  std::vector<std::array<double, 9>> kernels_;
  std::vector<std::vector<Complex>> kernel_spectra_;
  std::vector<double> codec_;
  std::size_t block_dim_ = 0;  // 3 * upscale^2
};

Tensor3 sample_gaussian_latent(const ChannelConfig& cfg, std::uint64_t seed,
                               std::uint64_t stream);

}  // namespace wmlab
