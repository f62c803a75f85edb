#include "channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace wmlab {

DiffusionSchedule DiffusionSchedule::linear(std::size_t steps, double beta_start,
                                            double beta_end) {
  require(steps >= 1, ErrorKind::Parameter, "schedule needs at least one step");
  require(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end,
          ErrorKind::Parameter, "beta range must satisfy 0 < start <= end < 1");
  DiffusionSchedule s;
  s.beta.assign(steps + 1, 0.0);
  s.alpha_bar.assign(steps + 1, 1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha_bar[t] = s.alpha_bar[t - 1] * (1.0 - s.beta[t]);
  }
  return s;
}

namespace {

// Modified Gram-Schmidt on the columns of a rows x cols row-major matrix.
void orthonormalize_columns(std::vector<double>& m, std::size_t rows, std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows; ++r) dot += m[r * cols + i] * m[r * cols + j];
      for (std::size_t r = 0; r < rows; ++r) m[r * cols + j] -= dot * m[r * cols + i];
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += m[r * cols + j] * m[r * cols + j];
    norm = std::sqrt(norm);
    require(norm > 1e-9, ErrorKind::Parameter, "degenerate codec basis");
    for (std::size_t r = 0; r < rows; ++r) m[r * cols + j] /= norm;
  }
}

// Smooth block patterns: one DC per colour, then luma-weighted cosine ramps.
std::vector<double> smooth_basis(std::size_t u, std::size_t n) {
  const std::size_t dim = 3 * u * u;
  std::vector<double> phi(dim * n, 0.0);
  const double luma[3] = {0.299, 0.587, 0.114};
  auto idx = [u](std::size_t c, std::size_t dy, std::size_t dx) {
    return (c * u + dy) * u + dx;
  };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t dy = 0; dy < u; ++dy)
        for (std::size_t dx = 0; dx < u; ++dx) {
          double v = 0.0;
          if (j < 3) {
            v = c == j ? 1.0 : 0.0;
          } else {
            const double cx = std::cos(std::numbers::pi * (dx + 0.5) / u);
            const double cy = std::cos(std::numbers::pi * (dy + 0.5) / u);
            v = luma[c] * (j == 3 ? cx : cy);
          }
          phi[idx(c, dy, dx) * n + j] = v;
        }
  }
  orthonormalize_columns(phi, dim, n);
  return phi;
}

}  // namespace

ToyChannel::ToyChannel(const ChannelConfig& cfg)
    : cfg_(cfg), schedule_(DiffusionSchedule::linear(cfg.steps)) {
  require(cfg.latent_channels >= 1 && cfg.latent_channels <= 5, ErrorKind::Parameter,
          "latent channel count must be in 1..5");
  require(cfg.latent_height >= 3 && cfg.latent_width >= 3, ErrorKind::Parameter,
          "latent plane must be at least 3x3");
  require(cfg.upscale >= 2, ErrorKind::Parameter, "upscale must be >= 2");
  require(cfg.denoiser_gain >= 0.0 && cfg.denoiser_gain < 1.0, ErrorKind::Parameter,
          "denoiser gain must be in [0, 1)");
  require(cfg.codec_scale > 0.0, ErrorKind::Parameter, "codec scale must be positive");

  const std::size_t h = cfg.latent_height, w = cfg.latent_width;
  Rng krng(cfg.denoiser_seed, 0);
  for (std::size_t c = 0; c < cfg.latent_channels; ++c) {
    std::array<double, 9> k{};
    double l1 = 0.0;
    for (double& v : k) {
      v = krng.normal();
      l1 += std::abs(v);
    }
    for (double& v : k) v *= cfg.denoiser_gain / l1;
    kernels_.push_back(k);

    std::vector<Complex> plane(h * w, Complex(0.0, 0.0));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const std::size_t y = (h + dy) % h, x = (w + dx) % w;
        plane[y * w + x] += k[(dy + 1) * 3 + (dx + 1)];
      }
    kernel_spectra_.push_back(fft2(plane, h, w));
  }

  const std::size_t n = cfg.latent_channels;
  block_dim_ = 3 * cfg.upscale * cfg.upscale;
  const auto phi = smooth_basis(cfg.upscale, n);
  Rng crng(cfg.codec_seed, 0);
  std::vector<double> mix(n * n);
  for (double& v : mix) v = crng.normal();
  orthonormalize_columns(mix, n, n);
  codec_.assign(block_dim_ * n, 0.0);
  for (std::size_t r = 0; r < block_dim_; ++r)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += phi[r * n + i] * mix[i * n + j];
      codec_[r * n + j] = acc;
    }
}

bool ToyChannel::is_latent_shape(const Tensor3& t) const noexcept {
  return t.channels() == cfg_.latent_channels && t.height() == cfg_.latent_height &&
         t.width() == cfg_.latent_width;
}

bool ToyChannel::is_image_shape(const Tensor3& t) const noexcept {
  return t.channels() == 3 && t.height() == image_height() && t.width() == image_width();
}

void ToyChannel::check_latent(const Tensor3& z, const char* op) const {
  if (!is_latent_shape(z))
    fail(ErrorKind::Shape,
         std::string(op) + ": expected latent " + std::to_string(cfg_.latent_channels) +
             "x" + std::to_string(cfg_.latent_height) + "x" +
             std::to_string(cfg_.latent_width) + ", got " + std::to_string(z.channels()) +
             "x" + std::to_string(z.height()) + "x" + std::to_string(z.width()));
}

std::pair<double, double> ToyChannel::step_coefficients(std::size_t t) const {
  const double ab_t = schedule_.alpha_bar[t], ab_prev = schedule_.alpha_bar[t - 1];
  const double a = std::sqrt(ab_prev) / std::sqrt(ab_t);
  const double b = std::sqrt(1.0 - ab_prev) - a * std::sqrt(1.0 - ab_t);
  return {a, b};
}

namespace {

void circular_conv3x3(const std::vector<double>& in, std::vector<double>& out,
                      const std::array<double, 9>& k, std::size_t h, std::size_t w) {
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const std::size_t sy = (y + h - dy) % h;
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t sx = (x + w - dx) % w;
          acc += k[(dy + 1) * 3 + (dx + 1)] * in[sy * w + sx];
        }
      }
      out[y * w + x] = acc;
    }
}

}  // namespace

Tensor3 ToyChannel::denoise(const Tensor3& z) const {
  check_latent(z, "denoise");
  const std::size_t h = z.height(), w = z.width();
  Tensor3 out(z.channels(), h, w);
  std::vector<double> in(h * w), eps(h * w);
  for (std::size_t c = 0; c < z.channels(); ++c) {
    auto p = z.plane(c);
    in.assign(p.begin(), p.end());
    circular_conv3x3(in, eps, kernels_[c], h, w);
    auto o = out.plane(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(eps[i]);
  }
  return out;
}

Tensor3 ToyChannel::ddim_generate(const Tensor3& z_T) const {
  check_latent(z_T, "ddim_generate");
  const std::size_t h = z_T.height(), w = z_T.width();
  const auto& ab = schedule_.alpha_bar;
  Tensor3 out(z_T.channels(), h, w);
  std::vector<double> z(h * w), eps(h * w);
  for (std::size_t c = 0; c < z_T.channels(); ++c) {
    auto p = z_T.plane(c);
    z.assign(p.begin(), p.end());
    for (std::size_t t = schedule_.steps(); t >= 1; --t) {
      circular_conv3x3(z, eps, kernels_[c], h, w);
      const double s_t = std::sqrt(ab[t]), n_t = std::sqrt(1.0 - ab[t]);
      const double s_prev = std::sqrt(ab[t - 1]), n_prev = std::sqrt(1.0 - ab[t - 1]);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double z0_hat = (z[i] - n_t * eps[i]) / s_t;
        z[i] = s_prev * z0_hat + n_prev * eps[i];
      }
    }
    auto o = out.plane(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(z[i]);
  }
  return out;
}

Tensor3 ToyChannel::ddim_invert(const Tensor3& z_0) const {
  check_latent(z_0, "ddim_invert");
  const std::size_t h = z_0.height(), w = z_0.width();
  Tensor3 out(z_0.channels(), h, w);
  for (std::size_t c = 0; c < z_0.channels(); ++c) {
    auto spec = fft2(z_0.plane(c), h, w);
    const auto& kh = kernel_spectra_[c];
    // Each step z_{t-1} = (a_t + b_t K) z_t is diagonal in frequency, so the
    // reverse recurrence is a per-bin division.
    for (std::size_t t = 1; t <= schedule_.steps(); ++t) {
      const auto [a, b] = step_coefficients(t);
      for (std::size_t i = 0; i < spec.size(); ++i) spec[i] /= (a + b * kh[i]);
    }
    const auto plane = ifft2(spec, h, w);
    auto o = out.plane(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(plane[i].real());
  }
  return out;
}

DecodeResult ToyChannel::decode_checked(const Tensor3& z_0) const {
  check_latent(z_0, "decode");
  const std::size_t n = cfg_.latent_channels, u = cfg_.upscale;
  DecodeResult r{Tensor3(3, image_height(), image_width()), 0};
  for (std::size_t by = 0; by < cfg_.latent_height; ++by)
    for (std::size_t bx = 0; bx < cfg_.latent_width; ++bx)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t dy = 0; dy < u; ++dy)
          for (std::size_t dx = 0; dx < u; ++dx) {
            const std::size_t k = (c * u + dy) * u + dx;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += codec_[k * n + j] * z_0.at(j, by, bx);
            double v = 0.5 + cfg_.codec_scale * acc;
            if (v < 0.0 || v > 1.0) {
              v = v < 0.0 ? 0.0 : 1.0;
              ++r.saturated;
            }
            r.image.at(c, by * u + dy, bx * u + dx) = static_cast<float>(v);
          }
  return r;
}

Tensor3 ToyChannel::encode(const Tensor3& image) const {
  if (!is_image_shape(image))
    fail(ErrorKind::Shape, "encode: expected image 3x" + std::to_string(image_height()) +
                               "x" + std::to_string(image_width()) + ", got " +
                               std::to_string(image.channels()) + "x" +
                               std::to_string(image.height()) + "x" +
                               std::to_string(image.width()));
  const std::size_t n = cfg_.latent_channels, u = cfg_.upscale;
  Tensor3 z(n, cfg_.latent_height, cfg_.latent_width);
  std::vector<double> acc(n);
  for (std::size_t by = 0; by < cfg_.latent_height; ++by)
    for (std::size_t bx = 0; bx < cfg_.latent_width; ++bx) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t dy = 0; dy < u; ++dy)
          for (std::size_t dx = 0; dx < u; ++dx) {
            const std::size_t k = (c * u + dy) * u + dx;
            const double v = image.at(c, by * u + dy, bx * u + dx) - 0.5;
            for (std::size_t j = 0; j < n; ++j) acc[j] += codec_[k * n + j] * v;
          }
      for (std::size_t j = 0; j < n; ++j)
        z.at(j, by, bx) = static_cast<float>(acc[j] / cfg_.codec_scale);
    }
  return z;
}

Tensor3 sample_gaussian_latent(const ChannelConfig& cfg, std::uint64_t seed,
                               std::uint64_t stream) {
  Rng rng(seed, stream);
  Tensor3 z(cfg.latent_channels, cfg.latent_height, cfg.latent_width);
  for (float& v : z.data()) v = static_cast<float>(rng.normal());
  return z;
}

}  // namespace wmlab
