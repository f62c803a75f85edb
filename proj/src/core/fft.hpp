#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wmlab {

using Complex = std::complex<double>;

/// Unnormalized forward 2-D DFT of a real h x w plane (row-major output).
std::vector<Complex> fft2(std::span<const float> plane, std::size_t h, std::size_t w);
std::vector<Complex> fft2(std::span<const Complex> plane, std::size_t h, std::size_t w);

/// Inverse 2-D DFT scaled by 1/(h*w).
std::vector<Complex> ifft2(std::span<const Complex> spectrum, std::size_t h,
                           std::size_t w);

}  // namespace wmlab
