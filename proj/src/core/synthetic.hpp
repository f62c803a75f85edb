#pragma once

#include <cstddef>
#include <cstdint>

#include "tensor.hpp"

namespace wmlab {

/// Seeded procedural RGB image: a two-colour gradient, a few filled
/// rectangles and discs, a low-amplitude sinusoidal texture and fine grain.
Tensor3 synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed);

/// Constant image with every sample equal to `value`.
Tensor3 constant_image(std::size_t height, std::size_t width, float value);

}  // namespace wmlab
