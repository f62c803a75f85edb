#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace wmlab {

// WTNS binary tensor format, all integers little-endian:
//   "WTNS" | version u8 = 1 | dtype u8 = 0 (f32) | ndim u8 | ndim x u32 dims
//   | payload (f32, little-endian, row-major)
inline constexpr std::uint8_t kWtnsVersion = 1;
inline constexpr std::uint8_t kWtnsFloat32 = 0;

std::vector<std::uint8_t> tensor_encode(const Tensor3& t);
Tensor3 tensor_decode(std::span<const std::uint8_t> bytes);

void tensor_write(const Tensor3& t, const std::filesystem::path& path);
/// Reads 1-, 2- or 3-dimensional WTNS files; lower ranks are padded with
/// leading unit dimensions.
Tensor3 tensor_read(const std::filesystem::path& path);

/// 1-D helpers for embedding vectors.
void vector_write(std::span<const float> v, const std::filesystem::path& path);
std::vector<float> vector_read(const std::filesystem::path& path);

ImageU8 png_read(const std::filesystem::path& path);
void png_write(const ImageU8& img, const std::filesystem::path& path);

/// PNG or WTNS, chosen by extension (".wtns" is WTNS, anything else PNG).
Tensor3 image_read(const std::filesystem::path& path);
void image_write(const Tensor3& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace wmlab
