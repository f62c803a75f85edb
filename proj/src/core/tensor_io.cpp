#include "tensor_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "error.hpp"

namespace wmlab {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> encode_dims(std::span<const std::uint32_t> dims,
                                      std::span<const float> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(7 + 4 * dims.size() + 4 * payload.size());
  out.insert(out.end(), {'W', 'T', 'N', 'S', kWtnsVersion, kWtnsFloat32,
                         static_cast<std::uint8_t>(dims.size())});
  for (auto d : dims) put_u32(out, d);
  for (float f : payload) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

std::uint32_t checked_dim(std::size_t d) {
  require(d <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::Capacity,
          "tensor dimension exceeds 32 bits");
  return static_cast<std::uint32_t>(d);
}

struct Decoded {
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;
};

Decoded decode_any(std::span<const std::uint8_t> b) {
  require(b.size() >= 7, ErrorKind::Format, "WTNS header truncated");
  require(std::memcmp(b.data(), "WTNS", 4) == 0, ErrorKind::Format,
          "bad magic, expected \"WTNS\"");
  require(b[4] == kWtnsVersion, ErrorKind::Format,
          "unsupported WTNS version " + std::to_string(b[4]));
  require(b[5] == kWtnsFloat32, ErrorKind::Format,
          "unsupported WTNS dtype " + std::to_string(b[5]));
  const std::size_t ndim = b[6];
  require(ndim >= 1 && ndim <= 3, ErrorKind::Format,
          "WTNS ndim must be 1..3, got " + std::to_string(ndim));
  require(b.size() >= 7 + 4 * ndim, ErrorKind::Format, "WTNS dims truncated");
  Decoded d;
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    d.dims.push_back(get_u32(b, 7 + 4 * i));
    count *= d.dims.back();
    require(count <= (std::uint64_t{1} << 40), ErrorKind::Capacity,
            "WTNS element count overflows");
  }
  const std::size_t off = 7 + 4 * ndim;
  require(b.size() - off == 4 * count, ErrorKind::Format,
          "WTNS payload length " + std::to_string(b.size() - off) +
              " does not match dims (" + std::to_string(4 * count) + ")");
  d.payload.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    d.payload[i] = std::bit_cast<float>(get_u32(b, off + 4 * i));
  return d;
}

}  // namespace

std::vector<std::uint8_t> tensor_encode(const Tensor3& t) {
  const std::uint32_t dims[3] = {checked_dim(t.channels()),
                                 checked_dim(t.height()), checked_dim(t.width())};
  return encode_dims(dims, t.data());
}

Tensor3 tensor_decode(std::span<const std::uint8_t> bytes) {
  auto d = decode_any(bytes);
  while (d.dims.size() < 3) d.dims.insert(d.dims.begin(), 1u);
  return Tensor3(d.dims[0], d.dims[1], d.dims[2], std::move(d.payload));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorKind::Io, "read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::Io, "write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

void tensor_write(const Tensor3& t, const std::filesystem::path& path) {
  write_file(path, tensor_encode(t));
}

Tensor3 tensor_read(const std::filesystem::path& path) {
  return tensor_decode(read_file(path));
}

void vector_write(std::span<const float> v, const std::filesystem::path& path) {
  const std::uint32_t dims[1] = {checked_dim(v.size())};
  write_file(path, encode_dims(dims, v));
}

std::vector<float> vector_read(const std::filesystem::path& path) {
  return decode_any(read_file(path)).payload;
}

ImageU8 png_read(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  const auto name = path.string();
  if (!png_image_begin_read_from_file(&image, name.c_str()))
    fail(ErrorKind::Io, "cannot read PNG " + name + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  ImageU8 img{image.height, image.width,
              std::vector<std::uint8_t>(PNG_IMAGE_SIZE(image))};
  if (!png_image_finish_read(&image, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorKind::Io, "cannot decode PNG " + name + ": " + image.message);
  }
  return img;
}

void png_write(const ImageU8& img, const std::filesystem::path& path) {
  require(img.rgb.size() == 3 * img.width * img.height, ErrorKind::Shape,
          "rgb buffer length does not match image dimensions");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const auto name = path.string();
  if (!png_image_write_to_file(&image, name.c_str(), 0, img.rgb.data(), 0, nullptr))
    fail(ErrorKind::Io, "cannot write PNG " + name + ": " + image.message);
}

Tensor3 image_read(const std::filesystem::path& path) {
  if (path.extension() == ".wtns") return tensor_read(path);
  return to_tensor(png_read(path));
}

void image_write(const Tensor3& img, const std::filesystem::path& path) {
  if (path.extension() == ".wtns")
    tensor_write(img, path);
  else
    png_write(to_u8(img), path);
}

}  // namespace wmlab
