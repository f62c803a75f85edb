#include "keyfile.hpp"

#include <algorithm>

#include "error.hpp"
#include "tensor_io.hpp"

namespace wmlab {

using nlohmann::json;

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * bytes.size());
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  require(hex.size() % 2 == 0, ErrorKind::Key, "hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(ErrorKind::Key, std::string("invalid hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

std::string bits_to_hex(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] & 1) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return to_hex(bytes);
}

std::vector<std::uint8_t> bits_from_hex(const std::string& hex, std::size_t nbits) {
  const auto bytes = from_hex(hex);
  require(bytes.size() == (nbits + 7) / 8, ErrorKind::Key,
          "bit string length does not match " + std::to_string(nbits) + " bits");
  std::vector<std::uint8_t> bits(nbits);
  for (std::size_t i = 0; i < nbits; ++i) bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return bits;
}

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> fixed_hex(const json& j, const char* field) {
  const auto bytes = from_hex(j.at(field).get<std::string>());
  require(bytes.size() == N, ErrorKind::Key,
          std::string(field) + " must be " + std::to_string(N) + " bytes");
  std::array<std::uint8_t, N> out{};
  std::copy(bytes.begin(), bytes.end(), out.begin());
  return out;
}

}  // namespace

json key_to_json(const WatermarkKey& key) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TreeRingKey>) {
          json rings = json::array();
          for (const auto& v : k.ring_values) rings.push_back({v.real(), v.imag()});
          return {{"scheme", "tree-ring"}, {"seed", k.seed},           {"radii", k.radii},
                  {"channel", k.channel},  {"sigma", k.sigma},         {"ring_values", rings}};
        } else if constexpr (std::is_same_v<T, GaussianShadingKey>) {
          return {{"scheme", "gaussian-shading"},
                  {"cipher_key", to_hex(k.cipher_key)},
                  {"nonce", to_hex(k.nonce)},
                  {"message", bits_to_hex(k.message)},
                  {"message_bits", k.message.size()},
                  {"replication", k.replication}};
        } else {
          return {{"scheme", "stable-signature"},
                  {"signature", bits_to_hex(k.signature)},
                  {"signature_bits", k.signature.size()},
                  {"template_seed", k.template_seed},
                  {"amplitude", k.amplitude}};
        }
      },
      key);
}

WatermarkKey key_from_json(const json& j) {
  try {
    const Scheme scheme = parse_scheme(j.at("scheme").get<std::string>());
    switch (scheme) {
      case Scheme::TreeRing: {
        TreeRingKey k;
        k.seed = j.at("seed").get<std::uint64_t>();
        k.radii = j.at("radii").get<std::vector<int>>();
        k.channel = j.at("channel").get<std::size_t>();
        k.sigma = j.value("sigma", 20.0);
        for (const auto& v : j.at("ring_values")) {
          require(v.is_array() && v.size() == 2, ErrorKind::Key,
                  "ring_values entries must be [re, im]");
          k.ring_values.emplace_back(v[0].get<double>(), v[1].get<double>());
        }
        require(k.ring_values.size() == k.radii.size(), ErrorKind::Key,
                "tree-ring key needs one ring value per radius");
        return k;
      }
      case Scheme::GaussianShading: {
        GaussianShadingKey k;
        k.cipher_key = fixed_hex<32>(j, "cipher_key");
        k.nonce = fixed_hex<12>(j, "nonce");
        const auto nbits = j.value("message_bits", std::size_t{256});
        k.message = bits_from_hex(j.at("message").get<std::string>(), nbits);
        k.replication = j.value("replication", std::size_t{64});
        return k;
      }
      case Scheme::StableSignature: {
        SpreadSpectrumKey k;
        const auto nbits = j.value("signature_bits", std::size_t{48});
        k.signature = bits_from_hex(j.at("signature").get<std::string>(), nbits);
        k.template_seed = j.at("template_seed").get<std::uint64_t>();
        k.amplitude = j.value("amplitude", SpreadSpectrumKey::kDefaultAmplitude);
        return k;
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Key, std::string("malformed keyfile: ") + e.what());
  }
  fail(ErrorKind::Key, "malformed keyfile");
}

void save_key(const WatermarkKey& key, const std::filesystem::path& path) {
  write_text(path, key_to_json(key).dump(2) + "\n");
}

WatermarkKey load_key(const std::filesystem::path& path) {
  const auto text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Key, "keyfile " + path.string() + " is not valid JSON: " + e.what());
  }
  return key_from_json(j);
}

}  // namespace wmlab
