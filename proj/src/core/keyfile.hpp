#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "watermarks.hpp"

namespace wmlab {

// Keyfiles are JSON objects tagged by "scheme"; secrets and payload bits are
// lowercase hex. Example (gaussian-shading):
//   {"scheme": "gaussian-shading", "cipher_key": "<64 hex>", "nonce": "<24 hex>",
//    "message": "<64 hex>", "message_bits": 256, "replication": 64}

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(const std::string& hex);

/// Packs 0/1 bit entries MSB-first into hex.
std::string bits_to_hex(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> bits_from_hex(const std::string& hex, std::size_t nbits);

nlohmann::json key_to_json(const WatermarkKey& key);
WatermarkKey key_from_json(const nlohmann::json& j);

void save_key(const WatermarkKey& key, const std::filesystem::path& path);
WatermarkKey load_key(const std::filesystem::path& path);

}  // namespace wmlab
