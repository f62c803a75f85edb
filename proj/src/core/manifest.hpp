#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace wmlab {

// manifest.json:
//   {"version": 1, "records": [{"id", "variant": "texture"|"intra"|"inter"|"style",
//     "original", "edited", "mask"?, "prompt"?, "emb_original"?, "emb_edited"?,
//     "triplets_original"?, "triplets_edited"?}]}
// Paths are relative to the manifest directory. Records may also carry
// "vlm_emb_original"/"vlm_emb_edited" for a second caption model.

struct SemanticRecord {
  std::string id;
  std::string variant;
  std::filesystem::path original;
  std::filesystem::path edited;
  std::optional<std::filesystem::path> mask;
  std::optional<std::string> prompt;
  std::optional<std::filesystem::path> emb_original, emb_edited;
  std::optional<std::filesystem::path> vlm_emb_original, vlm_emb_edited;
  std::optional<std::filesystem::path> triplets_original, triplets_edited;

  /// Referenced files that are missing, undecodable or misaligned.
  std::vector<std::string> errors;
  /// Non-fatal findings, e.g. out-of-mask changes on a local variant.
  std::vector<std::string> warnings;
  std::optional<double> mask_area;

  bool is_local() const { return variant != "style"; }
  bool usable() const { return errors.empty(); }
};

/// Parses and schema-checks manifest.json in `dir`; throws a validation error
/// naming the record id and field on schema violations.
std::vector<SemanticRecord> parse_manifest(const nlohmann::json& j,
                                           const std::filesystem::path& dir);

/// parse_manifest plus per-record file checks: decodability, matching
/// dimensions, and pixel preservation outside the mask for local variants.
std::vector<SemanticRecord> ingest_semantic_manifest(const std::filesystem::path& dir);

/// Triplet file: JSON array of [subject, predicate, object] string arrays.
std::vector<std::array<std::string, 3>> read_triplets(const std::filesystem::path& path);

}  // namespace wmlab
