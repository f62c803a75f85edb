#include "manifest.hpp"

#include <set>

#include "error.hpp"
#include "tensor_io.hpp"

namespace wmlab {

using nlohmann::json;

namespace {

const std::set<std::string> kVariants = {"texture", "intra", "inter", "style"};

[[noreturn]] void schema_error(const std::string& id, const std::string& field,
                               const std::string& what) {
  fail(ErrorKind::Validation, "manifest record '" + id + "' field '" + field + "': " + what);
}

std::string string_field(const json& rec, const std::string& id, const char* field,
                         bool required) {
  if (!rec.contains(field)) {
    if (required) schema_error(id, field, "missing required field");
    return {};
  }
  if (!rec[field].is_string() || rec[field].get<std::string>().empty())
    schema_error(id, field, "must be a non-empty string");
  return rec[field].get<std::string>();
}

std::optional<std::filesystem::path> optional_path(const json& rec, const std::string& id,
                                                   const char* field,
                                                   const std::filesystem::path& dir) {
  const auto s = string_field(rec, id, field, false);
  if (s.empty()) return std::nullopt;
  return dir / s;
}

}  // namespace

std::vector<SemanticRecord> parse_manifest(const json& j, const std::filesystem::path& dir) {
  if (!j.is_object()) fail(ErrorKind::Validation, "manifest must be a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != 1)
    fail(ErrorKind::Validation, "manifest field 'version' must be the integer 1");
  if (!j.contains("records") || !j["records"].is_array())
    fail(ErrorKind::Validation, "manifest field 'records' must be an array");

  static const std::set<std::string> known = {
      "id",           "variant",         "original",         "edited",
      "mask",         "prompt",          "emb_original",     "emb_edited",
      "triplets_original", "triplets_edited", "vlm_emb_original", "vlm_emb_edited",
      "meta"};
  std::vector<SemanticRecord> out;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& rec : j["records"]) {
    const std::string fallback = "#" + std::to_string(index++);
    if (!rec.is_object()) schema_error(fallback, "(record)", "must be an object");
    SemanticRecord r;
    r.id = string_field(rec, fallback, "id", true);
    if (!seen.insert(r.id).second) schema_error(r.id, "id", "duplicate record id");
    for (const auto& [k, v] : rec.items())
      if (!known.count(k)) schema_error(r.id, k, "unknown field");
    r.variant = string_field(rec, r.id, "variant", true);
    if (!kVariants.count(r.variant))
      schema_error(r.id, "variant", "'" + r.variant + "' is not one of texture, intra, inter, style");
    r.original = dir / string_field(rec, r.id, "original", true);
    r.edited = dir / string_field(rec, r.id, "edited", true);
    r.mask = optional_path(rec, r.id, "mask", dir);
    if (rec.contains("prompt")) {
      if (!rec["prompt"].is_string()) schema_error(r.id, "prompt", "must be a string");
      r.prompt = rec["prompt"].get<std::string>();
    }
    r.emb_original = optional_path(rec, r.id, "emb_original", dir);
    r.emb_edited = optional_path(rec, r.id, "emb_edited", dir);
    r.vlm_emb_original = optional_path(rec, r.id, "vlm_emb_original", dir);
    r.vlm_emb_edited = optional_path(rec, r.id, "vlm_emb_edited", dir);
    r.triplets_original = optional_path(rec, r.id, "triplets_original", dir);
    r.triplets_edited = optional_path(rec, r.id, "triplets_edited", dir);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::array<std::string, 3>> read_triplets(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  if (!j.is_array()) fail(ErrorKind::Format, path.string() + ": expected an array of triplets");
  std::vector<std::array<std::string, 3>> out;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
        !t[2].is_string())
      fail(ErrorKind::Format, path.string() + ": each triplet must be 3 strings");
    out.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
  }
  return out;
}

std::vector<SemanticRecord> ingest_semantic_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path.string() + " is not valid JSON: " + e.what());
  }
  auto records = parse_manifest(j, dir);

  for (auto& r : records) {
    auto load = [&](const std::filesystem::path& p, const char* field) -> std::optional<Tensor3> {
      try {
        return image_read(p);
      } catch (const Error& e) {
        r.errors.push_back(std::string(field) + ": " + e.what());
        return std::nullopt;
      }
    };
    const auto orig = load(r.original, "original");
    const auto edit = load(r.edited, "edited");
    if (orig && edit && !orig->same_shape(*edit))
      r.errors.push_back("edited: dimensions differ from original");

    std::optional<BinaryMask> mask;
    if (r.mask) {
      if (auto m = load(*r.mask, "mask")) {
        if (orig && (m->height() != orig->height() || m->width() != orig->width()))
          r.errors.push_back("mask: dimensions differ from original");
        else {
          mask = mask_from_tensor(*m);
          r.mask_area = mask->area_fraction();
        }
      }
    }

    for (auto [p, field] : {std::pair{r.emb_original, "emb_original"},
                            std::pair{r.emb_edited, "emb_edited"},
                            std::pair{r.vlm_emb_original, "vlm_emb_original"},
                            std::pair{r.vlm_emb_edited, "vlm_emb_edited"}}) {
      if (!p) continue;
      try {
        if (vector_read(*p).empty()) r.errors.push_back(std::string(field) + ": empty embedding");
      } catch (const Error& e) {
        r.errors.push_back(std::string(field) + ": " + e.what());
      }
    }
    for (auto [p, field] : {std::pair{r.triplets_original, "triplets_original"},
                            std::pair{r.triplets_edited, "triplets_edited"}}) {
      if (!p) continue;
      try {
        read_triplets(*p);
      } catch (const Error& e) {
        r.errors.push_back(std::string(field) + ": " + e.what());
      }
    }

    if (r.is_local() && orig && edit && orig->same_shape(*edit)) {
      if (!mask) {
        if (!r.mask) r.warnings.push_back("local variant without a mask; locality not checked");
      } else if (mask->height() == orig->height() && mask->width() == orig->width()) {
        // Compare at 8-bit precision, the resolution the files carry.
        const auto a = to_u8(*orig), b = to_u8(*edit);
        std::size_t changed = 0;
        for (std::size_t y = 0; y < a.height; ++y)
          for (std::size_t x = 0; x < a.width; ++x) {
            if (mask->get(y, x)) continue;
            const std::size_t k = 3 * (y * a.width + x);
            if (a.rgb[k] != b.rgb[k] || a.rgb[k + 1] != b.rgb[k + 1] || a.rgb[k + 2] != b.rgb[k + 2])
              ++changed;
          }
        if (changed > 0)
          r.warnings.push_back("variant '" + r.variant + "' changes " + std::to_string(changed) +
                               " pixels outside its mask");
      }
    }
  }
  return records;
}

}  // namespace wmlab
