// Regenerates tests/fixtures: a four-record semantic-edit bundle and a bundle
// of defective records. Usage: make_fixtures <fixtures-dir>

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include "perturbations.hpp"
#include "rng.hpp"
#include "synthetic.hpp"
#include "tensor_io.hpp"
using namespace wmlab;
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<float> emb(std::uint64_t s) { Rng r(s, 1); std::vector<float> v(16); for (auto& x : v) x = float(r.normal()); return v; }
std::vector<float> nudge(std::vector<float> v, double amt, std::uint64_t s) { Rng r(s, 2); for (auto& x : v) x += float(amt * r.normal()); return v; }

int main(int argc, char** argv) {
  if (argc != 2) return 2;
  const fs::path root = argv[1];
  const fs::path d = root / "stub_bundle";
  fs::remove_all(d);
  fs::create_directories(d);
  const char* variants[4] = {"texture", "intra", "inter", "style"};
  const char* prompts[4] = {"change the comforter to plaid", "replace the lamp with a vase",
                            "replace the bed with a sofa", "render as an oil painting"};
  const double edit_amt[4] = {0.2, 0.5, 1.0, 0.4};
  const std::vector<std::vector<std::array<std::string, 3>>> trip_o = {
      {{"comforter", "on", "bed"}, {"bed", "near", "window"}},
      {{"lamp", "on", "table"}, {"table", "near", "bed"}},
      {{"bed", "in", "room"}, {"pillow", "on", "bed"}},
      {{"cat", "on", "sofa"}, {"sofa", "in", "room"}}};
  const std::vector<std::vector<std::array<std::string, 3>>> trip_e = {
      {{"comforter", "on", "bed"}, {"bed", "near", "window"}},
      {{"vase", "on", "table"}, {"table", "near", "bed"}},
      {{"sofa", "in", "room"}, {"pillow", "on", "sofa"}},
      {{"cat", "on", "sofa"}, {"sofa", "in", "room"}}};
  json recs = json::array();
  for (int i = 0; i < 4; ++i) {
    const std::string id = "img" + std::to_string(i), v = variants[i];
    const Tensor3 orig = to_tensor(to_u8(synthetic_image(64, 64, 100 + i)));
    image_write(orig, d / (id + "_original.png"));
    json r = {{"id", id}, {"variant", v}, {"original", id + "_original.png"},
              {"edited", id + "_" + v + ".png"}, {"prompt", prompts[i]}};
    Tensor3 edited = orig;
    if (v != "style") {
      const auto m = synth_mask(MaskShape::Ellipse, 64, 64, 0.15 + 0.1 * i, 7 + i);
      image_write(mask_to_tensor(m), d / (id + "_mask.png"));
      r["mask"] = id + "_mask.png";
      edited = masked_regenerate(orig, m, nullptr, 50 + i);
    } else {
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < 64; ++y)
          for (std::size_t x = 0; x < 64; ++x) {
            const float p = orig.at(c, y, x);
            edited.at(c, y, x) = std::clamp(0.15f + 0.7f * std::pow(p, c == 2 ? 0.7f : 1.3f), 0.f, 1.f);
          }
    }
    image_write(edited, d / (id + "_" + v + ".png"));
    const auto e = emb(200 + i), ve = emb(300 + i);
    vector_write(e, d / (id + "_emb_original.wtns"));
    vector_write(nudge(e, edit_amt[i], i), d / (id + "_emb_edited.wtns"));
    vector_write(ve, d / (id + "_vlm_original.wtns"));
    vector_write(nudge(ve, edit_amt[i], 10 + i), d / (id + "_vlm_edited.wtns"));
    r["emb_original"] = id + "_emb_original.wtns";
    r["emb_edited"] = id + "_emb_edited.wtns";
    r["vlm_emb_original"] = id + "_vlm_original.wtns";
    r["vlm_emb_edited"] = id + "_vlm_edited.wtns";
    std::ofstream(d / (id + "_triplets_original.json")) << json(trip_o[i]).dump() << "\n";
    std::ofstream(d / (id + "_triplets_edited.json")) << json(trip_e[i]).dump() << "\n";
    r["triplets_original"] = id + "_triplets_original.json";
    r["triplets_edited"] = id + "_triplets_edited.json";
    recs.push_back(r);
  }
  std::ofstream(d / "manifest.json") << json{{"version", 1}, {"records", recs}}.dump(2) << "\n";

  // A bundle with one defective record of each kind.
  const fs::path b = root / "bad_bundle";
  fs::remove_all(b);
  fs::create_directories(b);
  const Tensor3 orig = to_tensor(to_u8(synthetic_image(32, 32, 7)));
  image_write(orig, b / "a_original.png");
  const auto m = synth_mask(MaskShape::Rect, 32, 32, 0.25, 3);
  image_write(mask_to_tensor(m), b / "a_mask.png");
  Tensor3 leaky = masked_regenerate(orig, m, nullptr, 9);
  for (std::size_t c = 0; c < 3; ++c) leaky.at(c, 0, 0) = 1.0f - orig.at(c, 0, 0);
  if (m.get(0, 0)) return 1;
  image_write(leaky, b / "a_leaky.png");
  image_write(to_tensor(to_u8(synthetic_image(16, 16, 8))), b / "a_small.png");
  json bad = json::array();
  bad.push_back({{"id", "leaky"}, {"variant", "intra"}, {"original", "a_original.png"},
                 {"edited", "a_leaky.png"}, {"mask", "a_mask.png"}});
  bad.push_back({{"id", "missing"}, {"variant", "texture"}, {"original", "a_original.png"},
                 {"edited", "nope.png"}, {"mask", "a_mask.png"}});
  bad.push_back({{"id", "resized"}, {"variant", "style"}, {"original", "a_original.png"},
                 {"edited", "a_small.png"}});
  std::ofstream(b / "manifest.json") << json{{"version", 1}, {"records", bad}}.dump(2) << "\n";
}
