// Exercises the shared library strictly through its C header.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "wmlab/wmlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = WMLAB_FIXTURES_DIR;

struct TensorDel {
  void operator()(wmlab_tensor* t) const { wmlab_tensor_free(t); }
};
struct KeyDel {
  void operator()(wmlab_key* k) const { wmlab_key_free(k); }
};
struct ChannelDel {
  void operator()(wmlab_channel* c) const { wmlab_channel_free(c); }
};
using Tensor = std::unique_ptr<wmlab_tensor, TensorDel>;
using Key = std::unique_ptr<wmlab_key, KeyDel>;
using Channel = std::unique_ptr<wmlab_channel, ChannelDel>;

class ScratchDir {
 public:
  ScratchDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("wmlab-capi-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Tensor make_tensor(std::size_t c, std::size_t h, std::size_t w, const std::vector<float>& data) {
  wmlab_tensor* t = nullptr;
  EXPECT_EQ(wmlab_tensor_create(c, h, w, data.data(), &t), WMLAB_OK) << wmlab_last_error();
  return Tensor(t);
}

std::vector<float> ramp(std::size_t n, unsigned seed) {
  std::vector<float> v(n);
  unsigned s = seed * 2654435761u + 1;
  for (auto& x : v) {
    s = s * 1664525u + 1013904223u;
    x = static_cast<float>((s >> 8) & 0xFFFF) / 65535.0f;
  }
  return v;
}

std::vector<float> copy_data(const wmlab_tensor* t) {
  std::size_t c = 0, h = 0, w = 0;
  wmlab_tensor_shape(t, &c, &h, &w);
  const float* p = wmlab_tensor_data(t);
  return {p, p + c * h * w};
}

json take_json(char* s) {
  json j = json::parse(s);
  wmlab_string_free(s);
  return j;
}

Channel default_channel() {
  wmlab_channel* ch = nullptr;
  EXPECT_EQ(wmlab_channel_create(nullptr, &ch), WMLAB_OK);
  return Channel(ch);
}

Key make_key(const char* scheme, uint64_t seed) {
  wmlab_key* k = nullptr;
  EXPECT_EQ(wmlab_key_generate(scheme, seed, &k), WMLAB_OK) << wmlab_last_error();
  return Key(k);
}

}  // namespace

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(wmlab_status_name(WMLAB_OK), "ok");
  EXPECT_STREQ(wmlab_status_name(WMLAB_ERR_IO), "I/O error");
  EXPECT_STREQ(wmlab_status_name(static_cast<wmlab_status>(99)), "unknown status");
  EXPECT_STREQ(wmlab_version(), "0.1.0");
}

TEST(CApi, NullArgumentsAreParameterErrors) {
  EXPECT_EQ(wmlab_tensor_create(1, 1, 1, nullptr, nullptr), WMLAB_ERR_PARAMETER);
  EXPECT_NE(std::string(wmlab_last_error()).find("NULL"), std::string::npos);
  EXPECT_EQ(wmlab_image_read(nullptr, nullptr), WMLAB_ERR_PARAMETER);
  EXPECT_EQ(wmlab_detect(nullptr, nullptr, nullptr, 0, nullptr), WMLAB_ERR_PARAMETER);
  EXPECT_EQ(wmlab_tensor_data(nullptr), nullptr);
  EXPECT_STREQ(wmlab_key_scheme(nullptr), "");
  wmlab_tensor_free(nullptr);
  wmlab_key_free(nullptr);
  wmlab_channel_free(nullptr);
  wmlab_string_free(nullptr);
}

TEST(CApi, LastErrorClearsOnSuccess) {
  EXPECT_EQ(wmlab_image_read("/nonexistent/x.png", nullptr), WMLAB_ERR_PARAMETER);
  EXPECT_STRNE(wmlab_last_error(), "");
  auto t = make_tensor(1, 2, 2, {0, 0, 0, 0});
  EXPECT_STREQ(wmlab_last_error(), "");
}

TEST(CApi, TensorCreateShapeData) {
  const auto data = ramp(3 * 4 * 5, 1);
  auto t = make_tensor(3, 4, 5, data);
  std::size_t c = 0, h = 0, w = 0;
  ASSERT_EQ(wmlab_tensor_shape(t.get(), &c, &h, &w), WMLAB_OK);
  EXPECT_EQ(c, 3u);
  EXPECT_EQ(h, 4u);
  EXPECT_EQ(w, 5u);
  EXPECT_EQ(copy_data(t.get()), data);

  wmlab_tensor* z = nullptr;
  ASSERT_EQ(wmlab_tensor_create(2, 2, 2, nullptr, &z), WMLAB_OK);
  for (float v : copy_data(z)) EXPECT_EQ(v, 0.0f);
  wmlab_tensor_free(z);

  const std::vector<float> bad = {0.0f, NAN};
  EXPECT_EQ(wmlab_tensor_create(1, 1, 2, bad.data(), &z), WMLAB_ERR_PARAMETER);
}

TEST(CApi, ImageIoRoundTrips) {
  ScratchDir dir;
  const auto data = ramp(3 * 8 * 6, 2);
  auto t = make_tensor(3, 8, 6, data);
  ASSERT_EQ(wmlab_image_write(t.get(), (dir / "a.wtns").c_str()), WMLAB_OK);
  wmlab_tensor* back = nullptr;
  ASSERT_EQ(wmlab_image_read((dir / "a.wtns").c_str(), &back), WMLAB_OK);
  EXPECT_EQ(copy_data(back), data);
  wmlab_tensor_free(back);

  ASSERT_EQ(wmlab_image_write(t.get(), (dir / "a.png").c_str()), WMLAB_OK);
  ASSERT_EQ(wmlab_image_read((dir / "a.png").c_str(), &back), WMLAB_OK);
  const auto png = copy_data(back);
  wmlab_tensor_free(back);
  ASSERT_EQ(png.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(png[i], data[i], 0.5 / 255 + 1e-6);

  EXPECT_EQ(wmlab_image_read((dir / "missing.png").c_str(), &back), WMLAB_ERR_IO);
  std::ofstream(dir / "junk.wtns") << "XXXXjunk";
  EXPECT_EQ(wmlab_image_read((dir / "junk.wtns").c_str(), &back), WMLAB_ERR_FORMAT);
}

TEST(CApi, ChannelConfigAndRoundTrip) {
  wmlab_channel* raw = nullptr;
  EXPECT_EQ(wmlab_channel_create("{not json", &raw), WMLAB_ERR_PARAMETER);
  EXPECT_EQ(wmlab_channel_create(R"({"stepz": 4})", &raw), WMLAB_ERR_VALIDATION);
  EXPECT_NE(std::string(wmlab_last_error()).find("stepz"), std::string::npos);
  ASSERT_EQ(wmlab_channel_create(R"({"steps": 4})", &raw), WMLAB_OK) << wmlab_last_error();
  Channel ch(raw);
  wmlab_tensor *z = nullptr, *img = nullptr, *z2 = nullptr;
  ASSERT_EQ(wmlab_channel_sample_latent(ch.get(), 7, 0, &z), WMLAB_OK);
  Tensor zt(z);
  std::size_t c = 0, h = 0, w = 0;
  wmlab_tensor_shape(z, &c, &h, &w);
  EXPECT_EQ(c, 4u);
  EXPECT_EQ(h, 64u);
  ASSERT_EQ(wmlab_channel_generate(ch.get(), z, &img), WMLAB_OK);
  Tensor it(img);
  wmlab_tensor_shape(img, &c, &h, &w);
  EXPECT_EQ(c, 3u);
  EXPECT_EQ(h, 512u);
  EXPECT_EQ(w, 512u);
  ASSERT_EQ(wmlab_channel_invert(ch.get(), img, &z2), WMLAB_OK);
  Tensor z2t(z2);
  EXPECT_EQ(wmlab_channel_generate(ch.get(), img, &z2), WMLAB_ERR_SHAPE);
}

TEST(CApi, KeysSaveLoadAndSchemes) {
  ScratchDir dir;
  for (const char* s : {"tree-ring", "gaussian-shading", "stable-signature"}) {
    auto k = make_key(s, 3);
    EXPECT_STREQ(wmlab_key_scheme(k.get()), s);
    const auto path = dir / (std::string(s) + ".json");
    ASSERT_EQ(wmlab_key_save(k.get(), path.c_str()), WMLAB_OK);
    wmlab_key* back = nullptr;
    ASSERT_EQ(wmlab_key_load(path.c_str(), &back), WMLAB_OK) << wmlab_last_error();
    EXPECT_STREQ(wmlab_key_scheme(back), s);
    wmlab_key_free(back);
  }
  wmlab_key* k = nullptr;
  EXPECT_EQ(wmlab_key_generate("dwt-dct", 1, &k), WMLAB_ERR_PARAMETER);
  EXPECT_EQ(wmlab_key_load((dir / "none.json").c_str(), &k), WMLAB_ERR_IO);
  std::ofstream(dir / "bad.json") << R"({"scheme": "gaussian-shading"})";
  EXPECT_NE(wmlab_key_load((dir / "bad.json").c_str(), &k), WMLAB_OK);
}

TEST(CApi, GaussianShadingRoundTrip) {
  auto ch = default_channel();
  auto key = make_key("gaussian-shading", 11);
  wmlab_tensor* z = nullptr;
  ASSERT_EQ(wmlab_embed(ch.get(), key.get(), nullptr, 5, 0, &z), WMLAB_OK);
  Tensor zt(z);
  char* out = nullptr;
  ASSERT_EQ(wmlab_detect(ch.get(), key.get(), z, 0, &out), WMLAB_OK);
  const auto j = take_json(out);
  EXPECT_EQ(j.at("scheme"), "gaussian-shading");
  EXPECT_DOUBLE_EQ(j.at("bit_accuracy").get<double>(), 1.0);
  EXPECT_FALSE(j.contains("p_value"));

  wmlab_tensor* img = nullptr;
  ASSERT_EQ(wmlab_embed(ch.get(), key.get(), nullptr, 5, 1, &img), WMLAB_OK);
  Tensor imgt(img);
  ASSERT_EQ(wmlab_detect(ch.get(), key.get(), img, 0, &out), WMLAB_OK);
  EXPECT_DOUBLE_EQ(take_json(out).at("bit_accuracy").get<double>(), 1.0);

  wmlab_tensor* dummy = nullptr;
  EXPECT_EQ(wmlab_embed(ch.get(), key.get(), z, 5, 0, &dummy), WMLAB_ERR_PARAMETER);
}

TEST(CApi, TreeRingRoundTripHitsPValueFloor) {
  auto ch = default_channel();
  auto key = make_key("tree-ring", 4);
  wmlab_tensor* z = nullptr;
  ASSERT_EQ(wmlab_embed(ch.get(), key.get(), nullptr, 9, 0, &z), WMLAB_OK);
  Tensor zt(z);
  char* out = nullptr;
  ASSERT_EQ(wmlab_detect(ch.get(), key.get(), z, 50, &out), WMLAB_OK);
  const auto j = take_json(out);
  EXPECT_DOUBLE_EQ(j.at("p_value").get<double>(), 1.0 / 51.0);
  EXPECT_FALSE(j.contains("bit_accuracy"));
  EXPECT_EQ(wmlab_detect(ch.get(), key.get(), z, 0, &out), WMLAB_ERR_CALIBRATION);

  auto small = make_tensor(4, 8, 8, std::vector<float>(256, 0.0f));
  wmlab_tensor* bad = nullptr;
  EXPECT_EQ(wmlab_embed(ch.get(), key.get(), small.get(), 0, 0, &bad), WMLAB_ERR_SHAPE);
}

TEST(CApi, StableSignatureRoundTrip) {
  auto ch = default_channel();
  auto key = make_key("stable-signature", 8);
  auto carrier = make_tensor(3, 32, 32, std::vector<float>(3 * 32 * 32, 0.5f));
  wmlab_tensor* marked = nullptr;
  ASSERT_EQ(wmlab_embed(ch.get(), key.get(), carrier.get(), 0, 0, &marked), WMLAB_OK)
      << wmlab_last_error();
  Tensor mt(marked);
  char* out = nullptr;
  ASSERT_EQ(wmlab_detect(ch.get(), key.get(), marked, 0, &out), WMLAB_OK);
  const auto j = take_json(out);
  EXPECT_DOUBLE_EQ(j.at("bit_accuracy").get<double>(), 1.0);
  EXPECT_FALSE(j.at("decoded_bits").get<std::string>().empty());
}

TEST(CApi, PerturbDomainsAndMaskArea) {
  auto img = make_tensor(3, 32, 32, ramp(3 * 32 * 32, 3));
  wmlab_tensor* out = nullptr;
  EXPECT_EQ(wmlab_perturb("impulse", 1.5, 0, img.get(), &out, nullptr), WMLAB_ERR_PARAMETER);
  EXPECT_NE(std::string(wmlab_last_error()).find("impulse"), std::string::npos);
  EXPECT_EQ(wmlab_perturb("blur", 1.0, 0, img.get(), &out, nullptr), WMLAB_ERR_PARAMETER);

  double area = 0.0;
  ASSERT_EQ(wmlab_perturb("impulse", 0.2, 1, img.get(), &out, &area), WMLAB_OK);
  EXPECT_TRUE(std::isnan(area));
  wmlab_tensor_free(out);
  ASSERT_EQ(wmlab_perturb("masked_regen", 0.25, 1, img.get(), &out, &area), WMLAB_OK);
  EXPECT_NEAR(area, 0.25, 0.02);
  wmlab_tensor_free(out);

  // Determinism across calls.
  wmlab_tensor *a = nullptr, *b = nullptr;
  ASSERT_EQ(wmlab_perturb("partial_shuffle", 4, 9, img.get(), &a, nullptr), WMLAB_OK);
  ASSERT_EQ(wmlab_perturb("partial_shuffle", 4, 9, img.get(), &b, nullptr), WMLAB_OK);
  EXPECT_EQ(copy_data(a), copy_data(b));
  wmlab_tensor_free(a);
  wmlab_tensor_free(b);
}

TEST(CApi, MaskedRegenerateKeepsOutsidePixels) {
  const std::size_t n = 24;
  auto img = make_tensor(3, n, n, ramp(3 * n * n, 4));
  wmlab_tensor* mask = nullptr;
  ASSERT_EQ(wmlab_synth_mask("rect", n, n, 0.3, 2, &mask), WMLAB_OK);
  Tensor mt(mask);
  std::size_t c = 0;
  wmlab_tensor_shape(mask, &c, nullptr, nullptr);
  EXPECT_EQ(c, 1u);
  const auto m = copy_data(mask);
  double on = 0;
  for (float v : m) on += v;
  EXPECT_NEAR(on / (n * n), 0.3, 0.02);

  auto fill = make_tensor(3, n, n, std::vector<float>(3 * n * n, 0.25f));
  for (const wmlab_tensor* f : {static_cast<const wmlab_tensor*>(nullptr),
                                static_cast<const wmlab_tensor*>(fill.get())}) {
    wmlab_tensor* out = nullptr;
    ASSERT_EQ(wmlab_masked_regenerate(img.get(), mask, f, 6, &out), WMLAB_OK);
    const auto o = copy_data(out), in = copy_data(img.get());
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t i = 0; i < n * n; ++i) {
        if (m[i] == 0.0f)
          EXPECT_EQ(o[ch * n * n + i], in[ch * n * n + i]);
        else if (f)
          EXPECT_EQ(o[ch * n * n + i], 0.25f);
      }
    wmlab_tensor_free(out);
  }
  EXPECT_EQ(wmlab_synth_mask("star", n, n, 0.3, 2, &mask), WMLAB_ERR_PARAMETER);
}

TEST(CApi, Metrics) {
  auto a = make_tensor(3, 16, 16, ramp(3 * 16 * 16, 5));
  auto b = make_tensor(3, 16, 16, ramp(3 * 16 * 16, 6));
  double v = 0.0;
  ASSERT_EQ(wmlab_metric("psnr", a.get(), a.get(), &v), WMLAB_OK);
  EXPECT_DOUBLE_EQ(v, 99.0);
  ASSERT_EQ(wmlab_metric("ssim", a.get(), a.get(), &v), WMLAB_OK);
  EXPECT_NEAR(v, 1.0, 1e-12);
  ASSERT_EQ(wmlab_metric("ssim", a.get(), b.get(), &v), WMLAB_OK);
  EXPECT_LT(v, 0.5);
  EXPECT_EQ(wmlab_metric("lpips", a.get(), b.get(), &v), WMLAB_ERR_PARAMETER);
  auto tiny = make_tensor(3, 8, 8, ramp(3 * 64, 7));
  EXPECT_EQ(wmlab_metric("ssim", tiny.get(), tiny.get(), &v), WMLAB_ERR_SHAPE);
  auto other = make_tensor(3, 16, 15, ramp(3 * 16 * 15, 7));
  EXPECT_EQ(wmlab_metric("psnr", a.get(), other.get(), &v), WMLAB_ERR_SHAPE);

  const float e1[] = {1, 0, 0}, e2[] = {0, 1, 0}, z[] = {0, 0, 0};
  ASSERT_EQ(wmlab_caption_agreement(e1, e1, 3, &v), WMLAB_OK);
  EXPECT_DOUBLE_EQ(v, 1.0);
  ASSERT_EQ(wmlab_caption_agreement(e1, e2, 3, &v), WMLAB_OK);
  EXPECT_DOUBLE_EQ(v, 0.0);
  EXPECT_EQ(wmlab_caption_agreement(e1, z, 3, &v), WMLAB_ERR_DEGENERATE);

  const auto bundle = kFixtures / "stub_bundle";
  ASSERT_EQ(wmlab_triplet_similarity((bundle / "img1_triplets_original.json").c_str(),
                                     (bundle / "img1_triplets_edited.json").c_str(), &v),
            WMLAB_OK);
  EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(CApi, TprAtFpr) {
  std::vector<double> nulls(1000), pos(10);
  for (std::size_t i = 0; i < nulls.size(); ++i) nulls[i] = static_cast<double>(i);
  for (auto& p : pos) p = 2000.0;
  double tpr = 0, thr = 0;
  int warn = -1;
  ASSERT_EQ(wmlab_tpr_at_fpr(nulls.data(), nulls.size(), pos.data(), pos.size(), 1, 0.001, &tpr,
                             &thr, &warn),
            WMLAB_OK);
  EXPECT_DOUBLE_EQ(tpr, 1.0);
  EXPECT_EQ(warn, 0);
  ASSERT_EQ(wmlab_tpr_at_fpr(nulls.data(), nulls.size(), pos.data(), pos.size(), 0, 0.001, &tpr,
                             &thr, &warn),
            WMLAB_OK);
  EXPECT_DOUBLE_EQ(tpr, 0.0);
  ASSERT_EQ(wmlab_tpr_at_fpr(nulls.data(), 10, pos.data(), pos.size(), 1, 0.001, &tpr, &thr, &warn),
            WMLAB_OK);
  EXPECT_EQ(warn, 1);
  EXPECT_EQ(wmlab_tpr_at_fpr(nulls.data(), 0, pos.data(), pos.size(), 1, 0.001, &tpr, &thr, &warn),
            WMLAB_ERR_CALIBRATION);
  EXPECT_EQ(wmlab_tpr_at_fpr(nullptr, 5, pos.data(), pos.size(), 1, 0.001, &tpr, &thr, &warn),
            WMLAB_ERR_PARAMETER);
}

TEST(CApi, ValidateManifest) {
  char* report = nullptr;
  ASSERT_EQ(wmlab_validate_manifest((kFixtures / "stub_bundle").c_str(), &report), WMLAB_OK)
      << wmlab_last_error();
  auto j = take_json(report);
  EXPECT_EQ(j.at("record_count"), 4);
  EXPECT_EQ(j.at("error_count"), 0);
  EXPECT_EQ(j.at("warning_count"), 0);
  EXPECT_EQ(j.at("records")[3].at("variant"), "style");
  EXPECT_FALSE(j.at("records")[3].contains("mask_area"));

  report = nullptr;
  EXPECT_EQ(wmlab_validate_manifest((kFixtures / "bad_bundle").c_str(), &report),
            WMLAB_ERR_VALIDATION);
  ASSERT_NE(report, nullptr);
  j = take_json(report);
  EXPECT_EQ(j.at("record_count"), 3);
  EXPECT_EQ(j.at("warning_count"), 1);
  EXPECT_EQ(j.at("error_count"), 2);

  ScratchDir dir;
  std::ofstream(dir / "manifest.json")
      << R"({"version": 1, "records": [{"id": "r", "variant": "global", "original": "a", "edited": "b"}]})";
  report = nullptr;
  EXPECT_EQ(wmlab_validate_manifest(dir.path().c_str(), &report), WMLAB_ERR_VALIDATION);
  EXPECT_EQ(report, nullptr);
  const std::string msg = wmlab_last_error();
  EXPECT_NE(msg.find("'r'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("variant"), std::string::npos) << msg;
  EXPECT_EQ(wmlab_validate_manifest((dir / "nope").c_str(), &report), WMLAB_ERR_IO);
}

TEST(CApi, SweepWritesOutputs) {
  ScratchDir dir;
  std::ofstream(dir / "run.json") << R"({"images": 1, "seeds": [0], "null_count": 20,
      "schemes": ["stable-signature"], "sweeps": [{"family": "occlusion", "strengths": [0.1]}],
      "output_dir": "ignored"})";
  char* summary = nullptr;
  ASSERT_EQ(wmlab_sweep((dir / "run.json").c_str(), (dir / "out").c_str(), 1, 3, 1, &summary),
            WMLAB_OK)
      << wmlab_last_error();
  const auto j = take_json(summary);
  EXPECT_EQ(j.at("records"), 1);
  EXPECT_EQ(j.at("output_dir"), dir / "out");
  for (const char* f : {"records.csv", "aggregates.csv", "nulls.csv", "run.json", "maps/occlusion.csv"})
    EXPECT_TRUE(fs::exists(dir.path() / "out" / f)) << f;
  EXPECT_FALSE(fs::exists(dir.path() / "ignored"));
  std::ifstream run(dir / "out/run.json");
  EXPECT_EQ(json::parse(run).at("config").at("key_seed"), 3);

  std::ofstream(dir / "bad.json") << R"({"sweeps": [{"family": "impulse", "strengths": [2]}]})";
  EXPECT_EQ(wmlab_sweep((dir / "bad.json").c_str(), nullptr, 0, 0, 1, nullptr),
            WMLAB_ERR_VALIDATION);
  EXPECT_EQ(wmlab_sweep((dir / "absent.json").c_str(), nullptr, 0, 0, 1, nullptr), WMLAB_ERR_IO);
}
