// wmlab command-line front end. Talks to the library only through wmlab.h.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wmlab/wmlab.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(wmlab_status s) {
  switch (s) {
    case WMLAB_OK: return kOk;
    case WMLAB_ERR_PARAMETER: return kUsage;
    case WMLAB_ERR_IO: return kIo;
    default: return kValidation;
  }
}

void check(wmlab_status s) {
  if (s != WMLAB_OK) throw Failure{exit_code(s), std::string(wmlab_status_name(s)) + ": " + wmlab_last_error()};
}

struct TensorDel {
  void operator()(wmlab_tensor* t) const { wmlab_tensor_free(t); }
};
struct KeyDel {
  void operator()(wmlab_key* k) const { wmlab_key_free(k); }
};
struct ChannelDel {
  void operator()(wmlab_channel* c) const { wmlab_channel_free(c); }
};
using TensorPtr = std::unique_ptr<wmlab_tensor, TensorDel>;
using KeyPtr = std::unique_ptr<wmlab_key, KeyDel>;
using ChannelPtr = std::unique_ptr<wmlab_channel, ChannelDel>;

struct Owned {
  char* s = nullptr;
  ~Owned() { wmlab_string_free(s); }
};

TensorPtr read_image(const std::string& path) {
  wmlab_tensor* t = nullptr;
  check(wmlab_image_read(path.c_str(), &t));
  return TensorPtr(t);
}

KeyPtr load_key(const std::string& path) {
  wmlab_key* k = nullptr;
  check(wmlab_key_load(path.c_str(), &k));
  return KeyPtr(k);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChannelPtr make_channel(const std::string& config_path) {
  wmlab_channel* c = nullptr;
  if (config_path.empty()) {
    check(wmlab_channel_create(nullptr, &c));
  } else {
    const std::string text = slurp(config_path);
    check(wmlab_channel_create(text.c_str(), &c));
  }
  return ChannelPtr(c);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kIo, "cannot write " + out_path};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<float> read_vector(const std::string& path) {
  const TensorPtr t = read_image(path);
  size_t c = 0, h = 0, w = 0;
  check(wmlab_tensor_shape(t.get(), &c, &h, &w));
  const float* d = wmlab_tensor_data(t.get());
  return {d, d + c * h * w};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wmlab: watermark robustness lab (embed, perturb, detect, score, sweep)"};
  app.name("wmlab");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wmlab_version()));

  std::uint64_t seed = 0;
  std::string out;
  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--seed", seed, "Seed for every random choice (env WMLAB_SEED)")
        ->envname("WMLAB_SEED");
    auto* o = sub->add_option("--out,--output", out, "Output file or directory");
    if (out_required) o->required();
  };

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Generate a watermark keyfile");
  std::string scheme;
  keygen->add_option("--scheme", scheme, "tree-ring | gaussian-shading | stable-signature")
      ->required();
  common(keygen, true);

  // embed
  auto* embed = app.add_subcommand("embed", "Produce a watermarked latent or image");
  std::string key_path, in_path, channel_path;
  bool want_image = false;
  embed->add_option("--key", key_path, "Keyfile")->required();
  embed->add_option("--in", in_path,
                    "Input latent (tree-ring) or image (stable-signature); default: sampled");
  embed->add_flag("--image", want_image, "Emit the generated image instead of the initial latent");
  embed->add_option("--channel", channel_path, "Channel config JSON");
  common(embed, true);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Apply one perturbation to an image");
  std::string family, mask_path, fill_path;
  double strength = 0.0;
  perturb->add_option("--family", family,
                      "seam_carve | downsample | impulse | interleave | occlusion | erosion | "
                      "dilation | partial_shuffle | complete_shuffle | masked_regen | none")
      ->required();
  perturb->add_option("--strength", strength, "Family-specific strength")->required();
  perturb->add_option("--in", in_path, "Input image (PNG or WTNS)")->required();
  perturb->add_option("--mask", mask_path, "masked_regen: mask image (replaces the synthetic mask)");
  perturb->add_option("--fill", fill_path, "masked_regen: external fill image (default: mock fill)");
  common(perturb, true);

  // detect
  auto* detect = app.add_subcommand("detect", "Detect a watermark in a latent or image");
  std::size_t nulls = 200;
  bool detect_json = false;
  detect->add_option("--key", key_path, "Keyfile")->required();
  detect->add_option("--in", in_path, "Latent (WTNS) or image (PNG/WTNS)")->required();
  detect->add_option("--nulls", nulls, "Null population size for tree-ring p-values")
      ->capture_default_str();
  detect->add_option("--channel", channel_path, "Channel config JSON");
  detect->add_flag("--json", detect_json, "Machine-readable JSON output");
  common(detect, false);

  // metric
  auto* metric = app.add_subcommand("metric", "Fidelity or drift metric between two inputs");
  std::string metric_name, a_path, b_path;
  bool metric_json = false;
  metric->add_option("--name", metric_name, "psnr | ssim | caption | triplet")
      ->required()
      ->check(CLI::IsMember({"psnr", "ssim", "caption", "triplet"}));
  metric->add_option("--a", a_path, "First image, embedding (WTNS) or triplet file")->required();
  metric->add_option("--b", b_path, "Second image, embedding (WTNS) or triplet file")->required();
  metric->add_flag("--json", metric_json, "Machine-readable JSON output");
  common(metric, false);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a perturbation sweep from a run config");
  std::string config_path;
  std::size_t threads = 1;
  sweep->add_option("--config", config_path, "Run config JSON")->required();
  sweep->add_option("--threads", threads, "Worker threads (results do not depend on it)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  common(sweep, false);

  // validate-manifest
  auto* validate = app.add_subcommand("validate-manifest", "Check a semantic-edit bundle");
  std::string bundle;
  bool report_json = false;
  validate->add_option("dir", bundle, "Bundle directory containing manifest.json")->required();
  validate->add_flag("--json", report_json, "Print the full report as JSON");
  common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*keygen) {
      wmlab_key* k = nullptr;
      check(wmlab_key_generate(scheme.c_str(), seed, &k));
      const KeyPtr key(k);
      check(wmlab_key_save(key.get(), out.c_str()));
      std::cerr << "wrote " << wmlab_key_scheme(key.get()) << " key to " << out << "\n";
    } else if (*embed) {
      const auto key = load_key(key_path);
      const auto ch = make_channel(channel_path);
      TensorPtr input;
      if (!in_path.empty()) input = read_image(in_path);
      wmlab_tensor* r = nullptr;
      check(wmlab_embed(ch.get(), key.get(), input.get(), seed, want_image ? 1 : 0, &r));
      const TensorPtr result(r);
      check(wmlab_image_write(result.get(), out.c_str()));
    } else if (*perturb) {
      const auto image = read_image(in_path);
      wmlab_tensor* r = nullptr;
      if (!mask_path.empty() || !fill_path.empty()) {
        if (family != "masked_regen")
          throw Failure{kUsage, "--mask and --fill only apply to masked_regen"};
        if (mask_path.empty()) throw Failure{kUsage, "--fill requires --mask"};
        const auto mask = read_image(mask_path);
        TensorPtr fill;
        if (!fill_path.empty()) fill = read_image(fill_path);
        check(wmlab_masked_regenerate(image.get(), mask.get(), fill.get(), seed, &r));
      } else {
        double area = 0.0;
        check(wmlab_perturb(family.c_str(), strength, seed, image.get(), &r, &area));
        if (!std::isnan(area)) std::cerr << "mask area fraction: " << fmt(area) << "\n";
      }
      const TensorPtr result(r);
      check(wmlab_image_write(result.get(), out.c_str()));
    } else if (*detect) {
      const auto key = load_key(key_path);
      const auto ch = make_channel(channel_path);
      const auto input = read_image(in_path);
      Owned res;
      check(wmlab_detect(ch.get(), key.get(), input.get(), nulls, &res.s));
      const auto j = nlohmann::json::parse(res.s);
      std::string text;
      if (detect_json) {
        text = j.dump() + "\n";
      } else {
        text = "scheme: " + j["scheme"].get<std::string>() + "\n";
        if (j.contains("bit_accuracy"))
          text += "bit accuracy: " + fmt(j["bit_accuracy"].get<double>()) + "\n";
        else
          text += "statistic: " + fmt(j["statistic"].get<double>()) + "\n";
        if (j.contains("p_value")) text += "p-value: " + fmt(j["p_value"].get<double>()) + "\n";
      }
      emit(text, out);
    } else if (*metric) {
      double value = 0.0;
      if (metric_name == "psnr" || metric_name == "ssim") {
        const auto a = read_image(a_path), b = read_image(b_path);
        check(wmlab_metric(metric_name.c_str(), a.get(), b.get(), &value));
      } else if (metric_name == "caption") {
        const auto a = read_vector(a_path), b = read_vector(b_path);
        if (a.size() != b.size()) throw Failure{kValidation, "embedding lengths differ"};
        check(wmlab_caption_agreement(a.data(), b.data(), a.size(), &value));
      } else {
        check(wmlab_triplet_similarity(a_path.c_str(), b_path.c_str(), &value));
      }
      const std::string text = metric_json ? nlohmann::json{{"metric", metric_name}, {"value", value}}.dump() + "\n"
                                           : metric_name + ": " + fmt(value) + "\n";
      emit(text, out);
    } else if (*sweep) {
      Owned res;
      const bool seed_given = sweep->count("--seed") > 0 || std::getenv("WMLAB_SEED");
      check(wmlab_sweep(config_path.c_str(), out.empty() ? nullptr : out.c_str(), seed_given ? 1 : 0,
                        seed, threads, &res.s));
      const auto j = nlohmann::json::parse(res.s);
      for (const auto& s : j["skips"]) std::cerr << "skip: " << s.get<std::string>() << "\n";
      for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
      std::cerr << "wrote " << j["records"].get<std::size_t>() << " records to "
                << j["output_dir"].get<std::string>() << "\n";
    } else if (*validate) {
      Owned res;
      const wmlab_status s = wmlab_validate_manifest(bundle.c_str(), &res.s);
      if (res.s) {
        const auto j = nlohmann::json::parse(res.s);
        for (const auto& r : j["records"]) {
          for (const auto& e : r["errors"])
            std::cerr << "error: record " << r["id"].get<std::string>() << ": "
                      << e.get<std::string>() << "\n";
          for (const auto& w : r["warnings"])
            std::cerr << "warning: record " << r["id"].get<std::string>() << ": "
                      << w.get<std::string>() << "\n";
        }
        const std::string text =
            report_json ? j.dump(2) + "\n"
                        : std::to_string(j["record_count"].get<std::size_t>()) + " records, " +
                              std::to_string(j["error_count"].get<std::size_t>()) + " errors, " +
                              std::to_string(j["warning_count"].get<std::size_t>()) + " warnings\n";
        emit(text, out);
      }
      check(s);
    }
  } catch (const Failure& f) {
    std::cerr << "wmlab: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "wmlab: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
