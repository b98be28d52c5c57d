#include "hideseek_cli/config.hpp"

#include <cstdlib>
#include <set>

#include "hideseek/checkpoint.hpp"
#include "hideseek/error.hpp"
#include "hideseek/order_theory.hpp"

namespace hideseek::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& msg, const std::string& ctx = {}) {
  fail(ErrorCode::kInvalidConfig, msg, ctx);
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) bad("unknown key in " + where, k);
  }
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

fs::path existing(const json& j, const fs::path& base, const std::string& what) {
  const fs::path p = resolve(j.get<std::string>(), base);
  if (!fs::exists(p)) fail(ErrorCode::kMissingFile, what + " does not exist", p.string());
  return p;
}

DatasetSpec parse_dataset(const json& j, const fs::path& base, const std::string& what) {
  DatasetSpec d;
  if (j.is_string()) {
    d.path = existing(j, base, what);
    if (!fs::is_directory(*d.path)) fail(ErrorCode::kInvalidConfig, what + " must be a directory", d.path->string());
    return d;
  }
  only_keys(j, {"synthetic"}, what);
  const json& s = j.at("synthetic");
  only_keys(s, {"count", "seed", "channels", "width", "height", "waves", "max_cycles", "blobs", "texture_sigma"},
            what + ".synthetic");
  d.synthetic_count = s.value("count", 0);
  d.synthetic_seed = s.value("seed", std::uint64_t{0});
  d.synthetic.channels = s.value("channels", d.synthetic.channels);
  d.synthetic.width = s.value("width", d.synthetic.width);
  d.synthetic.height = s.value("height", d.synthetic.height);
  d.synthetic.waves = s.value("waves", d.synthetic.waves);
  d.synthetic.max_cycles = s.value("max_cycles", d.synthetic.max_cycles);
  d.synthetic.blobs = s.value("blobs", d.synthetic.blobs);
  d.synthetic.texture_sigma = s.value("texture_sigma", d.synthetic.texture_sigma);
  if (d.synthetic_count < 1) bad(what + ".synthetic.count must be positive");
  if (d.synthetic.channels != 1 && d.synthetic.channels != 3) bad(what + ".synthetic.channels must be 1 or 3");
  if (d.synthetic.width < 8 || d.synthetic.height < 8) bad(what + ".synthetic size must be at least 8x8");
  return d;
}

json dataset_json(const DatasetSpec& d) {
  if (d.path) return d.path->string();
  const auto& s = d.synthetic;
  return {{"synthetic",
           {{"count", d.synthetic_count},
            {"seed", d.synthetic_seed},
            {"channels", s.channels},
            {"width", s.width},
            {"height", s.height},
            {"waves", s.waves},
            {"max_cycles", s.max_cycles},
            {"blobs", s.blobs},
            {"texture_sigma", s.texture_sigma}}}};
}

LossWeights parse_lambdas(const json& j) {
  LossWeights w;
  if (j.is_array()) {
    if (j.size() != 5) bad("lambdas must list five weights");
    w = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(), j[4].get<double>()};
  } else {
    only_keys(j, {"area", "frequency", "semantic", "pixel", "perceptual"}, "lambdas");
    w.area = j.value("area", w.area);
    w.frequency = j.value("frequency", w.frequency);
    w.semantic = j.value("semantic", w.semantic);
    w.pixel = j.value("pixel", w.pixel);
    w.perceptual = j.value("perceptual", w.perceptual);
  }
  try {
    w.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return w;
}

WatermarkSpec parse_watermark(const json& j, const fs::path& base) {
  only_keys(j, {"scheme", "seed", "bits", "strength", "ring_radii", "ring_floor", "ring_pattern_scale", "key"},
            "watermark");
  WatermarkSpec w;
  const std::string scheme = j.value("scheme", std::string("ss"));
  if (scheme == "ss" || scheme == "high_frequency") {
    w.band = WatermarkBand::kHighFrequency;
  } else if (scheme == "ring" || scheme == "low_frequency_ring") {
    w.band = WatermarkBand::kLowFrequencyRing;
  } else {
    bad("watermark.scheme must be ss or ring", scheme);
  }
  w.seed = j.value("seed", w.seed);
  w.bits = j.value("bits", w.bits);
  w.strength = j.value("strength", w.strength);
  if (j.contains("ring_radii")) w.ring_radii = j.at("ring_radii").get<std::vector<int>>();
  w.ring_floor = j.value("ring_floor", w.ring_floor);
  w.ring_pattern_scale = j.value("ring_pattern_scale", w.ring_pattern_scale);
  if (j.contains("key")) w.key_path = existing(j.at("key"), base, "watermark.key");
  if (w.bits < 1) bad("watermark.bits must be positive");
  if (!(w.strength >= 0.0)) bad("watermark.strength must be non-negative");
  return w;
}

AttackMethod parse_attack(const std::string& s) {
  if (s == "none") return AttackMethod::kNone;
  if (s == "hsn") return AttackMethod::kHsn;
  if (s == "hsplus") return AttackMethod::kHsPlus;
  if (s == "manipulation") return AttackMethod::kManipulation;
  bad("attack must be none, hsn, hsplus or manipulation", s);
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMissingFile || e.code() == ErrorCode::kInvalidConfig) throw;
    bad(e.what(), e.context());
  }
}

}  // namespace

std::string_view to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::kNone: return "none";
    case AttackMethod::kHsn: return "hsn";
    case AttackMethod::kHsPlus: return "hsplus";
    case AttackMethod::kManipulation: return "manipulation";
  }
  return "none";
}

ExperimentConfig parse_config(const json& j, const fs::path& base) {
  only_keys(j,
            {"dataset", "eval_dataset", "reference_dir", "image_size", "patch_size", "strategy", "beta",
             "beta_sweep", "strategy_sweep", "gamma", "alpha", "lambdas", "decode", "order", "order_sweep",
             "max_hidden", "threshold", "hidden_budget", "watermark", "manipulations", "attack", "seeds", "fpr", "output_dir", "workers", "hsn",
             "masker", "generator", "checkpoints", "loss_variants", "theorem", "lpips_extractor", "save_images"},
            "config");
  ExperimentConfig c;
  try {
    if (!j.contains("dataset")) bad("config needs a dataset");
    c.dataset = parse_dataset(j.at("dataset"), base, "dataset");
    if (j.contains("eval_dataset")) c.eval_dataset = parse_dataset(j.at("eval_dataset"), base, "eval_dataset");
    if (j.contains("reference_dir")) c.reference_dir = existing(j.at("reference_dir"), base, "reference_dir");
    if (j.contains("image_size")) {
      const auto s = j.at("image_size").get<std::vector<int>>();
      if (s.size() != 2 || s[0] < 8 || s[1] < 8) bad("image_size must be [width, height], each at least 8");
      c.image_width = s[0];
      c.image_height = s[1];
    }
    c.patch_size = j.value("patch_size", c.patch_size);
    if (c.patch_size < 1 || c.image_width % c.patch_size || c.image_height % c.patch_size) {
      bad("patch_size must divide the image size");
    }
    c.strategy.kind = guarded([&] { return mask_kind_from_string(j.value("strategy", std::string("random"))); });
    c.strategy.beta = j.value("beta", c.strategy.beta);
    if (!(c.strategy.beta > 0.0 && c.strategy.beta < 1.0)) bad("beta must lie in (0, 1)");
    if (j.contains("beta_sweep")) c.beta_sweep = j.at("beta_sweep").get<std::vector<double>>();
    for (double b : c.beta_sweep) {
      if (!(b > 0.0 && b < 1.0)) bad("beta_sweep values must lie in (0, 1)");
    }
    if (j.contains("strategy_sweep")) {
      c.strategy_sweep.clear();
      for (const auto& s : j.at("strategy_sweep")) {
        c.strategy_sweep.push_back(guarded([&] { return mask_kind_from_string(s.get<std::string>()); }));
      }
    }
    c.gamma = j.value("gamma", c.gamma);
    if (!(c.gamma > 0.0)) bad("gamma must be positive");
    c.alpha = j.value("alpha", c.alpha);
    if (!(c.alpha >= 0.0)) bad("alpha must be non-negative");
    if (j.contains("lambdas")) c.lambdas = parse_lambdas(j.at("lambdas"));
    if (j.contains("decode")) c.decode = guarded([&] { return decode_mode_from_json(j.at("decode")); });
    c.order = guarded([&] { return order_variant_from_string(j.value("order", std::string("original"))); });
    if (j.contains("order_sweep")) {
      c.order_sweep.clear();
      for (const auto& s : j.at("order_sweep")) {
        c.order_sweep.push_back(guarded([&] { return order_variant_from_string(s.get<std::string>()); }));
      }
      if (c.order_sweep.empty()) bad("order_sweep must not be empty");
    }
    c.max_hidden = j.value("max_hidden", c.max_hidden);
    c.threshold = j.value("threshold", c.threshold);
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) bad("threshold must lie in (0, 1)");
    if (j.contains("hidden_budget")) {
      const long long b = j.at("hidden_budget").get<long long>();
      if (b < 0) bad("hidden_budget must be non-negative");
      c.hidden_budget = static_cast<std::size_t>(b);
    }
    if (j.contains("watermark")) c.watermark = parse_watermark(j.at("watermark"), base);
    if (j.contains("manipulations")) {
      for (const auto& m : j.at("manipulations")) {
        c.manipulations.push_back(guarded([&] { return Manipulation::parse(m.get<std::string>()); }));
      }
    }
    c.attack = parse_attack(j.value("attack", std::string("hsn")));
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) bad("seeds must not be empty");
    c.fpr = j.value("fpr", c.fpr);
    if (!(c.fpr > 0.0 && c.fpr <= 1.0)) bad("fpr must lie in (0, 1]");
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base);
    c.workers = j.value("workers", c.workers);
    if (c.workers < 1) bad("workers must be at least 1");

    if (j.contains("hsn")) c.hsn = guarded([&] { return hsn_config_from_json(j.at("hsn")); });
    c.hsn.architecture.patch_size = c.patch_size;
    guarded([&] { c.hsn.validate(); return 0; });
    if (j.contains("masker")) c.masker = guarded([&] { return masker_config_from_json(j.at("masker")); });
    c.masker.gamma = c.gamma;
    c.masker.alpha = c.alpha;
    c.masker.weights = c.lambdas;
    guarded([&] { c.masker.validate(); return 0; });
    if (j.contains("generator")) c.generator = guarded([&] { return generator_config_from_json(j.at("generator")); });
    c.generator.weights = c.lambdas;
    guarded([&] { c.generator.validate(); return 0; });

    if (j.contains("checkpoints")) {
      const json& ck = j.at("checkpoints");
      only_keys(ck, {"hsn", "masker", "generator"}, "checkpoints");
      if (ck.contains("hsn")) c.hsn_checkpoint = existing(ck.at("hsn"), base, "checkpoints.hsn");
      if (ck.contains("masker")) c.masker_checkpoint = existing(ck.at("masker"), base, "checkpoints.masker");
      if (ck.contains("generator")) {
        c.generator_checkpoint = existing(ck.at("generator"), base, "checkpoints.generator");
      }
    }
    if (j.contains("loss_variants")) {
      for (const auto& v : j.at("loss_variants")) {
        only_keys(v, {"name", "lambdas"}, "loss_variants entry");
        parse_lambdas(v.value("lambdas", json::object()));
        c.loss_variants.push_back(v);
      }
    }
    if (j.contains("theorem")) {
      const json& t = j.at("theorem");
      only_keys(t, {"instances", "min_n", "max_n"}, "theorem");
      c.theorem.instances = t.value("instances", c.theorem.instances);
      c.theorem.min_n = t.value("min_n", c.theorem.min_n);
      c.theorem.max_n = t.value("max_n", c.theorem.max_n);
      if (c.theorem.instances < 1 || c.theorem.min_n < 1 || c.theorem.min_n > c.theorem.max_n ||
          static_cast<std::size_t>(c.theorem.max_n) > kMaxExhaustiveOrder) {
        bad("theorem needs instances >= 1 and 1 <= min_n <= max_n <= " + std::to_string(kMaxExhaustiveOrder));
      }
    }
    const std::string ext = j.value("lpips_extractor", std::string("randconv"));
    if (ext == "randconv") {
      c.lpips_extractor = ExtractorKind::kRandomConv;
    } else if (ext == "identity") {
      c.lpips_extractor = ExtractorKind::kIdentity;
    } else {
      bad("lpips_extractor must be randconv or identity", ext);
    }
    c.save_images = j.value("save_images", c.save_images);
  } catch (const json::exception& e) {
    bad(std::string("config value has the wrong type: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  if (!fs::exists(file)) fail(ErrorCode::kMissingFile, "config file does not exist", file.string());
  json j;
  try {
    j = read_json_file(file);
  } catch (const Error& e) {
    bad(e.what(), e.context());
  }
  return parse_config(j, fs::absolute(file).parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  json manips = json::array();
  for (const auto& m : c.manipulations) manips.push_back(m.label());
  json strategies = json::array();
  for (auto k : c.strategy_sweep) strategies.push_back(to_string(k));
  json orders = json::array();
  for (auto o : c.order_sweep) orders.push_back(to_string(o));
  json wm = {{"scheme", c.watermark.band == WatermarkBand::kHighFrequency ? "ss" : "ring"},
             {"seed", c.watermark.seed},
             {"bits", c.watermark.bits},
             {"strength", c.watermark.strength},
             {"ring_radii", c.watermark.ring_radii},
             {"ring_floor", c.watermark.ring_floor},
             {"ring_pattern_scale", c.watermark.ring_pattern_scale}};
  if (c.watermark.key_path) wm["key"] = c.watermark.key_path->string();
  json masker = to_json(c.masker);
  masker.erase("gamma");
  masker.erase("alpha");
  masker.erase("weights");
  json generator = to_json(c.generator);
  generator.erase("weights");
  json hsn = to_json(c.hsn);
  json j = {{"dataset", dataset_json(c.dataset)},
            {"image_size", {c.image_width, c.image_height}},
            {"patch_size", c.patch_size},
            {"strategy", to_string(c.strategy.kind)},
            {"beta", c.strategy.beta},
            {"beta_sweep", c.beta_sweep},
            {"strategy_sweep", strategies},
            {"gamma", c.gamma},
            {"alpha", c.alpha},
            {"lambdas",
             {{"area", c.lambdas.area},
              {"frequency", c.lambdas.frequency},
              {"semantic", c.lambdas.semantic},
              {"pixel", c.lambdas.pixel},
              {"perceptual", c.lambdas.perceptual}}},
            {"decode", to_json(c.decode)},
            {"order", to_string(c.order)},
            {"order_sweep", orders},
            {"max_hidden", c.max_hidden},
            {"threshold", c.threshold},
            {"watermark", wm},
            {"manipulations", manips},
            {"attack", to_string(c.attack)},
            {"seeds", c.seeds},
            {"fpr", c.fpr},
            {"output_dir", c.output_dir.string()},
            {"workers", c.workers},
            {"hsn", hsn},
            {"masker", masker},
            {"generator", generator},
            {"loss_variants", c.loss_variants},
            {"theorem", {{"instances", c.theorem.instances}, {"min_n", c.theorem.min_n}, {"max_n", c.theorem.max_n}}},
            {"lpips_extractor", c.lpips_extractor == ExtractorKind::kIdentity ? "identity" : "randconv"},
            {"save_images", c.save_images}};
  if (c.hidden_budget) j["hidden_budget"] = *c.hidden_budget;
  if (c.eval_dataset) j["eval_dataset"] = dataset_json(*c.eval_dataset);
  if (c.reference_dir) j["reference_dir"] = c.reference_dir->string();
  json ck = json::object();
  if (c.hsn_checkpoint) ck["hsn"] = c.hsn_checkpoint->string();
  if (c.masker_checkpoint) ck["masker"] = c.masker_checkpoint->string();
  if (c.generator_checkpoint) ck["generator"] = c.generator_checkpoint->string();
  if (!ck.empty()) j["checkpoints"] = ck;
  return j;
}

void apply_environment(ExperimentConfig& c) {
  if (const char* dir = std::getenv("HIDESEEK_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
  if (const char* w = std::getenv("HIDESEEK_WORKERS"); w && *w) {
    char* end = nullptr;
    const long n = std::strtol(w, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) bad("HIDESEEK_WORKERS must be a positive integer", w);
    c.workers = static_cast<int>(n);
  }
}

}  // namespace hideseek::cli
