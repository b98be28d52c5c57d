#include "hideseek_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "hideseek/checkpoint.hpp"
#include "hideseek/dataset.hpp"
#include "hideseek/order_empirical.hpp"
#include "hideseek/order_theory.hpp"
#include "hideseek/parallel.hpp"
#include "hideseek/rng.hpp"

namespace hideseek::cli {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_config_command(std::string_view name) {
  return std::find(std::begin(kConfigCommands), std::end(kConfigCommands), name) != std::end(kConfigCommands);
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, "cannot read file for hashing", path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return hex64(h);
}

namespace {

// Directory hash: names and content hashes of the regular files, sorted.
std::string directory_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    for (char ch : f.filename().string() + "=" + file_hash(f) + ";") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  return hex64(h);
}

std::uint64_t image_seed(std::uint64_t seed, std::size_t index) { return splitmix64(seed ^ splitmix64(index + 1)); }

std::string file_safe(std::string s) {
  for (char& ch : s) {
    if (ch == ':' || ch == '/' || ch == ' ') ch = '_';
  }
  return s;
}

std::string num(double v) { return format_metric(v); }
std::string num(std::optional<double> v) { return format_metric(v); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write file", path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed", path.string());
}

}  // namespace

RunContext::RunContext(std::string command, ExperimentConfig config)
    : command_(std::move(command)), config_(std::move(config)) {
  std::error_code ec;
  fs::create_directories(config_.output_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory", config_.output_dir.string());
}

fs::path RunContext::path(const std::string& relative) const { return config_.output_dir / relative; }

fs::path RunContext::prepare(const std::string& relative) const {
  const fs::path p = path(relative);
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory", p.parent_path().string());
  return p;
}

void RunContext::record(const std::string& relative) { outputs_[relative] = file_hash(path(relative)); }

void RunContext::record_input(const std::string& role, const fs::path& p) {
  inputs_[role] = {{"path", p.string()}, {"hash", fs::is_directory(p) ? directory_hash(p) : file_hash(p)}};
}

fs::path RunContext::finish() {
  const json manifest = {{"manifest_version", kManifestVersion},
                         {"tool_version", kToolVersion},
                         {"command", command_},
                         {"config", to_json(config_)},
                         {"seeds", config_.seeds},
                         {"inputs", inputs_},
                         {"outputs", outputs_},
                         {"summary", summary_}};
  const fs::path p = path("manifest.json");
  write_json_file(p, manifest);
  return p;
}

Aggregate aggregate(std::span<const MetricReport> reports) {
  Aggregate a;
  a.images = reports.size();
  if (reports.empty()) return a;
  std::vector<double> psnrs;
  double ba = 0.0, id = 0.0, det = 0.0;
  std::size_t n_ba = 0, n_id = 0;
  for (const auto& r : reports) {
    psnrs.push_back(r.psnr);
    a.ssim += r.ssim;
    a.lpips += r.lpips;
    if (r.bit_accuracy) ba += *r.bit_accuracy, ++n_ba;
    if (r.inverse_distance) id += *r.inverse_distance, ++n_id;
    det += r.detected ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(reports.size());
  a.psnr = mean_psnr(psnrs);
  a.ssim /= n;
  a.lpips /= n;
  if (n_ba) a.bit_accuracy = ba / static_cast<double>(n_ba);
  if (n_id) a.inverse_distance = id / static_cast<double>(n_id);
  a.detection_rate = det / n;
  return a;
}

namespace {

constexpr const char* kAggregateColumns = "images,psnr,ssim,lpips,bit_acc,inv_dist,detect_rate";

std::string aggregate_fields(const Aggregate& a) {
  return std::to_string(a.images) + "," + num(a.psnr) + "," + num(a.ssim) + "," + num(a.lpips) + "," +
         num(a.bit_accuracy) + "," + num(a.inverse_distance) + "," + num(a.detection_rate);
}

class Command {
 public:
  Command(RunContext& ctx, std::ostream& out) : ctx_(ctx), cfg_(ctx.config()), out_(out) {}

  void run(std::string_view name) {
    if (name == "train-hsn") return train_hsn_cmd();
    if (name == "train-masker") return train_masker_cmd();
    if (name == "train-generator") return train_generator_cmd();
    if (name == "embed") return embed_cmd();
    if (name == "attack") return attack_cmd();
    if (name == "evaluate") return evaluate_cmd();
    if (name == "ablate-masking") return ablate_masking_cmd();
    if (name == "ablate-losses") return ablate_losses_cmd();
    if (name == "ablate-order") return ablate_order_cmd();
    if (name == "verify-theorem") return verify_theorem_cmd();
    if (name == "synth") return synth_cmd();
    fail(ErrorCode::kInvalidConfig, "unknown command", std::string(name));
  }

 private:
  RunContext& ctx_;
  const ExperimentConfig& cfg_;
  std::ostream& out_;

  // ---- inputs ---------------------------------------------------------

  std::vector<NamedImage> load(const DatasetSpec& spec, const std::string& role) {
    std::vector<NamedImage> images;
    if (spec.path) {
      images = load_dataset(*spec.path, ValueDomain::kU8);
      ctx_.record_input(role, *spec.path);
    } else {
      images = synthetic_dataset(spec.synthetic_count, spec.synthetic, spec.synthetic_seed);
      for (auto& n : images) n.image = n.image.to_u8();
    }
    if (images.empty()) fail(ErrorCode::kEmptyInput, "dataset has no images", role);
    for (const auto& n : images) {
      if (n.image.width() != cfg_.image_width || n.image.height() != cfg_.image_height) {
        fail(ErrorCode::kInvalidConfig, "image size differs from the configured image_size",
             n.id + ": " + std::to_string(n.image.width()) + "x" + std::to_string(n.image.height()));
      }
    }
    return images;
  }

  std::vector<NamedImage> targets() {
    return cfg_.eval_dataset ? load(*cfg_.eval_dataset, "eval_dataset") : load(cfg_.dataset, "dataset");
  }

  WatermarkKey key() {
    const auto& w = cfg_.watermark;
    WatermarkKey k;
    if (w.key_path) {
      k = key_from_json(read_json_file(*w.key_path));
      ctx_.record_input("watermark_key", *w.key_path);
      if (k.width != cfg_.image_width || k.height != cfg_.image_height) {
        fail(ErrorCode::kInvalidConfig, "watermark key was made for another image size", w.key_path->string());
      }
    } else if (w.band == WatermarkBand::kHighFrequency) {
      k = make_spread_spectrum_key(cfg_.image_width, cfg_.image_height, w.seed, w.bits, w.strength);
    } else {
      k = make_ring_key(cfg_.image_width, cfg_.image_height, w.seed, w.ring_radii, w.ring_floor,
                        w.ring_pattern_scale);
    }
    write_json_file(ctx_.prepare("key.json"), key_to_json(k));
    ctx_.record("key.json");
    return k;
  }

  // Images carrying the watermark: inputs as-is when a key file is given,
  // freshly embedded otherwise.
  std::vector<NamedImage> watermarked(const std::vector<NamedImage>& images, const WatermarkKey& k) {
    if (cfg_.watermark.key_path) return images;
    std::vector<NamedImage> out(images.size());
    parallel_for(images.size(), cfg_.workers,
                 [&](std::size_t i) { out[i] = {images[i].id, embed_watermark(images[i].image, k)}; });
    return out;
  }

  const fs::path& checkpoint(const std::optional<fs::path>& p, const char* what) {
    if (!p) fail(ErrorCode::kInvalidConfig, std::string("this command needs checkpoints.") + what);
    ctx_.record_input(std::string("checkpoint_") + what, *p);
    return *p;
  }

  std::unique_ptr<PerceptualExtractor> extractor(int channels) const {
    return make_extractor(cfg_.lpips_extractor, channels);
  }

  HsPlusOptions hsplus_options() const {
    HsPlusOptions o;
    o.gamma = cfg_.gamma;
    o.threshold = cfg_.threshold;
    o.order = cfg_.order;
    o.max_hidden = cfg_.max_hidden;
    o.hidden_budget = cfg_.hidden_budget;
    return o;
  }

  // ---- outputs --------------------------------------------------------

  void write_reports(const std::string& rel, std::span<const MetricReport> reports) {
    std::string text = std::string(kMetricCsvHeader) + "\n";
    for (const auto& r : reports) text += to_csv_row(r) + "\n";
    write_text(ctx_.prepare(rel), text);
    ctx_.record(rel);
  }

  void write_csv(const std::string& rel, const std::string& header, const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write_text(ctx_.prepare(rel), text);
    ctx_.record(rel);
  }

  void save_images(const std::string& dir, const std::vector<NamedImage>& images) {
    if (!cfg_.save_images) return;
    for (const auto& n : images) {
      const std::string rel = dir + "/" + n.id + ".png";
      save_image(ctx_.prepare(rel), n.image.to_u8());
      ctx_.record(rel);
    }
  }

  EpochCallback progress(std::vector<std::string>& rows) {
    return [this, &rows](int epoch, double loss) {
      rows.push_back(std::to_string(epoch) + "," + num(loss));
      out_ << "epoch " << epoch << " loss " << num(loss) << "\n" << std::flush;
    };
  }

  // ---- training -------------------------------------------------------

  void train_hsn_cmd() {
    const auto data = images_of(load(cfg_.dataset, "dataset"));
    Rng rng(cfg_.seeds.front());
    std::vector<std::string> rows;
    MaskedAutoencoder model = train_hsn(data, cfg_.hsn, rng, progress(rows));
    save_hsn(ctx_.prepare("hsn.ckpt.json"), model);
    ctx_.record("hsn.ckpt.json");
    write_csv("training_loss.csv", "epoch,loss", rows);
    ctx_.set_summary({{"epochs", model.epochs}, {"final_loss", model.loss_history.back()}});
    out_ << "trained hsn for " << model.epochs << " epochs, final loss " << num(model.loss_history.back()) << "\n";
  }

  void train_masker_cmd() {
    const auto data = images_of(load(cfg_.dataset, "dataset"));
    Rng rng(cfg_.seeds.front());
    std::vector<std::string> rows;
    ConvMasker model = train_masker(data, cfg_.masker, rng, progress(rows));
    save_masker(ctx_.prepare("masker.ckpt.json"), model, cfg_.image_width, cfg_.image_height);
    ctx_.record("masker.ckpt.json");
    write_csv("training_loss.csv", "epoch,loss", rows);
    ctx_.set_summary({{"epochs", model.epochs}, {"final_loss", model.loss_history.back()}});
    out_ << "trained masker for " << model.epochs << " epochs, final loss " << num(model.loss_history.back())
         << "\n";
  }

  void train_generator_cmd() {
    const auto data = images_of(load(cfg_.dataset, "dataset"));
    Rng rng(cfg_.seeds.front());
    std::vector<std::string> rows;
    MlpPixelGenerator model = train_generator(data, cfg_.generator, rng, progress(rows));
    save_generator(ctx_.prepare("generator.ckpt.json"), model, cfg_.image_width, cfg_.image_height);
    ctx_.record("generator.ckpt.json");
    write_csv("training_loss.csv", "epoch,loss", rows);
    ctx_.set_summary({{"epochs", model.epochs}, {"final_loss", model.loss_history.back()}});
    out_ << "trained generator for " << model.epochs << " epochs, final loss "
         << num(model.loss_history.back()) << "\n";
  }

  // ---- embedding and evaluation ---------------------------------------

  void embed_cmd() {
    const auto images = load(cfg_.dataset, "dataset");
    const WatermarkKey k = key();
    const auto ext = extractor(images.front().image.channels());
    std::vector<NamedImage> marked(images.size());
    std::vector<MetricReport> reports(images.size());
    parallel_for(images.size(), cfg_.workers, [&](std::size_t i) {
      marked[i] = {images[i].id, embed_watermark(images[i].image, k)};
      reports[i] = evaluate_image(images[i].id, images[i].image, marked[i].image, k, *ext, cfg_.fpr);
    });
    save_images("watermarked", marked);
    write_reports("embed.csv", reports);
    const Aggregate a = aggregate(reports);
    write_csv("summary.csv", std::string("stage,") + kAggregateColumns, {"embed," + aggregate_fields(a)});
    ctx_.set_summary({{"images", a.images}, {"psnr", a.psnr}, {"detection_rate", a.detection_rate}});
    out_ << "embedded " << a.images << " images, mean psnr " << num(a.psnr) << ", detection rate "
         << num(a.detection_rate) << "\n";
  }

  void evaluate_cmd() {
    if (!cfg_.reference_dir) fail(ErrorCode::kInvalidConfig, "evaluate needs reference_dir");
    if (!cfg_.eval_dataset || !cfg_.eval_dataset->path) {
      fail(ErrorCode::kInvalidConfig, "evaluate needs eval_dataset as a directory");
    }
    const auto candidates = load(*cfg_.eval_dataset, "eval_dataset");
    const auto references = load_dataset(*cfg_.reference_dir, ValueDomain::kU8);
    ctx_.record_input("reference_dir", *cfg_.reference_dir);
    std::map<std::string, const ImageTensor*> by_id;
    for (const auto& r : references) by_id[r.id] = &r.image;
    for (const auto& c : candidates) {
      if (!by_id.contains(c.id)) fail(ErrorCode::kMissingFile, "no reference image for candidate", c.id);
    }
    const WatermarkKey k = key();
    const auto ext = extractor(candidates.front().image.channels());
    std::vector<MetricReport> reports(candidates.size());
    parallel_for(candidates.size(), cfg_.workers, [&](std::size_t i) {
      reports[i] = evaluate_image(candidates[i].id, *by_id.at(candidates[i].id), candidates[i].image, k, *ext,
                                  cfg_.fpr);
    });
    write_reports("evaluate.csv", reports);
    const Aggregate a = aggregate(reports);
    write_csv("summary.csv", std::string("stage,") + kAggregateColumns, {"evaluate," + aggregate_fields(a)});
    ctx_.set_summary({{"images", a.images}, {"psnr", a.psnr}, {"detection_rate", a.detection_rate}});
    out_ << "evaluated " << a.images << " images, mean psnr " << num(a.psnr) << ", detection rate "
         << num(a.detection_rate) << "\n";
  }

  // ---- attacks --------------------------------------------------------

  struct Group {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<NamedImage> purged;
    std::vector<MetricReport> reports;
  };

  std::vector<MetricReport> score(const std::vector<NamedImage>& reference, const std::vector<NamedImage>& purged,
                                  const WatermarkKey& k, const PerceptualExtractor& ext) {
    std::vector<MetricReport> reports(purged.size());
    parallel_for(purged.size(), cfg_.workers, [&](std::size_t i) {
      reports[i] = evaluate_image(purged[i].id, reference[i].image, purged[i].image, k, ext, cfg_.fpr);
    });
    return reports;
  }

  void attack_cmd() {
    const WatermarkKey k = key();
    const auto marked = watermarked(targets(), k);
    const auto ext = extractor(marked.front().image.channels());
    const std::vector<MetricReport> baseline = score(marked, marked, k, *ext);
    std::vector<Group> groups;

    switch (cfg_.attack) {
      case AttackMethod::kNone:
        for (auto seed : cfg_.seeds) groups.push_back({"none", seed, marked, {}});
        break;
      case AttackMethod::kManipulation:
        if (cfg_.manipulations.empty()) fail(ErrorCode::kInvalidConfig, "manipulation attack needs manipulations");
        for (const auto& m : cfg_.manipulations) {
          Group g{m.label(), 0, std::vector<NamedImage>(marked.size()), {}};
          parallel_for(marked.size(), cfg_.workers,
                       [&](std::size_t i) { g.purged[i] = {marked[i].id, manipulate(marked[i].image, m)}; });
          groups.push_back(std::move(g));
        }
        break;
      case AttackMethod::kHsn: {
        const MaskedAutoencoder model = load_hsn(checkpoint(cfg_.hsn_checkpoint, "hsn"));
        for (auto seed : cfg_.seeds) {
          Group g{"hsn", seed, std::vector<NamedImage>(marked.size()), {}};
          parallel_for(marked.size(), cfg_.workers, [&](std::size_t i) {
            Rng rng(image_seed(seed, i));
            g.purged[i] = {marked[i].id, attack_hsn(model, marked[i].image, cfg_.strategy, rng)};
          });
          groups.push_back(std::move(g));
        }
        break;
      }
      case AttackMethod::kHsPlus: {
        const ConvMasker masker = load_masker(checkpoint(cfg_.masker_checkpoint, "masker"));
        const MlpPixelGenerator generator = load_generator(checkpoint(cfg_.generator_checkpoint, "generator"));
        for (auto seed : cfg_.seeds) {
          Group g{"hsplus", seed, std::vector<NamedImage>(marked.size()), {}};
          std::vector<AttackReport> reports(marked.size());
          parallel_for(marked.size(), cfg_.workers, [&](std::size_t i) {
            HsPlusOptions o = hsplus_options();
            o.order_seed = image_seed(seed, i);
            DecodeMode mode = cfg_.decode;
            mode.seed = splitmix64(cfg_.decode.seed ^ image_seed(seed, i));
            HsPlusAttackResult r = attack_hsplus_detailed(masker, generator, marked[i].image, o, mode);
            g.purged[i] = {marked[i].id, std::move(r.purged)};
            reports[i] = std::move(r.report);
          });
          std::string lines;
          for (std::size_t i = 0; i < reports.size(); ++i) {
            json j = to_json(reports[i]);
            j["image_id"] = marked[i].id;
            lines += j.dump() + "\n";
          }
          const std::string rel = "attack_reports_seed" + std::to_string(seed) + ".jsonl";
          write_text(ctx_.prepare(rel), lines);
          ctx_.record(rel);
          groups.push_back(std::move(g));
        }
        break;
      }
    }

    std::vector<std::string> rows = {"none,," + aggregate_fields(aggregate(baseline))};
    write_reports("per_image_unattacked.csv", baseline);
    json summary = {{"baseline_detection_rate", aggregate(baseline).detection_rate}, {"groups", json::array()}};
    for (auto& g : groups) {
      g.reports = score(marked, g.purged, k, *ext);
      const bool seeded = cfg_.attack == AttackMethod::kHsn || cfg_.attack == AttackMethod::kHsPlus ||
                          cfg_.attack == AttackMethod::kNone;
      const std::string tag = file_safe(g.label) + (seeded ? "_seed" + std::to_string(g.seed) : "");
      write_reports("per_image_" + tag + ".csv", g.reports);
      save_images("purged/" + tag, g.purged);
      const Aggregate a = aggregate(g.reports);
      rows.push_back(g.label + "," + (seeded ? std::to_string(g.seed) : "") + "," + aggregate_fields(a));
      summary["groups"].push_back({{"label", g.label}, {"seed", g.seed}, {"psnr", a.psnr},
                                   {"detection_rate", a.detection_rate}});
      out_ << g.label << (seeded ? " seed " + std::to_string(g.seed) : "") << ": psnr " << num(a.psnr)
           << ", detection rate " << num(aggregate(baseline).detection_rate) << " -> " << num(a.detection_rate)
           << "\n";
    }
    write_csv("summary.csv", std::string("attack,seed,") + kAggregateColumns, rows);
    ctx_.set_summary(summary);
  }

  // ---- ablations ------------------------------------------------------

  void ablate_masking_cmd() {
    const MaskedAutoencoder model = load_hsn(checkpoint(cfg_.hsn_checkpoint, "hsn"));
    const WatermarkKey k = key();
    const auto marked = watermarked(targets(), k);
    const auto ext = extractor(marked.front().image.channels());
    const PatchGrid grid(cfg_.image_width, cfg_.image_height, cfg_.patch_size);
    const double scattered_cap = static_cast<double>(max_independent_cells(grid)) / grid.cell_count();

    std::vector<std::string> rows;
    for (MaskKind kind : cfg_.strategy_sweep) {
      for (double beta : cfg_.beta_sweep) {
        MaskStrategy strategy{kind, beta};
        if (kind == MaskKind::kScattered) strategy.beta = std::min(beta, scattered_cap);
        std::vector<MetricReport> all;
        for (auto seed : cfg_.seeds) {
          std::vector<NamedImage> purged(marked.size());
          parallel_for(marked.size(), cfg_.workers, [&](std::size_t i) {
            Rng rng(image_seed(seed, i));
            purged[i] = {marked[i].id, attack_hsn(model, marked[i].image, strategy, rng)};
          });
          auto reports = score(marked, purged, k, *ext);
          write_reports("per_image/" + std::string(to_string(kind)) + "_" + num(beta) + "_seed" +
                            std::to_string(seed) + ".csv",
                        reports);
          all.insert(all.end(), reports.begin(), reports.end());
        }
        const Aggregate a = aggregate(all);
        rows.push_back(std::string(to_string(kind)) + "," + num(beta) + "," + num(strategy.beta) + "," +
                       num(a.psnr) + "," + num(a.ssim) + "," + num(a.lpips) + "," + num(a.bit_accuracy) + "," +
                       num(a.detection_rate));
        out_ << to_string(kind) << " beta " << num(beta) << ": psnr " << num(a.psnr) << ", detection rate "
             << num(a.detection_rate) << "\n";
      }
    }
    write_csv("ablate_masking.csv", "strategy,beta,effective_beta,psnr,ssim,lpips,bit_acc,detect", rows);
    ctx_.set_summary({{"rows", rows.size()}});
  }

  static std::vector<json> default_loss_variants() {
    return {{{"name", "full"}, {"lambdas", json::object()}},
            {{"name", "no_frequency"}, {"lambdas", {{"frequency", 0.0}}}},
            {{"name", "no_semantic"}, {"lambdas", {{"semantic", 0.0}}}},
            {{"name", "no_perceptual"}, {"lambdas", {{"perceptual", 0.0}}}}};
  }

  void ablate_losses_cmd() {
    const auto train = images_of(load(cfg_.dataset, "dataset"));
    const WatermarkKey k = key();
    const auto marked = watermarked(targets(), k);
    const auto ext = extractor(marked.front().image.channels());
    const auto variants = cfg_.loss_variants.empty() ? default_loss_variants() : cfg_.loss_variants;

    // Maskers depend only on lambda 1-3 and generators only on lambda 4-5, so
    // each distinct triple or pair is trained once.
    std::map<std::vector<double>, std::unique_ptr<ConvMasker>> maskers;
    std::map<std::vector<double>, std::unique_ptr<MlpPixelGenerator>> generators;
    std::vector<std::string> rows;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const json& v = variants[vi];
      const std::string name = v.value("name", "variant" + std::to_string(vi));
      LossWeights w = cfg_.lambdas;
      const json& l = v.value("lambdas", json::object());
      w.area = l.value("area", w.area);
      w.frequency = l.value("frequency", w.frequency);
      w.semantic = l.value("semantic", w.semantic);
      w.pixel = l.value("pixel", w.pixel);
      w.perceptual = l.value("perceptual", w.perceptual);

      const std::vector<double> mkey = {w.area, w.frequency, w.semantic};
      if (!maskers.contains(mkey)) {
        MaskerConfig mc = cfg_.masker;
        mc.weights = w;
        Rng rng(cfg_.seeds.front());
        out_ << "training masker for " << name << "\n";
        maskers[mkey] = std::make_unique<ConvMasker>(train_masker(train, mc, rng));
      }
      const std::vector<double> gkey = {w.pixel, w.perceptual};
      if (!generators.contains(gkey)) {
        GeneratorConfig gc = cfg_.generator;
        gc.weights = w;
        Rng rng(cfg_.seeds.front());
        out_ << "training generator for " << name << "\n";
        generators[gkey] = std::make_unique<MlpPixelGenerator>(train_generator(train, gc, rng));
      }
      const ConvMasker& masker = *maskers[mkey];
      const MlpPixelGenerator& generator = *generators[gkey];

      std::vector<MetricReport> all;
      for (auto seed : cfg_.seeds) {
        std::vector<NamedImage> purged(marked.size());
        parallel_for(marked.size(), cfg_.workers, [&](std::size_t i) {
          HsPlusOptions o = hsplus_options();
          o.order_seed = image_seed(seed, i);
          DecodeMode mode = cfg_.decode;
          mode.seed = splitmix64(cfg_.decode.seed ^ image_seed(seed, i));
          purged[i] = {marked[i].id, attack_hsplus_detailed(masker, generator, marked[i].image, o, mode).purged};
        });
        auto reports = score(marked, purged, k, *ext);
        write_reports("per_image/" + file_safe(name) + "_seed" + std::to_string(seed) + ".csv", reports);
        all.insert(all.end(), reports.begin(), reports.end());
      }
      const Aggregate a = aggregate(all);
      rows.push_back(name + "," + num(w.area) + "," + num(w.frequency) + "," + num(w.semantic) + "," +
                     num(w.pixel) + "," + num(w.perceptual) + "," + num(a.psnr) + "," + num(a.ssim) + "," +
                     num(a.lpips) + "," + num(a.bit_accuracy) + "," + num(a.detection_rate));
      out_ << name << ": psnr " << num(a.psnr) << ", detection rate " << num(a.detection_rate) << "\n";
    }
    write_csv("ablate_losses.csv",
              "variant,lambda_area,lambda_frequency,lambda_semantic,lambda_pixel,lambda_perceptual,psnr,ssim,lpips,"
              "bit_acc,detect",
              rows);
    ctx_.set_summary({{"rows", rows.size()}});
  }

  void ablate_order_cmd() {
    const ConvMasker masker = load_masker(checkpoint(cfg_.masker_checkpoint, "masker"));
    const MlpPixelGenerator generator = load_generator(checkpoint(cfg_.generator_checkpoint, "generator"));
    const WatermarkKey k = key();
    const auto marked = watermarked(targets(), k);
    const auto ext = extractor(marked.front().image.channels());

    std::vector<std::vector<OrderSummaryRow>> per_seed;
    for (auto seed : cfg_.seeds) {
      OrderStudyOptions o;
      o.orders = cfg_.order_sweep;
      o.attack = hsplus_options();
      o.mode = cfg_.decode;
      o.seed = seed;
      o.fpr = cfg_.fpr;
      o.workers = cfg_.workers;
      const OrderStudy study = trace_orders(masker, generator, marked, k, *ext, o);
      const std::string s = "seed" + std::to_string(seed);
      write_traces_jsonl(ctx_.prepare("traces_" + s + ".jsonl"), study.traces);
      ctx_.record("traces_" + s + ".jsonl");
      write_order_summary_csv(ctx_.prepare("order_summary_" + s + ".csv"), study.summary);
      ctx_.record("order_summary_" + s + ".csv");
      for (std::size_t oi = 0; oi < o.orders.size(); ++oi) {
        std::vector<MetricReport> reports;
        for (std::size_t i = 0; i < marked.size(); ++i) reports.push_back(study.reports[i * o.orders.size() + oi]);
        write_reports("per_image/" + std::string(to_string(o.orders[oi])) + "_" + s + ".csv", reports);
      }
      per_seed.push_back(study.summary);
    }

    // Mean of the per-seed means.
    std::vector<OrderSummaryRow> mean = per_seed.front();
    for (std::size_t r = 0; r < mean.size(); ++r) {
      std::vector<double> psnrs;
      OrderSummaryRow m;
      m.order = mean[r].order;
      for (const auto& rows : per_seed) {
        const auto& x = rows[r];
        psnrs.push_back(x.psnr);
        m.images += x.images;
        m.ssim += x.ssim;
        m.lpips += x.lpips;
        m.bit_accuracy += x.bit_accuracy;
        m.detection_rate += x.detection_rate;
        m.ape += x.ape;
        m.apd += x.apd;
      }
      const double n = static_cast<double>(per_seed.size());
      m.psnr = mean_psnr(psnrs);
      m.ssim /= n;
      m.lpips /= n;
      m.bit_accuracy /= n;
      m.detection_rate /= n;
      m.ape /= n;
      m.apd /= n;
      mean[r] = m;
      out_ << to_string(m.order) << ": psnr " << num(m.psnr) << ", detection rate " << num(m.detection_rate)
           << ", ape " << num(m.ape) << ", apd " << num(m.apd) << "\n";
    }
    write_order_summary_csv(ctx_.prepare("order_summary.csv"), mean);
    ctx_.record("order_summary.csv");
    json summary = json::array();
    for (const auto& m : mean) {
      summary.push_back({{"order", to_string(m.order)}, {"psnr", m.psnr}, {"detection_rate", m.detection_rate}});
    }
    ctx_.set_summary({{"orders", summary}});
  }

  void verify_theorem_cmd() {
    const auto& t = cfg_.theorem;
    Rng rng(cfg_.seeds.front());
    std::vector<std::string> rows;
    int holds = 0;
    for (int i = 0; i < t.instances; ++i) {
      const auto n = static_cast<std::size_t>(t.min_n) + rng.index(static_cast<std::size_t>(t.max_n - t.min_n + 1));
      const OrderVerdict v = verify_order_theorem(OrderInstance::random(n, rng));
      holds += v.holds ? 1 : 0;
      std::ostringstream row;
      row.precision(17);
      row << i << "," << n << "," << v.identity_apd << "," << v.max_apd << "," << v.min_apd << ","
          << (v.holds ? 1 : 0);
      rows.push_back(row.str());
    }
    write_csv("theorem.csv", "instance,n,identity_apd,max_apd,min_apd,holds", rows);
    const std::string verdict = "holds: " + std::to_string(holds) + "/" + std::to_string(t.instances);
    ctx_.set_summary({{"holds", holds}, {"instances", t.instances}});
    out_ << verdict << "\n";
    if (holds != t.instances) {
      ctx_.finish();
      fail(ErrorCode::kInfeasible, "the ascending order was beaten on some instance", verdict);
    }
  }

  void synth_cmd() {
    const auto images = load(cfg_.dataset, "dataset");
    save_dataset(ctx_.prepare("images/manifest.txt").parent_path(), images);
    for (const auto& e : fs::directory_iterator(ctx_.path("images"))) {
      ctx_.record("images/" + e.path().filename().string());
    }
    ctx_.set_summary({{"images", images.size()}});
    out_ << "wrote " << images.size() << " images to " << ctx_.path("images").string() << "\n";
  }
};

}  // namespace

fs::path run_command(std::string_view command, const ExperimentConfig& config, std::ostream& out) {
  if (!is_config_command(command)) fail(ErrorCode::kInvalidConfig, "unknown command", std::string(command));
  RunContext ctx(std::string(command), config);
  Command(ctx, out).run(command);
  return ctx.finish();
}

ReplayOutcome replay(const fs::path& manifest, const std::optional<fs::path>& output_dir, std::ostream& out) {
  if (!fs::exists(manifest)) fail(ErrorCode::kMissingFile, "manifest does not exist", manifest.string());
  json m;
  try {
    m = read_json_file(manifest);
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidConfig, e.what(), e.context());
  }
  if (!m.contains("command") || !m.contains("config") || m.value("manifest_version", 0) != kManifestVersion) {
    fail(ErrorCode::kInvalidConfig, "not a run manifest", manifest.string());
  }
  const std::string command = m.at("command").get<std::string>();
  ExperimentConfig cfg = parse_config(m.at("config"), fs::absolute(manifest).parent_path());
  apply_environment(cfg);
  cfg.output_dir = output_dir ? *output_dir : fs::path(cfg.output_dir.string() + "-replay");

  const json inputs = m.value("inputs", json::object());
  for (const auto& [role, input] : inputs.items()) {
    const fs::path p = input.at("path").get<std::string>();
    const std::string h = fs::is_directory(p) ? directory_hash(p) : file_hash(p);
    if (h != input.at("hash").get<std::string>()) {
      fail(ErrorCode::kModelMismatch, "input changed since the recorded run", role + ": " + p.string());
    }
  }

  ReplayOutcome outcome;
  outcome.manifest = run_command(command, cfg, out);
  const json replayed = read_json_file(outcome.manifest);
  for (const auto& [rel, hash] : m.at("outputs").items()) {
    if (!rel.ends_with(".csv")) continue;
    ++outcome.compared;
    const auto it = replayed.at("outputs").find(rel);
    if (it == replayed.at("outputs").end() || *it != hash) outcome.mismatched.push_back(rel);
  }
  return outcome;
}

json error_json(std::string_view code, std::string_view message, std::string_view context) {
  return {{"code", code}, {"message", message}, {"context", context}};
}

json error_json(const Error& e) { return error_json(to_string(e.code()), e.what(), e.context()); }

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::kInvalidConfig || e.code() == ErrorCode::kMissingFile ? 2 : 1;
}

}  // namespace hideseek::cli
