#include "hideseek/order_empirical.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hideseek/error.hpp"
#include "hideseek/masking.hpp"
#include "hideseek/parallel.hpp"

namespace hideseek {

double OrderTraceStep::magnitude() const {
  double s = 0.0;
  for (int e : abs_error) s += static_cast<double>(e) * e;
  return std::sqrt(s);
}

double OrderTrace::ape() const {
  double s = 0.0;
  for (const auto& step : steps) {
    const double m = step.magnitude();
    s += m * m;
  }
  return std::sqrt(s);
}

double OrderTrace::apd() const {
  double s = 0.0;
  for (const auto& step : steps) s += (1.0 - step.score) * step.magnitude();
  return s;
}

nlohmann::json to_json(const OrderTrace& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"x", s.position.x}, {"y", s.position.y}, {"score", s.score}, {"abs_error", s.abs_error}});
  }
  return {{"image_id", t.image_id}, {"order", to_string(t.order)}, {"order_hash", t.order_hash},
          {"ape", t.ape()},         {"apd", t.apd()},                {"steps", std::move(steps)}};
}

OrderStudy trace_orders(const MaskingModel& masker, const PixelPredictor& generator,
                        const std::vector<NamedImage>& images, const WatermarkKey& key,
                        const PerceptualExtractor& extractor, const OrderStudyOptions& options) {
  if (images.empty()) fail(ErrorCode::kEmptyInput, "order study needs at least one image");
  if (options.orders.empty()) fail(ErrorCode::kInvalidArgument, "order study needs at least one order");
  const std::size_t n_orders = options.orders.size();
  const std::size_t total = images.size() * n_orders;

  OrderStudy study;
  study.traces.resize(total);
  study.purged.resize(total);
  study.reports.resize(total);

  parallel_for(images.size(), options.workers, [&](std::size_t i) {
    const ImageTensor& image = images[i].image;
    const std::uint64_t image_seed = splitmix64(options.seed ^ splitmix64(i + 1));
    // One hardened mask per image, shared by every order.
    const SoftMask soft = soft_mask(masker.logits(image), options.attack.gamma);
    Mask mask = harden(soft, options.attack.threshold);
    if (options.attack.hidden_budget) {
      RealMap scores(soft.width(), soft.height());
      scores.values = soft.values();
      mask = limit_hidden(mask, scores, *options.attack.hidden_budget);
    }
    DecodeMode mode = options.mode;
    mode.seed = splitmix64(mode.seed ^ image_seed);
    const ImageTensor reference = image.to_u8();

    for (std::size_t o = 0; o < n_orders; ++o) {
      HsPlusOptions attack = options.attack;
      attack.order = options.orders[o];
      attack.order_seed = image_seed;
      HsPlusAttackResult r = attack_hsplus_detailed(masker, generator, image, attack, mode, &mask);

      OrderTrace trace;
      trace.image_id = images[i].id;
      trace.order = attack.order;
      trace.order_hash = r.report.order_hash;
      for (const DecodeStep& s : r.steps) {
        OrderTraceStep t{s.position, s.score, {}};
        for (int c = 0; c < image.channels(); ++c) {
          const int truth = static_cast<int>(reference.at(c, s.position.x, s.position.y));
          t.abs_error.push_back(std::abs(s.levels[static_cast<std::size_t>(c)] - truth));
        }
        trace.steps.push_back(std::move(t));
      }
      const std::size_t slot = i * n_orders + o;
      study.reports[slot] = evaluate_image(images[i].id, image, r.purged, key, extractor, options.fpr);
      study.traces[slot] = std::move(trace);
      study.purged[slot] = std::move(r.purged);
    }
  });

  for (std::size_t o = 0; o < n_orders; ++o) {
    OrderSummaryRow row;
    row.order = options.orders[o];
    row.images = images.size();
    std::vector<double> psnrs;
    std::vector<bool> detected;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const std::size_t slot = i * n_orders + o;
      const MetricReport& m = study.reports[slot];
      psnrs.push_back(m.psnr);
      row.ssim += m.ssim;
      row.lpips += m.lpips;
      row.bit_accuracy += m.bit_accuracy.value_or(0.0);
      detected.push_back(m.detected);
      row.ape += study.traces[slot].ape();
      row.apd += study.traces[slot].apd();
    }
    const double n = static_cast<double>(images.size());
    row.psnr = mean_psnr(psnrs);
    row.ssim /= n;
    row.lpips /= n;
    row.bit_accuracy /= n;
    row.detection_rate = detection_rate(detected);
    row.ape /= n;
    row.apd /= n;
    study.summary.push_back(row);
  }
  return study;
}

void write_traces_jsonl(const std::filesystem::path& path, const std::vector<OrderTrace>& traces) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write trace file", path.string());
  for (const auto& t : traces) out << to_json(t).dump() << '\n';
}

void write_order_summary_csv(const std::filesystem::path& path, const std::vector<OrderSummaryRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write summary file", path.string());
  out << kOrderSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.order) << ',' << format_metric(r.psnr) << ',' << format_metric(r.ssim) << ','
        << format_metric(r.lpips) << ',' << format_metric(r.bit_accuracy) << ',' << format_metric(r.detection_rate)
        << ',' << format_metric(r.ape) << ',' << format_metric(r.apd) << '\n';
  }
}

}  // namespace hideseek
