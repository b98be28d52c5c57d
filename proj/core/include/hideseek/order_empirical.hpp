#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hideseek/dataset.hpp"
#include "hideseek/features.hpp"
#include "hideseek/hsplus.hpp"
#include "hideseek/metrics.hpp"
#include "hideseek/watermark.hpp"

namespace hideseek {

struct OrderTraceStep {
  Cell position;
  double score = 0.0;
  std::vector<int> abs_error;  // per channel, in u8 levels

  /// l2 norm of the per-channel error.
  [[nodiscard]] double magnitude() const;
};

struct OrderTrace {
  std::string image_id;
  OrderVariant order = OrderVariant::kOriginal;
  std::string order_hash;
  std::vector<OrderTraceStep> steps;

  /// sqrt(sum of squared step magnitudes).
  [[nodiscard]] double ape() const;
  /// sum of alpha_i * magnitude_i with alpha_i = 1 - score_i, a monotone
  /// stand-in for the vulnerability weight.
  [[nodiscard]] double apd() const;
};

nlohmann::json to_json(const OrderTrace& t);

struct OrderSummaryRow {
  OrderVariant order = OrderVariant::kOriginal;
  std::size_t images = 0;
  double psnr = 0.0;  // mean over finite values
  double ssim = 0.0;
  double lpips = 0.0;
  double bit_accuracy = 0.0;
  double detection_rate = 0.0;
  double ape = 0.0;
  double apd = 0.0;
};

struct OrderStudyOptions {
  std::vector<OrderVariant> orders = {OrderVariant::kOriginal, OrderVariant::kInverse, OrderVariant::kRandom};
  HsPlusOptions attack;  // order fields are overridden per variant
  DecodeMode mode;       // its seed is mixed with the image index
  std::uint64_t seed = 0;
  double fpr = kDefaultDetectionFpr;
  int workers = 1;
};

struct OrderStudy {
  std::vector<OrderTrace> traces;  // image-major, then order
  std::vector<ImageTensor> purged;  // same indexing as traces
  std::vector<MetricReport> reports;  // same indexing as traces
  std::vector<OrderSummaryRow> summary;
};

/// Attacks every (watermarked) image once per order variant, with the mask
/// fixed per image and the same decode seed across variants, and measures
/// the realized per-step errors against the input.
OrderStudy trace_orders(const MaskingModel& masker, const PixelPredictor& generator,
                        const std::vector<NamedImage>& images, const WatermarkKey& key,
                        const PerceptualExtractor& extractor, const OrderStudyOptions& options);

void write_traces_jsonl(const std::filesystem::path& path, const std::vector<OrderTrace>& traces);

inline constexpr const char* kOrderSummaryCsvHeader = "order,psnr,ssim,lpips,bit_acc,detect,ape,apd";
void write_order_summary_csv(const std::filesystem::path& path, const std::vector<OrderSummaryRow>& rows);

}  // namespace hideseek
