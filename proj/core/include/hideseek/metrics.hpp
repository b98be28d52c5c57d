#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hideseek/features.hpp"
#include "hideseek/image.hpp"

namespace hideseek {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 20 log10(peak / sqrt(MSE)) over all channels and pixels; the peak is 255
/// for u8 images and 1 for unit_float. Both images must share a domain.
double psnr(const ImageTensor& a, const ImageTensor& b);

struct SsimOptions {
  int window = 8;    // square, uniform weights, stride 1
  double k1 = 0.01;
  double k2 = 0.03;
};

struct SsimTerms {
  double ssim = 0.0;
  double luminance = 0.0;       // mean of (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
  double contrast_structure = 0.0;  // mean of (2 cov + C2) / (var_a + var_b + C2)
};

/// Mean of the local SSIM map, averaged over channels.
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimOptions& options = {});
SsimTerms ssim_terms(const ImageTensor& a, const ImageTensor& b, const SsimOptions& options = {});

/// Sum over extractor layers of the spatial mean of the squared difference
/// between channel-normalised activations.
double lpips(const ImageTensor& a, const ImageTensor& b, const PerceptualExtractor& extractor);

using Bits = std::vector<std::uint8_t>;

double bit_accuracy(std::span<const std::uint8_t> recovered, std::span<const std::uint8_t> reference);

/// One over seventy-one, the conventional detection threshold.
inline constexpr double kInverseDistanceThreshold = 1.0 / 71.0;

struct InverseDistance {
  double distance = 0.0;  // mean |extracted - key|
  bool detected = false;  // distance < threshold (strict)
};

InverseDistance inverse_distance(std::span<const double> extracted, std::span<const double> key,
                                 double threshold = kInverseDistanceThreshold);

/// Upper tail P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(int n, int k);

struct DecisionThreshold {
  int min_matches = 0;        // k
  double min_accuracy = 0.0;  // k / n
  double tail = 1.0;          // P(X >= k)
};

/// Smallest k with P(X >= k) <= fpr under Binomial(n, 1/2); a bit-accuracy of
/// at least k / n declares the watermark present. Throws kInfeasible when no
/// k in 0..n qualifies.
DecisionThreshold decision_threshold(int n_bits, double fpr);

/// The suite-wide false-positive target for bit-string detection.
inline constexpr double kDefaultDetectionFpr = 1e-3;

double detection_rate(std::span<const bool> decisions);
double detection_rate(const std::vector<bool>& decisions);

/// Per-image evaluation record.
struct MetricReport {
  std::string image_id;
  double psnr = 0.0;
  double ssim = 0.0;
  double lpips = 0.0;
  std::optional<double> bit_accuracy;
  std::optional<double> inverse_distance;
  bool detected = false;
  std::string domain;        // value domain PSNR was computed in
  std::string extractor_id;  // LPIPS backend
};

nlohmann::json to_json(const MetricReport& r);

/// Fixed CSV column order shared by every table the CLI writes.
inline constexpr const char* kMetricCsvHeader = "image_id,psnr,ssim,lpips,bit_acc,inv_dist,detected";
std::string to_csv_row(const MetricReport& r);

/// Formats a double for reports: fixed 6 decimals, "inf" for +infinity and an
/// empty field for missing values.
std::string format_metric(std::optional<double> v);

}  // namespace hideseek
