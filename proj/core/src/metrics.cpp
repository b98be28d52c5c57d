#include "hideseek/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hideseek/error.hpp"

namespace hideseek {

namespace {

void require_comparable(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "images differ in shape");
  if (a.domain() != b.domain()) fail(ErrorCode::kInvalidArgument, "images differ in value domain");
}

double peak_of(ValueDomain d) { return d == ValueDomain::kU8 ? 255.0 : 1.0; }

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_comparable(a, b);
  double mse = 0.0;
  const auto va = a.values(), vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) mse += (va[i] - vb[i]) * (va[i] - vb[i]);
  mse /= static_cast<double>(va.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 20.0 * std::log10(peak_of(a.domain()) / std::sqrt(mse));
}

SsimTerms ssim_terms(const ImageTensor& a, const ImageTensor& b, const SsimOptions& o) {
  require_comparable(a, b);
  const int win = o.window;
  if (win < 1 || a.width() < win || a.height() < win) {
    fail(ErrorCode::kInvalidArgument, "image smaller than the SSIM window");
  }
  const double peak = peak_of(a.domain());
  const double c1 = (o.k1 * peak) * (o.k1 * peak);
  const double c2 = (o.k2 * peak) * (o.k2 * peak);
  const double n = static_cast<double>(win) * win;

  SsimTerms sum;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y0 = 0; y0 + win <= a.height(); ++y0) {
      for (int x0 = 0; x0 + win <= a.width(); ++x0) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = y0; y < y0 + win; ++y)
          for (int x = x0; x < x0 + win; ++x) {
            const double va = a.at(c, x, y), vb = b.at(c, x, y);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        const double ma = sa / n, mb = sb / n;
        const double var_a = std::max(0.0, saa / n - ma * ma);
        const double var_b = std::max(0.0, sbb / n - mb * mb);
        const double cov = sab / n - ma * mb;
        const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
        sum.luminance += lum;
        sum.contrast_structure += cs;
        sum.ssim += lum * cs;
        ++count;
      }
    }
  }
  const double k = static_cast<double>(count);
  return {sum.ssim / k, sum.luminance / k, sum.contrast_structure / k};
}

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimOptions& options) {
  return ssim_terms(a, b, options).ssim;
}

double lpips(const ImageTensor& a, const ImageTensor& b, const PerceptualExtractor& extractor) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "images differ in shape");
  const auto la = extractor.layers(a.to_unit());
  const auto lb = extractor.layers(b.to_unit());
  double total = 0.0;
  for (std::size_t l = 0; l < la.size(); ++l) {
    const auto& fa = la[l];
    const auto& fb = lb[l];
    double layer = 0.0;
    for (int y = 0; y < fa.height; ++y) {
      for (int x = 0; x < fa.width; ++x) {
        double na = 0.0, nb = 0.0;
        for (int c = 0; c < fa.channels; ++c) {
          na += fa.at(c, y, x) * fa.at(c, y, x);
          nb += fb.at(c, y, x) * fb.at(c, y, x);
        }
        na = std::sqrt(na) + 1e-10;
        nb = std::sqrt(nb) + 1e-10;
        for (int c = 0; c < fa.channels; ++c) {
          const double d = fa.at(c, y, x) / na - fb.at(c, y, x) / nb;
          layer += d * d;
        }
      }
    }
    total += layer / (static_cast<double>(fa.height) * fa.width);
  }
  return total;
}

double bit_accuracy(std::span<const std::uint8_t> recovered, std::span<const std::uint8_t> reference) {
  if (recovered.size() != reference.size()) fail(ErrorCode::kShapeMismatch, "bit strings differ in length");
  if (reference.empty()) fail(ErrorCode::kEmptyInput, "empty bit string");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) matches += (recovered[i] != 0) == (reference[i] != 0);
  return static_cast<double>(matches) / static_cast<double>(reference.size());
}

InverseDistance inverse_distance(std::span<const double> extracted, std::span<const double> key, double threshold) {
  if (extracted.size() != key.size()) fail(ErrorCode::kShapeMismatch, "patterns differ in length");
  if (key.empty()) fail(ErrorCode::kEmptyInput, "empty pattern");
  double s = 0.0;
  for (std::size_t i = 0; i < key.size(); ++i) s += std::abs(extracted[i] - key[i]);
  const double d = s / static_cast<double>(key.size());
  return {d, d < threshold};
}

double binomial_upper_tail(int n, int k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  // Sum of C(n, j) / 2^n in log space; fine for the bit lengths used here.
  double tail = 0.0;
  for (int j = k; j <= n; ++j) {
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
    tail += std::exp(log_c - n * std::log(2.0));
  }
  return std::min(tail, 1.0);
}

DecisionThreshold decision_threshold(int n_bits, double fpr) {
  if (n_bits < 1) fail(ErrorCode::kInvalidArgument, "need at least one bit");
  if (!(fpr > 0.0 && fpr <= 1.0)) fail(ErrorCode::kInvalidArgument, "false-positive rate must lie in (0, 1]");
  for (int k = 0; k <= n_bits; ++k) {
    const double tail = binomial_upper_tail(n_bits, k);
    if (tail <= fpr) return {k, static_cast<double>(k) / n_bits, tail};
  }
  fail(ErrorCode::kInfeasible, "false-positive rate unattainable for this bit length",
       std::to_string(n_bits) + " bits, fpr " + std::to_string(fpr));
}

double detection_rate(std::span<const bool> decisions) {
  if (decisions.empty()) fail(ErrorCode::kEmptyInput, "no detection attempts");
  const auto hits = std::count(decisions.begin(), decisions.end(), true);
  return static_cast<double>(hits) / static_cast<double>(decisions.size());
}

double detection_rate(const std::vector<bool>& decisions) {
  if (decisions.empty()) fail(ErrorCode::kEmptyInput, "no detection attempts");
  const auto hits = std::count(decisions.begin(), decisions.end(), true);
  return static_cast<double>(hits) / static_cast<double>(decisions.size());
}

std::string format_metric(std::optional<double> v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

nlohmann::json to_json(const MetricReport& r) {
  auto num = [](std::optional<double> v) -> nlohmann::json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };
  return {{"image_id", r.image_id},
          {"psnr", num(r.psnr)},
          {"ssim", r.ssim},
          {"lpips", r.lpips},
          {"bit_acc", num(r.bit_accuracy)},
          {"inv_dist", num(r.inverse_distance)},
          {"detected", r.detected},
          {"domain", r.domain},
          {"extractor", r.extractor_id}};
}

std::string to_csv_row(const MetricReport& r) {
  return r.image_id + "," + format_metric(r.psnr) + "," + format_metric(r.ssim) + "," + format_metric(r.lpips) + "," +
         format_metric(r.bit_accuracy) + "," + format_metric(r.inverse_distance) + "," + (r.detected ? "1" : "0");
}

}  // namespace hideseek
