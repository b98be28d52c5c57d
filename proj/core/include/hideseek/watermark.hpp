#pragma once

#include <cstdint>
#include <optional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hideseek/features.hpp"
#include "hideseek/image.hpp"
#include "hideseek/metrics.hpp"

namespace hideseek {

enum class WatermarkBand {
  kHighFrequency,     // spread-spectrum bit string on outer-band carriers
  kLowFrequencyRing,  // key phase pattern on inner concentric rings
};

std::string_view to_string(WatermarkBand band);

/// Spectral bin given by its signed frequency pair; (u, v) and (-u, -v) are a
/// conjugate pair and only one representative is stored.
struct FrequencyBin {
  int u = 0;
  int v = 0;
  friend bool operator==(const FrequencyBin&, const FrequencyBin&) = default;
};

inline constexpr double kDefaultSpreadSpectrumStrength = 3.0;
inline constexpr double kDefaultRingModulusFloor = 24.0;
/// Scale applied to the (cos, sin) phase pattern before the inverse-distance
/// comparison; places the 1/71 threshold between attacked-but-watermarked
/// images and unrelated ones.
inline constexpr double kDefaultRingPatternScale = 1.0 / 16.0;

struct WatermarkKey {
  WatermarkBand band = WatermarkBand::kHighFrequency;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  Bits payload;                    // spread spectrum only
  std::vector<FrequencyBin> bins;  // carriers, or ring bins
  std::vector<double> phases;      // ring only: target phase per bin
  std::vector<int> ring_radii;     // ring only
  /// Spread spectrum: modulus offset per carrier. Ring: minimum modulus
  /// forced on every ring bin so its phase survives requantization.
  double strength = 0.0;
  double pattern_scale = kDefaultRingPatternScale;  // ring only
};

/// `bits` carriers drawn from the outer half of the spectrum radii, at least
/// three bins apart (Chebyshev, conjugates included); random payload.
WatermarkKey make_spread_spectrum_key(int width, int height, std::uint64_t seed, int bits = 32,
                                      double strength = kDefaultSpreadSpectrumStrength);

/// All half-plane bins whose rounded radius is one of `radii` (each within
/// the inner quarter of the spectrum radii), with key-derived phases.
WatermarkKey make_ring_key(int width, int height, std::uint64_t seed, std::vector<int> radii = {5},
                           double modulus_floor = kDefaultRingModulusFloor,
                           double pattern_scale = kDefaultRingPatternScale);

nlohmann::json key_to_json(const WatermarkKey& key);
WatermarkKey key_from_json(const nlohmann::json& j);

/// Luminance spectrum modulus at each carrier is raised by strength (bit 1)
/// or lowered by strength, floored at zero (bit 0). The luminance change is
/// added to every channel, then the image is clamped and quantized to u8.
ImageTensor embed_spread_spectrum(const ImageTensor& image, const WatermarkKey& key);

struct SpreadSpectrumDetection {
  Bits bits;
  double bit_accuracy = 0.0;
};

/// Bit k is 1 iff the carrier modulus exceeds the median modulus of the
/// bins 1-2 steps around it (other carriers excluded).
SpreadSpectrumDetection detect_spread_spectrum(const ImageTensor& image, const WatermarkKey& key);

/// Every ring bin gets the key phase and a modulus of at least the key's
/// floor; same luminance-to-RGB path as the spread-spectrum scheme.
ImageTensor embed_ring(const ImageTensor& image, const WatermarkKey& key);

struct RingDetection {
  std::vector<double> extracted;  // scaled (cos, sin) of each ring bin's phase
  std::vector<double> expected;   // scaled (cos, sin) of the key phases
  InverseDistance result;
};

RingDetection detect_ring(const ImageTensor& image, const WatermarkKey& key,
                          double threshold = kInverseDistanceThreshold);

/// Dispatches on the key's band.
ImageTensor embed_watermark(const ImageTensor& image, const WatermarkKey& key);

/// Unified detector outcome. For bit strings `detected` applies the binomial
/// decision threshold at `fpr`; for rings the inverse-distance threshold.
struct WatermarkVerdict {
  std::optional<double> bit_accuracy;
  std::optional<double> inverse_distance;
  bool detected = false;
};

WatermarkVerdict detect_watermark(const ImageTensor& image, const WatermarkKey& key,
                                  double fpr = kDefaultDetectionFpr,
                                  double ring_threshold = kInverseDistanceThreshold);

/// PSNR/SSIM/LPIPS of `candidate` against `reference` plus the detector's
/// verdict on `candidate`.
MetricReport evaluate_image(const std::string& image_id, const ImageTensor& reference, const ImageTensor& candidate,
                            const WatermarkKey& key, const PerceptualExtractor& extractor,
                            double fpr = kDefaultDetectionFpr);

/// Mean of the finite entries; +inf when every entry is +inf (all pairs
/// identical), 0 for an empty list.
double mean_psnr(std::span<const double> values);

}  // namespace hideseek
