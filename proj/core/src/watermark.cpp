#include "hideseek/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hideseek/error.hpp"
#include "hideseek/rng.hpp"
#include "hideseek/spectral.hpp"

namespace hideseek {

std::string_view to_string(WatermarkBand band) {
  return band == WatermarkBand::kHighFrequency ? "high_frequency" : "low_frequency_ring";
}

namespace {

int wrap(int k, int n) { return ((k % n) + n) % n; }

// Signed frequency of storage index k along an axis of length n.
int signed_freq(int k, int n) { return k <= n / 2 ? k : k - n; }

// Circular Chebyshev distance between two bins.
int bin_distance(FrequencyBin a, FrequencyBin b, int w, int h) {
  const int du = std::abs(signed_freq(wrap(a.u - b.u, w), w));
  const int dv = std::abs(signed_freq(wrap(a.v - b.v, h), h));
  return std::max(du, dv);
}

FrequencyBin conjugate(FrequencyBin b) { return {-b.u, -b.v}; }

// Strictly inside the Nyquist limits so that a bin and its conjugate are
// distinct storage locations.
bool interior(FrequencyBin b, int w, int h) { return 2 * std::abs(b.u) < w && 2 * std::abs(b.v) < h; }

bool upper_half(FrequencyBin b) { return b.v > 0 || (b.v == 0 && b.u > 0); }

double radius_of(FrequencyBin b) { return std::hypot(static_cast<double>(b.u), static_cast<double>(b.v)); }

void require_key_shape(const ImageTensor& image, const WatermarkKey& key) {
  if (image.width() != key.width || image.height() != key.height) {
    fail(ErrorCode::kShapeMismatch, "image size differs from the watermark key's");
  }
}

std::complex<double>& bin_ref(Spectrum& s, FrequencyBin b) {
  return s.at(0, wrap(b.u, s.width()), wrap(b.v, s.height()));
}

const std::complex<double>& bin_ref(const Spectrum& s, FrequencyBin b) {
  return s.at(0, wrap(b.u, s.width()), wrap(b.v, s.height()));
}

// Adds `delta` (a luminance spectrum change) to every channel of `image`,
// clamps and quantizes.
ImageTensor apply_luminance_delta(const ImageTensor& image, const Spectrum& delta) {
  const ImageTensor dy = idft2_real(delta);
  ImageTensor out = image.to_unit();
  for (int c = 0; c < out.channels(); ++c) {
    auto ch = out.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] += dy.values()[i];
  }
  out.clamp_to_domain();
  return out.to_u8();
}

}  // namespace

WatermarkKey make_spread_spectrum_key(int width, int height, std::uint64_t seed, int bits, double strength) {
  if (bits < 1) fail(ErrorCode::kInvalidArgument, "payload needs at least one bit");
  if (!(strength >= 0.0)) fail(ErrorCode::kInvalidArgument, "strength must be non-negative");
  WatermarkKey key;
  key.band = WatermarkBand::kHighFrequency;
  key.seed = seed;
  key.width = width;
  key.height = height;
  key.strength = strength;

  const double r_max = std::min(width, height) / 2.0;
  std::vector<FrequencyBin> pool;
  for (int v = -(height - 1) / 2; v <= (height - 1) / 2; ++v)
    for (int u = -(width - 1) / 2; u <= (width - 1) / 2; ++u) {
      const FrequencyBin b{u, v};
      const double r = radius_of(b);
      if (upper_half(b) && interior(b, width, height) && r > 0.5 * r_max && r <= r_max) pool.push_back(b);
    }

  Rng rng(seed);
  rng.shuffle(std::span<FrequencyBin>(pool));
  for (const FrequencyBin& b : pool) {
    if (static_cast<int>(key.bins.size()) == bits) break;
    const bool clear = std::all_of(key.bins.begin(), key.bins.end(), [&](const FrequencyBin& c) {
      return bin_distance(b, c, width, height) >= 3 && bin_distance(b, conjugate(c), width, height) >= 3;
    });
    if (clear && bin_distance(b, conjugate(b), width, height) >= 3) key.bins.push_back(b);
  }
  if (static_cast<int>(key.bins.size()) < bits) {
    fail(ErrorCode::kInfeasible, "image too small for that many spread-spectrum carriers");
  }
  for (int i = 0; i < bits; ++i) key.payload.push_back(rng.coin() ? 1 : 0);
  return key;
}

WatermarkKey make_ring_key(int width, int height, std::uint64_t seed, std::vector<int> radii, double modulus_floor,
                           double pattern_scale) {
  if (!(pattern_scale > 0.0)) fail(ErrorCode::kInvalidArgument, "pattern scale must be positive");
  if (!(modulus_floor >= 0.0)) fail(ErrorCode::kInvalidArgument, "modulus floor must be non-negative");
  if (radii.empty()) fail(ErrorCode::kInvalidArgument, "ring key needs at least one radius");
  const double r_max = std::min(width, height) / 2.0;
  for (int r : radii) {
    if (r < 1 || r > 0.25 * r_max) fail(ErrorCode::kInvalidArgument, "ring radius outside the inner quarter");
  }
  WatermarkKey key;
  key.band = WatermarkBand::kLowFrequencyRing;
  key.seed = seed;
  key.width = width;
  key.height = height;
  key.ring_radii = radii;
  key.strength = modulus_floor;
  key.pattern_scale = pattern_scale;

  const int reach = *std::max_element(radii.begin(), radii.end()) + 1;
  for (int v = 0; v <= reach; ++v)
    for (int u = -reach; u <= reach; ++u) {
      const FrequencyBin b{u, v};
      if (!upper_half(b) || !interior(b, width, height)) continue;
      const int rr = static_cast<int>(std::lround(radius_of(b)));
      if (std::find(radii.begin(), radii.end(), rr) != radii.end()) key.bins.push_back(b);
    }
  Rng rng(seed);
  for (std::size_t i = 0; i < key.bins.size(); ++i) key.phases.push_back(rng.uniform(-std::numbers::pi, std::numbers::pi));
  return key;
}

nlohmann::json key_to_json(const WatermarkKey& key) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : key.bins) bins.push_back({b.u, b.v});
  return {{"band", to_string(key.band)},
          {"seed", key.seed},
          {"width", key.width},
          {"height", key.height},
          {"bits", key.payload.size()},
          {"payload", key.payload},
          {"positions", std::move(bins)},
          {"phases", key.phases},
          {"ring_radii", key.ring_radii},
          {"strength", key.strength},
          {"pattern_scale", key.pattern_scale}};
}

WatermarkKey key_from_json(const nlohmann::json& j) {
  try {
    WatermarkKey key;
    const auto band = j.at("band").get<std::string>();
    if (band == "high_frequency") {
      key.band = WatermarkBand::kHighFrequency;
    } else if (band == "low_frequency_ring") {
      key.band = WatermarkBand::kLowFrequencyRing;
    } else {
      fail(ErrorCode::kCorruptData, "unknown watermark band", band);
    }
    key.seed = j.at("seed").get<std::uint64_t>();
    key.width = j.at("width").get<int>();
    key.height = j.at("height").get<int>();
    key.payload = j.at("payload").get<Bits>();
    for (const auto& b : j.at("positions")) key.bins.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
    key.phases = j.at("phases").get<std::vector<double>>();
    key.ring_radii = j.at("ring_radii").get<std::vector<int>>();
    key.strength = j.at("strength").get<double>();
    key.pattern_scale = j.value("pattern_scale", kDefaultRingPatternScale);
    const bool consistent = key.band == WatermarkBand::kHighFrequency ? key.payload.size() == key.bins.size()
                                                                      : key.phases.size() == key.bins.size();
    if (!consistent) fail(ErrorCode::kCorruptData, "watermark key fields disagree in length");
    return key;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCorruptData, std::string("malformed watermark key: ") + e.what());
  }
}

ImageTensor embed_spread_spectrum(const ImageTensor& image, const WatermarkKey& key) {
  require_key_shape(image, key);
  if (key.band != WatermarkBand::kHighFrequency) fail(ErrorCode::kInvalidArgument, "not a spread-spectrum key");
  const Spectrum f = dft2(luminance(image.to_unit()));
  Spectrum delta(1, image.width(), image.height());
  for (std::size_t k = 0; k < key.bins.size(); ++k) {
    const FrequencyBin b = key.bins[k];
    if (b.u == 0 && b.v == 0) fail(ErrorCode::kInvalidArgument, "carrier on the DC bin");
    const std::complex<double> current = bin_ref(f, b);
    const double m = std::abs(current);
    const double target = key.payload[k] ? m + key.strength : std::max(0.0, m - key.strength);
    const std::complex<double> dir = m > 0.0 ? current / m : std::complex<double>(1.0, 0.0);
    const std::complex<double> d = (target - m) * dir;
    bin_ref(delta, b) += d;
    bin_ref(delta, conjugate(b)) += std::conj(d);
  }
  return apply_luminance_delta(image, delta);
}

SpreadSpectrumDetection detect_spread_spectrum(const ImageTensor& image, const WatermarkKey& key) {
  require_key_shape(image, key);
  const Spectrum f = dft2(luminance(image.to_unit()));
  const int w = image.width(), h = image.height();

  auto is_carrier = [&](FrequencyBin b) {
    return std::any_of(key.bins.begin(), key.bins.end(), [&](const FrequencyBin& c) {
      return bin_distance(b, c, w, h) == 0 || bin_distance(b, conjugate(c), w, h) == 0;
    });
  };

  SpreadSpectrumDetection out;
  std::vector<double> ring;
  for (const FrequencyBin& b : key.bins) {
    ring.clear();
    for (int dv = -2; dv <= 2; ++dv)
      for (int du = -2; du <= 2; ++du) {
        if (du == 0 && dv == 0) continue;
        const FrequencyBin n{b.u + du, b.v + dv};
        if (!is_carrier(n)) ring.push_back(std::abs(bin_ref(f, n)));
      }
    std::nth_element(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2), ring.end());
    double median = ring[ring.size() / 2];
    if (ring.size() % 2 == 0) {
      const double lower = *std::max_element(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2));
      median = 0.5 * (median + lower);
    }
    out.bits.push_back(std::abs(bin_ref(f, b)) > median ? 1 : 0);
  }
  out.bit_accuracy = key.payload.empty() ? 0.0 : bit_accuracy(out.bits, key.payload);
  return out;
}

ImageTensor embed_ring(const ImageTensor& image, const WatermarkKey& key) {
  require_key_shape(image, key);
  if (key.band != WatermarkBand::kLowFrequencyRing) fail(ErrorCode::kInvalidArgument, "not a ring key");
  const Spectrum f = dft2(luminance(image.to_unit()));
  Spectrum delta(1, image.width(), image.height());
  for (std::size_t k = 0; k < key.bins.size(); ++k) {
    const FrequencyBin b = key.bins[k];
    const std::complex<double> current = bin_ref(f, b);
    const double m = std::max(std::abs(current), key.strength);
    const std::complex<double> d = std::polar(m, key.phases[k]) - current;
    bin_ref(delta, b) += d;
    bin_ref(delta, conjugate(b)) += std::conj(d);
  }
  return apply_luminance_delta(image, delta);
}

RingDetection detect_ring(const ImageTensor& image, const WatermarkKey& key, double threshold) {
  require_key_shape(image, key);
  if (key.band != WatermarkBand::kLowFrequencyRing) fail(ErrorCode::kInvalidArgument, "not a ring key");
  const Spectrum f = dft2(luminance(image.to_unit()));
  RingDetection out;
  for (std::size_t k = 0; k < key.bins.size(); ++k) {
    const double phase = std::arg(bin_ref(f, key.bins[k]));
    const double s = key.pattern_scale;
    out.extracted.push_back(s * std::cos(phase));
    out.extracted.push_back(s * std::sin(phase));
    out.expected.push_back(s * std::cos(key.phases[k]));
    out.expected.push_back(s * std::sin(key.phases[k]));
  }
  out.result = inverse_distance(out.extracted, out.expected, threshold);
  return out;
}

ImageTensor embed_watermark(const ImageTensor& image, const WatermarkKey& key) {
  return key.band == WatermarkBand::kHighFrequency ? embed_spread_spectrum(image, key) : embed_ring(image, key);
}

WatermarkVerdict detect_watermark(const ImageTensor& image, const WatermarkKey& key, double fpr,
                                  double ring_threshold) {
  WatermarkVerdict v;
  if (key.band == WatermarkBand::kHighFrequency) {
    const auto d = detect_spread_spectrum(image, key);
    v.bit_accuracy = d.bit_accuracy;
    v.detected = d.bit_accuracy >= decision_threshold(static_cast<int>(key.payload.size()), fpr).min_accuracy;
  } else {
    const auto d = detect_ring(image, key, ring_threshold);
    v.inverse_distance = d.result.distance;
    v.detected = d.result.detected;
  }
  return v;
}

MetricReport evaluate_image(const std::string& image_id, const ImageTensor& reference, const ImageTensor& candidate,
                            const WatermarkKey& key, const PerceptualExtractor& extractor, double fpr) {
  MetricReport r;
  r.image_id = image_id;
  r.psnr = psnr(reference, candidate);
  r.ssim = ssim(reference, candidate);
  r.lpips = lpips(reference, candidate, extractor);
  const WatermarkVerdict v = detect_watermark(candidate, key, fpr);
  r.bit_accuracy = v.bit_accuracy;
  r.inverse_distance = v.inverse_distance;
  r.detected = v.detected;
  r.domain = std::string(to_string(reference.domain()));
  r.extractor_id = extractor.id();
  return r;
}

double mean_psnr(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  std::size_t finite = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++finite;
    }
  }
  return finite ? sum / static_cast<double>(finite) : kPsnrIdentical;
}

}  // namespace hideseek
