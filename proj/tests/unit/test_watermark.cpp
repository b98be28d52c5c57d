#include <doctest.h>

#include <cmath>

#include "hideseek/error.hpp"
#include "hideseek/manipulate.hpp"
#include "hideseek/synthetic.hpp"
#include "hideseek/watermark.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace hideseek;

namespace {

const std::vector<NamedImage>& corpus() {
  static const auto images = synthetic_dataset(20, SyntheticOptions{}, 31);
  return images;
}

}  // namespace

TEST_CASE("spread-spectrum keys respect the carrier constraints") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 5);
  CHECK(key.payload.size() == 32);
  CHECK(key.bins.size() == 32);
  for (std::size_t i = 0; i < key.bins.size(); ++i) {
    const auto& b = key.bins[i];
    CHECK_FALSE((b.u == 0 && b.v == 0));
    CHECK(std::hypot(b.u, b.v) >= 16.0);
    for (std::size_t j = i + 1; j < key.bins.size(); ++j) {
      CHECK_FALSE(key.bins[j] == b);
      CHECK_FALSE((key.bins[j].u == -b.u && key.bins[j].v == -b.v));
    }
  }
  const WatermarkKey back = key_from_json(key_to_json(key));
  CHECK(back.payload == key.payload);
  CHECK(back.bins == key.bins);
  CHECK(back.strength == key.strength);
}

TEST_CASE("zero strength embedding is the identity") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 5, 32, 0.0);
  const ImageTensor& img = corpus()[0].image;
  CHECK(embed_spread_spectrum(img, key) == img);
}

TEST_CASE("spread-spectrum round trip recovers every bit with high PSNR") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 6);
  double psnr_sum = 0.0;
  for (const auto& [id, img] : corpus()) {
    const ImageTensor marked = embed_spread_spectrum(img, key);
    CHECK(marked.domain() == ValueDomain::kU8);
    CHECK(detect_spread_spectrum(marked, key).bit_accuracy == 1.0);
    CHECK(detect_watermark(marked, key).detected);
    psnr_sum += psnr(img, marked);
  }
  CHECK(psnr_sum / corpus().size() >= 40.0);
}

TEST_CASE("spread-spectrum accuracy on noise stays in the binomial 99% band") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 7);
  const int d = oracle::binomial_half_width(32, 0.99);
  Rng rng(8);
  int inside = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const double ba = detect_spread_spectrum(noise_image(3, 64, 64, rng), key).bit_accuracy;
    inside += std::abs(ba * 32.0 - 16.0) <= d;
  }
  CHECK(inside >= 0.97 * trials);
}

TEST_CASE("gaussian blur degrades spread-spectrum bits") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 9);
  for (int i = 0; i < 5; ++i) {
    const ImageTensor marked = embed_spread_spectrum(corpus()[i].image, key);
    const double ba = detect_spread_spectrum(manipulate(marked, Manipulation::gaussian_blur(2.0)), key).bit_accuracy;
    CHECK(ba < 1.0);
  }
}

TEST_CASE("ring watermark is detected, survives JPEG and rarely fires on noise") {
  const WatermarkKey key = make_ring_key(64, 64, 10);
  for (const auto& b : key.bins) CHECK(std::hypot(b.u, b.v) <= 16.0);
  for (int i = 0; i < 10; ++i) {
    const ImageTensor marked = embed_ring(corpus()[i].image, key);
    CHECK(detect_ring(marked, key).result.detected);
    CHECK(detect_ring(manipulate(marked, Manipulation::jpeg(80)), key).result.detected);
  }
  Rng rng(11);
  int false_positives = 0;
  for (int t = 0; t < 200; ++t) false_positives += detect_ring(noise_image(3, 64, 64, rng), key).result.detected;
  CHECK(false_positives < 10);
  const WatermarkKey back = key_from_json(key_to_json(key));
  CHECK(back.phases == key.phases);
  CHECK(back.ring_radii == key.ring_radii);
}

TEST_CASE("detectors reject mismatched shapes") {
  const WatermarkKey key = make_spread_spectrum_key(64, 64, 5);
  CHECK_THROWS_AS(detect_spread_spectrum(ImageTensor(3, 32, 32, ValueDomain::kU8), key), Error);
}

TEST_CASE("manipulation closed forms") {
  ImageTensor px(1, 1, 1, ValueDomain::kU8, 200.0);
  CHECK(manipulate(px, Manipulation::quantize(2)).values()[0] == 255.0);
  CHECK(manipulate(px, Manipulation::quantize(256)).values()[0] == 200.0);

  const ImageTensor& img = corpus()[0].image;
  CHECK(manipulate(img, Manipulation::center_crop(1.0)) == img);
  const ImageTensor flat(3, 16, 16, ValueDomain::kU8, 90.0);
  CHECK(manipulate(flat, Manipulation::gaussian_blur(2.0)) == flat);
  CHECK(manipulate(flat, Manipulation::guided_blur(2, 0.01)) == flat);

  for (const char* spec : {"crop:0.8", "jpeg:50", "quantize:8", "blur:1.5", "guided:4:0.01"}) {
    const Manipulation m = Manipulation::parse(spec);
    const ImageTensor out = manipulate(img, m);
    CHECK(out.same_shape(img));
    CHECK(out.domain() == ValueDomain::kU8);
    CHECK_NOTHROW(out.validate());
    CHECK(Manipulation::parse(m.label()).label() == m.label());
  }
  CHECK_THROWS_AS(Manipulation::parse("jpeg:0"), Error);
  CHECK_THROWS_AS(Manipulation::parse("crop:1.5"), Error);
  CHECK_THROWS_AS(Manipulation::parse("rotate:90"), Error);
}

TEST_CASE("mean_psnr skips infinite entries") {
  const std::vector<double> v{30.0, kPsnrIdentical, 40.0};
  CHECK(mean_psnr(v) == 35.0);
  const std::vector<double> all{kPsnrIdentical};
  CHECK(mean_psnr(all) == kPsnrIdentical);
  CHECK(mean_psnr(std::vector<double>{}) == 0.0);
}
