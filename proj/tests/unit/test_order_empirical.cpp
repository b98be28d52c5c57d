#include <doctest.h>

#include "hideseek/order_empirical.hpp"
#include "hideseek/synthetic.hpp"
#include "support/helpers.hpp"

using namespace hideseek;

namespace {

/// Predicts the mean of the visible 4-neighbours, as a sharp distribution.
class NeighbourMean final : public PixelPredictor {
 public:
  [[nodiscard]] int channels() const override { return 3; }
  [[nodiscard]] PixelLogits predict(const ImageTensor& canvas, const Mask& mask, Cell p) const override {
    PixelLogits l(3, 0.0);
    const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      int n = 0;
      for (int k = 0; k < 4; ++k) {
        const int x = p.x + dx[k], y = p.y + dy[k];
        if (x < 0 || y < 0 || x >= canvas.width() || y >= canvas.height() || !mask.visible(x, y)) continue;
        s += canvas.at(c, x, y);
        ++n;
      }
      const int level = n ? quantize_level(s / n) : 128;
      for (int k = 0; k < 256; ++k) l.at(c, k) = -0.05 * std::abs(k - level);
    }
    return l;
  }
};

std::vector<NamedImage> watermarked(const WatermarkKey& key, int count) {
  auto images = synthetic_dataset(count, SyntheticOptions{3, 32, 32}, 3);
  for (auto& n : images) n.image = embed_watermark(n.image, key);
  return images;
}

}  // namespace

TEST_CASE("nothing hidden gives empty traces and identical outputs") {
  const WatermarkKey key = make_spread_spectrum_key(32, 32, 1, 16);
  const auto images = watermarked(key, 1);
  const IdentityExtractor ex;
  const OrderStudy s = trace_orders(FixedLogitMasker(RealMap(32, 32, 3.0)), NeighbourMean(), images, key, ex, {});
  REQUIRE(s.traces.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s.traces[i].steps.empty());
    CHECK(s.purged[i] == images[0].image);
  }
}

TEST_CASE("orders share masks, replay deterministically and report per-order rows") {
  const WatermarkKey key = make_spread_spectrum_key(32, 32, 2, 16);
  const auto images = watermarked(key, 3);
  Rng rng(4);
  RealMap logits(32, 32);
  for (double& v : logits.values) v = rng.uniform(-0.1, 0.9);
  const FixedLogitMasker masker(logits);
  const IdentityExtractor ex;
  OrderStudyOptions o;
  o.seed = 9;
  o.mode = DecodeMode::sample(1.0, 5);
  const OrderStudy a = trace_orders(masker, NeighbourMean(), images, key, ex, o);
  const OrderStudy b = trace_orders(masker, NeighbourMean(), images, key, ex, o);
  REQUIRE(a.traces.size() == 9);
  CHECK(a.summary.size() == 3);
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    CHECK(a.purged[i] == b.purged[i]);
    CHECK(to_json(a.traces[i]) == to_json(b.traces[i]));
  }
  for (std::size_t img = 0; img < 3; ++img) {
    std::vector<Cell> ref;
    for (const auto& s : a.traces[img * 3].steps) ref.push_back(s.position);
    std::sort(ref.begin(), ref.end(), [](Cell p, Cell q) { return std::pair(p.y, p.x) < std::pair(q.y, q.x); });
    for (std::size_t k = 1; k < 3; ++k) {
      std::vector<Cell> other;
      for (const auto& s : a.traces[img * 3 + k].steps) other.push_back(s.position);
      std::sort(other.begin(), other.end(), [](Cell p, Cell q) { return std::pair(p.y, p.x) < std::pair(q.y, q.x); });
      CHECK(other == ref);
    }
  }
  CHECK(a.traces[0].order_hash != a.traces[1].order_hash);
}

TEST_CASE("trace aggregates follow their definitions") {
  OrderTrace t;
  t.steps.push_back({{0, 0}, 0.25, {3, 4, 0}});
  t.steps.push_back({{1, 0}, 0.5, {0, 0, 2}});
  CHECK(t.steps[0].magnitude() == doctest::Approx(5.0));
  CHECK(t.ape() == doctest::Approx(std::sqrt(29.0)));
  CHECK(t.apd() == doctest::Approx(0.75 * 5.0 + 0.5 * 2.0));
}
