#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hideseek/error.hpp"
#include "hideseek/hsplus.hpp"
#include "hideseek/masking.hpp"
#include "hideseek/synthetic.hpp"
#include "support/helpers.hpp"

using namespace hideseek;

namespace {

/// Puts all mass on one level per channel.
class ConstantPredictor final : public PixelPredictor {
 public:
  ConstantPredictor(int channels, int level) : channels_(channels), level_(level) {}
  [[nodiscard]] int channels() const override { return channels_; }
  [[nodiscard]] PixelLogits predict(const ImageTensor&, const Mask&, Cell) const override {
    PixelLogits l(channels_, -50.0);
    for (int c = 0; c < channels_; ++c) l.at(c, level_) = 50.0;
    return l;
  }

 private:
  int channels_;
  int level_;
};

PixelLogits one_hot(int channels, int level) {
  PixelLogits l(channels, -10.0);
  for (int c = 0; c < channels; ++c) l.at(c, level) = 10.0;
  return l;
}

RealMap random_logits(int w, int h, Rng& rng) {
  RealMap m(w, h);
  for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("enc writes the argmax level and reveals the position") {
  const ImageTensor canvas(3, 4, 4, ValueDomain::kU8, 7.0);
  Mask m(4, 4);
  m.set(2, 1, false);
  Rng rng(1);
  const Decoded d = enc(canvas, m, one_hot(3, 200), {2, 1}, DecodeMode::argmax(), rng);
  for (int c = 0; c < 3; ++c) CHECK(d.image.at(c, 2, 1) == 200.0);
  CHECK(d.mask.hidden_count() == 0);
  CHECK(d.levels == std::vector<int>{200, 200, 200});
  for (int c = 0; c < 3; ++c) CHECK(d.image.at(c, 0, 0) == 7.0);

  try {
    enc(canvas, m, one_hot(3, 1), {0, 0}, DecodeMode::argmax(), rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("sampled decoding is reproducible for a fixed seed") {
  const ImageTensor canvas(3, 2, 2);
  const Mask m(2, 2, 1, 0);
  PixelLogits spread(3);
  Rng shape(4);
  for (double& v : spread.values()) v = shape.normal();
  const DecodeMode mode = DecodeMode::sample(1.0, 11);
  Rng a(11), b(11);
  CHECK(enc(canvas, m, spread, {1, 1}, mode, a).levels == enc(canvas, m, spread, {1, 1}, mode, b).levels);
  CHECK_THROWS_AS(DecodeMode::sample(0.0, 1).validate(), Error);
}

TEST_CASE("all-positive logits leave the image untouched") {
  Rng rng(2);
  const ImageTensor img = testing_support::random_u8(3, 6, 5, rng);
  const FixedLogitMasker masker(RealMap(6, 5, 2.0));
  const ConstantPredictor gen(3, 0);
  CHECK(attack_hsplus(masker, gen, img, 10.0, DecodeMode::argmax()) == img);
}

TEST_CASE("only the pixel scored below one half is reconstructed") {
  ImageTensor img(1, 3, 1, ValueDomain::kU8);
  img.values()[0] = 10;
  img.values()[1] = 20;
  img.values()[2] = 30;
  RealMap logits(3, 1);
  logits.values = {-1.0, 0.2, 3.0};  // sigmoid: 0.27, 0.55, 0.95
  const HsPlusAttackResult r = attack_hsplus_detailed(FixedLogitMasker(logits), ConstantPredictor(1, 99), img,
                                                      HsPlusOptions{1.0}, DecodeMode::argmax());
  CHECK(r.steps.size() == 1);
  CHECK(r.steps[0].position == Cell{0, 0});
  CHECK(r.purged.values()[0] == 99.0);
  CHECK(r.purged.values()[1] == 20.0);
  CHECK(r.purged.values()[2] == 30.0);
}

TEST_CASE("hiding one pixel changes at most that pixel") {
  Rng rng(3);
  const ImageTensor img = testing_support::random_u8(3, 5, 5, rng);
  RealMap logits(5, 5, 1.0);
  logits.at(3, 2) = -1.0;
  const ImageTensor out = attack_hsplus(FixedLogitMasker(logits), ConstantPredictor(3, 5), img, 10.0,
                                        DecodeMode::sample(1.0, 3));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x)
        if (!(x == 3 && y == 2)) CHECK(out.at(c, x, y) == img.at(c, x, y));
}

TEST_CASE("decode runs once per hidden pixel, ends at the minimum score and keeps visible pixels") {
  Rng rng(4);
  const ConstantPredictor gen(3, 128);
  for (int run = 0; run < 25; ++run) {
    const ImageTensor img = testing_support::random_u8(3, 8, 8, rng);
    const FixedLogitMasker masker(random_logits(8, 8, rng));
    const HsPlusAttackResult r =
        attack_hsplus_detailed(masker, gen, img, HsPlusOptions{}, DecodeMode::sample(1.0, run));
    CHECK(r.steps.size() == r.mask.hidden_count());
    CHECK(r.report.hidden_count == r.mask.hidden_count());
    double lowest = 2.0;
    for (const auto& s : r.steps) lowest = std::min(lowest, s.score);
    if (!r.steps.empty()) CHECK(r.steps.back().score == lowest);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          if (r.mask.visible(x, y)) CHECK(r.purged.at(c, x, y) == img.at(c, x, y));
  }
}

TEST_CASE("inverse order reverses the original decode order") {
  Rng rng(5);
  const ImageTensor img = testing_support::random_u8(1, 6, 6, rng);
  const FixedLogitMasker masker(random_logits(6, 6, rng));
  const ConstantPredictor gen(1, 1);
  HsPlusOptions o;
  const auto fwd = attack_hsplus_detailed(masker, gen, img, o, DecodeMode::argmax());
  o.order = OrderVariant::kInverse;
  const auto inv = attack_hsplus_detailed(masker, gen, img, o, DecodeMode::argmax());
  REQUIRE(fwd.steps.size() == inv.steps.size());
  for (std::size_t i = 0; i < fwd.steps.size(); ++i)
    CHECK(fwd.steps[i].position == inv.steps[inv.steps.size() - 1 - i].position);
}

TEST_CASE("max_hidden caps the decode loop with an explicit error") {
  const ImageTensor img(1, 4, 4, ValueDomain::kU8);
  HsPlusOptions o;
  o.max_hidden = 3;
  try {
    attack_hsplus_detailed(FixedLogitMasker(RealMap(4, 4, -1.0)), ConstantPredictor(1, 0), img, o,
                           DecodeMode::argmax());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfRange);
  }
}

TEST_CASE("a hidden budget of zero is a no-op attack") {
  Rng rng(6);
  const ImageTensor img = testing_support::random_u8(3, 6, 6, rng);
  HsPlusOptions o;
  o.hidden_budget = 0;
  const auto r = attack_hsplus_detailed(FixedLogitMasker(RealMap(6, 6, -1.0)), ConstantPredictor(3, 0), img, o,
                                        DecodeMode::argmax());
  CHECK(r.purged == img);
  CHECK(r.steps.empty());
}

TEST_CASE("the masker learns to favour a perturbation-invariant flat region") {
  // Left half black, so every darkening step clamps away; right half textured.
  std::vector<ImageTensor> data;
  Rng rng(7);
  for (int i = 0; i < 8; ++i) {
    ImageTensor img(3, 12, 12);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 12; ++y)
        for (int x = 6; x < 12; ++x) img.at(c, x, y) = rng.uniform(0.2, 0.8);
    data.push_back(img);
  }
  MaskerConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-2;
  cfg.weights = LossWeights{1.0, 0.0, 3e4, 1.0, 1.0};
  cfg.embedder = EmbedderKind::kIdentity;
  Rng train_rng(8);
  const ConvMasker h = train_masker(data, cfg, train_rng);
  CHECK(h.loss_history.back() <= h.loss_history.front());

  double flat = 0.0, textured = 0.0;
  for (const auto& img : data) {
    const RealMap l = h.logits(img);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) (x < 6 ? flat : textured) += l.at(x, y);
  }
  CHECK(flat > textured);

  Rng again(8);
  CHECK(train_masker(data, cfg, again).loss_history == h.loss_history);
  Rng r(1);
  CHECK_THROWS_AS(train_masker({}, cfg, r), Error);
}

TEST_CASE("the generator learns a constant dataset") {
  const std::vector<ImageTensor> data(8, constant_image(3, 8, 8, 77).to_unit());
  GeneratorConfig cfg;
  cfg.architecture.hidden = 32;
  cfg.architecture.context_radius = 1;
  cfg.epochs = 4;
  cfg.queries_per_image = 16;
  cfg.learning_rate = 1e-2;
  cfg.extractor = ExtractorKind::kIdentity;
  Rng rng(9);
  const MlpPixelGenerator g = train_generator(data, cfg, rng);
  CHECK(g.loss_history.back() < g.loss_history.front());

  Rng q(10);
  int hits = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Mask m = create_random_mask(PatchGrid(8, 8, 1), q.uniform(0.1, 0.9), q);
    for (const Cell& c : m.hidden_cells()) {
      const Decoded d = enc(data[0], m, g.predict(data[0], m, c), c, DecodeMode::argmax(), q);
      hits += d.levels == std::vector<int>{77, 77, 77};
      ++total;
    }
  }
  CHECK(static_cast<double>(hits) / total >= 0.99);

  Rng again(9);
  MlpPixelGenerator g2 = train_generator(data, cfg, again);
  MlpPixelGenerator g1 = g;
  CHECK(nn::parameter_hash(g1.parameters()) == nn::parameter_hash(g2.parameters()));
}
