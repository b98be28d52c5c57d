#include <doctest.h>

#include "hideseek/checkpoint.hpp"
#include "hideseek/error.hpp"
#include "hideseek/hsn.hpp"
#include "hideseek/metrics.hpp"
#include "hideseek/synthetic.hpp"
#include "support/helpers.hpp"

using namespace hideseek;

namespace {

HsnConfig small_config(int epochs) {
  HsnConfig c;
  c.architecture.patch_size = 4;
  c.architecture.latent = 16;
  c.architecture.depth = 1;
  c.architecture.token_hidden = 32;
  c.architecture.channel_hidden = 32;
  c.epochs = epochs;
  c.batch_size = 2;
  c.learning_rate = 1e-2;
  c.early_stop_tolerance = -1.0;
  return c;
}

std::vector<ImageTensor> constant_set(int level) {
  return std::vector<ImageTensor>(16, constant_image(3, 16, 16, level).to_unit());
}

MaskedAutoencoder& constant_model() {
  static MaskedAutoencoder model = [] {
    Rng rng(1);
    return train_hsn(constant_set(200), small_config(5), rng);
  }();
  return model;
}

MaskedAutoencoder& converged_constant_model() {
  static MaskedAutoencoder model = [] {
    Rng rng(1);
    return train_hsn(constant_set(200), small_config(25), rng);
  }();
  return model;
}

}  // namespace

TEST_CASE("training on a constant dataset drives the masked error to zero") {
  MaskedAutoencoder& model = constant_model();
  REQUIRE(model.loss_history.size() == 5);
  CHECK(model.loss_history.back() < 1e-3);
  CHECK(model.loss_history.back() <= model.loss_history.front());
}

TEST_CASE("training rejects empty and ragged datasets") {
  Rng rng(1);
  try {
    train_hsn({}, small_config(1), rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }
  std::vector<ImageTensor> ragged{ImageTensor(3, 16, 16), ImageTensor(3, 8, 16)};
  CHECK_THROWS_AS(train_hsn(ragged, small_config(1), rng), Error);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = images_of(synthetic_dataset(6, SyntheticOptions{3, 16, 16}, 4));
  std::vector<ImageTensor> unit;
  for (const auto& img : data) unit.push_back(img.to_unit());
  Rng a(9), b(9);
  const MaskedAutoencoder m1 = train_hsn(unit, small_config(2), a);
  const MaskedAutoencoder m2 = train_hsn(unit, small_config(2), b);
  CHECK(m1.loss_history == m2.loss_history);
  CHECK(m1.reconstruct(unit[0], Mask(4, 4, 4, 0)) == m2.reconstruct(unit[0], Mask(4, 4, 4, 0)));
}

TEST_CASE("early stop ends training once the loss plateaus") {
  HsnConfig c = small_config(40);
  c.learning_rate = 1e-9;
  c.early_stop_tolerance = 1e-4;
  Rng rng(2);
  const MaskedAutoencoder m = train_hsn(constant_set(90), c, rng);
  CHECK(m.loss_history.size() < 40);
}

TEST_CASE("attack passes visible pixels through bit-exactly") {
  const MaskedAutoencoder& model = constant_model();
  Rng rng(3);
  for (MaskKind kind : {MaskKind::kRandom, MaskKind::kContinuous, MaskKind::kScattered}) {
    const ImageTensor img = testing_support::random_u8(3, 16, 16, rng);
    const MaskStrategy strategy{kind, 0.5};
    const HsnAttackResult r = attack_hsn_detailed(model, img, strategy, rng);
    CHECK(r.purged.domain() == ValueDomain::kU8);
    std::size_t changed = 0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          if (r.mask.pixel_visible(x, y)) CHECK(r.purged.at(c, x, y) == img.at(c, x, y));
          if (r.purged.at(c, x, y) != img.at(c, x, y)) ++changed;
        }
    CHECK(changed <= 3 * r.mask.hidden_count() * 16);
    CHECK(r.mask.hidden_count() == 8);
  }
}

TEST_CASE("attack with nothing hidden returns the input") {
  const MaskedAutoencoder& model = constant_model();
  const ImageTensor img = constant_image(3, 16, 16, 31);
  CHECK(attack_hsn_with_mask(model, img, Mask(4, 4, 4, 1)).purged == img);
}

TEST_CASE("attack is deterministic and reconstructs the constant it learned") {
  const MaskedAutoencoder& model = converged_constant_model();
  const ImageTensor img = constant_image(3, 16, 16, 200);
  Rng a(5), b(5);
  const ImageTensor p1 = attack_hsn(model, img, MaskStrategy{MaskKind::kRandom, 0.6}, a);
  const ImageTensor p2 = attack_hsn(model, img, MaskStrategy{MaskKind::kRandom, 0.6}, b);
  CHECK(p1 == p2);
  CHECK(psnr(p1, img) > 40.0);
}

TEST_CASE("checkpoints round-trip and detect tampering") {
  MaskedAutoencoder& model = constant_model();
  testing_support::TempDir dir("hsn");
  save_hsn(dir / "m.json", model);
  const MaskedAutoencoder back = load_hsn(dir / "m.json");
  const ImageTensor img = constant_image(3, 16, 16, 10).to_unit();
  const Mask m(4, 4, 4, 0);
  CHECK(back.reconstruct(img, m) == model.reconstruct(img, m));
  CHECK(back.loss_history == model.loss_history);

  auto j = read_json_file(dir / "m.json");
  j["manifest"]["parameter_hash"] = "0000000000000000";
  write_json_file(dir / "bad.json", j);
  try {
    load_hsn(dir / "bad.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kModelMismatch);
  }
}
