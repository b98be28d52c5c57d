#include <doctest.h>

#include <fstream>

#include "hideseek/dataset.hpp"
#include "hideseek/error.hpp"
#include "hideseek/image.hpp"
#include "hideseek/mask.hpp"
#include "hideseek/rng.hpp"
#include "support/helpers.hpp"

using namespace hideseek;
using testing_support::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("load_image reads a 1x1 red PNG in both domains") {
  TempDir dir("core");
  ImageTensor red(3, 1, 1, ValueDomain::kU8);
  red.at(0, 0, 0) = 255;
  save_image(dir / "red.png", red);

  const ImageTensor u8 = load_image(dir / "red.png", ValueDomain::kU8);
  CHECK(u8.domain() == ValueDomain::kU8);
  CHECK(u8.values()[0] == 255.0);
  CHECK(u8.values()[1] == 0.0);
  CHECK(u8.values()[2] == 0.0);

  const ImageTensor unit = load_image(dir / "red.png", ValueDomain::kUnitFloat);
  CHECK(unit.values()[0] == 1.0);
  CHECK(unit.values()[1] == 0.0);
}

TEST_CASE("load_image distinguishes missing, unsupported and corrupt files") {
  TempDir dir("core");
  CHECK(code_of([&] { load_image(dir / "nope.png", ValueDomain::kU8); }) == ErrorCode::kMissingFile);

  std::ofstream(dir / "notes.txt") << "plain text";
  CHECK(code_of([&] { load_image(dir / "notes.txt", ValueDomain::kU8); }) == ErrorCode::kUnsupportedFormat);

  std::ofstream bad(dir / "broken.png", std::ios::binary);
  bad << "\x89PNG\r\n\x1a\n" << std::string(40, 'x');
  bad.close();
  CHECK(code_of([&] { load_image(dir / "broken.png", ValueDomain::kU8); }) == ErrorCode::kCorruptData);
}

TEST_CASE("PNG round trip is bit exact on random u8 images") {
  TempDir dir("core");
  Rng rng(11);
  for (int c : {1, 3}) {
    const ImageTensor img = testing_support::random_u8(c, 13, 7, rng);
    save_image(dir / "x.png", img);
    CHECK(load_image(dir / "x.png", ValueDomain::kU8) == img);
  }
}

TEST_CASE("u8 to unit conversion is v/255 exactly") {
  ImageTensor img(1, 256, 1, ValueDomain::kU8);
  for (int x = 0; x < 256; ++x) img.at(0, x, 0) = x;
  const ImageTensor unit = img.to_unit();
  for (int x = 0; x < 256; ++x) CHECK(unit.at(0, x, 0) == static_cast<double>(x) / 255.0);
  CHECK(unit.to_u8() == img);
}

TEST_CASE("validate rejects values outside the domain") {
  ImageTensor a(1, 2, 1, ValueDomain::kU8);
  a.at(0, 0, 0) = 12.5;
  CHECK(code_of([&] { a.validate(); }) == ErrorCode::kOutOfRange);
  ImageTensor b(1, 2, 1);
  b.at(0, 1, 0) = 1.5;
  CHECK(code_of([&] { b.validate(); }) == ErrorCode::kOutOfRange);
}

TEST_CASE("apply_mask examples") {
  Rng rng(3);
  const ImageTensor x = testing_support::random_unit(3, 4, 4, rng);
  CHECK(apply_mask(x, Mask(4, 4, 1, 1)) == x);
  const ImageTensor zero = apply_mask(x, Mask(4, 4, 1, 0));
  for (double v : zero.values()) CHECK(v == 0.0);

  ImageTensor half(1, 2, 2, ValueDomain::kUnitFloat, 0.5);
  Mask diag(2, 2);
  diag.set(1, 0, false);
  diag.set(0, 1, false);
  const ImageTensor out = apply_mask(half, diag);
  CHECK(out.at(0, 0, 0) == 0.5);
  CHECK(out.at(0, 1, 0) == 0.0);
  CHECK(out.at(0, 0, 1) == 0.0);
  CHECK(out.at(0, 1, 1) == 0.5);
}

TEST_CASE("apply_mask is idempotent and broadcasts patches over pixels and channels") {
  Rng rng(5);
  const ImageTensor x = testing_support::random_unit(3, 8, 8, rng);
  Mask m(2, 2, 4);
  m.set(1, 0, false);
  const ImageTensor once = apply_mask(x, m);
  CHECK(apply_mask(once, m) == once);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int px = 0; px < 8; ++px) {
        const bool hidden = px >= 4 && y < 4;
        CHECK(once.at(c, px, y) == (hidden ? 0.0 : x.at(c, px, y)));
      }
  CHECK(code_of([&] { apply_mask(x, Mask(3, 3, 2)); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("patch grid requires the patch size to divide the image") {
  const PatchGrid g(64, 64, 8);
  CHECK(g.cell_count() == 64);
  CHECK(code_of([] { PatchGrid(64, 60, 8); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("mask counts and json round trip") {
  Mask m(5, 3, 2);
  m.set(0, 0, false);
  m.set(4, 2, false);
  CHECK(m.hidden_count() == 2);
  CHECK(m.hidden_cells().size() == 2);
  CHECK(mask_from_json(mask_to_json(m)) == m);
}

TEST_CASE("rng streams are reproducible and forks are independent of draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  const Rng f1 = c.fork(7);
  c.uniform();
  const Rng f2 = c.fork(7);
  CHECK(f1.seed() == f2.seed());
  Rng u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.index(5) < 5);
  }
}

TEST_CASE("datasets follow manifest order when present") {
  TempDir dir("core");
  Rng rng(1);
  for (const char* name : {"b", "a", "c"}) save_image(dir / (std::string(name) + ".png"), testing_support::random_u8(3, 4, 4, rng));
  auto all = load_dataset(dir.path(), ValueDomain::kU8);
  REQUIRE(all.size() == 3);
  CHECK(all[0].id == "a");
  std::ofstream(dir / "manifest.txt") << "# subset\nc.png\nb.png\n";
  auto listed = load_dataset(dir.path(), ValueDomain::kU8);
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].id == "c");
  CHECK(listed[1].id == "b");
}
