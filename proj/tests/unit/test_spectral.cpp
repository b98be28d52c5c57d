#include <doctest.h>

#include <cmath>

#include "hideseek/error.hpp"
#include "hideseek/spectral.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace hideseek;

TEST_CASE("dft2 of a constant image is pure DC") {
  const ImageTensor img(2, 5, 3, ValueDomain::kUnitFloat, 0.4);
  const Spectrum f = dft2(img);
  for (int c = 0; c < 2; ++c)
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 5; ++u) {
        const double expect = (u == 0 && v == 0) ? 0.4 * 15 : 0.0;
        CHECK(std::abs(f.at(c, u, v) - std::complex<double>(expect, 0.0)) < 1e-12);
      }
}

TEST_CASE("dft2 of an impulse is flat") {
  ImageTensor img(1, 8, 4);
  img.at(0, 0, 0) = 1.0;
  const Spectrum f = dft2(img);
  for (const auto& b : f.bins()) CHECK(std::abs(b - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("dft2 matches the direct double sum on mixed sizes") {
  Rng rng(21);
  const int sizes[][2] = {{4, 4}, {1, 2}, {3, 5}, {8, 6}, {16, 16}, {7, 16}};
  for (const auto& s : sizes) {
    const ImageTensor img = testing_support::random_unit(3, s[0], s[1], rng);
    const auto ref = oracle::brute_dft(img);
    const Spectrum f = dft2(img);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - f.bins()[i]));
    CAPTURE(s[0]);
    CAPTURE(s[1]);
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("real input has conjugate-symmetric spectrum and Parseval holds") {
  Rng rng(4);
  const ImageTensor img = testing_support::random_unit(1, 8, 8, rng);
  const Spectrum f = dft2(img);
  double energy_f = 0.0, energy_x = 0.0;
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      CHECK(std::abs(f.at(0, u, v) - std::conj(f.at(0, (8 - u) % 8, (8 - v) % 8))) < 1e-9);
      energy_f += std::norm(f.at(0, u, v));
      energy_x += img.at(0, u, v) * img.at(0, u, v);
    }
  CHECK(std::abs(energy_f - 64.0 * energy_x) / energy_f < 1e-6);
}

TEST_CASE("idft2_real inverts dft2") {
  Rng rng(5);
  const ImageTensor img = testing_support::random_unit(3, 6, 4, rng);
  const ImageTensor back = idft2_real(dft2(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.values()[i] == doctest::Approx(img.values()[i]).epsilon(1e-12));
}

TEST_CASE("spectrum weight is the modulus of the difference raised to alpha") {
  Spectrum a(1, 2, 1), b(1, 2, 1);
  a.at(0, 0, 0) = {3.0, 4.0};
  const auto w1 = spectrum_weight(a, b, 1.0);
  CHECK(w1[0].at(0, 0) == doctest::Approx(5.0));
  CHECK(w1[0].at(1, 0) == 0.0);
  const auto w0 = spectrum_weight(a, b, 0.0);
  CHECK(w0[0].at(0, 0) == 1.0);
  CHECK(w0[0].at(1, 0) == 0.0);
  for (const auto& m : spectrum_weight(a, a)) CHECK(m.values == std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(spectrum_weight(a, Spectrum(1, 3, 1)), Error);
}

TEST_CASE("frequency loss worked example and basic properties") {
  ImageTensor x(1, 2, 1), xt(1, 2, 1);
  x.at(0, 0, 0) = 1.0;
  CHECK(frequency_loss(x, xt) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(frequency_loss(x, xt) - 1.0) < 1e-9);
  CHECK(frequency_loss(x, x) == 0.0);

  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const ImageTensor a = testing_support::random_unit(3, 5, 4, rng);
    const ImageTensor b = testing_support::random_unit(3, 5, 4, rng);
    CHECK(frequency_loss(a, b) == doctest::Approx(frequency_loss(b, a)).epsilon(1e-12));
    CHECK(frequency_loss(a, b) > 0.0);
  }
  CHECK_THROWS_AS(frequency_loss(x, ImageTensor(1, 1, 2)), Error);
}

TEST_CASE("frequency loss gradient matches central differences with a detached weight") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageTensor x = testing_support::random_unit(3, 4, 4, rng);
    const ImageTensor xt = testing_support::random_unit(3, 4, 4, rng, 0.1, 0.9);
    const auto weight = spectrum_weight(dft2(x), dft2(xt));
    const FrequencyLossGrad g = frequency_loss_with_grad(x, xt);
    CHECK(g.value == doctest::Approx(frequency_loss(x, xt)).epsilon(1e-12));
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          ImageTensor probe = xt;
          std::copy(v.begin(), v.end(), probe.values().begin());
          return frequency_loss_weighted(x, probe, weight);
        },
        {xt.values().begin(), xt.values().end()});
    CHECK(oracle::worst_relative_error({g.grad.values().begin(), g.grad.values().end()}, numeric, 1e-6) < 1e-4);
  }
}
