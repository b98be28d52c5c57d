#include "hideseek/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hideseek/error.hpp"
#include "hideseek/spectral.hpp"

namespace hideseek {

namespace {

void require_same(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "images differ in shape");
}

void require_soft_extent(const SoftMask& soft, const ImageTensor& x) {
  if (soft.width() != x.width() || soft.height() != x.height()) {
    fail(ErrorCode::kShapeMismatch, "soft mask extent does not match image");
  }
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::kShapeMismatch, "feature vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {area, frequency, semantic, pixel, perceptual}) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvalidArgument, "loss weights must be non-negative");
  }
}

HsnLoss hsn_loss(const ImageTensor& x, const ImageTensor& x_hat, const Mask& mask) {
  require_same(x, x_hat);
  if (mask.pixel_width() != x.width() || mask.pixel_height() != x.height()) {
    fail(ErrorCode::kShapeMismatch, "mask extent does not match image");
  }
  const ImageTensor a = x.to_unit();
  const ImageTensor b = x_hat.to_unit();
  double sum = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int xx = 0; xx < a.width(); ++xx) {
        if (mask.pixel_visible(xx, y)) continue;
        const double d = a.at(c, xx, y) - b.at(c, xx, y);
        sum += d * d;
        ++n;
      }
  if (n == 0) return {0.0, true};
  return {sum / static_cast<double>(n), false};
}

double semantic_loss(const ImageTensor& x, const ImageTensor& x_tilde, const SemanticEmbedder& embedder) {
  require_same(x, x_tilde);
  return squared_distance(embedder.features(x), embedder.features(x_tilde));
}

ImageTensor semantic_loss_grad(const ImageTensor& x, const ImageTensor& x_tilde, const SemanticEmbedder& embedder) {
  require_same(x, x_tilde);
  const auto ex = embedder.features(x);
  auto ey = embedder.features(x_tilde);
  for (std::size_t i = 0; i < ey.size(); ++i) ey[i] = 2.0 * (ey[i] - ex[i]);
  return embedder.features_vjp(x_tilde, ey);
}

PerturbationSigns PerturbationSigns::draw(int channels, int width, int height, Rng& rng) {
  PerturbationSigns p{channels, width, height, {}};
  p.signs.resize(static_cast<std::size_t>(channels) * width * height);
  for (auto& s : p.signs) s = rng.coin() ? 1 : -1;
  return p;
}

ImageTensor perturb(const ImageTensor& x, const SoftMask& soft, const PerturbationSigns& signs) {
  require_soft_extent(soft, x);
  if (signs.channels != x.channels() || signs.width != x.width() || signs.height != x.height()) {
    fail(ErrorCode::kShapeMismatch, "perturbation shape does not match image");
  }
  ImageTensor out = x.to_unit();
  for (int c = 0; c < out.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int xx = 0; xx < out.width(); ++xx) {
        double& v = out.at(c, xx, y);
        v = std::clamp(v + soft.at(xx, y) * signs.signs[out.offset(c, xx, y)] * kPerturbationStep, 0.0, 1.0);
      }
  return out;
}

ImageTensor perturb_with_soft_mask(const ImageTensor& x, const SoftMask& soft, Rng& rng) {
  return perturb(x, soft, PerturbationSigns::draw(x.channels(), x.width(), x.height(), rng));
}

HideLossTerms hide_loss(const SoftMask& soft, const ImageTensor& x, const ImageTensor& x_tilde,
                        const LossWeights& weights, const SemanticEmbedder& embedder, double alpha, AreaTerm area) {
  weights.validate();
  require_soft_extent(soft, x);
  require_same(x, x_tilde);
  HideLossTerms t;
  const double energy = soft.energy();
  t.area = area == AreaTerm::kComplement ? static_cast<double>(x.pixel_count()) - energy : energy;
  t.frequency = frequency_loss(x, x_tilde, alpha);
  t.semantic = semantic_loss(x, x_tilde, embedder);
  t.total = weights.area * t.area + weights.frequency * t.frequency + weights.semantic * t.semantic;
  return t;
}

HideLossGrad hide_loss_with_grad(const SoftMask& soft, const ImageTensor& x, const PerturbationSigns& signs,
                                 const LossWeights& weights, const SemanticEmbedder& embedder, double alpha,
                                 AreaTerm area) {
  weights.validate();
  const ImageTensor unit = x.to_unit();
  const ImageTensor x_tilde = perturb(unit, soft, signs);

  HideLossGrad out;
  const double energy = soft.energy();
  out.terms.area = area == AreaTerm::kComplement ? static_cast<double>(x.pixel_count()) - energy : energy;

  ImageTensor grad_xt(unit.channels(), unit.width(), unit.height());
  if (weights.frequency > 0.0) {
    FrequencyLossGrad f = frequency_loss_with_grad(unit, x_tilde, alpha);
    out.terms.frequency = f.value;
    auto g = grad_xt.values();
    auto fg = f.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights.frequency * fg[i];
  } else {
    out.terms.frequency = frequency_loss(unit, x_tilde, alpha);
  }
  if (weights.semantic > 0.0) {
    out.terms.semantic = semantic_loss(unit, x_tilde, embedder);
    const ImageTensor sg = semantic_loss_grad(unit, x_tilde, embedder);
    auto g = grad_xt.values();
    auto s = sg.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights.semantic * s[i];
  } else {
    out.terms.semantic = semantic_loss(unit, x_tilde, embedder);
  }
  out.terms.total =
      weights.area * out.terms.area + weights.frequency * out.terms.frequency + weights.semantic * out.terms.semantic;

  const double area_sign = area == AreaTerm::kComplement ? -2.0 : 2.0;
  out.grad_soft = RealMap(soft.width(), soft.height());
  for (int y = 0; y < soft.height(); ++y) {
    for (int xx = 0; xx < soft.width(); ++xx) {
      double g = weights.area * area_sign * soft.at(xx, y);
      for (int c = 0; c < unit.channels(); ++c) {
        const std::size_t i = unit.offset(c, xx, y);
        const double raw = unit.values()[i] + soft.at(xx, y) * signs.signs[i] * kPerturbationStep;
        if (raw < 0.0 || raw > 1.0) continue;  // clamped
        g += grad_xt.values()[i] * signs.signs[i] * kPerturbationStep;
      }
      out.grad_soft.at(xx, y) = g;
    }
  }
  return out;
}

PixelLogits::PixelLogits(int channels, double fill)
    : channels_(channels), values_(static_cast<std::size_t>(channels) * kLevels, fill) {
  if (channels < 1) fail(ErrorCode::kInvalidArgument, "pixel logits need at least one channel");
}

std::vector<double> PixelLogits::probabilities(int c, double temperature) const {
  if (!(temperature > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature must be positive");
  const auto logits = channel(c);
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(kLevels);
  double s = 0.0;
  for (int b = 0; b < kLevels; ++b) {
    p[b] = std::exp((logits[b] - m) / temperature);
    s += p[b];
  }
  for (double& v : p) v /= s;
  return p;
}

namespace {

void require_targets(const PixelLogits& logits, std::span<const int> target) {
  if (target.size() != static_cast<std::size_t>(logits.channels())) {
    fail(ErrorCode::kShapeMismatch, "target pixel has the wrong channel count");
  }
  for (int t : target) {
    if (t < 0 || t >= PixelLogits::kLevels) fail(ErrorCode::kOutOfRange, "target pixel level outside [0, 255]");
  }
}

}  // namespace

double pixel_loss(const PixelLogits& logits, std::span<const int> target) {
  require_targets(logits, target);
  double loss = 0.0;
  for (int c = 0; c < logits.channels(); ++c) loss += log_sum_exp(logits.channel(c)) - logits.at(c, target[c]);
  return loss;
}

PixelLogits pixel_loss_grad(const PixelLogits& logits, std::span<const int> target) {
  require_targets(logits, target);
  PixelLogits g(logits.channels());
  for (int c = 0; c < logits.channels(); ++c) {
    const auto p = logits.probabilities(c);
    for (int b = 0; b < PixelLogits::kLevels; ++b) g.at(c, b) = p[b] - (b == target[c] ? 1.0 : 0.0);
  }
  return g;
}

double perceptual_loss(const ImageTensor& x, const ImageTensor& x_bar, const PerceptualExtractor& extractor) {
  require_same(x, x_bar);
  return squared_distance(extractor.features(x), extractor.features(x_bar));
}

ImageTensor perceptual_loss_grad(const ImageTensor& x, const ImageTensor& x_bar,
                                 const PerceptualExtractor& extractor) {
  require_same(x, x_bar);
  const auto fx = extractor.features(x);
  auto fb = extractor.features(x_bar);
  for (std::size_t i = 0; i < fb.size(); ++i) fb[i] = 2.0 * (fb[i] - fx[i]);
  return extractor.features_vjp(x_bar, fb);
}

SeekLossTerms seek_loss(const PixelLogits& logits, std::span<const int> target, const ImageTensor& x_prev_true,
                        const ImageTensor& x_prev_pred, const LossWeights& weights,
                        const PerceptualExtractor& extractor) {
  weights.validate();
  SeekLossTerms t;
  t.pixel = pixel_loss(logits, target);
  t.perceptual = perceptual_loss(x_prev_true, x_prev_pred, extractor);
  t.total = weights.pixel * t.pixel + weights.perceptual * t.perceptual;
  return t;
}

}  // namespace hideseek
