#include "hideseek/hsplus.hpp"

#include <algorithm>
#include <cmath>

#include "hideseek/checkpoint.hpp"
#include "hideseek/dataset.hpp"
#include "hideseek/error.hpp"
#include "hideseek/masking.hpp"

namespace hideseek {

namespace {

std::string_view to_string(EmbedderKind k) { return k == EmbedderKind::kIdentity ? "identity" : "randconv"; }
std::string_view to_string(ExtractorKind k) { return k == ExtractorKind::kIdentity ? "identity" : "randconv"; }

template <typename Kind>
Kind feature_kind_from_string(const std::string& s, Kind random_conv, Kind identity) {
  if (s == "randconv") return random_conv;
  if (s == "identity") return identity;
  fail(ErrorCode::kInvalidConfig, "unknown feature model", s);
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"area", w.area}, {"frequency", w.frequency}, {"semantic", w.semantic}, {"pixel", w.pixel},
          {"perceptual", w.perceptual}};
}

LossWeights weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.area = j.value("area", w.area);
  w.frequency = j.value("frequency", w.frequency);
  w.semantic = j.value("semantic", w.semantic);
  w.pixel = j.value("pixel", w.pixel);
  w.perceptual = j.value("perceptual", w.perceptual);
  return w;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

// ---------------------------------------------------------------- masker

RealMap FixedLogitMasker::logits(const ImageTensor& image) const {
  if (image.width() != logits_.width || image.height() != logits_.height) {
    fail(ErrorCode::kShapeMismatch, "image extent differs from the fixed logit map");
  }
  return logits_;
}

ConvMasker::ConvMasker(int channels, int hidden, std::uint64_t init_seed) : channels_(channels), hidden_(hidden) {
  if (channels < 1 || hidden < 1) fail(ErrorCode::kInvalidConfig, "invalid masker architecture");
  Rng rng(init_seed);
  conv1_ = nn::Conv2d("conv1", channels, hidden, 3, 1, 1, rng);
  conv2_ = nn::Conv2d("conv2", hidden, hidden, 3, 1, 1, rng);
  conv3_ = nn::Conv2d("conv3", hidden, 1, 1, 1, 0, rng);
}

RealMap ConvMasker::forward(const ImageTensor& image, Trace& t) const {
  if (image.channels() != channels_) fail(ErrorCode::kShapeMismatch, "masker channel count mismatch");
  t.input = nn::to_feature_map(image);
  t.pre1 = conv1_.forward(t.input);
  t.act1 = t.pre1;
  nn::relu(t.act1.values);
  t.pre2 = conv2_.forward(t.act1);
  t.act2 = t.pre2;
  nn::relu(t.act2.values);
  const nn::FeatureMap out = conv3_.forward(t.act2);
  RealMap logits(image.width(), image.height());
  std::copy(out.values.begin(), out.values.end(), logits.values.begin());
  return logits;
}

RealMap ConvMasker::logits(const ImageTensor& image) const {
  Trace t;
  return forward(image, t);
}

void ConvMasker::backward(const Trace& t, const RealMap& grad_logits) {
  nn::FeatureMap g(1, grad_logits.height, grad_logits.width);
  std::copy(grad_logits.values.begin(), grad_logits.values.end(), g.values.begin());
  nn::FeatureMap g2 = conv3_.backward(t.act2, g);
  nn::relu_backward(t.pre2.values, g2.values);
  nn::FeatureMap g1 = conv2_.backward(t.act1, g2);
  nn::relu_backward(t.pre1.values, g1.values);
  // The input gradient is not needed; conv1's weight gradients are.
  (void)conv1_.backward(t.input, g1);
}

nn::ParameterList ConvMasker::parameters() {
  nn::ParameterList p;
  conv1_.collect(p);
  conv2_.collect(p);
  conv3_.collect(p);
  return p;
}

void MaskerConfig::validate() const {
  if (hidden < 1 || epochs < 1 || batch_size < 1) fail(ErrorCode::kInvalidConfig, "masker sizes must be positive");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  if (!(gamma > 0.0)) fail(ErrorCode::kInvalidConfig, "gamma must be positive");
  if (!(alpha >= 0.0)) fail(ErrorCode::kInvalidConfig, "alpha must be non-negative");
  weights.validate();
}

nlohmann::json to_json(const MaskerConfig& c) {
  return {{"hidden", c.hidden},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"gamma", c.gamma},
          {"alpha", c.alpha},
          {"weights", to_json(c.weights)},
          {"area_term", c.area == AreaTerm::kEnergy ? "energy" : "complement"},
          {"embedder", to_string(c.embedder)}};
}

MaskerConfig masker_config_from_json(const nlohmann::json& j) {
  MaskerConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.gamma = j.value("gamma", c.gamma);
  c.alpha = j.value("alpha", c.alpha);
  if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"));
  const std::string area = j.value("area_term", std::string("complement"));
  if (area == "complement") {
    c.area = AreaTerm::kComplement;
  } else if (area == "energy") {
    c.area = AreaTerm::kEnergy;
  } else {
    fail(ErrorCode::kInvalidConfig, "area_term must be complement or energy", area);
  }
  c.embedder = feature_kind_from_string(j.value("embedder", std::string("randconv")), EmbedderKind::kRandomConv,
                                        EmbedderKind::kIdentity);
  return c;
}

std::unique_ptr<SemanticEmbedder> make_embedder(EmbedderKind kind, int channels) {
  if (kind == EmbedderKind::kIdentity) return std::make_unique<IdentityEmbedder>();
  return std::make_unique<RandomConvEmbedder>(channels);
}

ConvMasker train_masker(const std::vector<ImageTensor>& dataset, const MaskerConfig& config, Rng& rng,
                        const EpochCallback& on_epoch) {
  config.validate();
  require_uniform_shape(dataset);
  const int channels = dataset.front().channels();
  ConvMasker model(channels, config.hidden, rng.next_u64());
  model.seed = rng.seed();
  model.dataset_id = dataset_fingerprint(dataset);
  model.training_config = to_json(config);
  const auto embedder = make_embedder(config.embedder, channels);

  nn::ParameterList params = model.parameters();
  nn::Adam adam(config.learning_rate);
  std::vector<std::size_t> order = identity_order(dataset.size());
  const double g = config.gamma;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const ImageTensor x = dataset[order[i]].to_unit();
        ConvMasker::Trace trace;
        const RealMap logits = model.forward(x, trace);
        const SoftMask soft = soft_mask(logits, g);
        const PerturbationSigns signs = PerturbationSigns::draw(x.channels(), x.width(), x.height(), rng);
        const HideLossGrad hl =
            hide_loss_with_grad(soft, x, signs, config.weights, *embedder, config.alpha, config.area);
        total += hl.terms.total;
        RealMap grad_logits(logits.width, logits.height);
        for (std::size_t k = 0; k < grad_logits.values.size(); ++k) {
          const double s = soft.values()[k];
          grad_logits.values[k] = scale * hl.grad_soft.values[k] * g * s * (1.0 - s);
        }
        model.backward(trace, grad_logits);
      }
      adam.step(params);
    }
    const double epoch_loss = total / static_cast<double>(dataset.size());
    model.loss_history.push_back(epoch_loss);
    model.epochs = epoch + 1;
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return model;
}

// ------------------------------------------------------------- generator

int GeneratorArchitecture::input_size() const noexcept {
  const int side = 2 * context_radius + 1;
  return side * side * (channels + 1) + channels + 3;
}

MlpPixelGenerator::MlpPixelGenerator(const GeneratorArchitecture& arch, std::uint64_t init_seed) : arch_(arch) {
  if (arch.channels < 1 || arch.context_radius < 0 || arch.hidden < 1) {
    fail(ErrorCode::kInvalidConfig, "invalid pixel generator architecture");
  }
  Rng rng(init_seed);
  fc1_ = nn::Linear("fc1", arch.input_size(), arch.hidden, rng);
  fc2_ = nn::Linear("fc2", arch.hidden, arch.hidden, rng);
  out_ = nn::Linear("out", arch.hidden, arch.channels * PixelLogits::kLevels, rng);
  for (double& v : out_.weight.value) v *= 0.1;
}

std::vector<double> MlpPixelGenerator::context_features(const ImageTensor& canvas, const Mask& mask,
                                                        Cell position) const {
  const int w = canvas.width(), h = canvas.height(), ch = arch_.channels;
  if (canvas.channels() != ch) fail(ErrorCode::kShapeMismatch, "generator channel count mismatch");
  if (!mask.pixel_granularity() || mask.cols() != w || mask.rows() != h) {
    fail(ErrorCode::kShapeMismatch, "generator needs a pixel mask covering the canvas");
  }
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(arch_.input_size()));
  const int r = arch_.context_radius;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int x = position.x + dx, y = position.y + dy;
      const bool vis = x >= 0 && y >= 0 && x < w && y < h && mask.visible(x, y);
      for (int c = 0; c < ch; ++c) f.push_back(vis ? canvas.at(c, x, y) - 0.5 : 0.0);
      f.push_back(vis ? 1.0 : 0.0);
    }
  std::vector<double> sums(static_cast<std::size_t>(ch), 0.0);
  std::size_t visible = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.visible(x, y)) continue;
      ++visible;
      for (int c = 0; c < ch; ++c) sums[static_cast<std::size_t>(c)] += canvas.at(c, x, y);
    }
  for (int c = 0; c < ch; ++c) {
    f.push_back(visible ? sums[static_cast<std::size_t>(c)] / static_cast<double>(visible) - 0.5 : 0.0);
  }
  f.push_back(1.0 - static_cast<double>(visible) / static_cast<double>(canvas.pixel_count()));
  f.push_back(w > 1 ? static_cast<double>(position.x) / (w - 1) - 0.5 : 0.0);
  f.push_back(h > 1 ? static_cast<double>(position.y) / (h - 1) - 0.5 : 0.0);
  return f;
}

PixelLogits MlpPixelGenerator::forward(std::span<const double> features, Trace& t) const {
  t.input.assign(features.begin(), features.end());
  t.pre1.assign(static_cast<std::size_t>(arch_.hidden), 0.0);
  fc1_.forward(t.input, t.pre1);
  t.act1 = t.pre1;
  nn::relu(t.act1);
  t.pre2.assign(static_cast<std::size_t>(arch_.hidden), 0.0);
  fc2_.forward(t.act1, t.pre2);
  t.act2 = t.pre2;
  nn::relu(t.act2);
  PixelLogits logits(arch_.channels);
  out_.forward(t.act2, logits.values());
  return logits;
}

PixelLogits MlpPixelGenerator::predict(const ImageTensor& canvas, const Mask& mask, Cell position) const {
  Trace t;
  return forward(context_features(canvas, mask, position), t);
}

void MlpPixelGenerator::backward(const Trace& t, const PixelLogits& grad_logits) {
  std::vector<double> g2(static_cast<std::size_t>(arch_.hidden)), g1(static_cast<std::size_t>(arch_.hidden));
  out_.backward(t.act2, grad_logits.values(), g2);
  nn::relu_backward(t.pre2, g2);
  fc2_.backward(t.act1, g2, g1);
  nn::relu_backward(t.pre1, g1);
  fc1_.backward(t.input, g1, {});
}

nn::ParameterList MlpPixelGenerator::parameters() {
  nn::ParameterList p;
  fc1_.collect(p);
  fc2_.collect(p);
  out_.collect(p);
  return p;
}

void GeneratorConfig::validate() const {
  if (epochs < 1 || queries_per_image < 1 || batch_size < 1) {
    fail(ErrorCode::kInvalidConfig, "generator training sizes must be positive");
  }
  if (!(learning_rate > 0.0)) fail(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  if (!(hidden_min > 0.0 && hidden_min <= hidden_max && hidden_max < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "hidden fraction range must satisfy 0 < min <= max < 1");
  }
  weights.validate();
}

nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"context_radius", c.architecture.context_radius},
          {"hidden", c.architecture.hidden},
          {"epochs", c.epochs},
          {"queries_per_image", c.queries_per_image},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"hidden_min", c.hidden_min},
          {"hidden_max", c.hidden_max},
          {"weights", to_json(c.weights)},
          {"extractor", to_string(c.extractor)}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.architecture.context_radius = j.value("context_radius", c.architecture.context_radius);
  c.architecture.hidden = j.value("hidden", c.architecture.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.queries_per_image = j.value("queries_per_image", c.queries_per_image);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.hidden_min = j.value("hidden_min", c.hidden_min);
  c.hidden_max = j.value("hidden_max", c.hidden_max);
  if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"));
  c.extractor = feature_kind_from_string(j.value("extractor", std::string("randconv")), ExtractorKind::kRandomConv,
                                         ExtractorKind::kIdentity);
  return c;
}

std::unique_ptr<PerceptualExtractor> make_extractor(ExtractorKind kind, int channels) {
  if (kind == ExtractorKind::kIdentity) return std::make_unique<IdentityExtractor>();
  return std::make_unique<RandomConvExtractor>(channels);
}

MlpPixelGenerator train_generator(const std::vector<ImageTensor>& dataset, const GeneratorConfig& config, Rng& rng,
                                  const EpochCallback& on_epoch) {
  config.validate();
  require_uniform_shape(dataset);
  GeneratorArchitecture arch = config.architecture;
  arch.channels = dataset.front().channels();
  MlpPixelGenerator model(arch, rng.next_u64());
  model.seed = rng.seed();
  model.dataset_id = dataset_fingerprint(dataset);
  model.training_config = to_json(config);
  const auto extractor = make_extractor(config.extractor, arch.channels);

  const int w = dataset.front().width(), h = dataset.front().height();
  const PatchGrid grid(w, h, 1);
  nn::ParameterList params = model.parameters();
  nn::Adam adam(config.learning_rate);

  std::vector<std::size_t> order;
  for (int q = 0; q < config.queries_per_image; ++q)
    for (std::size_t i = 0; i < dataset.size(); ++i) order.push_back(i);
  constexpr int kLevels = PixelLogits::kLevels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const ImageTensor x = dataset[order[i]].to_unit();
        const double fraction = rng.uniform(config.hidden_min, config.hidden_max);
        const Mask mask = create_random_mask(grid, fraction, rng);
        const std::vector<Cell> hidden = mask.hidden_cells();
        const Cell pos = hidden[rng.index(hidden.size())];
        const ImageTensor masked = apply_mask(x, mask);

        MlpPixelGenerator::Trace trace;
        const PixelLogits logits = model.forward(model.context_features(masked, mask, pos), trace);
        std::vector<int> target(static_cast<std::size_t>(arch.channels));
        for (int c = 0; c < arch.channels; ++c) target[static_cast<std::size_t>(c)] = quantize_level(x.at(c, pos.x, pos.y));

        PixelLogits grad = pixel_loss_grad(logits, target);
        double loss = config.weights.pixel * pixel_loss(logits, target);
        for (double& v : grad.values()) v *= config.weights.pixel;

        if (config.weights.perceptual > 0.0) {
          // The two canvases differ only at `pos`, so the term is evaluated
          // on a window around it.
          const int cw = std::min(w, kPerceptualWindow), ch = std::min(h, kPerceptualWindow);
          const int x0 = std::clamp(pos.x - cw / 2, 0, w - cw), y0 = std::clamp(pos.y - ch / 2, 0, h - ch);
          ImageTensor revealed(arch.channels, cw, ch);
          for (int c = 0; c < arch.channels; ++c)
            for (int y = 0; y < ch; ++y)
              for (int xx = 0; xx < cw; ++xx) revealed.at(c, xx, y) = masked.at(c, x0 + xx, y0 + y);
          ImageTensor predicted = revealed;
          std::vector<std::vector<double>> probs;
          for (int c = 0; c < arch.channels; ++c) {
            probs.push_back(logits.probabilities(c));
            double expected = 0.0;
            for (int k = 0; k < kLevels; ++k) expected += probs.back()[static_cast<std::size_t>(k)] * k;
            revealed.at(c, pos.x - x0, pos.y - y0) = x.at(c, pos.x, pos.y);
            predicted.at(c, pos.x - x0, pos.y - y0) = expected / 255.0;
          }
          loss += config.weights.perceptual * perceptual_loss(revealed, predicted, *extractor);
          const ImageTensor g_img = perceptual_loss_grad(revealed, predicted, *extractor);
          for (int c = 0; c < arch.channels; ++c) {
            const double dl_dv = config.weights.perceptual * g_img.at(c, pos.x - x0, pos.y - y0) / 255.0;
            const auto& p = probs[static_cast<std::size_t>(c)];
            double expected = 0.0;
            for (int k = 0; k < kLevels; ++k) expected += p[static_cast<std::size_t>(k)] * k;
            // d E[level] / d z_k = p_k (k - E[level]).
            for (int k = 0; k < kLevels; ++k) grad.at(c, k) += dl_dv * p[static_cast<std::size_t>(k)] * (k - expected);
          }
        }
        total += loss;
        for (double& v : grad.values()) v *= scale;
        model.backward(trace, grad);
      }
      adam.step(params);
    }
    const double epoch_loss = total / static_cast<double>(order.size());
    model.loss_history.push_back(epoch_loss);
    model.epochs = epoch + 1;
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return model;
}

// ----------------------------------------------------------------- decode

void DecodeMode::validate() const {
  if (kind == Kind::kSample && !(temperature > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "sampling temperature must be positive");
  }
}

nlohmann::json to_json(const DecodeMode& m) {
  if (m.kind == DecodeMode::Kind::kArgmax) return {{"kind", "argmax"}};
  return {{"kind", "sample"}, {"temperature", m.temperature}, {"seed", m.seed}};
}

DecodeMode decode_mode_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", std::string("sample"));
  if (kind == "argmax") return DecodeMode::argmax();
  if (kind != "sample") fail(ErrorCode::kInvalidConfig, "decode kind must be argmax or sample", kind);
  DecodeMode m = DecodeMode::sample(j.value("temperature", 1.0), j.value("seed", std::uint64_t{0}));
  m.validate();
  return m;
}

Decoded enc(const ImageTensor& masked, const Mask& mask, const PixelLogits& logits, Cell position,
            const DecodeMode& mode, Rng& rng) {
  mode.validate();
  if (!mask.pixel_granularity() || mask.cols() != masked.width() || mask.rows() != masked.height()) {
    fail(ErrorCode::kShapeMismatch, "decoding needs a pixel mask covering the image");
  }
  if (position.x < 0 || position.y < 0 || position.x >= mask.cols() || position.y >= mask.rows()) {
    fail(ErrorCode::kOutOfRange, "decode position outside the image");
  }
  if (mask.visible(position)) fail(ErrorCode::kInvalidArgument, "decode position is already visible");
  if (logits.channels() != masked.channels()) fail(ErrorCode::kShapeMismatch, "logit channel count mismatch");

  Decoded out{masked, mask, {}};
  for (int c = 0; c < masked.channels(); ++c) {
    int level = 0;
    if (mode.kind == DecodeMode::Kind::kArgmax) {
      const auto ch = logits.channel(c);
      level = static_cast<int>(std::max_element(ch.begin(), ch.end()) - ch.begin());
    } else {
      const std::vector<double> p = logits.probabilities(c, mode.temperature);
      const double u = rng.uniform();
      double acc = 0.0;
      level = PixelLogits::kLevels - 1;
      for (int k = 0; k < PixelLogits::kLevels; ++k) {
        acc += p[static_cast<std::size_t>(k)];
        if (u < acc) {
          level = k;
          break;
        }
      }
    }
    out.levels.push_back(level);
    out.image.at(c, position.x, position.y) =
        masked.domain() == ValueDomain::kU8 ? static_cast<double>(level) : level / 255.0;
  }
  out.mask.set(position, true);
  return out;
}

std::string_view to_string(OrderVariant v) {
  switch (v) {
    case OrderVariant::kOriginal: return "original";
    case OrderVariant::kInverse: return "inverse";
    case OrderVariant::kRandom: return "random";
  }
  return "original";
}

OrderVariant order_variant_from_string(std::string_view s) {
  if (s == "original") return OrderVariant::kOriginal;
  if (s == "inverse") return OrderVariant::kInverse;
  if (s == "random") return OrderVariant::kRandom;
  fail(ErrorCode::kInvalidConfig, "order must be original, inverse or random", std::string(s));
}

nlohmann::json to_json(const AttackReport& r) {
  return {{"hidden_count", r.hidden_count},
          {"score_histogram", r.score_histogram},
          {"order_hash", r.order_hash},
          {"order", r.order}};
}

HsPlusAttackResult attack_hsplus_detailed(const MaskingModel& masker, const PixelPredictor& generator,
                                          const ImageTensor& image, const HsPlusOptions& options,
                                          const DecodeMode& mode, const Mask* mask_override) {
  mode.validate();
  if (generator.channels() != image.channels()) fail(ErrorCode::kModelMismatch, "generator channel count mismatch");
  const RealMap logits = masker.logits(image);
  if (logits.width != image.width() || logits.height != image.height()) {
    fail(ErrorCode::kModelMismatch, "masker output extent differs from the image");
  }
  HsPlusAttackResult res;
  const SoftMask soft = soft_mask(logits, options.gamma);
  res.scores = RealMap(image.width(), image.height());
  res.scores.values = soft.values();
  if (mask_override) {
    if (!mask_override->pixel_granularity() || mask_override->cols() != image.width() ||
        mask_override->rows() != image.height()) {
      fail(ErrorCode::kShapeMismatch, "mask override must be a pixel mask covering the image");
    }
    res.mask = *mask_override;
  } else {
    res.mask = harden(soft, options.threshold);
    if (options.hidden_budget) res.mask = limit_hidden(res.mask, res.scores, *options.hidden_budget);
  }
  const std::size_t hidden = res.mask.hidden_count();
  if (hidden > options.max_hidden) {
    fail(ErrorCode::kOutOfRange, "hidden pixel count exceeds the configured maximum",
         std::to_string(hidden) + " > " + std::to_string(options.max_hidden));
  }

  std::vector<Cell> order = reconstruction_order(res.scores, res.mask);
  if (options.order == OrderVariant::kInverse) {
    std::reverse(order.begin(), order.end());
  } else if (options.order == OrderVariant::kRandom) {
    Rng order_rng(options.order_seed);
    order_rng.shuffle(std::span<Cell>(order));
  }

  res.report.hidden_count = hidden;
  res.report.order = std::string(to_string(options.order));
  res.report.score_histogram.assign(10, 0);
  for (double s : res.scores.values) ++res.report.score_histogram[std::min<std::size_t>(9, static_cast<std::size_t>(s * 10.0))];
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Cell& c : order) {
    for (int v : {c.x, c.y}) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
      h *= 0x100000001b3ULL;
    }
  }
  res.report.order_hash = hex64(h);

  // The canvas is kept in unit_float for the generator; `out` holds the
  // result in the input's domain so visible pixels are never converted.
  ImageTensor canvas = apply_mask(image.to_unit(), res.mask);
  ImageTensor out = image;
  Mask current = res.mask;
  Rng rng(mode.seed);
  for (const Cell& cell : order) {
    const PixelLogits logits_at = generator.predict(canvas, current, cell);
    Decoded d = enc(canvas, current, logits_at, cell, mode, rng);
    canvas = std::move(d.image);
    current = std::move(d.mask);
    for (int c = 0; c < image.channels(); ++c) {
      const int level = d.levels[static_cast<std::size_t>(c)];
      out.at(c, cell.x, cell.y) = image.domain() == ValueDomain::kU8 ? static_cast<double>(level) : level / 255.0;
    }
    res.steps.push_back({cell, res.scores.at(cell.x, cell.y), std::move(d.levels)});
  }
  res.purged = std::move(out);
  return res;
}

ImageTensor attack_hsplus(const MaskingModel& masker, const PixelPredictor& generator, const ImageTensor& image,
                          double gamma, const DecodeMode& mode) {
  HsPlusOptions options;
  options.gamma = gamma;
  return attack_hsplus_detailed(masker, generator, image, options, mode).purged;
}

// ------------------------------------------------------------ checkpoints

void save_masker(const std::filesystem::path& path, ConvMasker& model, int width, int height) {
  CheckpointManifest m;
  m.model_kind = kMaskerModelKind;
  m.channels = model.channels();
  m.width = width;
  m.height = height;
  m.seed = model.seed;
  m.epochs = model.epochs;
  m.dataset_id = model.dataset_id;
  m.architecture = {{"hidden", model.hidden()}};
  m.training = model.training_config;
  m.loss_history = model.loss_history;
  save_checkpoint(path, std::move(m), model.parameters());
}

ConvMasker load_masker(const std::filesystem::path& path) {
  const CheckpointManifest m = read_manifest(path);
  if (m.model_kind != kMaskerModelKind) fail(ErrorCode::kModelMismatch, "not a masker checkpoint", m.model_kind);
  ConvMasker model(m.channels, m.architecture.at("hidden").get<int>(), 0);
  load_checkpoint(path, kMaskerModelKind, model.parameters());
  model.seed = m.seed;
  model.epochs = m.epochs;
  model.dataset_id = m.dataset_id;
  model.loss_history = m.loss_history;
  model.training_config = m.training;
  return model;
}

void save_generator(const std::filesystem::path& path, MlpPixelGenerator& model, int width, int height) {
  const auto& a = model.architecture();
  CheckpointManifest m;
  m.model_kind = kGeneratorModelKind;
  m.channels = a.channels;
  m.width = width;
  m.height = height;
  m.seed = model.seed;
  m.epochs = model.epochs;
  m.dataset_id = model.dataset_id;
  m.architecture = {{"context_radius", a.context_radius}, {"hidden", a.hidden}};
  m.training = model.training_config;
  m.loss_history = model.loss_history;
  save_checkpoint(path, std::move(m), model.parameters());
}

MlpPixelGenerator load_generator(const std::filesystem::path& path) {
  const CheckpointManifest m = read_manifest(path);
  if (m.model_kind != kGeneratorModelKind) {
    fail(ErrorCode::kModelMismatch, "not a generator checkpoint", m.model_kind);
  }
  GeneratorArchitecture a;
  a.channels = m.channels;
  a.context_radius = m.architecture.at("context_radius").get<int>();
  a.hidden = m.architecture.at("hidden").get<int>();
  MlpPixelGenerator model(a, 0);
  load_checkpoint(path, kGeneratorModelKind, model.parameters());
  model.seed = m.seed;
  model.epochs = m.epochs;
  model.dataset_id = m.dataset_id;
  model.loss_history = m.loss_history;
  model.training_config = m.training;
  return model;
}

}  // namespace hideseek
