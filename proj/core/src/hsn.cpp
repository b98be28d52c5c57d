#include "hideseek/hsn.hpp"

#include <algorithm>
#include <cmath>

#include "hideseek/checkpoint.hpp"
#include "hideseek/dataset.hpp"
#include "hideseek/error.hpp"

namespace hideseek {

nlohmann::json to_json(const HsnArchitecture& a) {
  return {{"channels", a.channels},         {"width", a.width},   {"height", a.height},
          {"patch_size", a.patch_size},     {"latent", a.latent}, {"depth", a.depth},
          {"token_hidden", a.token_hidden}, {"channel_hidden", a.channel_hidden}};
}

HsnArchitecture hsn_architecture_from_json(const nlohmann::json& j) {
  HsnArchitecture a;
  a.channels = j.value("channels", a.channels);
  a.width = j.value("width", a.width);
  a.height = j.value("height", a.height);
  a.patch_size = j.value("patch_size", a.patch_size);
  a.latent = j.value("latent", a.latent);
  a.depth = j.value("depth", a.depth);
  a.token_hidden = j.value("token_hidden", a.token_hidden);
  a.channel_hidden = j.value("channel_hidden", a.channel_hidden);
  return a;
}

struct MaskedAutoencoder::Trace {
  std::vector<std::vector<double>> patches;  // filled for visible tokens only
  std::vector<std::uint8_t> visible;
  std::vector<std::vector<double>> x;            // block inputs, then the final sequence
  std::vector<std::vector<double>> y;            // after token mixing
  std::vector<std::vector<double>> token_pre;    // [q][hidden] pre-activations
  std::vector<std::vector<double>> channel_pre;  // [n][hidden] pre-activations
  std::vector<double> out;                       // [n][patch] sigmoid outputs
};

MaskedAutoencoder::MaskedAutoencoder(const HsnArchitecture& arch, std::uint64_t init_seed) : arch_(arch) {
  if (arch.channels < 1 || arch.latent < 1 || arch.depth < 0 || arch.token_hidden < 1 || arch.channel_hidden < 1) {
    fail(ErrorCode::kInvalidConfig, "invalid masked-autoencoder architecture");
  }
  const PatchGrid grid(arch.width, arch.height, arch.patch_size);
  tokens_ = static_cast<int>(grid.cell_count());
  patch_dim_ = arch.channels * arch.patch_size * arch.patch_size;

  Rng rng(init_seed);
  embed_ = nn::Linear("embed", patch_dim_, arch.latent, rng);
  position_ = nn::Parameter("position", static_cast<std::size_t>(tokens_) * arch.latent);
  for (double& v : position_.value) v = 0.02 * rng.normal();
  mask_token_ = nn::Parameter("mask_token", static_cast<std::size_t>(arch.latent));
  for (int d = 0; d < arch.depth; ++d) {
    const std::string p = "block" + std::to_string(d) + ".";
    Block b{nn::Linear(p + "token_in", tokens_, arch.token_hidden, rng),
            nn::Linear(p + "token_out", arch.token_hidden, tokens_, rng),
            nn::Linear(p + "channel_in", arch.latent, arch.channel_hidden, rng),
            nn::Linear(p + "channel_out", arch.channel_hidden, arch.latent, rng)};
    // Residual branches start small so the stack begins close to identity.
    for (double& v : b.token_out.weight.value) v *= 0.1;
    for (double& v : b.channel_out.weight.value) v *= 0.1;
    blocks_.push_back(std::move(b));
  }
  head_ = nn::Linear("head", arch.latent, patch_dim_, rng);
}

nn::ParameterList MaskedAutoencoder::parameters() {
  nn::ParameterList params;
  embed_.collect(params);
  params.push_back(&position_);
  params.push_back(&mask_token_);
  for (auto& b : blocks_) {
    b.token_in.collect(params);
    b.token_out.collect(params);
    b.channel_in.collect(params);
    b.channel_out.collect(params);
  }
  head_.collect(params);
  return params;
}

void MaskedAutoencoder::check_inputs(const ImageTensor& image, const Mask& mask) const {
  if (image.channels() != arch_.channels || image.width() != arch_.width || image.height() != arch_.height) {
    fail(ErrorCode::kShapeMismatch, "image shape differs from the model's");
  }
  if (mask.cell_size() != arch_.patch_size || mask.pixel_width() != arch_.width ||
      mask.pixel_height() != arch_.height) {
    fail(ErrorCode::kShapeMismatch, "mask does not tile the model's patch grid");
  }
}

std::vector<double> MaskedAutoencoder::patch_vector(const ImageTensor& unit, int token) const {
  const int p = arch_.patch_size;
  const int cols = arch_.width / p;
  const int x0 = (token % cols) * p;
  const int y0 = (token / cols) * p;
  std::vector<double> v(static_cast<std::size_t>(patch_dim_));
  std::size_t k = 0;
  for (int c = 0; c < arch_.channels; ++c)
    for (int dy = 0; dy < p; ++dy)
      for (int dx = 0; dx < p; ++dx) v[k++] = unit.at(c, x0 + dx, y0 + dy);
  return v;
}

void MaskedAutoencoder::forward(const ImageTensor& unit, const Mask& mask, Trace& t) const {
  const int n_tok = tokens_;
  const int q_dim = arch_.latent;
  const int depth = arch_.depth;
  const auto sz = [](int a, int b) { return static_cast<std::size_t>(a) * static_cast<std::size_t>(b); };

  t.patches.assign(static_cast<std::size_t>(n_tok), {});
  t.visible.assign(static_cast<std::size_t>(n_tok), 0);
  t.x.assign(static_cast<std::size_t>(depth) + 1, std::vector<double>(sz(n_tok, q_dim)));
  t.y.assign(static_cast<std::size_t>(depth), std::vector<double>(sz(n_tok, q_dim)));
  t.token_pre.assign(static_cast<std::size_t>(depth), std::vector<double>(sz(q_dim, arch_.token_hidden)));
  t.channel_pre.assign(static_cast<std::size_t>(depth), std::vector<double>(sz(n_tok, arch_.channel_hidden)));
  t.out.assign(sz(n_tok, patch_dim_), 0.0);

  const int cols = mask.cols();
  auto& x0 = t.x[0];
  for (int n = 0; n < n_tok; ++n) {
    std::span<double> row(x0.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim));
    const bool vis = mask.visible(n % cols, n / cols);
    t.visible[static_cast<std::size_t>(n)] = vis ? 1 : 0;
    if (vis) {
      t.patches[static_cast<std::size_t>(n)] = patch_vector(unit, n);
      embed_.forward(t.patches[static_cast<std::size_t>(n)], row);
    } else {
      std::copy(mask_token_.value.begin(), mask_token_.value.end(), row.begin());
    }
    for (int q = 0; q < q_dim; ++q) row[q] += position_.value[sz(n, q_dim) + q];
  }

  std::vector<double> col(static_cast<std::size_t>(n_tok)), act(static_cast<std::size_t>(arch_.token_hidden)),
      back(static_cast<std::size_t>(n_tok)), cact(static_cast<std::size_t>(arch_.channel_hidden)),
      cback(static_cast<std::size_t>(q_dim));
  for (int d = 0; d < depth; ++d) {
    const Block& b = blocks_[static_cast<std::size_t>(d)];
    const auto& x = t.x[static_cast<std::size_t>(d)];
    auto& y = t.y[static_cast<std::size_t>(d)];
    y = x;
    for (int q = 0; q < q_dim; ++q) {
      for (int n = 0; n < n_tok; ++n) col[static_cast<std::size_t>(n)] = x[sz(n, q_dim) + q];
      std::span<double> pre(t.token_pre[static_cast<std::size_t>(d)].data() + sz(q, arch_.token_hidden),
                            static_cast<std::size_t>(arch_.token_hidden));
      b.token_in.forward(col, pre);
      std::copy(pre.begin(), pre.end(), act.begin());
      nn::relu(act);
      b.token_out.forward(act, back);
      for (int n = 0; n < n_tok; ++n) y[sz(n, q_dim) + q] += back[static_cast<std::size_t>(n)];
    }
    auto& z = t.x[static_cast<std::size_t>(d) + 1];
    z = y;
    for (int n = 0; n < n_tok; ++n) {
      std::span<const double> row(y.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim));
      std::span<double> pre(t.channel_pre[static_cast<std::size_t>(d)].data() + sz(n, arch_.channel_hidden),
                            static_cast<std::size_t>(arch_.channel_hidden));
      b.channel_in.forward(row, pre);
      std::copy(pre.begin(), pre.end(), cact.begin());
      nn::relu(cact);
      b.channel_out.forward(cact, cback);
      for (int q = 0; q < q_dim; ++q) z[sz(n, q_dim) + q] += cback[static_cast<std::size_t>(q)];
    }
  }

  const auto& last = t.x[static_cast<std::size_t>(depth)];
  for (int n = 0; n < n_tok; ++n) {
    std::span<const double> row(last.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim));
    std::span<double> out(t.out.data() + sz(n, patch_dim_), static_cast<std::size_t>(patch_dim_));
    head_.forward(row, out);
    for (double& v : out) v = nn::sigmoid(v);
  }
}

ImageTensor MaskedAutoencoder::reconstruct(const ImageTensor& image, const Mask& mask) const {
  check_inputs(image, mask);
  Trace t;
  forward(image.to_unit(), mask, t);
  ImageTensor out(arch_.channels, arch_.width, arch_.height, ValueDomain::kUnitFloat);
  const int p = arch_.patch_size;
  const int cols = arch_.width / p;
  for (int n = 0; n < tokens_; ++n) {
    const int x0 = (n % cols) * p, y0 = (n / cols) * p;
    std::size_t k = static_cast<std::size_t>(n) * static_cast<std::size_t>(patch_dim_);
    for (int c = 0; c < arch_.channels; ++c)
      for (int dy = 0; dy < p; ++dy)
        for (int dx = 0; dx < p; ++dx) out.at(c, x0 + dx, y0 + dy) = t.out[k++];
  }
  return out;
}

double MaskedAutoencoder::accumulate_gradients(const ImageTensor& image, const Mask& mask, double scale) {
  check_inputs(image, mask);
  const std::size_t hidden = mask.hidden_count();
  if (hidden == 0) return 0.0;

  const ImageTensor unit = image.to_unit();
  Trace t;
  forward(unit, mask, t);

  const int n_tok = tokens_;
  const int q_dim = arch_.latent;
  const auto sz = [](int a, int b) { return static_cast<std::size_t>(a) * static_cast<std::size_t>(b); };
  const double count = static_cast<double>(hidden) * patch_dim_;

  // Head and loss.
  double loss = 0.0;
  std::vector<double> g_seq(sz(n_tok, q_dim), 0.0);
  std::vector<double> g_out(static_cast<std::size_t>(patch_dim_));
  const auto& last = t.x[static_cast<std::size_t>(arch_.depth)];
  for (int n = 0; n < n_tok; ++n) {
    if (t.visible[static_cast<std::size_t>(n)]) continue;
    const std::vector<double> target = patch_vector(unit, n);
    for (int k = 0; k < patch_dim_; ++k) {
      const double o = t.out[sz(n, patch_dim_) + k];
      const double diff = o - target[static_cast<std::size_t>(k)];
      loss += diff * diff;
      g_out[static_cast<std::size_t>(k)] = scale * 2.0 * diff / count * o * (1.0 - o);
    }
    head_.backward(std::span<const double>(last.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim)), g_out,
                   std::span<double>(g_seq.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim)));
  }
  loss /= count;

  std::vector<double> grad_hidden_c(static_cast<std::size_t>(arch_.channel_hidden)),
      act_c(static_cast<std::size_t>(arch_.channel_hidden)), g_row(static_cast<std::size_t>(q_dim)),
      g_back(static_cast<std::size_t>(n_tok)), grad_hidden_t(static_cast<std::size_t>(arch_.token_hidden)),
      act_t(static_cast<std::size_t>(arch_.token_hidden)), col(static_cast<std::size_t>(n_tok)),
      g_col(static_cast<std::size_t>(n_tok));
  for (int d = arch_.depth - 1; d >= 0; --d) {
    Block& b = blocks_[static_cast<std::size_t>(d)];
    const auto& x = t.x[static_cast<std::size_t>(d)];
    const auto& y = t.y[static_cast<std::size_t>(d)];

    // Per-token MLP: z = y + out(relu(in(y))).
    std::vector<double> g_y = g_seq;
    for (int n = 0; n < n_tok; ++n) {
      std::span<const double> pre(t.channel_pre[static_cast<std::size_t>(d)].data() + sz(n, arch_.channel_hidden),
                                  static_cast<std::size_t>(arch_.channel_hidden));
      std::copy(pre.begin(), pre.end(), act_c.begin());
      nn::relu(act_c);
      std::span<const double> g_z(g_seq.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim));
      b.channel_out.backward(act_c, g_z, grad_hidden_c);
      nn::relu_backward(pre, grad_hidden_c);
      b.channel_in.backward(std::span<const double>(y.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim)),
                            grad_hidden_c, g_row);
      for (int q = 0; q < q_dim; ++q) g_y[sz(n, q_dim) + q] += g_row[static_cast<std::size_t>(q)];
    }

    // Token mixing: y[:, q] = x[:, q] + out(relu(in(x[:, q]))).
    std::vector<double> g_x = g_y;
    for (int q = 0; q < q_dim; ++q) {
      std::span<const double> pre(t.token_pre[static_cast<std::size_t>(d)].data() + sz(q, arch_.token_hidden),
                                  static_cast<std::size_t>(arch_.token_hidden));
      std::copy(pre.begin(), pre.end(), act_t.begin());
      nn::relu(act_t);
      for (int n = 0; n < n_tok; ++n) {
        g_back[static_cast<std::size_t>(n)] = g_y[sz(n, q_dim) + q];
        col[static_cast<std::size_t>(n)] = x[sz(n, q_dim) + q];
      }
      b.token_out.backward(act_t, g_back, grad_hidden_t);
      nn::relu_backward(pre, grad_hidden_t);
      b.token_in.backward(col, grad_hidden_t, g_col);
      for (int n = 0; n < n_tok; ++n) g_x[sz(n, q_dim) + q] += g_col[static_cast<std::size_t>(n)];
    }
    g_seq = std::move(g_x);
  }

  for (int n = 0; n < n_tok; ++n) {
    std::span<const double> g(g_seq.data() + sz(n, q_dim), static_cast<std::size_t>(q_dim));
    for (int q = 0; q < q_dim; ++q) position_.grad[sz(n, q_dim) + q] += g[static_cast<std::size_t>(q)];
    if (t.visible[static_cast<std::size_t>(n)]) {
      embed_.backward(t.patches[static_cast<std::size_t>(n)], g, {});
    } else {
      for (int q = 0; q < q_dim; ++q) mask_token_.grad[static_cast<std::size_t>(q)] += g[static_cast<std::size_t>(q)];
    }
  }
  return loss;
}

void HsnConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::kInvalidConfig, "epochs must be at least 1");
  if (batch_size < 1) fail(ErrorCode::kInvalidConfig, "batch_size must be at least 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "masking ratio range must satisfy 0 < beta_min <= beta_max < 1");
  }
  if (early_stop_window < 1) fail(ErrorCode::kInvalidConfig, "early_stop_window must be at least 1");
}

nlohmann::json to_json(const HsnConfig& c) {
  return {{"architecture", to_json(c.architecture)},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"train_mask", to_string(c.train_mask)},
          {"beta_min", c.beta_min},
          {"beta_max", c.beta_max},
          {"early_stop_tolerance", c.early_stop_tolerance},
          {"early_stop_window", c.early_stop_window}};
}

HsnConfig hsn_config_from_json(const nlohmann::json& j) {
  HsnConfig c;
  if (j.contains("architecture")) c.architecture = hsn_architecture_from_json(j.at("architecture"));
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("train_mask")) c.train_mask = mask_kind_from_string(j.at("train_mask").get<std::string>());
  c.beta_min = j.value("beta_min", c.beta_min);
  c.beta_max = j.value("beta_max", c.beta_max);
  c.early_stop_tolerance = j.value("early_stop_tolerance", c.early_stop_tolerance);
  c.early_stop_window = j.value("early_stop_window", c.early_stop_window);
  return c;
}

MaskedAutoencoder train_hsn(const std::vector<ImageTensor>& dataset, const HsnConfig& config, Rng& rng,
                            const EpochCallback& on_epoch) {
  config.validate();
  require_uniform_shape(dataset);
  HsnArchitecture arch = config.architecture;
  arch.channels = dataset.front().channels();
  arch.width = dataset.front().width();
  arch.height = dataset.front().height();

  const std::uint64_t init_seed = rng.next_u64();
  MaskedAutoencoder model(arch, init_seed);
  model.seed = rng.seed();
  model.dataset_id = dataset_fingerprint(dataset);
  model.training_config = to_json(config);

  const PatchGrid grid(arch.width, arch.height, arch.patch_size);
  // Scattered masks cannot hide more than an independent set.
  const double beta_cap = config.train_mask == MaskKind::kScattered
                              ? static_cast<double>(max_independent_cells(grid)) / grid.cell_count()
                              : 1.0;

  nn::ParameterList params = model.parameters();
  nn::Adam adam(config.learning_rate);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const double beta = std::min(rng.uniform(config.beta_min, config.beta_max), beta_cap);
        const Mask mask = create_mask(grid, {config.train_mask, beta}, rng);
        if (mask.hidden_count() == 0) continue;
        total += model.accumulate_gradients(dataset[order[i]], mask, scale);
        ++counted;
      }
      adam.step(params);
    }
    const double epoch_loss = counted ? total / static_cast<double>(counted) : 0.0;
    model.loss_history.push_back(epoch_loss);
    model.epochs = epoch + 1;
    if (on_epoch) on_epoch(epoch, epoch_loss);

    // The epoch loss is noisy (masks and ratios are redrawn every epoch), so
    // compare best-so-far values rather than single epochs.
    const auto& h = model.loss_history;
    const auto w = static_cast<std::size_t>(config.early_stop_window);
    if (h.size() > w) {
      const double before = *std::min_element(h.begin(), h.end() - static_cast<std::ptrdiff_t>(w));
      const double recent = *std::min_element(h.end() - static_cast<std::ptrdiff_t>(w), h.end());
      if (before > 0.0 && (before - recent) / before < config.early_stop_tolerance) break;
    }
  }
  return model;
}

HsnAttackResult attack_hsn_with_mask(const MaskedAutoencoder& model, const ImageTensor& image, const Mask& mask) {
  const ImageTensor prediction = model.reconstruct(image, mask);
  ImageTensor out = image;
  const bool u8 = image.domain() == ValueDomain::kU8;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (mask.pixel_visible(x, y)) continue;
      for (int c = 0; c < image.channels(); ++c) {
        const int level = quantize_level(prediction.at(c, x, y));
        out.at(c, x, y) = u8 ? static_cast<double>(level) : level / 255.0;
      }
    }
  return {std::move(out), mask};
}

HsnAttackResult attack_hsn_detailed(const MaskedAutoencoder& model, const ImageTensor& image,
                                    const MaskStrategy& strategy, Rng& rng) {
  const auto& a = model.architecture();
  if (image.channels() != a.channels || image.width() != a.width || image.height() != a.height) {
    fail(ErrorCode::kShapeMismatch, "image shape differs from the model's");
  }
  const PatchGrid grid(a.width, a.height, a.patch_size);
  return attack_hsn_with_mask(model, image, create_mask(grid, strategy, rng));
}

ImageTensor attack_hsn(const MaskedAutoencoder& model, const ImageTensor& image, const MaskStrategy& strategy,
                       Rng& rng) {
  return attack_hsn_detailed(model, image, strategy, rng).purged;
}

void save_hsn(const std::filesystem::path& path, MaskedAutoencoder& model) {
  const auto& a = model.architecture();
  CheckpointManifest m;
  m.model_kind = kHsnModelKind;
  m.channels = a.channels;
  m.width = a.width;
  m.height = a.height;
  m.patch_size = a.patch_size;
  m.seed = model.seed;
  m.epochs = model.epochs;
  m.dataset_id = model.dataset_id;
  m.architecture = to_json(a);
  m.training = model.training_config;
  m.loss_history = model.loss_history;
  save_checkpoint(path, std::move(m), model.parameters());
}

MaskedAutoencoder load_hsn(const std::filesystem::path& path) {
  const CheckpointManifest m = read_manifest(path);
  if (m.model_kind != kHsnModelKind) fail(ErrorCode::kModelMismatch, "not an HSN checkpoint", m.model_kind);
  MaskedAutoencoder model(hsn_architecture_from_json(m.architecture), 0);
  load_checkpoint(path, kHsnModelKind, model.parameters());
  model.seed = m.seed;
  model.epochs = m.epochs;
  model.dataset_id = m.dataset_id;
  model.loss_history = m.loss_history;
  model.training_config = m.training;
  return model;
}

}  // namespace hideseek
