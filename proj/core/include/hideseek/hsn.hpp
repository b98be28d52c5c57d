#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/mask.hpp"
#include "hideseek/masking.hpp"
#include "hideseek/nn.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

struct HsnArchitecture {
  int channels = 3;
  int width = 64;
  int height = 64;
  int patch_size = 8;
  int latent = 64;           // token width Q
  int depth = 3;             // mixer blocks
  int token_hidden = 256;    // hidden width of the token-mixing MLP
  int channel_hidden = 256;  // hidden width of the per-token MLP
};

nlohmann::json to_json(const HsnArchitecture& a);
HsnArchitecture hsn_architecture_from_json(const nlohmann::json& j);

/// Patch-token autoencoder. Visible patches are embedded linearly, hidden
/// ones are replaced by a learned mask token; a positional embedding is
/// added, `depth` mixer blocks (token mixing, then per-token MLP, both
/// residual) run over the sequence, and a linear head with a sigmoid maps
/// every token back to its patch.
class MaskedAutoencoder {
 public:
  MaskedAutoencoder(const HsnArchitecture& arch, std::uint64_t init_seed);

  [[nodiscard]] const HsnArchitecture& architecture() const noexcept { return arch_; }
  [[nodiscard]] int tokens() const noexcept { return tokens_; }

  /// Unit-float prediction of every pixel. Hidden patches carry no content
  /// into the encoder.
  [[nodiscard]] ImageTensor reconstruct(const ImageTensor& image, const Mask& mask) const;

  /// Masked-region MSE of one sample; adds `scale` times its gradient to the
  /// parameter gradients. Returns 0 without touching gradients when the mask
  /// hides nothing.
  double accumulate_gradients(const ImageTensor& image, const Mask& mask, double scale);

  nn::ParameterList parameters();

  // Training provenance, persisted with the weights.
  std::uint64_t seed = 0;
  int epochs = 0;
  std::string dataset_id;
  std::vector<double> loss_history;
  nlohmann::json training_config = nlohmann::json::object();

 private:
  struct Block {
    nn::Linear token_in;
    nn::Linear token_out;
    nn::Linear channel_in;
    nn::Linear channel_out;
  };
  struct Trace;

  void check_inputs(const ImageTensor& image, const Mask& mask) const;
  [[nodiscard]] std::vector<double> patch_vector(const ImageTensor& unit, int token) const;
  void forward(const ImageTensor& unit, const Mask& mask, Trace& trace) const;

  HsnArchitecture arch_;
  int tokens_ = 0;
  int patch_dim_ = 0;
  nn::Linear embed_;
  nn::Parameter position_;
  nn::Parameter mask_token_;
  std::vector<Block> blocks_;
  nn::Linear head_;
};

struct HsnConfig {
  HsnArchitecture architecture;  // channels/width/height are taken from the data
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 2e-3;
  MaskKind train_mask = MaskKind::kRandom;
  double beta_min = 0.4;  // masking ratio drawn uniformly per sample
  double beta_max = 0.8;
  double early_stop_tolerance = 1e-4;
  int early_stop_window = 3;

  void validate() const;
};

nlohmann::json to_json(const HsnConfig& c);
HsnConfig hsn_config_from_json(const nlohmann::json& j);

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Trains until the epoch budget runs out or the best epoch loss of the last
/// `early_stop_window` epochs improves on the best before them by less than
/// the relative tolerance.
MaskedAutoencoder train_hsn(const std::vector<ImageTensor>& dataset, const HsnConfig& config, Rng& rng,
                            const EpochCallback& on_epoch = {});

struct HsnAttackResult {
  ImageTensor purged;
  Mask mask;
};

/// Hidden patches take the model's prediction, quantized to u8 levels;
/// visible pixels are copied from the input unchanged. The output keeps the
/// input's value domain.
HsnAttackResult attack_hsn_with_mask(const MaskedAutoencoder& model, const ImageTensor& image, const Mask& mask);
HsnAttackResult attack_hsn_detailed(const MaskedAutoencoder& model, const ImageTensor& image,
                                    const MaskStrategy& strategy, Rng& rng);
ImageTensor attack_hsn(const MaskedAutoencoder& model, const ImageTensor& image, const MaskStrategy& strategy,
                       Rng& rng);

inline constexpr const char* kHsnModelKind = "hsn-mae";

void save_hsn(const std::filesystem::path& path, MaskedAutoencoder& model);
MaskedAutoencoder load_hsn(const std::filesystem::path& path);

}  // namespace hideseek
