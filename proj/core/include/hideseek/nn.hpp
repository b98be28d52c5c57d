#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/rng.hpp"

// Minimal dense/conv layers with hand-written backward passes. Everything is
// double precision and single threaded so that training is bit-reproducible.
namespace hideseek::nn {

struct Parameter {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}
  void zero_grad() noexcept { std::fill(grad.begin(), grad.end(), 0.0); }
};

using ParameterList = std::vector<Parameter*>;

/// y = W x + b with W stored row-major as [out][in].
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features, Rng& rng);

  [[nodiscard]] int in_features() const noexcept { return in_; }
  [[nodiscard]] int out_features() const noexcept { return out_; }

  void forward(std::span<const double> in, std::span<double> out) const;
  /// Accumulates parameter gradients; writes d loss / d in when grad_in is
  /// non-empty.
  void backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in);

  void collect(ParameterList& params) { params.push_back(&weight); params.push_back(&bias); }

  Parameter weight;
  Parameter bias;

 private:
  int in_ = 0;
  int out_ = 0;
};

/// Channel-major feature volume.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}

  double& at(int c, int y, int x) noexcept {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  [[nodiscard]] double at(int c, int y, int x) const noexcept {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

FeatureMap to_feature_map(const ImageTensor& image);
ImageTensor to_image(const FeatureMap& map, ValueDomain domain = ValueDomain::kUnitFloat);

/// Square-kernel 2D convolution with zero padding.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng);

  [[nodiscard]] int out_channels() const noexcept { return out_; }
  [[nodiscard]] int output_size(int input) const noexcept { return (input + 2 * pad_ - k_) / stride_ + 1; }

  [[nodiscard]] FeatureMap forward(const FeatureMap& in) const;
  /// Returns d loss / d in and accumulates parameter gradients.
  FeatureMap backward(const FeatureMap& in, const FeatureMap& grad_out);
  /// d loss / d in only; parameters untouched.
  [[nodiscard]] FeatureMap input_grad(const FeatureMap& in, const FeatureMap& grad_out) const;

  void collect(ParameterList& params) { params.push_back(&weight); params.push_back(&bias); }

  Parameter weight;  // [out][in][k][k]
  Parameter bias;

 private:
  FeatureMap backward_impl(const FeatureMap& in, const FeatureMap& grad_out, Parameter* gw, Parameter* gb) const;

  int in_ = 0;
  int out_ = 0;
  int k_ = 1;
  int stride_ = 1;
  int pad_ = 0;
};

void relu(std::span<double> values) noexcept;
/// grad *= (pre > 0).
void relu_backward(std::span<const double> pre_activation, std::span<double> grad) noexcept;
double sigmoid(double z) noexcept;

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  /// One update of every parameter from its accumulated gradient, then
  /// zeroes the gradients. The list must be the same on every call.
  void step(const ParameterList& params);
  [[nodiscard]] std::int64_t steps() const noexcept { return t_; }

 private:
  double lr_;
  double b1_;
  double b2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

void zero_grad(const ParameterList& params) noexcept;

nlohmann::json parameters_to_json(const ParameterList& params);
/// Fills `params` by name; throws kModelMismatch on a missing name or a size
/// mismatch.
void parameters_from_json(const nlohmann::json& j, const ParameterList& params);

/// FNV-1a over the raw bytes of every parameter value, in list order.
std::uint64_t parameter_hash(const ParameterList& params);

}  // namespace hideseek::nn
