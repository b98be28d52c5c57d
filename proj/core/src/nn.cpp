#include "hideseek/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hideseek/error.hpp"

namespace hideseek::nn {

namespace {

void init_uniform(std::vector<double>& values, double limit, Rng& rng) {
  for (double& v : values) v = rng.uniform(-limit, limit);
}

}  // namespace

Linear::Linear(std::string name, int in_features, int out_features, Rng& rng)
    : weight(name + ".weight", static_cast<std::size_t>(in_features) * out_features),
      bias(name + ".bias", static_cast<std::size_t>(out_features)),
      in_(in_features),
      out_(out_features) {
  // He-uniform; the layers feed ReLUs.
  init_uniform(weight.value, std::sqrt(6.0 / in_features), rng);
}

void Linear::forward(std::span<const double> in, std::span<double> out) const {
  const double* w = weight.value.data();
  for (int o = 0; o < out_; ++o) {
    double acc = bias.value[o];
    const double* row = w + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void Linear::backward(std::span<const double> in, std::span<const double> grad_out, std::span<double> grad_in) {
  double* gw = weight.grad.data();
  const double* w = weight.value.data();
  if (!grad_in.empty()) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (int o = 0; o < out_; ++o) {
    const double g = grad_out[o];
    if (g == 0.0) continue;
    bias.grad[o] += g;
    double* grow = gw + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) grow[i] += g * in[i];
    if (!grad_in.empty()) {
      const double* row = w + static_cast<std::size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) grad_in[i] += g * row[i];
    }
  }
}

FeatureMap to_feature_map(const ImageTensor& image) {
  const ImageTensor unit = image.to_unit();
  FeatureMap m(unit.channels(), unit.height(), unit.width());
  std::copy(unit.values().begin(), unit.values().end(), m.values.begin());
  return m;
}

ImageTensor to_image(const FeatureMap& map, ValueDomain domain) {
  ImageTensor img(map.channels, map.width, map.height, domain);
  std::copy(map.values.begin(), map.values.end(), img.values().begin());
  return img;
}

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
    : weight(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
      bias(name + ".bias", static_cast<std::size_t>(out_channels)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding) {
  init_uniform(weight.value, std::sqrt(6.0 / (in_channels * kernel * kernel)), rng);
}

FeatureMap Conv2d::forward(const FeatureMap& in) const {
  if (in.channels != in_) fail(ErrorCode::kShapeMismatch, "conv input channel count mismatch", weight.name);
  const int oh = output_size(in.height);
  const int ow = output_size(in.width);
  FeatureMap out(out_, oh, ow);
  for (int o = 0; o < out_; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = bias.value[o];
        for (int i = 0; i < in_; ++i) {
          const double* w = &weight.value[((static_cast<std::size_t>(o) * in_ + i) * k_) * k_];
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = y * stride_ + ky - pad_;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = x * stride_ + kx - pad_;
              if (ix < 0 || ix >= in.width) continue;
              acc += w[ky * k_ + kx] * in.at(i, iy, ix);
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

FeatureMap Conv2d::backward(const FeatureMap& in, const FeatureMap& grad_out) {
  return backward_impl(in, grad_out, &weight, &bias);
}

FeatureMap Conv2d::input_grad(const FeatureMap& in, const FeatureMap& grad_out) const {
  return backward_impl(in, grad_out, nullptr, nullptr);
}

FeatureMap Conv2d::backward_impl(const FeatureMap& in, const FeatureMap& grad_out, Parameter* gw,
                                 Parameter* gb) const {
  FeatureMap grad_in(in.channels, in.height, in.width);
  for (int o = 0; o < out_; ++o) {
    for (int y = 0; y < grad_out.height; ++y) {
      for (int x = 0; x < grad_out.width; ++x) {
        const double g = grad_out.at(o, y, x);
        if (g == 0.0) continue;
        if (gb != nullptr) gb->grad[o] += g;
        for (int i = 0; i < in_; ++i) {
          const std::size_t base = ((static_cast<std::size_t>(o) * in_ + i) * k_) * k_;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = y * stride_ + ky - pad_;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = x * stride_ + kx - pad_;
              if (ix < 0 || ix >= in.width) continue;
              const std::size_t widx = base + static_cast<std::size_t>(ky * k_ + kx);
              if (gw != nullptr) gw->grad[widx] += g * in.at(i, iy, ix);
              grad_in.at(i, iy, ix) += g * weight.value[widx];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

void relu(std::span<double> values) noexcept {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

void relu_backward(std::span<const double> pre_activation, std::span<double> grad) noexcept {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(pre_activation[i] > 0.0)) grad[i] = 0.0;
}

double sigmoid(double z) noexcept {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {}

void Adam::step(const ParameterList& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) fail(ErrorCode::kModelMismatch, "Adam parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1_ * m[i] + (1.0 - b1_) * g;
      v[i] = b2_ * v[i] + (1.0 - b2_) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
    p.zero_grad();
  }
}

void zero_grad(const ParameterList& params) noexcept {
  for (Parameter* p : params) p->zero_grad();
}

nlohmann::json parameters_to_json(const ParameterList& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const Parameter* p : params) j[p->name] = p->value;
  return j;
}

void parameters_from_json(const nlohmann::json& j, const ParameterList& params) {
  for (Parameter* p : params) {
    if (!j.contains(p->name)) fail(ErrorCode::kModelMismatch, "checkpoint lacks parameter", p->name);
    auto values = j.at(p->name).get<std::vector<double>>();
    if (values.size() != p->value.size()) fail(ErrorCode::kModelMismatch, "parameter size mismatch", p->name);
    p->value = std::move(values);
    p->zero_grad();
  }
}

std::uint64_t parameter_hash(const ParameterList& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Parameter* p : params) {
    for (double v : p->value) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace hideseek::nn
