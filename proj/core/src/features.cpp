#include "hideseek/features.hpp"

#include <algorithm>
#include <sstream>

#include "hideseek/error.hpp"

namespace hideseek {

namespace {

void require_grad_size(std::size_t expected, std::size_t got) {
  if (expected != got) fail(ErrorCode::kShapeMismatch, "feature gradient has the wrong length");
}

std::string hex_id(const char* prefix, std::uint64_t seed) {
  std::ostringstream os;
  os << prefix << "-" << std::hex << seed;
  return os.str();
}

}  // namespace

std::vector<double> IdentityEmbedder::features(const ImageTensor& image) const {
  const ImageTensor unit = image.to_unit();
  return {unit.values().begin(), unit.values().end()};
}

ImageTensor IdentityEmbedder::features_vjp(const ImageTensor& image, std::span<const double> grad) const {
  require_grad_size(image.size(), grad.size());
  ImageTensor out(image.channels(), image.width(), image.height());
  std::copy(grad.begin(), grad.end(), out.values().begin());
  return out;
}

std::vector<double> IdentityExtractor::features(const ImageTensor& image) const {
  const ImageTensor unit = image.to_unit();
  return {unit.values().begin(), unit.values().end()};
}

ImageTensor IdentityExtractor::features_vjp(const ImageTensor& image, std::span<const double> grad) const {
  require_grad_size(image.size(), grad.size());
  ImageTensor out(image.channels(), image.width(), image.height());
  std::copy(grad.begin(), grad.end(), out.values().begin());
  return out;
}

std::vector<nn::FeatureMap> IdentityExtractor::layers(const ImageTensor& image) const {
  return {nn::to_feature_map(image)};
}

RandomConvEmbedder::RandomConvEmbedder(int channels, std::uint64_t seed, int dims) : seed_(seed) {
  Rng rng(seed);
  conv1_ = nn::Conv2d("embed.conv1", channels, 16, 3, 2, 1, rng);
  conv2_ = nn::Conv2d("embed.conv2", 16, 32, 3, 2, 1, rng);
  proj_ = nn::Linear("embed.proj", 32, dims, rng);
}

std::string RandomConvEmbedder::id() const { return hex_id("randconv-embed", seed_); }

std::vector<double> RandomConvEmbedder::features(const ImageTensor& image) const {
  nn::FeatureMap h1 = conv1_.forward(nn::to_feature_map(image));
  nn::relu(h1.values);
  nn::FeatureMap h2 = conv2_.forward(h1);
  nn::relu(h2.values);
  std::vector<double> pooled(static_cast<std::size_t>(h2.channels), 0.0);
  const double area = static_cast<double>(h2.height) * h2.width;
  for (int c = 0; c < h2.channels; ++c) {
    double s = 0.0;
    for (int y = 0; y < h2.height; ++y)
      for (int x = 0; x < h2.width; ++x) s += h2.at(c, y, x);
    pooled[c] = s / area;
  }
  std::vector<double> out(static_cast<std::size_t>(proj_.out_features()));
  proj_.forward(pooled, out);
  return out;
}

ImageTensor RandomConvEmbedder::features_vjp(const ImageTensor& image, std::span<const double> grad) const {
  require_grad_size(static_cast<std::size_t>(proj_.out_features()), grad.size());
  const nn::FeatureMap x = nn::to_feature_map(image);
  const nn::FeatureMap z1 = conv1_.forward(x);
  nn::FeatureMap h1 = z1;
  nn::relu(h1.values);
  const nn::FeatureMap z2 = conv2_.forward(h1);

  // d pooled = W^T grad
  std::vector<double> gpool(static_cast<std::size_t>(proj_.in_features()), 0.0);
  for (int o = 0; o < proj_.out_features(); ++o)
    for (int i = 0; i < proj_.in_features(); ++i)
      gpool[i] += grad[o] * proj_.weight.value[static_cast<std::size_t>(o) * proj_.in_features() + i];

  nn::FeatureMap g2(z2.channels, z2.height, z2.width);
  const double area = static_cast<double>(z2.height) * z2.width;
  for (int c = 0; c < z2.channels; ++c)
    for (int y = 0; y < z2.height; ++y)
      for (int xx = 0; xx < z2.width; ++xx) g2.at(c, y, xx) = gpool[c] / area;
  nn::relu_backward(z2.values, g2.values);
  nn::FeatureMap g1 = conv2_.input_grad(h1, g2);
  nn::relu_backward(z1.values, g1.values);
  return nn::to_image(conv1_.input_grad(x, g1));
}

RandomConvExtractor::RandomConvExtractor(int channels, std::uint64_t seed) : seed_(seed) {
  Rng rng(seed);
  convs_.emplace_back("percept.conv1", channels, 8, 3, 1, 1, rng);
  convs_.emplace_back("percept.conv2", 8, 16, 3, 2, 1, rng);
  convs_.emplace_back("percept.conv3", 16, 32, 3, 2, 1, rng);
}

std::string RandomConvExtractor::id() const { return hex_id("randconv-percept", seed_); }

std::vector<nn::FeatureMap> RandomConvExtractor::layers(const ImageTensor& image) const {
  std::vector<nn::FeatureMap> out;
  nn::FeatureMap h = nn::to_feature_map(image);
  for (const auto& conv : convs_) {
    h = conv.forward(h);
    nn::relu(h.values);
    out.push_back(h);
  }
  return out;
}

std::vector<double> RandomConvExtractor::features(const ImageTensor& image) const {
  std::vector<double> out;
  for (const auto& layer : layers(image)) out.insert(out.end(), layer.values.begin(), layer.values.end());
  return out;
}

ImageTensor RandomConvExtractor::features_vjp(const ImageTensor& image, std::span<const double> grad) const {
  // Forward pass keeping pre-activations.
  std::vector<nn::FeatureMap> inputs;
  std::vector<nn::FeatureMap> pre;
  nn::FeatureMap h = nn::to_feature_map(image);
  std::size_t total = 0;
  for (const auto& conv : convs_) {
    inputs.push_back(h);
    nn::FeatureMap z = conv.forward(h);
    pre.push_back(z);
    h = z;
    nn::relu(h.values);
    total += h.values.size();
  }
  require_grad_size(total, grad.size());

  // Each layer's slice of `grad` adds to the gradient flowing into it.
  std::vector<std::size_t> starts;
  std::size_t off = 0;
  for (const auto& z : pre) {
    starts.push_back(off);
    off += z.values.size();
  }
  nn::FeatureMap g;
  for (std::size_t l = convs_.size(); l-- > 0;) {
    nn::FeatureMap gl(pre[l].channels, pre[l].height, pre[l].width);
    for (std::size_t i = 0; i < gl.values.size(); ++i) {
      gl.values[i] = grad[starts[l] + i] + (l + 1 < convs_.size() ? g.values[i] : 0.0);
    }
    nn::relu_backward(pre[l].values, gl.values);
    g = convs_[l].input_grad(inputs[l], gl);
  }
  return nn::to_image(g);
}

}  // namespace hideseek
