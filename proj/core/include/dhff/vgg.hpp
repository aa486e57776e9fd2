#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhff/tensor.hpp"

namespace dhff {

// Convolutional part of VGG-19: 16 conv layers (3x3, stride 1, pad 1),
// ReLU after each, 2x2 stride-2 pooling after layers 2, 4, 8, 12, 16.
inline constexpr int kVggLayerCount = 16;
inline constexpr std::array<int, 16> kVggChannelPlan = {
    64, 64, 128, 128, 256, 256, 256, 256,
    512, 512, 512, 512, 512, 512, 512, 512};
inline constexpr std::array<int, 5> kVggPoolAfter = {2, 4, 8, 12, 16};

inline int vgg_in_channels(int layer_index0) {
  return layer_index0 == 0 ? 3 : kVggChannelPlan[layer_index0 - 1];
}

enum class PoolingMode { Max, Average };

// Deepest conv layer of the third/fourth/fifth scale; the pre-activation
// map of this layer is the semantic-content feature.
enum class ContentLayer { Conv3_4, Conv4_4, Conv5_4 };

inline int content_layer_index(ContentLayer l) {  // 1-based conv index
  switch (l) {
    case ContentLayer::Conv3_4: return 8;
    case ContentLayer::Conv4_4: return 12;
    default: return 16;
  }
}

struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<float> kernel;  // (out, in, 3, 3) row-major
  std::vector<float> bias;    // out
};

struct VggWeights {
  std::vector<ConvLayer> layers;  // exactly 16, following the channel plan

  // Shape plan only; cheap enough for per-call checks.
  void validate_plan() const;
  // Plan plus a finite-value scan of every weight. Run at construction
  // and I/O boundaries, not in the forward/backward hot path.
  void validate() const;
};

// Weights cast to the compute scalar once, so repeated double-precision
// passes (gradient checks) do not re-convert ~20M values per call. For
// float this is a plain view of the source arrays.
template <class T>
struct PreparedWeights {
  const VggWeights* src = nullptr;
  std::vector<std::vector<T>> kernel;  // only filled when T != float
  std::vector<std::vector<T>> bias;

  const T* kernel_ptr(int layer0) const {
    if constexpr (std::is_same_v<T, float>)
      return src->layers[layer0].kernel.data();
    else
      return kernel[layer0].data();
  }
  const T* bias_ptr(int layer0) const {
    if constexpr (std::is_same_v<T, float>)
      return src->layers[layer0].bias.data();
    else
      return bias[layer0].data();
  }
};

template <class T>
PreparedWeights<T> prepare_weights(const VggWeights& w);

// Substitute base weights when pre-trained ones are unavailable: kernels
// ~ N(0, 2/fan_in) with fan_in = in_channels*9, biases 0, drawn from the
// SplitMix64 stream keyed by seed.
VggWeights random_base_weights(std::uint64_t seed);

// W_i^k = W_i^0 + alpha_i * X_i, X_i ~ N(0, Var(W_i^0)) with the unbiased
// per-layer variance over the kernel values. Biases are left untouched.
// The deviates come from the stream keyed by (seed, k) and are consumed
// in layer order, then flat kernel order, two u64 draws per weight; a
// layer with fewer than two weights gets variance 0.
VggWeights randomize_weights(const VggWeights& base,
                             std::span<const double> alpha,
                             std::uint64_t seed, int k);

// DHFFW1 container, little-endian: magic "DHFFW1\n", u32 layer count,
// then per layer u32 out_ch, in_ch, kh, kw followed by f32 kernel and
// bias payloads.
VggWeights load_weights(const std::string& path);
void save_weights(const VggWeights& w, const std::string& path);

template <class T>
struct ActivationCache {
  PoolingMode mode = PoolingMode::Max;
  int in_h = 0, in_w = 0;
  std::vector<Tensor<T>> conv_out;  // pre-activation, per layer
  std::vector<Tensor<T>> relu_out;  // post-activation, per layer
  std::array<Tensor<T>, 5> pool_out;
  // Flat plane index of the first maximal element of each 2x2 window
  // (row-major tie-break), per pooled element; only filled for Max mode.
  std::array<std::vector<std::uint32_t>, 5> pool_argmax;
  // A pooling stage degrades to identity once a spatial dim reaches 1.
  std::array<bool, 5> pooled{};
};

// out[o,y,x] = bias[o] + sum_{c,ky,kx} in[c,y+ky-1,x+kx-1] * k[o,c,ky,kx]
// with zero padding. Summation order is fixed: channel-major, then kernel
// row-major, so results are bit-reproducible; parallelism is across
// output channels only.
template <class T>
void conv2d(const Tensor<T>& in, const T* kernel, const T* bias, int out_ch,
            Tensor<T>& out);

// 2x2 stride-2 pooling with floor semantics (odd trailing row/column
// dropped). For Max, argmax records the flat plane index of the first
// maximal element of each window.
template <class T>
void pool2x2(const Tensor<T>& in, PoolingMode mode, Tensor<T>& out,
             std::vector<std::uint32_t>* argmax);

// Forward pass over all 16 layers. Requires a 3-channel input with
// min(h,w) >= 4; all five pooling stages are genuine when min(h,w) >= 32,
// below that a stage whose input has a spatial dim of 1 passes through
// unchanged (needed so gradient checks can run on small images).
template <class T>
ActivationCache<T> vgg_forward(const PreparedWeights<T>& w,
                               const Tensor<T>& input, PoolingMode mode);

template <class T>
ActivationCache<T> vgg_forward(const VggWeights& w, const Tensor<T>& input,
                               PoolingMode mode) {
  return vgg_forward(prepare_weights<T>(w), input, mode);
}

// Exact reverse-mode gradient w.r.t. the input pixels of
//   <content_grad, conv_out[content_layer]> + sum_s <style_grads[s], pool_s>.
// Empty tensors stand for zero seeds. content_layer is the 1-based conv
// index (use content_layer_index); ReLU masks by the forward sign, Max
// pooling routes along the recorded argmax, Average spreads grad/4.
template <class T>
Tensor<T> vgg_backward_to_input(const PreparedWeights<T>& w,
                                const ActivationCache<T>& cache,
                                int content_layer,
                                const Tensor<T>& content_grad,
                                const std::array<Tensor<T>, 5>& style_grads);

template <class T>
Tensor<T> vgg_backward_to_input(const VggWeights& w,
                                const ActivationCache<T>& cache,
                                int content_layer,
                                const Tensor<T>& content_grad,
                                const std::array<Tensor<T>, 5>& style_grads) {
  return vgg_backward_to_input(prepare_weights<T>(w), cache, content_layer,
                               content_grad, style_grads);
}

extern template PreparedWeights<float> prepare_weights<float>(
    const VggWeights&);
extern template PreparedWeights<double> prepare_weights<double>(
    const VggWeights&);
extern template void conv2d<float>(const Tensor<float>&, const float*,
                                   const float*, int, Tensor<float>&);
extern template void conv2d<double>(const Tensor<double>&, const double*,
                                    const double*, int, Tensor<double>&);
extern template void pool2x2<float>(const Tensor<float>&, PoolingMode,
                                    Tensor<float>&,
                                    std::vector<std::uint32_t>*);
extern template void pool2x2<double>(const Tensor<double>&, PoolingMode,
                                     Tensor<double>&,
                                     std::vector<std::uint32_t>*);
extern template ActivationCache<float> vgg_forward<float>(
    const PreparedWeights<float>&, const Tensor<float>&, PoolingMode);
extern template ActivationCache<double> vgg_forward<double>(
    const PreparedWeights<double>&, const Tensor<double>&, PoolingMode);
extern template Tensor<float> vgg_backward_to_input<float>(
    const PreparedWeights<float>&, const ActivationCache<float>&, int,
    const Tensor<float>&, const std::array<Tensor<float>, 5>&);
extern template Tensor<double> vgg_backward_to_input<double>(
    const PreparedWeights<double>&, const ActivationCache<double>&, int,
    const Tensor<double>&, const std::array<Tensor<double>, 5>&);

}  // namespace dhff
