#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dhff/features.hpp"
#include "dhff/image.hpp"
#include "dhff/lbfgs.hpp"
#include "dhff/vgg.hpp"

namespace dhff {

struct IistConfig {
  // Weight of the semantic-content term in the cost; the style term gets
  // (1 - lambda_c). See README for how the default was calibrated.
  double lambda_c = 0.01;
  // Per-layer randomization intensity.
  std::array<double, 16> alpha{1, 1, 1, 1, 1, 1, 1, 1,
                               1, 1, 1, 1, 1, 1, 1, 1};
  // Max outer iterations N; stage indices run k = 0..N.
  int max_outer_iters = 100;
  // Stop threshold on the mean absolute pixel difference between
  // consecutive stage outputs.
  double epsilon = 0.01;
  ContentLayer content_layer = ContentLayer::Conv5_4;
  PoolingMode pooling = PoolingMode::Max;
  std::uint64_t seed = 0;
  LbfgsConfig lbfgs;

  void validate() const;  // throws std::invalid_argument
};

struct LossBreakdown {
  double loss = 0.0;          // lambda_c*content + (1-lambda_c)*style
  double content_term = 0.0;  // ||C(I) - C_target||^2
  double style_term = 0.0;    // ||S(I) - S_target||^2
};

// One forward + one backward pass. grad may be null for a loss-only
// evaluation. lambda_c endpoints 0 and 1 are accepted here (the config
// validator restricts the open interval for full runs).
template <class T>
LossBreakdown loss_and_grad(const Tensor<T>& img,
                            const ContentFeatures<T>& content_target,
                            const StyleFeatures<T>& style_target,
                            const PreparedWeights<T>& weights,
                            const IistConfig& cfg, Tensor<T>* grad);

template <class T>
LossBreakdown loss_and_grad(const Tensor<T>& img,
                            const ContentFeatures<T>& content_target,
                            const StyleFeatures<T>& style_target,
                            const VggWeights& weights, const IistConfig& cfg,
                            Tensor<T>* grad) {
  return loss_and_grad(img, content_target, style_target,
                       prepare_weights<T>(weights), cfg, grad);
}

struct StageResult {
  Image image;                 // pixels clamped to [0,1]
  double final_loss = 0.0;     // evaluated at the returned image
  double content_term = 0.0;
  double style_term = 0.0;
  int inner_iterations = 0;
};

// One style-transfer stage under fixed weights: content target from
// sar_for_content, style target from opt_for_style, minimized from init.
// Returns whichever of {clamped optimizer result, init} evaluates lower,
// so a warm restart under the same objective can never regress.
StageResult ist_stage(const Image& init, const Image& sar_for_content,
                      const Image& opt_for_style, const VggWeights& weights_k,
                      const IistConfig& cfg);

struct StageTrace {
  int k = 0;
  int inner_iterations = 0;
  double loss = 0.0;
  double content_term = 0.0;
  double style_term = 0.0;
  double diff_to_prev = 0.0;  // valid when has_diff
  bool has_diff = false;      // stage 0 has no predecessor
};

struct IistResult {
  Image t2;
  std::vector<StageTrace> trace;
};

// Full iterative strategy. The SAR image is resized to the optical
// dimensions and replicated to 3 channels; stage 0 starts from the
// prepared SAR under the base weights, stage k >= 1 restarts from the
// previous output under freshly randomized weights. Stops when the mean
// absolute difference between consecutive outputs drops below epsilon or
// the stage index exceeds N.
IistResult iist_run(const Image& opt, const Image& sar,
                    const VggWeights& base_weights, const IistConfig& cfg);

// One JSON object per stage:
// {"k":..,"inner_iterations":..,"loss":..,"content_term":..,
//  "style_term":..,"diff_to_prev":..}  (diff_to_prev null for stage 0)
void write_trace_jsonl(const std::vector<StageTrace>& trace, std::ostream& os);

extern template LossBreakdown loss_and_grad<float>(
    const Tensor<float>&, const ContentFeatures<float>&,
    const StyleFeatures<float>&, const PreparedWeights<float>&,
    const IistConfig&, Tensor<float>*);
extern template LossBreakdown loss_and_grad<double>(
    const Tensor<double>&, const ContentFeatures<double>&,
    const StyleFeatures<double>&, const PreparedWeights<double>&,
    const IistConfig&, Tensor<double>*);

}  // namespace dhff
