#include "dhff/iist.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace dhff {

void IistConfig::validate() const {
  if (!(lambda_c > 0.0 && lambda_c < 1.0))
    throw std::invalid_argument("config: lambda_c must lie in (0,1)");
  for (double a : alpha)
    if (!(a >= 0.0))
      throw std::invalid_argument("config: alpha values must be >= 0");
  if (max_outer_iters < 0)
    throw std::invalid_argument("config: max_outer_iters must be >= 0");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("config: epsilon must be > 0");
  if (lbfgs.memory < 1)
    throw std::invalid_argument("config: lbfgs memory must be >= 1");
  if (lbfgs.max_iters < 0)
    throw std::invalid_argument("config: lbfgs max_iters must be >= 0");
  if (!(lbfgs.grad_tol > 0.0))
    throw std::invalid_argument("config: lbfgs grad_tol must be > 0");
  if (!(lbfgs.c1 > 0.0 && lbfgs.c1 < lbfgs.c2 && lbfgs.c2 < 1.0))
    throw std::invalid_argument("config: need 0 < c1 < c2 < 1");
}

template <class T>
LossBreakdown loss_and_grad(const Tensor<T>& img,
                            const ContentFeatures<T>& content_target,
                            const StyleFeatures<T>& style_target,
                            const PreparedWeights<T>& weights,
                            const IistConfig& cfg, Tensor<T>* grad) {
  if (!(cfg.lambda_c >= 0.0 && cfg.lambda_c <= 1.0))
    throw std::invalid_argument("loss_and_grad: lambda_c outside [0,1]");

  const ActivationCache<T> cache = vgg_forward(weights, img, cfg.pooling);
  const int ci = content_layer_index(cfg.content_layer);
  const Tensor<T>& cmap = cache.conv_out[ci - 1];
  if (content_target.values.size() != cmap.size())
    throw std::invalid_argument("loss_and_grad: content target mismatch");

  LossBreakdown out;

  // content term and its seed 2*lambda*(C(I) - C_t) at the content layer
  Tensor<T> content_seed;
  {
    double s = 0.0;
    if (grad) content_seed = Tensor<T>(cmap.c, cmap.h, cmap.w);
    const double lc = cfg.lambda_c;
    for (std::size_t i = 0; i < cmap.size(); ++i) {
      const double d = double(cmap.v[i]) - double(content_target.values[i]);
      s += d * d;
      if (grad) content_seed.v[i] = static_cast<T>(2.0 * lc * d);
    }
    out.content_term = s;
  }

  // style term and its per-pool seeds (1-lambda)*dL_s/dF
  std::array<Tensor<T>, 5> style_seeds;
  {
    double s = 0.0;
    const double ls = 1.0 - cfg.lambda_c;
    for (int b = 0; b < 5; ++b) {
      const GramMatrix<T> cur = gram(cache.pool_out[b]);
      const GramMatrix<T>& tgt = style_target.blocks[b];
      if (tgt.c != cur.c)
        throw std::invalid_argument("loss_and_grad: style target mismatch");
      s += gram_sq_distance(cur, tgt);
      if (grad && ls != 0.0) {
        style_seeds[b] = gram_loss_grad(cache.pool_out[b], cur, tgt);
        for (T& v : style_seeds[b].v) v = static_cast<T>(double(v) * ls);
      }
    }
    out.style_term = s;
  }

  out.loss = cfg.lambda_c * out.content_term +
             (1.0 - cfg.lambda_c) * out.style_term;

  if (grad) {
    if (cfg.lambda_c == 0.0) content_seed = Tensor<T>();  // exact zero seed
    *grad = vgg_backward_to_input(weights, cache, ci, content_seed,
                                  style_seeds);
  }
  return out;
}

namespace {

Image clamp01(Image img) {
  for (float& v : img.data) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return img;
}

}  // namespace

StageResult ist_stage(const Image& init, const Image& sar_for_content,
                      const Image& opt_for_style, const VggWeights& weights_k,
                      const IistConfig& cfg) {
  if (!init.same_shape(sar_for_content) || !init.same_shape(opt_for_style))
    throw std::invalid_argument("ist_stage: image shapes must match");
  if (init.channels != 3)
    throw std::invalid_argument("ist_stage: 3-channel images required");

  using T = float;
  const PreparedWeights<T> weights = prepare_weights<T>(weights_k);
  const ContentFeatures<T> content_target =
      content_from_cache(vgg_forward(weights, image_to_tensor<T>(sar_for_content),
                                     cfg.pooling),
                         cfg.content_layer);
  const StyleFeatures<T> style_target = style_from_cache(
      vgg_forward(weights, image_to_tensor<T>(opt_for_style), cfg.pooling));

  const int h = init.height, w = init.width;
  auto unflatten = [&](std::span<const double> x) {
    Tensor<T> t(3, h, w);
    for (std::size_t i = 0; i < x.size(); ++i)
      t.v[i] = static_cast<T>(x[i]);
    return t;
  };

  Objective objective = [&](std::span<const double> x,
                            std::span<double> gout) -> double {
    const Tensor<T> img = unflatten(x);
    Tensor<T> grad;
    const LossBreakdown lb =
        loss_and_grad(img, content_target, style_target, weights, cfg,
                      &grad);
    for (std::size_t i = 0; i < gout.size(); ++i) gout[i] = grad.v[i];
    return lb.loss;
  };

  const Tensor<T> init_t = image_to_tensor<T>(init);
  std::vector<double> x0(init_t.v.begin(), init_t.v.end());
  const LbfgsResult lr = lbfgs_minimize(objective, std::move(x0), cfg.lbfgs);

  Image candidate = clamp01(tensor_to_image(unflatten(lr.x)));

  auto evaluate = [&](const Image& img) {
    return loss_and_grad<T>(image_to_tensor<T>(img), content_target,
                            style_target, weights, cfg, nullptr);
  };

  // Clamping can push the optimizer result above the (already feasible)
  // start point; return whichever evaluates lower so a warm restart under
  // the same objective never regresses.
  LossBreakdown cand = evaluate(candidate);
  LossBreakdown start = evaluate(init);
  StageResult res;
  res.inner_iterations = lr.iterations;
  if (cand.loss <= start.loss) {
    res.image = std::move(candidate);
    res.final_loss = cand.loss;
    res.content_term = cand.content_term;
    res.style_term = cand.style_term;
  } else {
    res.image = init;
    res.final_loss = start.loss;
    res.content_term = start.content_term;
    res.style_term = start.style_term;
  }
  return res;
}

IistResult iist_run(const Image& opt, const Image& sar,
                    const VggWeights& base_weights, const IistConfig& cfg) {
  cfg.validate();
  base_weights.validate();
  if (opt.channels != 3)
    throw std::invalid_argument("iist_run: optical image must be 3-channel");

  const Image prepared_sar =
      to_rgb(bilinear_resize(sar, opt.height, opt.width));

  IistResult out;
  Image current = prepared_sar;

  for (int k = 0; k <= cfg.max_outer_iters; ++k) {
    VggWeights wk;
    const VggWeights* wp = &base_weights;
    if (k >= 1) {
      wk = randomize_weights(base_weights, cfg.alpha, cfg.seed, k);
      wp = &wk;
    }
    StageResult sr = ist_stage(current, prepared_sar, opt, *wp, cfg);

    StageTrace tr;
    tr.k = k;
    tr.inner_iterations = sr.inner_iterations;
    tr.loss = sr.final_loss;
    tr.content_term = sr.content_term;
    tr.style_term = sr.style_term;
    if (k >= 1) {
      tr.diff_to_prev = mean_abs_diff(sr.image, current);
      tr.has_diff = true;
    }
    out.trace.push_back(tr);

    current = std::move(sr.image);

    if (k >= 1 && out.trace.back().diff_to_prev < cfg.epsilon) break;
  }

  out.t2 = std::move(current);
  return out;
}

void write_trace_jsonl(const std::vector<StageTrace>& trace,
                       std::ostream& os) {
  for (const StageTrace& t : trace) {
    nlohmann::json j;
    j["k"] = t.k;
    j["inner_iterations"] = t.inner_iterations;
    j["loss"] = t.loss;
    j["content_term"] = t.content_term;
    j["style_term"] = t.style_term;
    if (t.has_diff)
      j["diff_to_prev"] = t.diff_to_prev;
    else
      j["diff_to_prev"] = nullptr;
    os << j.dump() << "\n";
  }
}

template LossBreakdown loss_and_grad<float>(const Tensor<float>&,
                                            const ContentFeatures<float>&,
                                            const StyleFeatures<float>&,
                                            const PreparedWeights<float>&,
                                            const IistConfig&,
                                            Tensor<float>*);
template LossBreakdown loss_and_grad<double>(const Tensor<double>&,
                                             const ContentFeatures<double>&,
                                             const StyleFeatures<double>&,
                                             const PreparedWeights<double>&,
                                             const IistConfig&,
                                             Tensor<double>*);

}  // namespace dhff
