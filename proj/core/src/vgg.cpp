#include "dhff/vgg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dhff/rng.hpp"

namespace dhff {

namespace {

constexpr char kWeightsMagic[7] = {'D', 'H', 'F', 'F', 'W', '1', '\n'};

int pool_stage_after(int layer) {  // 1-based layer -> stage index, or -1
  for (int s = 0; s < 5; ++s)
    if (kVggPoolAfter[s] == layer) return s;
  return -1;
}

template <class T>
std::vector<T> as(const std::vector<float>& v) {
  return std::vector<T>(v.begin(), v.end());
}

// Valid region of one 3x3 tap; taps whose shifted window misses the
// plane entirely (tiny spatial sizes) are dropped up front. Dropping a
// tap removes no additions, so results stay bit-identical.
struct Tap {
  int idx;  // ky*3+kx
  int dy, dx;
  int y0, y1, x0, x1;
};

inline int make_taps(int H, int W, Tap* taps, bool forward_dir) {
  int n = 0;
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx) {
      const int dy = ky - 1, dx = kx - 1;
      Tap t;
      t.idx = ky * 3 + kx;
      t.dy = dy;
      t.dx = dx;
      if (forward_dir) {  // out[y] reads in[y+dy]
        t.y0 = std::max(0, -dy); t.y1 = std::min(H, H - dy);
        t.x0 = std::max(0, -dx); t.x1 = std::min(W, W - dx);
      } else {  // gin[y] reads gout[y-dy]
        t.y0 = std::max(0, dy); t.y1 = std::min(H, H + dy);
        t.x0 = std::max(0, dx); t.x1 = std::min(W, W + dx);
      }
      if (t.y0 < t.y1 && t.x0 < t.x1) taps[n++] = t;
    }
  return n;
}

template <class T>
void relu(const Tensor<T>& in, Tensor<T>& out) {
  out = Tensor<T>(in.c, in.h, in.w);
  const std::size_t n = in.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i)
    out.v[i] = in.v[i] > T(0) ? in.v[i] : T(0);
}

// Gradient w.r.t. the conv input:
// gin[c,y,x] = sum_{o,ky,kx} gout[o,y-(ky-1),x-(kx-1)] * k[o,c,ky,kx].
// Fixed accumulation order (output-channel-major, then kernel row-major);
// parallelism across input channels only.
template <class T>
void conv2d_backward_input(const Tensor<T>& gout, const T* kernel, int in_ch,
                           Tensor<T>& gin) {
  const int H = gout.h, W = gout.w, Cout = gout.c;
  gin = Tensor<T>(in_ch, H, W);

  if (W < 4) {
    Tap taps[9];
    const int ntaps = make_taps(H, W, taps, false);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < in_ch; ++c) {
      T* gp = gin.plane(c);
      for (int o = 0; o < Cout; ++o) {
        const T* op = gout.plane(o);
        const T* kc = kernel + (std::size_t(o) * in_ch + c) * 9;
        for (int t = 0; t < ntaps; ++t) {
          const Tap& tp = taps[t];
          const T kv = kc[tp.idx];
          for (int y = tp.y0; y < tp.y1; ++y) {
            T* grow = gp + std::size_t(y) * W;
            const T* orow = op + std::size_t(y - tp.dy) * W - tp.dx;
            for (int x = tp.x0; x < tp.x1; ++x) grow[x] += kv * orow[x];
          }
        }
      }
    }
    return;
  }

  // Row accumulator; per element the additions happen output-channel-
  // major, then kernel row-major.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < in_ch; ++c) {
    T* gp = gin.plane(c);
    std::vector<T> acc(W);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) acc[x] = T(0);
      for (int o = 0; o < Cout; ++o) {
        const T* op = gout.plane(o);
        const T* kc = kernel + (std::size_t(o) * in_ch + c) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y - (ky - 1);
          if (yy < 0 || yy >= H) continue;
          const T* orow = op + std::size_t(yy) * W;
          const T k0 = kc[ky * 3 + 0], k1 = kc[ky * 3 + 1],
                  k2 = kc[ky * 3 + 2];
          acc[0] += k0 * orow[1] + k1 * orow[0];
          for (int x = 1; x < W - 1; ++x)
            acc[x] += k0 * orow[x + 1] + k1 * orow[x] + k2 * orow[x - 1];
          acc[W - 1] += k1 * orow[W - 1] + k2 * orow[W - 2];
        }
      }
      T* grow = gp + std::size_t(y) * W;
      for (int x = 0; x < W; ++x) grow[x] = acc[x];
    }
  }
}

template <class T>
void unpool(const Tensor<T>& gpool, const Tensor<T>& pre_shape_ref,
            PoolingMode mode, bool pooled,
            const std::vector<std::uint32_t>& argmax, Tensor<T>& gin) {
  if (!pooled) {
    gin = gpool;
    return;
  }
  gin = Tensor<T>(pre_shape_ref.c, pre_shape_ref.h, pre_shape_ref.w);
  const int Ho = gpool.h, Wo = gpool.w;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < gpool.c; ++c) {
    const T* gp = gpool.plane(c);
    T* ip = gin.plane(c);
    if (mode == PoolingMode::Max) {
      const std::uint32_t* am = argmax.data() + std::size_t(c) * Ho * Wo;
      for (int i = 0; i < Ho * Wo; ++i) ip[am[i]] += gp[i];
    } else {
      const int W = pre_shape_ref.w;
      for (int yo = 0; yo < Ho; ++yo)
        for (int xo = 0; xo < Wo; ++xo) {
          const T g = gp[std::size_t(yo) * Wo + xo] / T(4);
          T* w0 = ip + std::size_t(2 * yo) * W + 2 * xo;
          w0[0] += g;
          w0[1] += g;
          w0[W] += g;
          w0[W + 1] += g;
        }
    }
  }
}

void read_exact(std::ifstream& in, void* dst, std::size_t n,
                const char* what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw std::runtime_error(std::string("weights: truncated file at ") +
                             what);
}

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, b, 4, what);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void VggWeights::validate_plan() const {
  if (layers.size() != kVggLayerCount)
    throw std::runtime_error("weights: expected 16 conv layers, got " +
                             std::to_string(layers.size()));
  for (int i = 0; i < kVggLayerCount; ++i) {
    const ConvLayer& l = layers[i];
    if (l.out_channels != kVggChannelPlan[i] ||
        l.in_channels != vgg_in_channels(i))
      throw std::runtime_error("weights: layer " + std::to_string(i + 1) +
                               " deviates from the VGG-19 channel plan");
    if (l.kernel.size() != std::size_t(l.out_channels) * l.in_channels * 9 ||
        l.bias.size() != std::size_t(l.out_channels))
      throw std::runtime_error("weights: layer " + std::to_string(i + 1) +
                               " has wrong kernel/bias element count");
  }
}

void VggWeights::validate() const {
  validate_plan();
  for (const ConvLayer& l : layers) {
    for (float v : l.kernel)
      if (!std::isfinite(v))
        throw std::runtime_error("weights: non-finite kernel value");
    for (float v : l.bias)
      if (!std::isfinite(v))
        throw std::runtime_error("weights: non-finite bias value");
  }
}

template <class T>
PreparedWeights<T> prepare_weights(const VggWeights& w) {
  w.validate_plan();
  PreparedWeights<T> p;
  p.src = &w;
  if constexpr (!std::is_same_v<T, float>) {
    p.kernel.resize(kVggLayerCount);
    p.bias.resize(kVggLayerCount);
    for (int i = 0; i < kVggLayerCount; ++i) {
      p.kernel[i] = as<T>(w.layers[i].kernel);
      p.bias[i] = as<T>(w.layers[i].bias);
    }
  }
  return p;
}

VggWeights random_base_weights(std::uint64_t seed) {
  RngStream st(seed);
  VggWeights w;
  w.layers.resize(kVggLayerCount);
  for (int i = 0; i < kVggLayerCount; ++i) {
    ConvLayer& l = w.layers[i];
    l.out_channels = kVggChannelPlan[i];
    l.in_channels = vgg_in_channels(i);
    const double sd = std::sqrt(2.0 / (l.in_channels * 9));
    l.kernel.resize(std::size_t(l.out_channels) * l.in_channels * 9);
    for (float& k : l.kernel)
      k = static_cast<float>(st.next_gaussian(0.0, sd));
    l.bias.assign(l.out_channels, 0.0f);
  }
  return w;
}

VggWeights randomize_weights(const VggWeights& base,
                             std::span<const double> alpha,
                             std::uint64_t seed, int k) {
  if (k < 1) throw std::invalid_argument("randomize_weights: k must be >= 1");
  if (alpha.size() != kVggLayerCount)
    throw std::invalid_argument("randomize_weights: need 16 alpha values");
  for (double a : alpha)
    if (!(a >= 0.0))
      throw std::invalid_argument("randomize_weights: alpha must be >= 0");
  base.validate();

  RngStream st = RngStream::derive(seed, static_cast<std::uint64_t>(k));
  VggWeights out = base;
  for (int i = 0; i < kVggLayerCount; ++i) {
    const std::vector<float>& kb = base.layers[i].kernel;
    const std::size_t n = kb.size();
    double sd = 0.0;
    if (n >= 2) {
      double mean = 0.0;
      for (float v : kb) mean += v;
      mean /= double(n);
      double ss = 0.0;
      for (float v : kb) {
        const double d = double(v) - mean;
        ss += d * d;
      }
      sd = std::sqrt(ss / double(n - 1));
    }
    std::vector<float>& ko = out.layers[i].kernel;
    const double a = alpha[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double x = st.next_gaussian(0.0, sd);
      ko[j] = static_cast<float>(double(kb[j]) + a * x);
    }
  }
  return out;
}

VggWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("weights: cannot open " + path);
  char magic[7];
  read_exact(in, magic, 7, "magic");
  if (std::memcmp(magic, kWeightsMagic, 7) != 0)
    throw std::runtime_error("weights: bad magic (not a DHFFW1 file)");
  const std::uint32_t count = read_u32(in, "layer count");
  if (count != kVggLayerCount)
    throw std::runtime_error("weights: expected 16 layer records, got " +
                             std::to_string(count));
  VggWeights w;
  w.layers.resize(kVggLayerCount);
  for (int i = 0; i < kVggLayerCount; ++i) {
    ConvLayer& l = w.layers[i];
    l.out_channels = static_cast<int>(read_u32(in, "out_ch"));
    l.in_channels = static_cast<int>(read_u32(in, "in_ch"));
    const std::uint32_t kh = read_u32(in, "kh");
    const std::uint32_t kw = read_u32(in, "kw");
    if (kh != 3 || kw != 3)
      throw std::runtime_error("weights: kernel must be 3x3");
    if (l.out_channels != kVggChannelPlan[i] ||
        l.in_channels != vgg_in_channels(i))
      throw std::runtime_error("weights: layer " + std::to_string(i + 1) +
                               " deviates from the VGG-19 channel plan");
    l.kernel.resize(std::size_t(l.out_channels) * l.in_channels * 9);
    l.bias.resize(l.out_channels);
    read_exact(in, l.kernel.data(), l.kernel.size() * sizeof(float),
               "kernel");
    read_exact(in, l.bias.data(), l.bias.size() * sizeof(float), "bias");
  }
  w.validate();
  return w;
}

void save_weights(const VggWeights& w, const std::string& path) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("weights: cannot open " + path + " for writing");
  out.write(kWeightsMagic, 7);
  write_u32(out, kVggLayerCount);
  for (const ConvLayer& l : w.layers) {
    write_u32(out, static_cast<std::uint32_t>(l.out_channels));
    write_u32(out, static_cast<std::uint32_t>(l.in_channels));
    write_u32(out, 3);
    write_u32(out, 3);
    out.write(reinterpret_cast<const char*>(l.kernel.data()),
              static_cast<std::streamsize>(l.kernel.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(l.bias.data()),
              static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("weights: write failed: " + path);
}

template <class T>
void conv2d(const Tensor<T>& in, const T* kernel, const T* bias, int out_ch,
            Tensor<T>& out) {
  const int H = in.h, W = in.w, Cin = in.c;
  out = Tensor<T>(out_ch, H, W);

  if (W < 4) {
    // tiny planes: generic tap walk, overhead is irrelevant here
    Tap taps[9];
    const int ntaps = make_taps(H, W, taps, true);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_ch; ++o) {
      T* op = out.plane(o);
      const T b = bias[o];
      for (std::size_t i = 0; i < std::size_t(H) * W; ++i) op[i] = b;
      const T* kbase = kernel + std::size_t(o) * Cin * 9;
      for (int c = 0; c < Cin; ++c) {
        const T* ip = in.plane(c);
        const T* kc = kbase + std::size_t(c) * 9;
        for (int t = 0; t < ntaps; ++t) {
          const Tap& tp = taps[t];
          const T kv = kc[tp.idx];
          for (int y = tp.y0; y < tp.y1; ++y) {
            T* orow = op + std::size_t(y) * W;
            const T* irow = ip + std::size_t(y + tp.dy) * W + tp.dx;
            for (int x = tp.x0; x < tp.x1; ++x) orow[x] += kv * irow[x];
          }
        }
      }
    }
    return;
  }

  // One output row accumulates in L1 across every (channel, kernel-row)
  // pass; per output element the additions still happen channel-major,
  // then kernel row-major.
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out_ch; ++o) {
    T* op = out.plane(o);
    const T* kbase = kernel + std::size_t(o) * Cin * 9;
    std::vector<T> acc(W);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) acc[x] = bias[o];
      for (int c = 0; c < Cin; ++c) {
        const T* ip = in.plane(c);
        const T* kc = kbase + std::size_t(c) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y + ky - 1;
          if (yy < 0 || yy >= H) continue;
          const T* irow = ip + std::size_t(yy) * W;
          const T k0 = kc[ky * 3 + 0], k1 = kc[ky * 3 + 1],
                  k2 = kc[ky * 3 + 2];
          acc[0] += k1 * irow[0] + k2 * irow[1];
          for (int x = 1; x < W - 1; ++x)
            acc[x] += k0 * irow[x - 1] + k1 * irow[x] + k2 * irow[x + 1];
          acc[W - 1] += k0 * irow[W - 2] + k1 * irow[W - 1];
        }
      }
      T* orow = op + std::size_t(y) * W;
      for (int x = 0; x < W; ++x) orow[x] = acc[x];
    }
  }
}

template <class T>
void pool2x2(const Tensor<T>& in, PoolingMode mode, Tensor<T>& out,
             std::vector<std::uint32_t>* argmax) {
  if (in.h < 2 || in.w < 2)
    throw std::invalid_argument("pool2x2: spatial dims must be >= 2");
  const int Ho = in.h / 2, Wo = in.w / 2, W = in.w;
  out = Tensor<T>(in.c, Ho, Wo);
  if (argmax) argmax->assign(out.size(), 0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < in.c; ++c) {
    const T* ip = in.plane(c);
    T* op = out.plane(c);
    std::uint32_t* am =
        argmax ? argmax->data() + std::size_t(c) * Ho * Wo : nullptr;
    for (int yo = 0; yo < Ho; ++yo)
      for (int xo = 0; xo < Wo; ++xo) {
        const int y = 2 * yo, x = 2 * xo;
        const std::uint32_t i00 = std::uint32_t(y) * W + x;
        if (mode == PoolingMode::Max) {
          // row-major window scan keeps the first maximal element
          T best = ip[i00];
          std::uint32_t bi = i00;
          if (ip[i00 + 1] > best) { best = ip[i00 + 1]; bi = i00 + 1; }
          if (ip[i00 + W] > best) { best = ip[i00 + W]; bi = i00 + W; }
          if (ip[i00 + W + 1] > best) { best = ip[i00 + W + 1]; bi = i00 + W + 1; }
          op[std::size_t(yo) * Wo + xo] = best;
          if (am) am[std::size_t(yo) * Wo + xo] = bi;
        } else {
          op[std::size_t(yo) * Wo + xo] =
              (ip[i00] + ip[i00 + 1] + ip[i00 + W] + ip[i00 + W + 1]) / T(4);
        }
      }
  }
}

template <class T>
ActivationCache<T> vgg_forward(const PreparedWeights<T>& w,
                               const Tensor<T>& input, PoolingMode mode) {
  if (input.c != 3)
    throw std::invalid_argument("vgg_forward: input must have 3 channels");
  if (input.h < 4 || input.w < 4)
    throw std::invalid_argument("vgg_forward: image too small (need >= 4)");

  ActivationCache<T> cache;
  cache.mode = mode;
  cache.in_h = input.h;
  cache.in_w = input.w;
  cache.conv_out.resize(kVggLayerCount);
  cache.relu_out.resize(kVggLayerCount);

  const Tensor<T>* cur = &input;
  for (int L = 1; L <= kVggLayerCount; ++L) {
    conv2d(*cur, w.kernel_ptr(L - 1), w.bias_ptr(L - 1),
           kVggChannelPlan[L - 1], cache.conv_out[L - 1]);
    relu(cache.conv_out[L - 1], cache.relu_out[L - 1]);
    cur = &cache.relu_out[L - 1];

    const int s = pool_stage_after(L);
    if (s >= 0) {
      if (cur->h >= 2 && cur->w >= 2) {
        pool2x2(*cur, mode, cache.pool_out[s],
                mode == PoolingMode::Max ? &cache.pool_argmax[s] : nullptr);
        cache.pooled[s] = true;
      } else {
        cache.pool_out[s] = *cur;
        cache.pooled[s] = false;
      }
      cur = &cache.pool_out[s];
    }
  }
  return cache;
}

template <class T>
Tensor<T> vgg_backward_to_input(const PreparedWeights<T>& w,
                                const ActivationCache<T>& cache,
                                int content_layer,
                                const Tensor<T>& content_grad,
                                const std::array<Tensor<T>, 5>& style_grads) {
  if (cache.conv_out.size() != kVggLayerCount)
    throw std::invalid_argument("vgg_backward_to_input: cache not filled");
  for (int s = 0; s < 5; ++s)
    if (!style_grads[s].empty() &&
        !style_grads[s].same_shape(cache.pool_out[s]))
      throw std::invalid_argument(
          "vgg_backward_to_input: style grad shape mismatch");
  if (!content_grad.empty() && content_layer >= 1 &&
      !content_grad.same_shape(cache.conv_out[content_layer - 1]))
    throw std::invalid_argument(
        "vgg_backward_to_input: content grad shape mismatch");

  // Seed at the pool5 output, then walk the graph backwards.
  Tensor<T> cur;
  {
    const Tensor<T>& ref = cache.relu_out[kVggLayerCount - 1];
    if (style_grads[4].empty()) {
      cur = Tensor<T>(ref.c, ref.h, ref.w);
    } else {
      unpool(style_grads[4], ref, cache.mode, cache.pooled[4],
             cache.pool_argmax[4], cur);
    }
  }

  Tensor<T> gpre, gin;
  for (int L = kVggLayerCount; L >= 1; --L) {
    const Tensor<T>& conv = cache.conv_out[L - 1];
    gpre = Tensor<T>(conv.c, conv.h, conv.w);
    const std::size_t n = conv.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i)
      gpre.v[i] = conv.v[i] > T(0) ? cur.v[i] : T(0);
    if (L == content_layer && !content_grad.empty())
      for (std::size_t i = 0; i < n; ++i) gpre.v[i] += content_grad.v[i];

    conv2d_backward_input(gpre, w.kernel_ptr(L - 1), vgg_in_channels(L - 1),
                          gin);

    if (L > 1) {
      const int s = pool_stage_after(L - 1);
      if (s >= 0) {
        // gin is the gradient at the pool output feeding this layer
        if (!style_grads[s].empty())
          for (std::size_t i = 0; i < gin.size(); ++i)
            gin.v[i] += style_grads[s].v[i];
        unpool(gin, cache.relu_out[L - 2], cache.mode, cache.pooled[s],
               cache.pool_argmax[s], cur);
      } else {
        cur = std::move(gin);
      }
    } else {
      cur = std::move(gin);
    }
  }
  return cur;  // gradient w.r.t. the 3xHxW input
}

template void conv2d<float>(const Tensor<float>&, const float*, const float*,
                            int, Tensor<float>&);
template void conv2d<double>(const Tensor<double>&, const double*,
                             const double*, int, Tensor<double>&);
template void pool2x2<float>(const Tensor<float>&, PoolingMode,
                             Tensor<float>&, std::vector<std::uint32_t>*);
template void pool2x2<double>(const Tensor<double>&, PoolingMode,
                              Tensor<double>&, std::vector<std::uint32_t>*);
template PreparedWeights<float> prepare_weights<float>(const VggWeights&);
template PreparedWeights<double> prepare_weights<double>(const VggWeights&);
template ActivationCache<float> vgg_forward<float>(
    const PreparedWeights<float>&, const Tensor<float>&, PoolingMode);
template ActivationCache<double> vgg_forward<double>(
    const PreparedWeights<double>&, const Tensor<double>&, PoolingMode);
template Tensor<float> vgg_backward_to_input<float>(
    const PreparedWeights<float>&, const ActivationCache<float>&, int,
    const Tensor<float>&, const std::array<Tensor<float>, 5>&);
template Tensor<double> vgg_backward_to_input<double>(
    const PreparedWeights<double>&, const ActivationCache<double>&, int,
    const Tensor<double>&, const std::array<Tensor<double>, 5>&);

}  // namespace dhff
