#include "dhff/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dhff {

Image changemap_to_image(const ChangeMap& m) {
  Image img(m.height, m.width, 1);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    img.data[i] = m.bits[i] ? 1.0f : 0.0f;
  return img;
}

ChangeMap image_to_changemap(const Image& img) {
  if (img.channels != 1)
    throw std::invalid_argument("image_to_changemap: gray image required");
  ChangeMap m(img.height, img.width);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    m.bits[i] = img.data[i] > 0.5f ? 1 : 0;
  return m;
}

Image difference_image(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("difference_image: shape mismatch");
  Image out(a.height, a.width, 1);
  const double inv_sqrt_c = 1.0 / std::sqrt(double(a.channels));
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < a.channels; ++c) {
        const double d = double(a.at(y, x, c)) - double(b.at(y, x, c));
        s += d * d;
      }
      out.at(y, x, 0) = static_cast<float>(std::sqrt(s) * inv_sqrt_c);
    }
  return out;
}

namespace {

inline int bin_of(float v) {
  int b = static_cast<int>(v * 256.0f);
  if (b > 255) b = 255;
  if (b < 0) b = 0;
  return b;
}

}  // namespace

OtsuResult otsu_threshold(const Image& gray) {
  if (gray.channels != 1)
    throw std::invalid_argument("otsu_threshold: gray image required");

  std::array<std::int64_t, 256> hist{};
  for (float v : gray.data) ++hist[bin_of(v)];
  const std::int64_t total = static_cast<std::int64_t>(gray.data.size());

  int lowest = 255, highest = 0, occupied = 0;
  for (int i = 0; i < 256; ++i)
    if (hist[i] > 0) {
      lowest = std::min(lowest, i);
      highest = std::max(highest, i);
      ++occupied;
    }

  OtsuResult res;
  res.map = ChangeMap(gray.height, gray.width);
  if (total == 0 || occupied <= 1) {
    // Degenerate histogram: no split exists; the threshold sits at the
    // occupied bin's upper edge and nothing is marked.
    res.threshold = occupied == 1 ? double(lowest + 1) / 256.0 : 0.0;
    return res;
  }

  // Between-class variance w0*w1*(mu0-mu1)^2 is maximized; with integer
  // class counts n0,n1 and integer bin-index sums s0,s1 the candidate
  // ordering equals that of (s0*n1 - s1*n0)^2 / (n0*n1), comparable
  // exactly in 128-bit integers via cross multiplication.
  std::int64_t total_sum = 0;
  for (int i = 0; i < 256; ++i) total_sum += hist[i] * i;

  int best_t = -1;
  unsigned __int128 best_num = 0;   // (s0*n1 - s1*n0)^2
  unsigned __int128 best_den = 1;   // n0*n1
  std::int64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::int64_t s1 = total_sum - s0;
    const std::int64_t diff = s0 * n1 - s1 * n0;
    const unsigned __int128 num =
        static_cast<unsigned __int128>(diff < 0 ? -diff : diff) *
        static_cast<unsigned __int128>(diff < 0 ? -diff : diff);
    const unsigned __int128 den = static_cast<unsigned __int128>(n0) *
                                  static_cast<unsigned __int128>(n1);
    // strict > keeps the lowest threshold on ties
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }

  res.threshold = double(best_t + 1) / 256.0;
  const float thr = static_cast<float>(res.threshold);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    res.map.bits[i] = gray.data[i] > thr ? 1 : 0;
  return res;
}

std::vector<double> pixel_features(const Image& opt, const Image& t2,
                                   int radius) {
  if (!opt.same_shape(t2))
    throw std::invalid_argument("pixel_features: shape mismatch");
  if (radius < 0)
    throw std::invalid_argument("pixel_features: radius must be >= 0");

  const int h = opt.height, w = opt.width, c = opt.channels;
  const int d = pixel_feature_dim(c);

  // mean absolute channel difference per pixel, reused by the window term
  std::vector<double> mad(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int ch = 0; ch < c; ++ch)
        s += std::abs(double(opt.at(y, x, ch)) - double(t2.at(y, x, ch)));
      mad[std::size_t(y) * w + x] = s / c;
    }

  std::vector<double> out(static_cast<std::size_t>(h) * w * d);
  const double win = double(2 * radius + 1) * (2 * radius + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double* f = out.data() + (std::size_t(y) * w + x) * d;
      for (int ch = 0; ch < c; ++ch)
        f[ch] = std::abs(double(opt.at(y, x, ch)) - double(t2.at(y, x, ch)));
      double s = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          s += mad[std::size_t(yy) * w + xx];
        }
      }
      f[c] = s / win;
    }
  return out;
}

}  // namespace dhff
