#pragma once

#include <cstddef>
#include <vector>

#include "dhff/image.hpp"

namespace dhff {

// C x H x W planar tensor used by the network code. Planes are contiguous.
template <class T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(c_) * h_ * w_, T(0)) {}

  std::size_t plane_size() const {
    return static_cast<std::size_t>(h) * w;
  }
  T* plane(int i) { return v.data() + i * plane_size(); }
  const T* plane(int i) const { return v.data() + i * plane_size(); }

  T& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  T at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }
  bool same_shape(const Tensor& o) const {
    return c == o.c && h == o.h && w == o.w;
  }
};

template <class T>
Tensor<T> image_to_tensor(const Image& img) {
  Tensor<T> t(img.channels, img.height, img.width);
  for (int ch = 0; ch < img.channels; ++ch) {
    T* p = t.plane(ch);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        p[static_cast<std::size_t>(y) * img.width + x] =
            static_cast<T>(img.at(y, x, ch));
  }
  return t;
}

template <class T>
Image tensor_to_image(const Tensor<T>& t, bool clamp01 = false) {
  Image img(t.h, t.w, t.c);
  for (int ch = 0; ch < t.c; ++ch) {
    const T* p = t.plane(ch);
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) {
        float v = static_cast<float>(p[static_cast<std::size_t>(y) * t.w + x]);
        if (clamp01) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        img.at(y, x, ch) = v;
      }
  }
  return img;
}

}  // namespace dhff
