#include "dhff/image.hpp"

#include <cmath>
#include <cstdlib>

namespace dhff {

Image::Image(int h, int w, int c, float fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(h) * w * c, fill) {
  if (h < 0 || w < 0 || (c != 1 && c != 3))
    throw std::invalid_argument("Image: bad dimensions or channel count");
}

Image bilinear_resize(const Image& img, int new_h, int new_w) {
  if (new_h < 1 || new_w < 1)
    throw std::invalid_argument("bilinear_resize: target size must be >= 1");
  if (img.height == new_h && img.width == new_w) return img;

  Image out(new_h, new_w, img.channels);
  const double sy = new_h > 1 && img.height > 1
                        ? double(img.height - 1) / double(new_h - 1)
                        : 0.0;
  const double sx = new_w > 1 && img.width > 1
                        ? double(img.width - 1) / double(new_w - 1)
                        : 0.0;
  for (int y = 0; y < new_h; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = y0 + 1 < img.height ? y0 + 1 : img.height - 1;
    const double wy = fy - y0;
    for (int x = 0; x < new_w; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = x0 + 1 < img.width ? x0 + 1 : img.width - 1;
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float v = img.at(y, x, 0);
      out.at(y, x, 0) = v;
      out.at(y, x, 1) = v;
      out.at(y, x, 2) = v;
    }
  return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("mean_abs_diff: shape mismatch");
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    s += std::abs(double(a.data[i]) - double(b.data[i]));
  return s / double(a.data.size());
}

}  // namespace dhff
