#pragma once

#include <cstdint>
#include <vector>

#include "dhff/image.hpp"

namespace dhff {

// Binary decision raster: 1 = change, 0 = unchange.
struct ChangeMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  ChangeMap() = default;
  ChangeMap(int h, int w)
      : height(h), width(w),
        bits(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int y, int x) {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return bits.size(); }
};

// Round-trip through gray images with values {0, 255}; loading treats
// anything > 0.5 as change.
Image changemap_to_image(const ChangeMap& m);
ChangeMap image_to_changemap(const Image& img);

// Per-pixel Euclidean distance across channels divided by sqrt(C), so
// the output stays in [0,1].
Image difference_image(const Image& a, const Image& b);

struct OtsuResult {
  double threshold = 0.0;
  ChangeMap map;
};

// 256-bin Otsu on a gray image in [0,1]: the threshold maximizes the
// between-class variance over bin boundaries (ties -> lowest), pixels
// strictly above it are marked change. A single-bin histogram yields
// that bin's upper edge and an empty map. The argmax comparison is done
// in exact integer arithmetic.
OtsuResult otsu_threshold(const Image& gray);

// Per-pixel descriptor for the one-class SVM: channelwise absolute
// differences plus the mean absolute difference over the (2r+1)^2
// neighborhood (edge-replicated); d = C + 1 values per pixel, row-major.
std::vector<double> pixel_features(const Image& opt, const Image& t2,
                                   int radius);

inline int pixel_feature_dim(int channels) { return channels + 1; }

}  // namespace dhff
