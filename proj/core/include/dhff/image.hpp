#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhff {

// H x W x C raster, row-major with interleaved channels, values in [0,1].
// channels is 1 (gray) or 3 (RGB).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f);

  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + ch];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Align-corners bilinear resampling: src = dst * (src_len-1)/(dst_len-1),
// a length-1 source axis maps to a constant row/column. Channels preserved.
Image bilinear_resize(const Image& img, int new_h, int new_w);

// Replicates a 1-channel image into 3 identical channels; 3-channel input
// is returned unchanged.
Image to_rgb(const Image& img);

// Mean absolute per-pixel difference on the [0,1] scale (stop-criterion
// norm of the iterative transform).
double mean_abs_diff(const Image& a, const Image& b);

enum class PnmErrorKind { BadMagic, BadHeader, BadMaxval, Truncated, Io };

class PnmError : public std::runtime_error {
 public:
  PnmError(PnmErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  PnmErrorKind kind() const { return kind_; }

 private:
  PnmErrorKind kind_;
};

// Binary PGM (P5) / PPM (P6), maxval 255 only. Pixels are stored as
// byte/255.
Image load_pnm(const std::string& path);

// Writes P5 for 1-channel, P6 for 3-channel input. Quantization rounds
// value*255 half away from zero; out-of-range values are clamped first.
void save_pnm(const Image& img, const std::string& path);

}  // namespace dhff
