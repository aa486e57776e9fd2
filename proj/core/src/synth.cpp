#include "dhff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dhff/rng.hpp"

namespace dhff {

namespace {

// Reflectivity classes shared by both renderings; optical luminance tracks
// the SAR reflectivity so the pair is comparable after transformation.
struct ClassDef {
  double rho;      // mean SAR intensity
  double tint[3];  // optical base color
  double freq;     // texture frequency (cycles per 16 px)
  double angle;    // texture orientation
};

constexpr ClassDef kClasses[] = {
    {0.12, {0.10, 0.12, 0.14}, 1.0, 0.3},
    {0.32, {0.30, 0.36, 0.26}, 2.0, 1.1},
    {0.52, {0.53, 0.50, 0.46}, 3.0, 1.9},
    {0.72, {0.74, 0.71, 0.68}, 1.5, 2.6},
    {0.92, {0.93, 0.91, 0.88}, 2.5, 0.7},
};
constexpr int kNumClasses = 5;

struct Shape {
  bool disc = false;
  int cx = 0, cy = 0, rx = 1, ry = 1;
  int cls = 0;
};

bool inside(const Shape& s, int x, int y) {
  if (s.disc) {
    const double dx = double(x - s.cx) / s.rx;
    const double dy = double(y - s.cy) / s.ry;
    return dx * dx + dy * dy <= 1.0;
  }
  return std::abs(x - s.cx) <= s.rx && std::abs(y - s.cy) <= s.ry;
}

void rasterize(const Shape& s, int size, std::vector<int>& cls_map) {
  for (int y = s.cy - s.ry; y <= s.cy + s.ry; ++y)
    for (int x = s.cx - s.rx; x <= s.cx + s.rx; ++x)
      if (y >= 0 && y < size && x >= 0 && x < size && inside(s, x, y))
        cls_map[std::size_t(y) * size + x] = s.cls;
}

std::vector<std::size_t> shape_pixels(const Shape& s, int size) {
  std::vector<std::size_t> px;
  for (int y = s.cy - s.ry; y <= s.cy + s.ry; ++y)
    for (int x = s.cx - s.rx; x <= s.cx + s.rx; ++x)
      if (y >= 0 && y < size && x >= 0 && x < size && inside(s, x, y))
        px.push_back(std::size_t(y) * size + x);
  return px;
}

Shape random_shape(RngStream& rng, int size, int rmin, int rmax) {
  Shape s;
  s.disc = (rng.next_u64() & 1) != 0;
  s.rx = rmin + int(rng.next_below(std::uint64_t(rmax - rmin + 1)));
  s.ry = rmin + int(rng.next_below(std::uint64_t(rmax - rmin + 1)));
  s.cx = s.rx + int(rng.next_below(std::uint64_t(size - 2 * s.rx)));
  s.cy = s.ry + int(rng.next_below(std::uint64_t(size - 2 * s.ry)));
  return s;
}

double unit_nonzero(RngStream& rng) {
  const double u = rng.next_unit();
  return u == 0.0 ? 0x1.0p-53 : u;
}

// multi-look intensity speckle: Gamma(shape 4, mean 1)
double speckle(RngStream& rng) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s -= std::log(unit_nonzero(rng));
  return s / 4.0;
}

double texture(const ClassDef& c, int x, int y) {
  const double u = x * std::cos(c.angle) + y * std::sin(c.angle);
  return std::sin(2.0 * std::numbers::pi * c.freq * u / 16.0);
}

float clip01(double v) {
  return static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
}

}  // namespace

SynthPair gen_pair(std::uint64_t seed, int size, double change_fraction) {
  if (size < 32)
    throw std::invalid_argument("gen_pair: size must be >= 32");
  if (!(change_fraction >= 0.0 && change_fraction <= 0.5))
    throw std::invalid_argument("gen_pair: change_fraction in [0, 0.5]");

  RngStream rng = RngStream::derive(seed, 0x5CE11Eull);
  const std::size_t npx = std::size_t(size) * size;

  // pre-event scene: background class 0 plus a handful of shapes
  std::vector<int> pre(npx, 0);
  const int n_base = 6 + size / 16;
  for (int i = 0; i < n_base; ++i) {
    Shape s = random_shape(rng, size, std::max(2, size / 12), size / 5);
    s.cls = 1 + int(rng.next_below(kNumClasses - 1));
    rasterize(s, size, pre);
  }

  // post-event scene: change shapes with a class that differs from every
  // class underneath, so the truth mask equals the rendered difference
  std::vector<int> post = pre;
  ChangeMap truth(size, size);
  const double target = change_fraction * double(npx);
  double placed = 0.0;
  int attempts = 0;
  while (placed < 0.88 * target && attempts < 4000) {
    ++attempts;
    const double want = std::max(target - placed, 12.0);
    const int rcap = std::max(
        2, std::min(size / 6, int(std::sqrt(want / std::numbers::pi)) + 1));
    Shape s = random_shape(rng, size, 2, rcap);

    const std::vector<std::size_t> px = shape_pixels(s, size);
    if (px.empty() || placed + double(px.size()) > 1.15 * target) continue;
    bool overlap = false;
    bool under[kNumClasses] = {};
    for (std::size_t p : px) {
      if (truth.bits[p]) {
        overlap = true;
        break;
      }
      under[pre[p]] = true;
    }
    if (overlap) continue;

    int best_cls = -1;
    double best_contrast = -1.0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (under[c]) continue;
      double contrast = 2.0;
      for (int u = 0; u < kNumClasses; ++u)
        if (under[u])
          contrast = std::min(contrast,
                              std::abs(kClasses[c].rho - kClasses[u].rho));
      if (contrast > best_contrast) {
        best_contrast = contrast;
        best_cls = c;
      }
    }
    if (best_cls < 0 || best_contrast < 0.15) continue;

    s.cls = best_cls;
    rasterize(s, size, post);
    for (std::size_t p : px) truth.bits[p] = 1;
    placed += double(px.size());
  }

  SynthPair out;
  out.truth = std::move(truth);

  // optical: tinted, gently shaded, sinusoidal texture per class
  out.optical = Image(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const ClassDef& c = kClasses[pre[std::size_t(y) * size + x]];
      const double shade =
          1.0 + 0.08 * std::sin(2.0 * std::numbers::pi * (x + 2 * y) /
                                (2.0 * size));
      const double tex = 0.06 * texture(c, x, y);
      for (int ch = 0; ch < 3; ++ch)
        out.optical.at(y, x, ch) = clip01(c.tint[ch] * shade + tex);
    }

  // SAR: class reflectivity times gamma speckle, row-major draw order
  out.sar = Image(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double rho = kClasses[post[std::size_t(y) * size + x]].rho;
      out.sar.at(y, x, 0) = clip01(rho * speckle(rng));
    }

  return out;
}

}  // namespace dhff
