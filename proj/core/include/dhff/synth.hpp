#pragma once

#include <cstdint>

#include "dhff/detect.hpp"
#include "dhff/image.hpp"

namespace dhff {

struct SynthPair {
  Image optical;   // pre-event, 3 channels
  Image sar;       // post-event intensity, 1 channel, speckled
  ChangeMap truth; // rasterized change shapes
};

// Deterministic heterogeneous test pair: a shaded scene of rectangles and
// discs with sinusoidal per-class texture renders the pre-event optical
// image; the post-event scene (base shapes plus change shapes) renders
// the SAR intensity as class reflectivity times gamma speckle (shape 4,
// mean 1), clipped to [0,1]. Change shapes are chosen with strong
// contrast against the underlying scene and rasterized pixel count close
// to change_fraction of the canvas. Requires size >= 32 and
// change_fraction in [0, 0.5].
SynthPair gen_pair(std::uint64_t seed, int size, double change_fraction = 0.1);

}  // namespace dhff
