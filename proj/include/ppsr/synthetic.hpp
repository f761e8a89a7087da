#pragma once

// Synthetic test material: a procedural textured frame and globally
// translated sequences built from a base frame.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "ppsr/errors.hpp"
#include "ppsr/random.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

/// Deterministic size x size frame mixing gratings, rings, a checkerboard,
/// a disk and a smooth ramp. Periods stay above 5 px so that the texture
/// survives x2 sampling. Values stay inside [0, 255].
inline ImageVolume textured_pattern(std::size_t size = 64) {
  if (size < 8) throw InvalidArgument("textured_pattern: size must be >= 8");
  ImageVolume img(size, size);
  const double n = static_cast<double>(size);
  const double half = n / 2.0;
  const double pi = std::numbers::pi;
  for (std::size_t c = 0; c < size; ++c) {
    for (std::size_t r = 0; r < size; ++r) {
      const double y = static_cast<double>(r), x = static_cast<double>(c);
      double value = 0.0;
      if (y < half && x < half) {
        // stripes, period 7 px, slightly tilted
        value = 128.0 + 70.0 * std::sin(2.0 * pi * (x + 0.2 * y) / 7.0);
      } else if (y < half) {
        // concentric rings, period 8 px
        const double dy = y - half / 2.0, dx = x - 1.5 * half;
        value = 128.0 + 80.0 * std::cos(2.0 * pi * std::sqrt(dx * dx + dy * dy) / 8.0);
      } else if (x < half) {
        // checkerboard of 6 px cells
        const bool odd = ((r / 6) + (c / 6)) % 2 == 1;
        value = odd ? 190.0 : 70.0;
      } else {
        // diagonal grating with a dark disk on top
        value = 140.0 + 50.0 * std::sin(2.0 * pi * (x - y) / 10.0);
        const double dy = y - 1.5 * half, dx = x - 1.5 * half;
        if (dx * dx + dy * dy < (0.3 * half) * (0.3 * half)) value = 30.0;
      }
      value += 20.0 * (x + y) / (2.0 * n) - 10.0;
      img(r, c) = std::clamp(value, 0.0, 255.0);
    }
  }
  return img;
}

/// Piecewise-smooth frame with soft-edged shapes over shaded background and
/// one patch of moderate-frequency texture. Closer to photographs than
/// textured_pattern; used where denoising, not aliasing, is under test.
inline ImageVolume smooth_scene(std::size_t size = 64) {
  if (size < 8) throw InvalidArgument("smooth_scene: size must be >= 8");
  ImageVolume img(size, size);
  const double n = static_cast<double>(size);
  const double pi = std::numbers::pi;
  auto soft = [](double signed_dist) { return 1.0 / (1.0 + std::exp(-2.0 * signed_dist)); };
  for (std::size_t c = 0; c < size; ++c) {
    for (std::size_t r = 0; r < size; ++r) {
      const double y = static_cast<double>(r) / n, x = static_cast<double>(c) / n;
      double value = 70.0 + 60.0 * x + 30.0 * std::cos(pi * y);
      // bright ellipse
      const double ex = (x - 0.32) / 0.22, ey = (y - 0.35) / 0.16;
      value += 90.0 * soft(n * 0.16 * (1.0 - std::sqrt(ex * ex + ey * ey)));
      // dark square
      const double sq = std::max(std::abs(x - 0.72), std::abs(y - 0.7));
      value -= 60.0 * soft(n * (0.15 - sq));
      // textured disk, period about 8 px
      const double dx = x - 0.28, dy = y - 0.76;
      const double inside = soft(n * (0.14 - std::sqrt(dx * dx + dy * dy)));
      value += inside * 35.0 * std::sin(2.0 * pi * n * (x + 0.5 * y) / 8.0);
      img(r, c) = std::clamp(value, 0.0, 255.0);
    }
  }
  return img;
}

struct SyntheticTranslationSpec {
  std::size_t frame_count = 30;
  int max_shift = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (frame_count < 1) throw InvalidArgument("synthetic translations: frame_count must be >= 1");
    if (max_shift < 0) throw InvalidArgument("synthetic translations: max_shift must be >= 0");
  }
};

struct Offset {
  int dx = 0;  // columns
  int dy = 0;  // rows
  friend bool operator==(const Offset&, const Offset&) = default;
};

struct TranslatedSequence {
  ImageVolume frames;
  std::vector<Offset> offsets;  // offsets[0] == {0, 0}
};

/// frame(r, c) = base(r - dy, c - dx) with mirror fill at exposed borders.
inline ImageVolume translate(const ImageVolume& base, Offset o) {
  ImageVolume out(base.height(), base.width());
  const auto h = static_cast<std::ptrdiff_t>(base.height());
  const auto w = static_cast<std::ptrdiff_t>(base.width());
  for (std::ptrdiff_t c = 0; c < w; ++c)
    for (std::ptrdiff_t r = 0; r < h; ++r)
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
          base(static_cast<std::size_t>(reflect_index(r - o.dy, h)),
               static_cast<std::size_t>(reflect_index(c - o.dx, w)));
  return out;
}

/// Frame 0 is the base; each later frame is shifted by integers drawn
/// uniformly from [-max_shift, max_shift] (dx then dy per frame).
inline TranslatedSequence synth_translations(const ImageVolume& base, const SyntheticTranslationSpec& spec) {
  spec.validate();
  if (base.frames() != 1) throw InvalidArgument("synthetic translations: base must be a single frame");
  TranslatedSequence seq{ImageVolume(base.height(), base.width(), spec.frame_count), {}};
  RandomStream rng(spec.seed);
  for (std::size_t t = 0; t < spec.frame_count; ++t) {
    Offset o;
    if (t > 0) {
      o.dx = static_cast<int>(rng.integer(-spec.max_shift, spec.max_shift));
      o.dy = static_cast<int>(rng.integer(-spec.max_shift, spec.max_shift));
    }
    seq.frames.set_frame(t, translate(base, o));
    seq.offsets.push_back(o);
  }
  return seq;
}

}  // namespace ppsr
