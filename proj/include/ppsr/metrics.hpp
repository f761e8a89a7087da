#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ppsr/errors.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

struct PsnrOptions {
  std::size_t border_crop = 0;  // pixels dropped on each spatial side
  bool per_frame = false;       // average of per-frame PSNRs instead of one pooled value
};

inline constexpr double kPeak = 255.0;

namespace detail {

inline void check_crop(const Shape& s, std::size_t crop) {
  if (2 * crop >= std::min(s.height, s.width)) {
    throw InvalidArgument("border_crop " + std::to_string(crop) + " leaves no pixels in a " +
                          std::to_string(s.height) + "x" + std::to_string(s.width) + " frame");
  }
}

// Sum of squared differences and sample count over frames [t0, t1).
inline std::pair<double, std::size_t> cropped_sse(const ImageVolume& x, const ImageVolume& y,
                                                  std::size_t crop, std::size_t t0, std::size_t t1) {
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t t = t0; t < t1; ++t)
    for (std::size_t c = crop; c < x.width() - crop; ++c)
      for (std::size_t r = crop; r < x.height() - crop; ++r) {
        const double d = x(r, c, t) - y(r, c, t);
        sse += d * d;
        ++count;
      }
  return {sse, count};
}

inline double psnr_from_mse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

}  // namespace detail

inline double mse(const ImageVolume& x, const ImageVolume& y, std::size_t border_crop = 0) {
  x.require_same_shape(y, "mse");
  detail::check_crop(x.shape(), border_crop);
  const auto [sse, n] = detail::cropped_sse(x, y, border_crop, 0, x.frames());
  return sse / static_cast<double>(n);
}

/// 10 log10(255^2 / MSE); +infinity when the inputs are identical.
inline std::vector<double> psnr_per_frame(const ImageVolume& x, const ImageVolume& y,
                                          std::size_t border_crop = 0) {
  x.require_same_shape(y, "psnr");
  detail::check_crop(x.shape(), border_crop);
  std::vector<double> out;
  out.reserve(x.frames());
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const auto [sse, n] = detail::cropped_sse(x, y, border_crop, t, t + 1);
    out.push_back(detail::psnr_from_mse(sse / static_cast<double>(n)));
  }
  return out;
}

inline double psnr(const ImageVolume& x, const ImageVolume& y, const PsnrOptions& opt = {}) {
  if (opt.per_frame) {
    const auto values = psnr_per_frame(x, y, opt.border_crop);
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  return detail::psnr_from_mse(mse(x, y, opt.border_crop));
}

/// Anisotropic total variation, summed over frames.
inline double total_variation(const ImageVolume& v) {
  double tv = 0.0;
  for (std::size_t t = 0; t < v.frames(); ++t)
    for (std::size_t c = 0; c < v.width(); ++c)
      for (std::size_t r = 0; r < v.height(); ++r) {
        if (r + 1 < v.height()) tv += std::abs(v(r + 1, c, t) - v(r, c, t));
        if (c + 1 < v.width()) tv += std::abs(v(r, c + 1, t) - v(r, c, t));
      }
  return tv;
}

// ---------------------------------------------------------------------------
// Bicubic resampling (Keys kernel, a = -0.5, mirror extension).
//
// Upscaling by s places input sample (i, j) at output (s*i, s*j), the same
// phase that decimate() samples, so decimate(bicubic_up(y, s), s) == y.

enum class ResizeDirection { up, down };

inline double keys_kernel(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

// For each output position along one axis, the input taps and weights.
inline std::vector<Taps> resample_taps(std::size_t n_in, std::size_t n_out, std::size_t s,
                                       ResizeDirection dir) {
  std::vector<Taps> taps(n_out);
  const auto n = static_cast<std::ptrdiff_t>(n_in);
  for (std::size_t q = 0; q < n_out; ++q) {
    Taps& t = taps[q];
    if (dir == ResizeDirection::up) {
      const auto base = static_cast<std::ptrdiff_t>(q / s);
      const double frac = static_cast<double>(q % s) / static_cast<double>(s);
      for (std::ptrdiff_t k = -1; k <= 2; ++k) {
        const double w = keys_kernel(static_cast<double>(k) - frac);
        if (w == 0.0) continue;
        t.index.push_back(static_cast<std::size_t>(reflect_index(base + k, n)));
        t.weight.push_back(w);
      }
    } else {
      // Antialiased: kernel stretched by s, centred on input sample s*q.
      const auto centre = static_cast<std::ptrdiff_t>(q * s);
      const auto reach = static_cast<std::ptrdiff_t>(2 * s) - 1;
      double sum = 0.0;
      for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
        const double w = keys_kernel(static_cast<double>(d) / static_cast<double>(s));
        if (w == 0.0) continue;
        t.index.push_back(static_cast<std::size_t>(reflect_index(centre + d, n)));
        t.weight.push_back(w);
        sum += w;
      }
      for (double& w : t.weight) w /= sum;
    }
  }
  return taps;
}

}  // namespace detail

inline ImageVolume bicubic_resize(const ImageVolume& v, std::size_t s,
                                  ResizeDirection dir = ResizeDirection::up) {
  if (s == 0) throw InvalidArgument("bicubic_resize: scale must be >= 1");
  if (s == 1) return v;
  Shape out_shape = v.shape();
  if (dir == ResizeDirection::up) {
    out_shape.height *= s;
    out_shape.width *= s;
  } else {
    if (v.height() % s != 0 || v.width() % s != 0) {
      throw DimensionError("bicubic_resize: scale " + std::to_string(s) + " does not divide " +
                           to_string(v.shape()));
    }
    out_shape.height /= s;
    out_shape.width /= s;
  }
  const auto row_taps = detail::resample_taps(v.height(), out_shape.height, s, dir);
  const auto col_taps = detail::resample_taps(v.width(), out_shape.width, s, dir);

  // Rows first (height changes), then columns.
  ImageVolume tmp(out_shape.height, v.width(), v.frames());
  for (std::size_t t = 0; t < v.frames(); ++t)
    for (std::size_t c = 0; c < v.width(); ++c)
      for (std::size_t r = 0; r < out_shape.height; ++r) {
        const auto& tp = row_taps[r];
        double acc = 0.0;
        for (std::size_t k = 0; k < tp.index.size(); ++k) acc += tp.weight[k] * v(tp.index[k], c, t);
        tmp(r, c, t) = acc;
      }
  ImageVolume out(out_shape);
  for (std::size_t t = 0; t < v.frames(); ++t)
    for (std::size_t c = 0; c < out_shape.width; ++c) {
      const auto& tp = col_taps[c];
      for (std::size_t r = 0; r < out_shape.height; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tp.index.size(); ++k) acc += tp.weight[k] * tmp(r, tp.index[k], t);
        out(r, c, t) = acc;
      }
    }
  return out;
}

}  // namespace ppsr
