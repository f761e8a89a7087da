#pragma once

// Linear degradation operators: blur H, decimation S, the forward map SH and
// the normal operator L = (1/sigma^2) (SH)^T SH.
//
// Blur uses half-sample symmetric (mirror) extension at frame borders. With
// that extension and a point-symmetric kernel, H is a symmetric matrix; for a
// general kernel the adjoint is the exact transpose of the gather pattern.
// Decimation keeps the top-left phase: out(i, j) = in(s*i, s*j).

#include <cmath>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ppsr/errors.hpp"
#include "ppsr/random.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

class BlurKernel {
 public:
  enum class Kind { gaussian, box, identity, custom };

  /// Single unit tap.
  static BlurKernel identity() { return BlurKernel(Kind::identity, 1, 1, {1.0}, true); }

  /// Sampled Gaussian g(i,j) = exp(-(i^2+j^2)/(2 stddev^2)), normalized.
  /// size == 0 picks 2*ceil(3*stddev)+1.
  static BlurKernel gaussian(double stddev, std::size_t size = 0) {
    if (!(stddev > 0.0)) throw InvalidArgument("gaussian kernel: stddev must be positive");
    if (size == 0) size = 2 * static_cast<std::size_t>(std::ceil(3.0 * stddev)) + 1;
    const auto radius = static_cast<std::ptrdiff_t>(size / 2);
    std::vector<double> taps;
    taps.reserve(size * size);
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
      for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
        taps.push_back(std::exp(-static_cast<double>(i * i + j * j) / (2.0 * stddev * stddev)));
      }
    }
    BlurKernel k(Kind::gaussian, size, size, std::move(taps), true);
    k.stddev_ = stddev;
    return k;
  }

  static BlurKernel box(std::size_t size) {
    return BlurKernel(Kind::box, size, size, std::vector<double>(size * size, 1.0), true);
  }

  /// Row-major taps. Normalized to unit sum unless normalize is false.
  static BlurKernel custom(std::size_t rows, std::size_t cols, std::vector<double> taps,
                           bool normalize = true) {
    return BlurKernel(Kind::custom, rows, cols, std::move(taps), normalize);
  }

  /// Plain-text kernel: first line "rows cols", then row-major taps.
  static BlurKernel load(const std::filesystem::path& path, bool normalize = true) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open kernel file " + path.string());
    long long rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows <= 0 || cols <= 0) {
      throw IoError(path.string() + ": kernel header must be 'rows cols'");
    }
    std::vector<double> taps(static_cast<std::size_t>(rows * cols));
    for (double& t : taps) {
      if (!(is >> t)) throw IoError(path.string() + ": expected " + std::to_string(rows * cols) + " taps");
    }
    return custom(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(taps),
                  normalize);
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t row_radius() const noexcept { return rows_ / 2; }
  std::size_t col_radius() const noexcept { return cols_ / 2; }
  std::size_t radius() const noexcept { return std::max(rows_, cols_) / 2; }
  double stddev() const noexcept { return stddev_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return taps_[r * cols_ + c]; }
  const std::vector<double>& taps() const noexcept { return taps_; }

  bool is_point_symmetric() const noexcept {
    for (std::size_t i = 0; i < taps_.size(); ++i) {
      if (taps_[i] != taps_[taps_.size() - 1 - i]) return false;
    }
    return true;
  }

 private:
  BlurKernel(Kind kind, std::size_t rows, std::size_t cols, std::vector<double> taps, bool normalize)
      : kind_(kind), rows_(rows), cols_(cols), taps_(std::move(taps)) {
    if (rows_ % 2 == 0 || cols_ % 2 == 0) throw InvalidArgument("blur kernel side lengths must be odd");
    if (taps_.size() != rows_ * cols_) throw DimensionError("blur kernel: tap count mismatch");
    for (double t : taps_) {
      if (!std::isfinite(t)) throw InvalidArgument("blur kernel: non-finite tap");
    }
    if (normalize) {
      const double sum = std::accumulate(taps_.begin(), taps_.end(), 0.0);
      if (sum == 0.0) throw InvalidArgument("blur kernel: taps sum to zero, cannot normalize");
      for (double& t : taps_) t /= sum;
    }
  }

  Kind kind_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> taps_;
  double stddev_ = 0.0;
};

/// y = S H x + noise.
struct DegradationModel {
  BlurKernel kernel = BlurKernel::identity();
  std::size_t scale = 1;
  double noise_sigma = 0.0;
};

namespace detail {

inline void check_kernel_fits(const ImageVolume& v, const BlurKernel& k) {
  if (k.rows() > v.height() || k.cols() > v.width()) {
    throw InvalidArgument("blur kernel " + std::to_string(k.rows()) + "x" + std::to_string(k.cols()) +
                          " is larger than frame " + std::to_string(v.height()) + "x" +
                          std::to_string(v.width()));
  }
}

// Reflected source index for output position p and kernel tap a along one axis.
inline std::vector<std::size_t> tap_index_table(std::size_t n, std::size_t taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps / 2);
  std::vector<std::size_t> table(n * taps);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t a = 0; a < taps; ++a) {
      const auto src = static_cast<std::ptrdiff_t>(p) + radius - static_cast<std::ptrdiff_t>(a);
      table[p * taps + a] = static_cast<std::size_t>(reflect_index(src, static_cast<std::ptrdiff_t>(n)));
    }
  }
  return table;
}

inline void check_scale(const Shape& hr, std::size_t s) {
  if (s == 0) throw InvalidArgument("scale factor must be >= 1");
  if (hr.height % s != 0 || hr.width % s != 0) {
    throw DimensionError("scale " + std::to_string(s) + " does not divide frame size " +
                         std::to_string(hr.height) + "x" + std::to_string(hr.width));
  }
}

}  // namespace detail

/// Per-frame convolution: out(r,c) = sum_{a,b} k(a,b) v(r + ra - a, c + rb - b), mirror-extended.
inline ImageVolume apply_blur(const ImageVolume& v, const BlurKernel& k) {
  detail::check_kernel_fits(v, k);
  if (k.kind() == BlurKernel::Kind::identity) return v;
  const auto rt = detail::tap_index_table(v.height(), k.rows());
  const auto ct = detail::tap_index_table(v.width(), k.cols());
  ImageVolume out(v.shape());
  for (std::size_t t = 0; t < v.frames(); ++t) {
    for (std::size_t c = 0; c < v.width(); ++c) {
      for (std::size_t r = 0; r < v.height(); ++r) {
        double acc = 0.0;
        for (std::size_t a = 0; a < k.rows(); ++a) {
          const std::size_t sr = rt[r * k.rows() + a];
          for (std::size_t b = 0; b < k.cols(); ++b) {
            acc += k(a, b) * v(sr, ct[c * k.cols() + b], t);
          }
        }
        out(r, c, t) = acc;
      }
    }
  }
  return out;
}

/// Exact transpose of apply_blur: scatters each sample back along the gather pattern.
inline ImageVolume apply_blur_adjoint(const ImageVolume& v, const BlurKernel& k) {
  detail::check_kernel_fits(v, k);
  if (k.kind() == BlurKernel::Kind::identity) return v;
  const auto rt = detail::tap_index_table(v.height(), k.rows());
  const auto ct = detail::tap_index_table(v.width(), k.cols());
  ImageVolume out(v.shape());
  for (std::size_t t = 0; t < v.frames(); ++t) {
    for (std::size_t c = 0; c < v.width(); ++c) {
      for (std::size_t r = 0; r < v.height(); ++r) {
        const double w = v(r, c, t);
        for (std::size_t a = 0; a < k.rows(); ++a) {
          const std::size_t sr = rt[r * k.rows() + a];
          for (std::size_t b = 0; b < k.cols(); ++b) {
            out(sr, ct[c * k.cols() + b], t) += k(a, b) * w;
          }
        }
      }
    }
  }
  return out;
}

inline ImageVolume decimate(const ImageVolume& v, std::size_t s) {
  detail::check_scale(v.shape(), s);
  if (s == 1) return v;
  ImageVolume out(v.height() / s, v.width() / s, v.frames());
  for (std::size_t t = 0; t < out.frames(); ++t)
    for (std::size_t j = 0; j < out.width(); ++j)
      for (std::size_t i = 0; i < out.height(); ++i) out(i, j, t) = v(s * i, s * j, t);
  return out;
}

/// Zero-filled upsampling onto an hr_height x hr_width grid.
inline ImageVolume decimate_adjoint(const ImageVolume& v, std::size_t s, std::size_t hr_height,
                                    std::size_t hr_width) {
  detail::check_scale(Shape{hr_height, hr_width, v.frames()}, s);
  if (hr_height / s != v.height() || hr_width / s != v.width()) {
    throw DimensionError("decimate_adjoint: LR shape " + to_string(v.shape()) +
                         " does not match HR grid " + std::to_string(hr_height) + "x" +
                         std::to_string(hr_width) + " at scale " + std::to_string(s));
  }
  if (s == 1) return v;
  ImageVolume out(hr_height, hr_width, v.frames());
  for (std::size_t t = 0; t < v.frames(); ++t)
    for (std::size_t j = 0; j < v.width(); ++j)
      for (std::size_t i = 0; i < v.height(); ++i) out(s * i, s * j, t) = v(i, j, t);
  return out;
}

/// S H v (noiseless).
inline ImageVolume forward(const ImageVolume& v, const DegradationModel& m) {
  detail::check_scale(v.shape(), m.scale);
  return decimate(apply_blur(v, m.kernel), m.scale);
}

/// H^T S^T y for an HR grid of the given size.
inline ImageVolume forward_adjoint(const ImageVolume& y, const DegradationModel& m,
                                   std::size_t hr_height, std::size_t hr_width) {
  return apply_blur_adjoint(decimate_adjoint(y, m.scale, hr_height, hr_width), m.kernel);
}

/// L v = (1/sigma^2) H^T S^T S H v.
inline ImageVolume normal_apply(const ImageVolume& v, const DegradationModel& m) {
  if (!(m.noise_sigma > 0.0)) {
    throw InvalidArgument("normal_apply: noise sigma must be positive (likelihood weight 1/sigma^2)");
  }
  ImageVolume out = forward_adjoint(forward(v, m), m, v.height(), v.width());
  out *= 1.0 / (m.noise_sigma * m.noise_sigma);
  return out;
}

/// v + eta, eta i.i.d. N(0, sigma^2) drawn from RandomStream(seed) in canonical sample order.
inline ImageVolume add_noise(const ImageVolume& v, double sigma, std::uint64_t seed) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw InvalidArgument("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return v;
  RandomStream rng(seed);
  ImageVolume out = v;
  for (double& x : out.samples()) x += sigma * rng.normal();
  return out;
}

/// Full degradation y = S H x + eta.
inline ImageVolume degrade(const ImageVolume& x, const DegradationModel& m, std::uint64_t seed) {
  return add_noise(forward(x, m), m.noise_sigma, seed);
}

// ---------------------------------------------------------------------------
// Operator objects, for code that is generic over linear maps (CG, adjoint
// checks, dense materialization).

template <class Op>
concept LinearOperator = requires(const Op& op, const ImageVolume& v) {
  { op.input_shape() } -> std::convertible_to<Shape>;
  { op.output_shape() } -> std::convertible_to<Shape>;
  { op.apply(v) } -> std::convertible_to<ImageVolume>;
  { op.apply_adjoint(v) } -> std::convertible_to<ImageVolume>;
};

class BlurOperator {
 public:
  BlurOperator(BlurKernel kernel, Shape shape) : kernel_(std::move(kernel)), shape_(shape) {}
  Shape input_shape() const { return shape_; }
  Shape output_shape() const { return shape_; }
  ImageVolume apply(const ImageVolume& v) const { return apply_blur(v, kernel_); }
  ImageVolume apply_adjoint(const ImageVolume& v) const { return apply_blur_adjoint(v, kernel_); }

 private:
  BlurKernel kernel_;
  Shape shape_;
};

class DecimationOperator {
 public:
  DecimationOperator(std::size_t scale, Shape hr) : scale_(scale), hr_(hr) {
    detail::check_scale(hr, scale);
  }
  Shape input_shape() const { return hr_; }
  Shape output_shape() const { return {hr_.height / scale_, hr_.width / scale_, hr_.frames}; }
  ImageVolume apply(const ImageVolume& v) const { return decimate(v, scale_); }
  ImageVolume apply_adjoint(const ImageVolume& v) const {
    return decimate_adjoint(v, scale_, hr_.height, hr_.width);
  }

 private:
  std::size_t scale_;
  Shape hr_;
};

/// G = S H.
class ForwardOperator {
 public:
  ForwardOperator(DegradationModel model, Shape hr) : model_(std::move(model)), hr_(hr) {
    detail::check_scale(hr, model_.scale);
  }
  Shape input_shape() const { return hr_; }
  Shape output_shape() const { return {hr_.height / model_.scale, hr_.width / model_.scale, hr_.frames}; }
  ImageVolume apply(const ImageVolume& v) const { return forward(v, model_); }
  ImageVolume apply_adjoint(const ImageVolume& v) const {
    return forward_adjoint(v, model_, hr_.height, hr_.width);
  }
  const DegradationModel& model() const noexcept { return model_; }

 private:
  DegradationModel model_;
  Shape hr_;
};

/// L = (1/sigma^2) G^T G, self-adjoint.
class NormalOperator {
 public:
  NormalOperator(DegradationModel model, Shape hr) : model_(std::move(model)), hr_(hr) {
    detail::check_scale(hr, model_.scale);
    if (!(model_.noise_sigma > 0.0)) throw InvalidArgument("NormalOperator: noise sigma must be positive");
  }
  Shape input_shape() const { return hr_; }
  Shape output_shape() const { return hr_; }
  ImageVolume apply(const ImageVolume& v) const { return normal_apply(v, model_); }
  ImageVolume apply_adjoint(const ImageVolume& v) const { return normal_apply(v, model_); }

 private:
  DegradationModel model_;
  Shape hr_;
};

/// L + rho I, the x-update system matrix.
class ShiftedNormalOperator {
 public:
  ShiftedNormalOperator(const DegradationModel& model, Shape hr, double rho)
      : normal_(model, hr), rho_(rho) {}
  Shape input_shape() const { return normal_.input_shape(); }
  Shape output_shape() const { return normal_.output_shape(); }
  ImageVolume apply(const ImageVolume& v) const { return elementwise_axpy(rho_, v, normal_.apply(v)); }
  ImageVolume apply_adjoint(const ImageVolume& v) const { return apply(v); }
  double rho() const noexcept { return rho_; }

 private:
  NormalOperator normal_;
  double rho_;
};

}  // namespace ppsr
