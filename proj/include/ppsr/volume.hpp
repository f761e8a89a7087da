#pragma once

// Grayscale image / video volume with a fixed vectorization convention.
//
// Samples are doubles in the nominal range [0, 255]. Within a frame the
// storage is column-major (row index fastest); frames follow each other in
// temporal order. A single image is a volume with frames() == 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppsr/errors.hpp"

namespace ppsr {

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 1;

  std::size_t frame_size() const noexcept { return height * width; }
  std::size_t size() const noexcept { return height * width * frames; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.frames);
}

class ImageVolume;

/// Read-only window onto one frame of a volume.
class FrameView {
 public:
  FrameView(const ImageVolume& parent, std::size_t index);

  std::size_t index() const noexcept { return index_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[col * height_ + row];
  }
  std::span<const double> samples() const noexcept { return data_; }

 private:
  std::span<const double> data_;
  std::size_t height_;
  std::size_t width_;
  std::size_t index_;
};

class ImageVolume {
 public:
  ImageVolume() = default;

  ImageVolume(std::size_t height, std::size_t width, std::size_t frames = 1, double value = 0.0)
      : ImageVolume(Shape{height, width, frames}, value) {}

  explicit ImageVolume(Shape shape, double value = 0.0) : shape_(shape) {
    if (shape.height == 0 || shape.width == 0 || shape.frames == 0) {
      throw InvalidArgument("ImageVolume: all dimensions must be positive, got " + to_string(shape));
    }
    data_.assign(shape.size(), value);
  }

  ImageVolume(Shape shape, std::vector<double> data) : ImageVolume(shape) {
    if (data.size() != shape.size()) {
      throw DimensionError("ImageVolume: data length " + std::to_string(data.size()) +
                           " does not match shape " + to_string(shape));
    }
    data_ = std::move(data);
  }

  /// Builds a single frame from rows listed top to bottom.
  static ImageVolume from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw InvalidArgument("ImageVolume::from_rows: empty input");
    }
    ImageVolume v(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != v.width()) throw DimensionError("ImageVolume::from_rows: ragged rows");
      for (std::size_t c = 0; c < v.width(); ++c) v(r, c) = rows[r][c];
    }
    return v;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t frames() const noexcept { return shape_.frames; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(std::size_t row, std::size_t col, std::size_t frame = 0) const noexcept {
    return (frame * shape_.width + col) * shape_.height + row;
  }

  double& operator()(std::size_t row, std::size_t col, std::size_t frame = 0) noexcept {
    return data_[index(row, col, frame)];
  }
  double operator()(std::size_t row, std::size_t col, std::size_t frame = 0) const noexcept {
    return data_[index(row, col, frame)];
  }

  std::span<double> samples() noexcept { return data_; }
  std::span<const double> samples() const noexcept { return data_; }

  std::span<double> frame_samples(std::size_t t) noexcept {
    return std::span<double>(data_).subspan(t * shape_.frame_size(), shape_.frame_size());
  }
  std::span<const double> frame_samples(std::size_t t) const noexcept {
    return std::span<const double>(data_).subspan(t * shape_.frame_size(), shape_.frame_size());
  }

  FrameView frame(std::size_t t) const {
    if (t >= frames()) throw InvalidArgument("ImageVolume::frame: index out of range");
    return FrameView(*this, t);
  }

  /// Copy of frame t as a single-frame volume.
  ImageVolume extract_frame(std::size_t t) const {
    ImageVolume out(height(), width());
    auto src = frame(t).samples();
    std::copy(src.begin(), src.end(), out.data_.begin());
    return out;
  }

  void set_frame(std::size_t t, const ImageVolume& f) {
    if (f.height() != height() || f.width() != width() || f.frames() != 1 || t >= frames()) {
      throw DimensionError("ImageVolume::set_frame: frame shape mismatch");
    }
    std::copy(f.data_.begin(), f.data_.end(), frame_samples(t).begin());
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  ImageVolume& operator+=(const ImageVolume& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ImageVolume& operator-=(const ImageVolume& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ImageVolume& operator*=(double a) noexcept {
    for (double& x : data_) x *= a;
    return *this;
  }

  friend ImageVolume operator+(ImageVolume a, const ImageVolume& b) { return a += b; }
  friend ImageVolume operator-(ImageVolume a, const ImageVolume& b) { return a -= b; }
  friend ImageVolume operator*(double s, ImageVolume a) { return a *= s; }

  friend bool operator==(const ImageVolume&, const ImageVolume&) = default;

  void require_same_shape(const ImageVolume& o, const char* where) const {
    if (shape_ != o.shape_) {
      throw DimensionError(std::string(where) + ": shape " + to_string(shape_) + " vs " +
                           to_string(o.shape_));
    }
  }

 private:
  Shape shape_{0, 0, 0};
  std::vector<double> data_;
};

inline FrameView::FrameView(const ImageVolume& parent, std::size_t index)
    : data_(parent.frame_samples(index)),
      height_(parent.height()),
      width_(parent.width()),
      index_(index) {}

/// Flat copy in the canonical order (column-major per frame, frames concatenated).
inline std::vector<double> vectorize(const ImageVolume& v) {
  return {v.samples().begin(), v.samples().end()};
}

inline ImageVolume devectorize(std::span<const double> flat, Shape shape) {
  return ImageVolume(shape, std::vector<double>(flat.begin(), flat.end()));
}

/// a*x + y, elementwise.
inline ImageVolume elementwise_axpy(double a, const ImageVolume& x, const ImageVolume& y) {
  x.require_same_shape(y, "elementwise_axpy");
  ImageVolume out = y;
  auto xs = x.samples();
  auto os = out.samples();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] += a * xs[i];
  return out;
}

inline double dot(const ImageVolume& a, const ImageVolume& b) {
  a.require_same_shape(b, "dot");
  auto as = a.samples();
  auto bs = b.samples();
  double acc = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) acc += as[i] * bs[i];
  return acc;
}

inline double squared_norm(const ImageVolume& a) { return dot(a, a); }
inline double norm(const ImageVolume& a) { return std::sqrt(dot(a, a)); }

inline bool is_constant(const ImageVolume& v) {
  auto s = v.samples();
  return std::all_of(s.begin(), s.end(), [&](double x) { return x == s.front(); });
}

/// Half-sample symmetric reflection of an index into [0, n): ... b a | a b c ... c | c b ...
inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace ppsr
