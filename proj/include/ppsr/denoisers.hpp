#pragma once

// Black-box denoisers D(x, sigma) and numerical probes of the RED regularity
// conditions. sigma is in the same [0, 255] units as the volume samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppsr/errors.hpp"
#include "ppsr/operators.hpp"
#include "ppsr/random.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

enum class DenoiserKind { gaussian_smooth, tv, nlm_image, nlm_video };

inline std::string_view to_string(DenoiserKind k) {
  switch (k) {
    case DenoiserKind::gaussian_smooth: return "gaussian_smooth";
    case DenoiserKind::tv: return "tv";
    case DenoiserKind::nlm_image: return "nlm_image";
    case DenoiserKind::nlm_video: return "nlm_video";
  }
  return "?";
}

inline DenoiserKind parse_denoiser_kind(std::string_view s) {
  if (s == "gaussian_smooth") return DenoiserKind::gaussian_smooth;
  if (s == "tv") return DenoiserKind::tv;
  if (s == "nlm_image") return DenoiserKind::nlm_image;
  if (s == "nlm_video") return DenoiserKind::nlm_video;
  throw InvalidArgument("unknown denoiser kind '" + std::string(s) + "'");
}

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::nlm_image;

  // gaussian_smooth: kernel stddev = kappa * sigma.
  double kappa = 0.1;

  // tv: ROF objective 1/2 ||z - x||^2 + lambda * TV_eps(z), lambda = tv_lambda * sigma^2,
  // minimized by tv_iterations steps of gradient descent. The effective step is
  // tv_step / (1 + 8 lambda / tv_epsilon), which keeps the iteration stable.
  double tv_step = 1.0;
  int tv_iterations = 50;
  double tv_lambda = 0.08;
  double tv_epsilon = 1.0;

  // nlm_image / nlm_video.
  int patch_radius = 1;
  int search_radius = 5;
  int temporal_radius = 2;  // nlm_video only
  double h_factor = 0.0;    // h = h_factor * sigma; 0 selects 0.4 * (2p + 1)

  double bandwidth_factor() const {
    return h_factor > 0.0 ? h_factor : 0.4 * (2.0 * patch_radius + 1.0);
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidArgument("denoiser spec: " + m); };
    switch (kind) {
      case DenoiserKind::gaussian_smooth:
        if (!(kappa > 0.0)) fail("kappa must be positive");
        break;
      case DenoiserKind::tv:
        if (!(tv_step > 0.0 && tv_step < 2.0)) fail("tv_step must lie in (0, 2)");
        if (tv_iterations < 1) fail("tv_iterations must be >= 1");
        if (!(tv_lambda > 0.0)) fail("tv_lambda must be positive");
        if (!(tv_epsilon > 0.0)) fail("tv_epsilon must be positive");
        break;
      case DenoiserKind::nlm_video:
        if (temporal_radius < 0) fail("temporal_radius must be >= 0");
        [[fallthrough]];
      case DenoiserKind::nlm_image:
        if (patch_radius < 1) fail("patch_radius must be >= 1");
        if (search_radius < 1) fail("search_radius must be >= 1");
        if (h_factor < 0.0) fail("h_factor must be >= 0");
        break;
    }
  }
};

// ---------------------------------------------------------------------------

/// Per-frame Gaussian filter with stddev kappa*sigma. The kernel side is
/// clamped to the largest odd size that fits the frame.
inline ImageVolume gaussian_smooth(const ImageVolume& v, double sigma, double kappa) {
  const double stddev = kappa * sigma;
  std::size_t size = 2 * static_cast<std::size_t>(std::ceil(3.0 * stddev)) + 1;
  std::size_t fit = std::min(v.height(), v.width());
  if (fit % 2 == 0) --fit;
  size = std::min(size, fit);
  if (size < 3) return v;
  return apply_blur(v, BlurKernel::gaussian(stddev, size));
}

/// Gradient descent on the smoothed ROF objective, per frame, Neumann boundary.
inline ImageVolume tv_denoise(const ImageVolume& v, double sigma, const DenoiserSpec& spec) {
  const double lambda = spec.tv_lambda * sigma * sigma;
  const double eps = spec.tv_epsilon;
  const double step = spec.tv_step / (1.0 + 8.0 * lambda / eps);
  const std::size_t h = v.height(), w = v.width();
  ImageVolume z = v;
  ImageVolume px(v.shape()), py(v.shape());
  for (int it = 0; it < spec.tv_iterations; ++it) {
    // p = grad z / |grad z|_eps, forward differences
    for (std::size_t t = 0; t < v.frames(); ++t)
      for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < h; ++r) {
          const double gx = r + 1 < h ? z(r + 1, c, t) - z(r, c, t) : 0.0;
          const double gy = c + 1 < w ? z(r, c + 1, t) - z(r, c, t) : 0.0;
          const double mag = std::sqrt(gx * gx + gy * gy + eps * eps);
          px(r, c, t) = gx / mag;
          py(r, c, t) = gy / mag;
        }
    // z -= step * ((z - v) - lambda * div p)
    for (std::size_t t = 0; t < v.frames(); ++t)
      for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = 0; r < h; ++r) {
          double div = px(r, c, t) + py(r, c, t);
          if (r > 0) div -= px(r - 1, c, t);
          if (c > 0) div -= py(r, c - 1, t);
          if (r + 1 == h) div -= px(r, c, t);
          if (c + 1 == w) div -= py(r, c, t);
          z(r, c, t) -= step * ((z(r, c, t) - v(r, c, t)) - lambda * div);
        }
  }
  return z;
}

namespace detail {

// Whole-sample reflection (no edge repeat) for the temporal axis; |i| < 2n - 1.
inline std::size_t reflect_whole(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

// Frame padded by `pad` on each side with half-sample mirror, column-major.
struct PaddedFrame {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;
  double operator()(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
};

inline PaddedFrame pad_frame(const ImageVolume& v, std::size_t t, std::size_t pad) {
  PaddedFrame f;
  f.rows = v.height() + 2 * pad;
  f.cols = v.width() + 2 * pad;
  f.data.resize(f.rows * f.cols);
  const auto h = static_cast<std::ptrdiff_t>(v.height());
  const auto w = static_cast<std::ptrdiff_t>(v.width());
  const auto p = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t c = 0; c < f.cols; ++c)
    for (std::size_t r = 0; r < f.rows; ++r)
      f.data[c * f.rows + r] = v(static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(r) - p, h)),
                                 static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(c) - p, w)), t);
  return f;
}

}  // namespace detail

/// Spatio-temporal non-local means. For each pixel, candidates are all pixels
/// within a (2w+1)x(2w+1) spatial window in frames t-w_t..t+w_t (temporal
/// mirror at the ends); no motion compensation. Weights are
/// exp(-d^2 / h^2), d^2 the mean squared difference of (2p+1)^2 patches and
/// h = h_factor * sigma. The pixel's own weight is the largest candidate
/// weight. With temporal_radius 0 this is plain per-frame NLM.
inline ImageVolume nlm_denoise(const ImageVolume& v, double sigma, int patch_radius, int search_radius,
                               int temporal_radius, double h_factor) {
  const auto p = static_cast<std::size_t>(patch_radius);
  const auto H = static_cast<std::ptrdiff_t>(v.height());
  const auto W = static_cast<std::ptrdiff_t>(v.width());
  const auto T = static_cast<std::ptrdiff_t>(v.frames());
  const std::ptrdiff_t sr = std::min<std::ptrdiff_t>(search_radius, std::max(H, W) - 1);
  const std::ptrdiff_t tr = std::min<std::ptrdiff_t>(temporal_radius, T - 1);
  const double h = h_factor * sigma;
  const double inv_h2 = 1.0 / (h * h);
  const double inv_patch = 1.0 / static_cast<double>((2 * p + 1) * (2 * p + 1));

  std::vector<detail::PaddedFrame> padded;
  padded.reserve(v.frames());
  for (std::size_t t = 0; t < v.frames(); ++t) padded.push_back(detail::pad_frame(v, t, p));
  const std::size_t prow = padded.front().rows, pcol = padded.front().cols;

  ImageVolume out(v.shape());
  const std::size_t n = v.height() * v.width();
  std::vector<double> acc(n), wsum(n), wmax(n);
  std::vector<double> diff(prow * pcol), colsum(v.height() * pcol);

  for (std::ptrdiff_t t = 0; t < T; ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(wsum.begin(), wsum.end(), 0.0);
    std::fill(wmax.begin(), wmax.end(), 0.0);
    const auto& ref = padded[static_cast<std::size_t>(t)];
    for (std::ptrdiff_t dt = -tr; dt <= tr; ++dt) {
      const std::size_t t2 = detail::reflect_whole(t + dt, T);
      const auto& cand = padded[t2];
      for (std::ptrdiff_t dc = -sr; dc <= sr; ++dc) {
        for (std::ptrdiff_t dr = -sr; dr <= sr; ++dr) {
          if (dt == 0 && dr == 0 && dc == 0) continue;
          // centres whose displaced partner stays inside the frame
          const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>(0, -dr), r1 = std::min(H, H - dr);
          const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dc), c1 = std::min(W, W - dc);
          if (r0 >= r1 || c0 >= c1) continue;
          const auto P = static_cast<std::ptrdiff_t>(p);
          // squared differences over the padded rows/cols these centres touch
          for (std::ptrdiff_t c = c0; c < c1 + 2 * P; ++c)
            for (std::ptrdiff_t r = r0; r < r1 + 2 * P; ++r) {
              const double d = ref(r, c) - cand(r + dr, c + dc);
              diff[c * prow + r] = d * d;
            }
          // vertical box sums: colsum(r, c) = sum_{i<=2p} diff(r+i, c)
          for (std::ptrdiff_t c = c0; c < c1 + 2 * P; ++c)
            for (std::ptrdiff_t r = r0; r < r1; ++r) {
              double s = 0.0;
              for (std::ptrdiff_t i = 0; i <= 2 * P; ++i) s += diff[c * prow + r + i];
              colsum[c * v.height() + r] = s;
            }
          for (std::ptrdiff_t c = c0; c < c1; ++c)
            for (std::ptrdiff_t r = r0; r < r1; ++r) {
              double d2 = 0.0;
              for (std::ptrdiff_t j = 0; j <= 2 * P; ++j) d2 += colsum[(c + j) * v.height() + r];
              const double wgt = std::exp(-d2 * inv_patch * inv_h2);
              const std::size_t idx = static_cast<std::size_t>(c * H + r);
              acc[idx] += wgt * v(static_cast<std::size_t>(r + dr), static_cast<std::size_t>(c + dc), t2);
              wsum[idx] += wgt;
              wmax[idx] = std::max(wmax[idx], wgt);
            }
        }
      }
    }
    auto src = v.frame_samples(static_cast<std::size_t>(t));
    auto dst = out.frame_samples(static_cast<std::size_t>(t));
    for (std::size_t i = 0; i < n; ++i) {
      const double self = wmax[i] > 0.0 ? wmax[i] : 1.0;
      dst[i] = (acc[i] + self * src[i]) / (wsum[i] + self);
    }
  }
  return out;
}

/// D(v, sigma) for the given spec.
inline ImageVolume denoise(const ImageVolume& v, double sigma, const DenoiserSpec& spec) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("denoise: sigma must be positive and finite, got " + std::to_string(sigma));
  }
  spec.validate();
  switch (spec.kind) {
    case DenoiserKind::gaussian_smooth:
      return gaussian_smooth(v, sigma, spec.kappa);
    case DenoiserKind::tv:
      return tv_denoise(v, sigma, spec);
    case DenoiserKind::nlm_image:
      return nlm_denoise(v, sigma, spec.patch_radius, spec.search_radius, 0, spec.bandwidth_factor());
    case DenoiserKind::nlm_video:
      return nlm_denoise(v, sigma, spec.patch_radius, spec.search_radius, spec.temporal_radius,
                         spec.bandwidth_factor());
  }
  throw InvalidArgument("denoise: unknown kind");
}

/// Callable adapter so a spec can be passed wherever a denoiser function is expected.
class SpecDenoiser {
 public:
  explicit SpecDenoiser(DenoiserSpec spec) : spec_(spec) { spec_.validate(); }
  ImageVolume operator()(const ImageVolume& v, double sigma) const { return denoise(v, sigma, spec_); }
  const DenoiserSpec& spec() const noexcept { return spec_; }

 private:
  DenoiserSpec spec_;
};

template <class F>
concept DenoiserFunction = requires(const F& f, const ImageVolume& v, double sigma) {
  { f(v, sigma) } -> std::convertible_to<ImageVolume>;
};

// ---------------------------------------------------------------------------
// RED prior R(x) = 1/2 <x, x - f(x)> and its gradient under the RED conditions.

inline double red_prior_value(const ImageVolume& v, double sigma, const DenoiserSpec& spec) {
  return 0.5 * dot(v, v - denoise(v, sigma, spec));
}

inline ImageVolume red_gradient(const ImageVolume& v, double sigma, const DenoiserSpec& spec) {
  return v - denoise(v, sigma, spec);
}

struct RedConditionReport {
  double homogeneity_defect = 0.0;
  double jacobian_asymmetry = 0.0;
  double spectral_radius_estimate = 0.0;
};

struct RedProbeOptions {
  double homogeneity_scale = 1.0 + 1e-3;
  double fd_step = 1e-2;  // intensity units per unit-RMS direction
  int symmetry_trials = 3;
  int power_iterations = 30;
  std::uint64_t seed = 20170901;
};

namespace detail {

inline ImageVolume random_direction(const Shape& shape, RandomStream& rng) {
  ImageVolume d(shape);
  for (double& x : d.samples()) x = rng.normal();
  d *= std::sqrt(static_cast<double>(d.size())) / norm(d);  // unit RMS
  return d;
}

// Central-difference Jacobian-vector product J_f(x) d.
template <DenoiserFunction F>
ImageVolume jvp(const F& f, const ImageVolume& x, const ImageVolume& d, double sigma, double step) {
  ImageVolume out = f(elementwise_axpy(step, d, x), sigma) - f(elementwise_axpy(-step, d, x), sigma);
  out *= 1.0 / (2.0 * step);
  return out;
}

}  // namespace detail

/// Worst-case RED condition defects over the fixtures. Diagnostic only.
template <DenoiserFunction F>
RedConditionReport probe_red_conditions(const F& f, double sigma, std::span<const ImageVolume> fixtures,
                                        const RedProbeOptions& opt = {}) {
  if (fixtures.empty()) throw InvalidArgument("probe_red_conditions: empty fixture list");
  RedConditionReport report;
  RandomStream rng(opt.seed);
  for (const ImageVolume& x : fixtures) {
    const double xn = norm(x);
    if (xn > 0.0) {
      const double c = opt.homogeneity_scale;
      ImageVolume fx = f(x, sigma);
      fx *= c;
      report.homogeneity_defect =
          std::max(report.homogeneity_defect, norm(f(c * x, sigma) - fx) / xn);
    }

    for (int trial = 0; trial < opt.symmetry_trials; ++trial) {
      const ImageVolume a = detail::random_direction(x.shape(), rng);
      const ImageVolume b = detail::random_direction(x.shape(), rng);
      const ImageVolume ja = detail::jvp(f, x, a, sigma, opt.fd_step);
      const ImageVolume jb = detail::jvp(f, x, b, sigma, opt.fd_step);
      const double scale = 0.5 * (norm(ja) * norm(b) + norm(a) * norm(jb));
      if (scale > 0.0) {
        report.jacobian_asymmetry =
            std::max(report.jacobian_asymmetry, std::abs(dot(ja, b) - dot(a, jb)) / scale);
      }
    }

    ImageVolume d = detail::random_direction(x.shape(), rng);
    const double d_norm = norm(d);
    double estimate = 0.0;
    for (int it = 0; it < opt.power_iterations; ++it) {
      ImageVolume jd = detail::jvp(f, x, d, sigma, opt.fd_step);
      const double jn = norm(jd);
      estimate = jn / d_norm;
      if (jn == 0.0) break;
      jd *= d_norm / jn;
      d = std::move(jd);
    }
    report.spectral_radius_estimate = std::max(report.spectral_radius_estimate, estimate);
  }
  return report;
}

inline RedConditionReport probe_red_conditions(const DenoiserSpec& spec, double sigma,
                                               std::span<const ImageVolume> fixtures,
                                               const RedProbeOptions& opt = {}) {
  return probe_red_conditions(SpecDenoiser(spec), sigma, fixtures, opt);
}

}  // namespace ppsr
