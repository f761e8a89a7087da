#pragma once

// ADMM super-resolution with a black-box denoiser as the prior.
//
// Each outer iteration k:
//   x <- (L + rho I)^{-1} ( (1/sigma^2) (SH)^T y + rho (v - u) )      by CG
//   v <- D(x + u, sqrt(beta/rho))                                       PPP
//   v <- z_J,  z_{j+1} = (beta D(z_j, sqrt(beta/rho)) + rho (x + u)) / (beta + rho),  z_0 = v   RED
//   gap = || rho (v_new - v_old) ||^2, rho' = alpha rho unless the gap kept rising
//   u <- (rho / rho') (u + x - v)
// The same loop serves single images (frames == 1) and video; only the
// denoiser differs.

#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppsr/cg.hpp"
#include "ppsr/denoisers.hpp"
#include "ppsr/errors.hpp"
#include "ppsr/metrics.hpp"
#include "ppsr/operators.hpp"
#include "ppsr/volume.hpp"

namespace ppsr {

enum class Scheme { ppp, red };

inline std::string_view to_string(Scheme s) { return s == Scheme::ppp ? "ppp" : "red"; }

inline Scheme parse_scheme(std::string_view s) {
  if (s == "ppp" || s == "PPP") return Scheme::ppp;
  if (s == "red" || s == "RED") return Scheme::red;
  throw InvalidArgument("unknown scheme '" + std::string(s) + "' (expected ppp or red)");
}

struct SolverConfig {
  Scheme scheme = Scheme::red;
  double rho0 = 1e-4;
  double beta = 0.2048;
  double alpha = 1.2;
  int iterations = 40;
  int inner_iterations = 2;  // RED only: RED-1, RED-2, ...
  double cg_tolerance = 1e-6;
  int cg_max_iterations = 400;
  // Consecutive strict gap increases before rho is cut; 0 disables decreases.
  // Shorter windows fire while x and v are still coupling (the gap grows with
  // rho for the first dozen or so iterations) and wreck the estimate.
  int rho_decrease_window = 20;
  double rho_decrease_factor = 0.5;
  double sigma_min = 1e-3;

  void validate() const {
    auto fail = [](const std::string& m) { throw InvalidArgument("solver config: " + m); };
    if (!(rho0 > 0.0)) fail("rho0 must be positive");
    if (!(beta > 0.0)) fail("beta must be positive");
    // alpha == 1 (constant rho) is accepted for plain ADMM runs.
    if (!(alpha >= 1.0)) fail("alpha must be >= 1");
    if (iterations < 1) fail("iterations must be >= 1");
    if (inner_iterations < 1) fail("inner_iterations must be >= 1");
    if (!(cg_tolerance > 0.0)) fail("cg_tolerance must be positive");
    if (cg_max_iterations < 1) fail("cg_max_iterations must be >= 1");
    if (rho_decrease_window < 0) fail("rho_decrease_window must be >= 0");
    if (!(rho_decrease_factor > 0.0 && rho_decrease_factor < 1.0)) fail("rho_decrease_factor must lie in (0, 1)");
    if (!(sigma_min > 0.0)) fail("sigma_min must be positive");
  }
};

struct SolverState {
  ImageVolume x, v, u;
  double rho = 0.0;
  int k = 0;
  std::vector<double> dual_gap_history;  // since the last rho decrease
};

struct IterationRecord {
  int iter = 0;
  double rho = 0.0;  // rho^k used during this iteration
  double primal_residual = 0.0;
  double dual_gap = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool cg_converged = true;
  bool rho_decreased = false;
  std::optional<double> psnr;
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;

  std::size_t size() const noexcept { return records.size(); }

  static constexpr std::string_view kCsvHeader = "iter,rho,primal_residual,dual_gap,cg_iters,psnr";

  /// One header line plus one row per outer iteration; psnr is empty without ground truth.
  void write_csv(std::ostream& os) const {
    os << kCsvHeader << '\n';
    os << std::setprecision(17);
    for (const auto& r : records) {
      os << r.iter << ',' << r.rho << ',' << r.primal_residual << ',' << r.dual_gap << ','
         << r.cg_iterations << ',';
      if (r.psnr) os << *r.psnr;
      os << '\n';
    }
  }
};

/// Noise level used for the likelihood weight; sigma_min when the model says 0.
inline double likelihood_sigma(const DegradationModel& m, const SolverConfig& cfg) {
  return std::max(m.noise_sigma, cfg.sigma_min);
}

inline SolverState initialize(const ImageVolume& y, const DegradationModel& m, const SolverConfig& cfg) {
  SolverState s;
  s.x = bicubic_resize(y, m.scale, ResizeDirection::up);
  s.v = s.x;
  s.u = ImageVolume(s.x.shape(), 0.0);
  s.rho = cfg.rho0;
  return s;
}

struct XUpdateResult {
  ImageVolume x;
  CgResult cg;
};

namespace detail {

inline DegradationModel with_sigma(DegradationModel m, const SolverConfig& cfg) {
  m.noise_sigma = likelihood_sigma(m, cfg);
  return m;
}

inline ImageVolume scaled_backprojection(const ImageVolume& y, const DegradationModel& m, const Shape& hr) {
  ImageVolume b = forward_adjoint(y, m, hr.height, hr.width);
  b *= 1.0 / (m.noise_sigma * m.noise_sigma);
  return b;
}

// x-update given the precomputed (1/sigma^2)(SH)^T y; model sigma already floored.
inline XUpdateResult x_update_with(const SolverState& s, const ImageVolume& backprojection,
                                   const DegradationModel& m, const SolverConfig& cfg) {
  const ShiftedNormalOperator A(m, s.x.shape(), s.rho);
  const ImageVolume b = elementwise_axpy(s.rho, s.v - s.u, backprojection);
  XUpdateResult r{s.x, {}};  // warm start from x^k
  r.cg = conjugate_gradient(A, b, r.x, CgOptions{cfg.cg_tolerance, cfg.cg_max_iterations});
  return r;
}

}  // namespace detail

/// Solves (L + rho I) x = (1/sigma^2)(SH)^T y + rho (v - u) by warm-started CG.
/// Throws NumericalError when CG misses cg_tolerance.
inline XUpdateResult x_update(const SolverState& s, const ImageVolume& y, const DegradationModel& m,
                              const SolverConfig& cfg) {
  const DegradationModel mm = detail::with_sigma(m, cfg);
  XUpdateResult r = detail::x_update_with(s, detail::scaled_backprojection(y, mm, s.x.shape()), mm, cfg);
  if (!r.cg.converged) {
    throw NumericalError("x-update: CG stopped after " + std::to_string(r.cg.iterations) +
                             " iterations at relative residual " + std::to_string(r.cg.relative_residual),
                         r.cg.iterations, r.cg.relative_residual);
  }
  return r;
}

/// Denoiser level sqrt(beta / rho) shared by both schemes.
inline double denoiser_sigma(double beta, double rho) { return std::sqrt(beta / rho); }

template <DenoiserFunction F>
ImageVolume v_update_ppp(const SolverState& s, const ImageVolume& x_new, const SolverConfig& cfg, const F& denoiser) {
  return denoiser(x_new + s.u, denoiser_sigma(cfg.beta, s.rho));
}

template <DenoiserFunction F>
ImageVolume v_update_red(const SolverState& s, const ImageVolume& x_new, const SolverConfig& cfg, const F& denoiser) {
  x_new.require_same_shape(s.u, "v_update_red");
  const double sigma = denoiser_sigma(cfg.beta, s.rho);
  const double beta = cfg.beta, rho = s.rho;
  const auto xs = x_new.samples();
  const auto us = s.u.samples();
  ImageVolume z = s.v;
  for (int j = 0; j < cfg.inner_iterations; ++j) {
    ImageVolume next = denoiser(z, sigma);
    auto ns = next.samples();
    for (std::size_t i = 0; i < ns.size(); ++i) ns[i] = (beta * ns[i] + rho * (xs[i] + us[i])) / (beta + rho);
    z = std::move(next);
  }
  return z;
}

/// Adaptive penalty: rho grows by alpha each iteration unless the dual gap has
/// strictly increased `window` times in a row, in which case it is multiplied
/// by `factor` and the gap history restarts.
class RhoSchedule {
 public:
  RhoSchedule(double alpha, int window, double factor) : alpha_(alpha), window_(window), factor_(factor) {}
  explicit RhoSchedule(const SolverConfig& cfg)
      : RhoSchedule(cfg.alpha, cfg.rho_decrease_window, cfg.rho_decrease_factor) {}

  struct Step {
    double rho;
    bool decreased;
  };

  Step next(double rho, double gap, std::vector<double>& history) const {
    history.push_back(gap);
    if (window_ > 0 && increasing_run(history) >= window_) {
      history.clear();
      return {factor_ * rho, true};
    }
    return {alpha_ * rho, false};
  }

  static int increasing_run(const std::vector<double>& h) {
    int run = 0;
    for (std::size_t i = h.size(); i >= 2 && h[i - 1] > h[i - 2]; --i) ++run;
    return run;
  }

 private:
  double alpha_;
  int window_;
  double factor_;
};

struct DualUpdate {
  double rho = 0.0;
  ImageVolume u;
  double dual_gap = 0.0;
  bool decreased = false;
};

/// Dual gap, next rho and the rescaled dual u^{k+1} = (rho^k/rho^{k+1}) (u + x - v).
/// Appends the gap to s.dual_gap_history (cleared on a decrease).
inline DualUpdate rho_and_dual_update(SolverState& s, const ImageVolume& x_new, const ImageVolume& v_new,
                                      const SolverConfig& cfg) {
  DualUpdate d;
  ImageVolume step = v_new - s.v;
  step *= s.rho;
  d.dual_gap = squared_norm(step);
  const auto next = RhoSchedule(cfg).next(s.rho, d.dual_gap, s.dual_gap_history);
  d.rho = next.rho;
  d.decreased = next.decreased;
  d.u = s.u + x_new - v_new;
  if (d.rho != s.rho) d.u *= s.rho / d.rho;
  return d;
}

struct SolveOptions {
  const ImageVolume* truth = nullptr;  // enables per-iteration PSNR
  PsnrOptions psnr{};
  std::function<void(const SolverState&)> on_iteration;  // called after each outer iteration
};

struct SolveResult {
  ImageVolume estimate;
  ConvergenceTrace trace;
  SolverState state;
  std::vector<std::string> warnings;

  bool cg_ok() const {
    for (const auto& r : trace.records)
      if (!r.cg_converged) return false;
    return true;
  }
};

/// Runs cfg.iterations outer iterations and returns the final v with its trace.
template <DenoiserFunction F>
SolveResult solve(const ImageVolume& y, const DegradationModel& model, const SolverConfig& cfg, const F& denoiser,
                  const SolveOptions& opt = {}) {
  cfg.validate();
  SolveResult result;
  if (model.noise_sigma < cfg.sigma_min) {
    std::ostringstream os;
    os << "noise sigma " << model.noise_sigma << " below sigma_min; using " << cfg.sigma_min
       << " for the likelihood weight";
    result.warnings.push_back(os.str());
  }
  const DegradationModel m = detail::with_sigma(model, cfg);

  SolverState s = initialize(y, m, cfg);
  if (opt.truth) s.x.require_same_shape(*opt.truth, "solve: truth");
  const ImageVolume backprojection = detail::scaled_backprojection(y, m, s.x.shape());

  result.trace.records.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int k = 0; k < cfg.iterations; ++k) {
    IterationRecord rec;
    rec.iter = k + 1;
    rec.rho = s.rho;

    XUpdateResult xr = detail::x_update_with(s, backprojection, m, cfg);
    rec.cg_iterations = xr.cg.iterations;
    rec.cg_residual = xr.cg.relative_residual;
    rec.cg_converged = xr.cg.converged;
    if (!xr.cg.converged) {
      std::ostringstream os;
      os << "iteration " << rec.iter << ": CG stopped after " << xr.cg.iterations
         << " iterations at relative residual " << xr.cg.relative_residual;
      result.warnings.push_back(os.str());
    }

    ImageVolume v_new = cfg.scheme == Scheme::ppp ? v_update_ppp(s, xr.x, cfg, denoiser)
                                                  : v_update_red(s, xr.x, cfg, denoiser);
    if (!xr.x.all_finite() || !v_new.all_finite()) {
      throw NumericalError("iteration " + std::to_string(rec.iter) + ": non-finite samples in x or v");
    }

    DualUpdate d = rho_and_dual_update(s, xr.x, v_new, cfg);
    rec.primal_residual = norm(xr.x - v_new);
    rec.dual_gap = d.dual_gap;
    rec.rho_decreased = d.decreased;
    if (opt.truth) rec.psnr = psnr(v_new, *opt.truth, opt.psnr);

    s.x = std::move(xr.x);
    s.v = std::move(v_new);
    s.u = std::move(d.u);
    s.rho = d.rho;
    s.k = k + 1;
    result.trace.records.push_back(rec);
    if (opt.on_iteration) opt.on_iteration(s);
  }
  result.estimate = s.v;
  result.state = std::move(s);
  return result;
}

inline SolveResult solve(const ImageVolume& y, const DegradationModel& model, const SolverConfig& cfg,
                         const DenoiserSpec& spec, const SolveOptions& opt = {}) {
  return solve(y, model, cfg, SpecDenoiser(spec), opt);
}

}  // namespace ppsr
