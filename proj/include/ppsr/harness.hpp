#pragma once

// Experiment commands behind the command-line tool: degradation simulation,
// synthetic translation sequences, super-resolution runs, single denoiser
// applications and PSNR comparisons. Every command writes its parsed
// configuration into the output directory as manifest.txt.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppsr/config.hpp"
#include "ppsr/denoisers.hpp"
#include "ppsr/errors.hpp"
#include "ppsr/io.hpp"
#include "ppsr/metrics.hpp"
#include "ppsr/operators.hpp"
#include "ppsr/solver.hpp"
#include "ppsr/synthetic.hpp"
#include "ppsr/volume.hpp"

namespace ppsr::harness {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

/// A failure tagged with the pipeline stage it happened in.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, int exit_code, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

template <class Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const IoError& e) {
    throw StageFailure(std::string(stage), kIoError, e.what());
  } catch (const fs::filesystem_error& e) {
    throw StageFailure(std::string(stage), kIoError, e.what());
  } catch (const NumericalError& e) {
    throw StageFailure(std::string(stage), kNumericalError, e.what());
  } catch (const Error& e) {
    throw StageFailure(std::string(stage), kConfigError, e.what());
  }
}

inline const std::vector<std::string_view>& known_keys() {
  static const std::vector<std::string_view> keys = {
      "input", "truth", "output", "seed",
      "degradation.kernel", "degradation.kernel_std", "degradation.kernel_size", "degradation.kernel_file",
      "degradation.normalize", "degradation.scale", "degradation.noise_sigma",
      "solver.scheme", "solver.rho0", "solver.beta", "solver.alpha", "solver.iterations",
      "solver.inner_iterations", "solver.cg_tolerance", "solver.cg_max_iterations",
      "solver.rho_decrease_window", "solver.rho_decrease_factor", "solver.sigma_min",
      "denoiser.kind", "denoiser.sigma", "denoiser.kappa", "denoiser.tv_step", "denoiser.tv_iterations",
      "denoiser.tv_lambda", "denoiser.tv_epsilon", "denoiser.patch_radius", "denoiser.search_radius",
      "denoiser.temporal_radius", "denoiser.h_factor",
      "report.border_crop", "report.per_frame", "report.frame",
      "synth.base", "synth.pattern", "synth.pattern_size", "synth.frame_count", "synth.max_shift",
  };
  return keys;
}

struct ReportOptions {
  PsnrOptions psnr;
  bool auto_crop = true;  // border_crop = max(kernel radius, scale)
  long long frame = -1;   // -1: whole volume, else a single frame index
};

struct ExperimentConfig {
  Config raw;
  fs::path input;
  fs::path truth;  // empty when absent
  fs::path output = "out";
  std::uint64_t seed = 0;
  DegradationModel degradation;
  SolverConfig solver;
  DenoiserSpec denoiser;
  double denoise_sigma = 0.0;  // for the denoise command
  ReportOptions report;
  SyntheticTranslationSpec synth;
  std::string synth_base;  // path, or empty for a built-in pattern
  std::string pattern = "textured";  // textured | smooth
  std::size_t pattern_size = 64;

  static ExperimentConfig from(const Config& c) {
    if (const auto unknown = c.unknown_keys(known_keys()); !unknown.empty()) {
      throw ConfigError("unknown configuration key '" + unknown.front() + "'");
    }
    ExperimentConfig e;
    e.raw = c;
    e.input = c.get_string("input", "");
    e.truth = c.get_string("truth", "");
    e.output = c.get_string("output", "out");
    e.seed = static_cast<std::uint64_t>(non_negative(c, "seed", 0));

    const std::string kernel = c.get_string("degradation.kernel", "identity");
    const bool normalize = c.get_bool("degradation.normalize", true);
    if (kernel == "identity") {
      e.degradation.kernel = BlurKernel::identity();
    } else if (kernel == "gaussian") {
      e.degradation.kernel = BlurKernel::gaussian(c.get_double("degradation.kernel_std", 1.0),
                                                  static_cast<std::size_t>(non_negative(c, "degradation.kernel_size", 3)));
    } else if (kernel == "box") {
      e.degradation.kernel = BlurKernel::box(static_cast<std::size_t>(non_negative(c, "degradation.kernel_size", 3)));
    } else if (kernel == "file") {
      const auto path = c.get("degradation.kernel_file");
      if (!path) throw ConfigError("degradation.kernel = file requires degradation.kernel_file");
      e.degradation.kernel = BlurKernel::load(*path, normalize);
    } else {
      throw ConfigError("degradation.kernel: unknown kind '" + kernel + "'");
    }
    const long long scale = c.get_int("degradation.scale", 1);
    if (scale < 1) throw ConfigError("degradation.scale must be >= 1");
    e.degradation.scale = static_cast<std::size_t>(scale);
    e.degradation.noise_sigma = c.get_double("degradation.noise_sigma", 0.0);
    if (!(e.degradation.noise_sigma >= 0.0)) throw ConfigError("degradation.noise_sigma must be >= 0");

    SolverConfig& s = e.solver;
    s.scheme = parse_scheme(c.get_string("solver.scheme", "red"));
    s.rho0 = c.get_double("solver.rho0", s.rho0);
    s.beta = c.get_double("solver.beta", s.beta);
    s.alpha = c.get_double("solver.alpha", s.alpha);
    s.iterations = static_cast<int>(c.get_int("solver.iterations", s.iterations));
    s.inner_iterations = static_cast<int>(c.get_int("solver.inner_iterations", s.inner_iterations));
    s.cg_tolerance = c.get_double("solver.cg_tolerance", s.cg_tolerance);
    s.cg_max_iterations = static_cast<int>(c.get_int("solver.cg_max_iterations", s.cg_max_iterations));
    s.rho_decrease_window = static_cast<int>(c.get_int("solver.rho_decrease_window", s.rho_decrease_window));
    s.rho_decrease_factor = c.get_double("solver.rho_decrease_factor", s.rho_decrease_factor);
    s.sigma_min = c.get_double("solver.sigma_min", s.sigma_min);
    s.validate();

    DenoiserSpec& d = e.denoiser;
    d.kind = parse_denoiser_kind(c.get_string("denoiser.kind", "nlm_image"));
    d.kappa = c.get_double("denoiser.kappa", d.kappa);
    d.tv_step = c.get_double("denoiser.tv_step", d.tv_step);
    d.tv_iterations = static_cast<int>(c.get_int("denoiser.tv_iterations", d.tv_iterations));
    d.tv_lambda = c.get_double("denoiser.tv_lambda", d.tv_lambda);
    d.tv_epsilon = c.get_double("denoiser.tv_epsilon", d.tv_epsilon);
    d.patch_radius = static_cast<int>(c.get_int("denoiser.patch_radius", d.patch_radius));
    d.search_radius = static_cast<int>(c.get_int("denoiser.search_radius", d.search_radius));
    d.temporal_radius = static_cast<int>(c.get_int("denoiser.temporal_radius", d.temporal_radius));
    d.h_factor = c.get_double("denoiser.h_factor", d.h_factor);
    d.validate();
    e.denoise_sigma = c.get_double("denoiser.sigma", 0.0);

    const std::string crop = c.get_string("report.border_crop", "auto");
    if (crop != "auto") {
      e.report.auto_crop = false;
      e.report.psnr.border_crop = static_cast<std::size_t>(non_negative(c, "report.border_crop", 0));
    }
    e.report.psnr.per_frame = c.get_bool("report.per_frame", false);
    const std::string frame = c.get_string("report.frame", "all");
    e.report.frame = frame == "all" ? -1 : non_negative(c, "report.frame", 0);

    e.synth_base = c.get_string("synth.base", "");
    e.pattern = c.get_string("synth.pattern", "textured");
    if (e.pattern != "textured" && e.pattern != "smooth") {
      throw ConfigError("synth.pattern must be textured or smooth");
    }
    e.pattern_size = static_cast<std::size_t>(non_negative(c, "synth.pattern_size", 64));
    e.synth.frame_count = static_cast<std::size_t>(non_negative(c, "synth.frame_count", 30));
    e.synth.max_shift = static_cast<int>(non_negative(c, "synth.max_shift", 5));
    e.synth.seed = e.seed;
    e.synth.validate();
    return e;
  }

  std::size_t crop_for_report() const {
    if (!report.auto_crop) return report.psnr.border_crop;
    return std::max(degradation.kernel.radius(), degradation.scale);
  }

 private:
  static long long non_negative(const Config& c, const std::string& key, long long fallback) {
    const long long v = c.get_int(key, fallback);
    if (v < 0) throw ConfigError(key + " must be >= 0");
    return v;
  }
};

namespace detail {

inline void write_manifest(const fs::path& dir, const ExperimentConfig& cfg,
                           const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::ofstream os(dir / "manifest.txt");
  if (!os) throw IoError("cannot write " + (dir / "manifest.txt").string());
  os << "# configuration\n";
  cfg.raw.write(os);
  os << "# run\n";
  for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
}

inline std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline void save_volume(const fs::path& dir, const std::string& stem, const ImageVolume& v) {
  fs::create_directories(dir);
  io::write_float_dump(dir / (stem + ".psrv"), v);
  io::save_frames(dir / stem, v);
}

inline ImageVolume select_frames(const ImageVolume& v, long long frame) {
  if (frame < 0) return v;
  if (static_cast<std::size_t>(frame) >= v.frames()) {
    throw InvalidArgument("report.frame " + std::to_string(frame) + " out of range");
  }
  return v.extract_frame(static_cast<std::size_t>(frame));
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct DegradeResult {
  ImageVolume low_res;
};

/// Writes lr.psrv, lr/frame_*.pgm and manifest.txt.
inline DegradeResult cmd_degrade(const ExperimentConfig& cfg) {
  const ImageVolume hr = run_stage("load input", [&] { return io::load_volume(cfg.input); });
  DegradeResult r{run_stage("degrade", [&] { return degrade(hr, cfg.degradation, cfg.seed); })};
  run_stage("write output", [&] {
    detail::save_volume(cfg.output, "lr", r.low_res);
    detail::write_manifest(cfg.output, cfg,
                           {{"seed", std::to_string(cfg.seed)},
                            {"kernel_rows", std::to_string(cfg.degradation.kernel.rows())},
                            {"kernel_cols", std::to_string(cfg.degradation.kernel.cols())},
                            {"scale", std::to_string(cfg.degradation.scale)},
                            {"noise_sigma", detail::num(cfg.degradation.noise_sigma)},
                            {"lr_shape", to_string(r.low_res.shape())}});
  });
  return r;
}

/// Writes hr.psrv, hr/frame_*.pgm, base.pgm and a manifest listing the offsets.
inline TranslatedSequence cmd_synth(const ExperimentConfig& cfg) {
  const ImageVolume base = run_stage("load base frame", [&] {
    if (!cfg.synth_base.empty()) return io::load_volume(cfg.synth_base);
    return cfg.pattern == "smooth" ? smooth_scene(cfg.pattern_size) : textured_pattern(cfg.pattern_size);
  });
  TranslatedSequence seq = run_stage("synthesize", [&] { return synth_translations(base, cfg.synth); });
  run_stage("write output", [&] {
    detail::save_volume(cfg.output, "hr", seq.frames);
    io::write_pgm(cfg.output / "base.pgm", base);
    std::vector<std::pair<std::string, std::string>> extra = {
        {"seed", std::to_string(cfg.synth.seed)},
        {"frame_count", std::to_string(cfg.synth.frame_count)},
        {"max_shift", std::to_string(cfg.synth.max_shift)}};
    for (std::size_t t = 0; t < seq.offsets.size(); ++t) {
      extra.emplace_back("offset." + std::to_string(t),
                         std::to_string(seq.offsets[t].dx) + "," + std::to_string(seq.offsets[t].dy));
    }
    detail::write_manifest(cfg.output, cfg, extra);
  });
  return seq;
}

/// Counts calls to the wrapped denoiser.
template <DenoiserFunction F>
class CountingDenoiser {
 public:
  explicit CountingDenoiser(F inner) : inner_(std::move(inner)) {}
  ImageVolume operator()(const ImageVolume& v, double sigma) const {
    ++calls_;
    return inner_(v, sigma);
  }
  std::size_t calls() const noexcept { return calls_; }

 private:
  F inner_;
  mutable std::size_t calls_ = 0;
};

struct SuperresReport {
  std::size_t denoiser_calls = 0;
  std::size_t iterations = 0;
  std::size_t border_crop = 0;
  std::optional<double> psnr_sr;
  std::optional<double> psnr_bicubic;
  std::vector<std::string> warnings;
  bool cg_ok = true;

  void write(std::ostream& os, const ExperimentConfig& cfg) const {
    os << "Super-resolution report\n"
       << "  scheme            : " << to_string(cfg.solver.scheme);
    if (cfg.solver.scheme == Scheme::red) os << " (inner iterations " << cfg.solver.inner_iterations << ")";
    os << "\n  denoiser          : " << to_string(cfg.denoiser.kind) << "\n"
       << "  outer iterations  : " << iterations << "\n"
       << "  denoiser calls    : " << denoiser_calls << "\n"
       << "  border crop       : " << border_crop << " px"
       << (cfg.report.frame >= 0 ? ", frame " + std::to_string(cfg.report.frame) : std::string(", all frames"))
       << "\n";
    if (psnr_sr) {
      os << std::fixed << std::setprecision(3) << "  PSNR SR vs truth  : " << *psnr_sr << " dB\n"
         << "  PSNR bicubic      : " << *psnr_bicubic << " dB\n"
         << "  gain over bicubic : " << (*psnr_sr - *psnr_bicubic) << " dB\n"
         << std::defaultfloat;
    } else {
      os << "  (no ground truth supplied; PSNR not computed)\n";
    }
    for (const auto& w : warnings) os << "  warning: " << w << "\n";
    os << "\n[report]\n";
    os << "scheme = " << to_string(cfg.solver.scheme) << "\n"
       << "inner_iterations = " << cfg.solver.inner_iterations << "\n"
       << "denoiser = " << to_string(cfg.denoiser.kind) << "\n"
       << "iterations = " << iterations << "\n"
       << "denoiser_calls = " << denoiser_calls << "\n"
       << "border_crop = " << border_crop << "\n"
       << "per_frame = " << (cfg.report.psnr.per_frame ? "true" : "false") << "\n"
       << "frame = " << (cfg.report.frame < 0 ? std::string("all") : std::to_string(cfg.report.frame)) << "\n"
       << "cg_converged = " << (cg_ok ? "true" : "false") << "\n";
    if (psnr_sr) {
      os << "psnr_sr = " << detail::num(*psnr_sr) << "\n"
         << "psnr_bicubic = " << detail::num(*psnr_bicubic) << "\n";
    }
    os << "[/report]\n";
  }
};

struct SuperresResult {
  SolveResult solve;
  ImageVolume bicubic;
  SuperresReport report;
};

/// Runs the solver on cfg.input (LR) and writes sr.psrv, sr/, trace.csv,
/// report.txt and manifest.txt. When the solver's CG missed its tolerance the
/// outputs are still written and the failure is raised afterwards.
inline SuperresResult cmd_superres(const ExperimentConfig& cfg) {
  const ImageVolume y = run_stage("load input", [&] { return io::load_volume(cfg.input); });
  std::optional<ImageVolume> truth;
  if (!cfg.truth.empty()) truth = run_stage("load truth", [&] { return io::load_volume(cfg.truth); });

  SuperresResult r;
  r.report.border_crop = cfg.crop_for_report();
  PsnrOptions popt = cfg.report.psnr;
  popt.border_crop = r.report.border_crop;

  CountingDenoiser<SpecDenoiser> counted{SpecDenoiser(cfg.denoiser)};
  r.solve = run_stage("solve", [&] {
    SolveOptions opt;
    if (truth) opt.truth = &*truth;
    return solve(y, cfg.degradation, cfg.solver, counted, opt);
  });
  r.bicubic = bicubic_resize(y, cfg.degradation.scale, ResizeDirection::up);
  r.report.denoiser_calls = counted.calls();
  r.report.iterations = r.solve.trace.size();
  r.report.warnings = r.solve.warnings;
  r.report.cg_ok = r.solve.cg_ok();
  if (truth) {
    run_stage("evaluate", [&] {
      r.solve.estimate.require_same_shape(*truth, "truth");
      r.report.psnr_sr = psnr(detail::select_frames(r.solve.estimate, cfg.report.frame),
                              detail::select_frames(*truth, cfg.report.frame), popt);
      r.report.psnr_bicubic = psnr(detail::select_frames(r.bicubic, cfg.report.frame),
                                   detail::select_frames(*truth, cfg.report.frame), popt);
    });
  }

  run_stage("write output", [&] {
    detail::save_volume(cfg.output, "sr", r.solve.estimate);
    detail::save_volume(cfg.output, "bicubic", r.bicubic);
    {
      std::ofstream os(cfg.output / "trace.csv");
      if (!os) throw IoError("cannot write trace.csv");
      r.solve.trace.write_csv(os);
    }
    {
      std::ofstream os(cfg.output / "report.txt");
      if (!os) throw IoError("cannot write report.txt");
      r.report.write(os, cfg);
    }
    detail::write_manifest(cfg.output, cfg,
                           {{"seed", std::to_string(cfg.seed)},
                            {"lr_shape", to_string(y.shape())},
                            {"sr_shape", to_string(r.solve.estimate.shape())}});
  });
  if (!r.report.cg_ok) {
    throw StageFailure("solve", kNumericalError,
                       r.solve.warnings.empty() ? "CG did not converge" : r.solve.warnings.back());
  }
  return r;
}

/// Single denoiser application at denoiser.sigma; writes denoised.psrv and denoised/.
inline ImageVolume cmd_denoise(const ExperimentConfig& cfg) {
  if (!(cfg.denoise_sigma > 0.0)) {
    throw StageFailure("configure", kConfigError, "denoiser.sigma must be positive");
  }
  const ImageVolume v = run_stage("load input", [&] { return io::load_volume(cfg.input); });
  ImageVolume out = run_stage("denoise", [&] { return denoise(v, cfg.denoise_sigma, cfg.denoiser); });
  run_stage("write output", [&] {
    detail::save_volume(cfg.output, "denoised", out);
    detail::write_manifest(cfg.output, cfg, {{"sigma", detail::num(cfg.denoise_sigma)}});
  });
  return out;
}

struct PsnrResult {
  double pooled = 0.0;
  std::vector<double> per_frame;
};

/// PSNR of cfg.input against cfg.truth under the report options.
inline PsnrResult cmd_psnr(const ExperimentConfig& cfg) {
  const ImageVolume a = run_stage("load input", [&] { return io::load_volume(cfg.input); });
  const ImageVolume b = run_stage("load truth", [&] { return io::load_volume(cfg.truth); });
  return run_stage("evaluate", [&] {
    const ImageVolume x = detail::select_frames(a, cfg.report.frame);
    const ImageVolume y = detail::select_frames(b, cfg.report.frame);
    const std::size_t crop = cfg.report.auto_crop ? 0 : cfg.report.psnr.border_crop;
    PsnrOptions opt = cfg.report.psnr;
    opt.border_crop = crop;
    return PsnrResult{psnr(x, y, opt), psnr_per_frame(x, y, crop)};
  });
}

}  // namespace ppsr::harness
