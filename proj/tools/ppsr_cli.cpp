// Command-line front end: ppsr <degrade|synth|superres|denoise|psnr> [options]
//
// Options are configuration keys. They can come from a config file (-c) and
// from the command line as --key=value or --key value, e.g.
//   ppsr superres -c run.cfg --solver.scheme=ppp --output out/ppp
// Command-line values override the file.

#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppsr/harness.hpp"

namespace {

using namespace ppsr;
using namespace ppsr::harness;

Config gather_config(const std::string& config_path, const std::vector<std::string>& extras) {
  Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (i + 1 < extras.size()) {
      value = extras[++i];
    } else {
      throw ConfigError("option --" + key + " needs a value");
    }
    cfg.set(key, value);
  }
  return cfg;
}

int run(const std::string& command, const Config& raw) {
  const ExperimentConfig cfg = run_stage("configure", [&] { return ExperimentConfig::from(raw); });
  if (command == "degrade") {
    const auto r = cmd_degrade(cfg);
    std::cout << "wrote " << to_string(r.low_res.shape()) << " LR volume to " << cfg.output.string() << "\n";
  } else if (command == "synth") {
    const auto seq = cmd_synth(cfg);
    std::cout << "wrote " << seq.frames.frames() << " translated frames to " << cfg.output.string() << "\n";
    for (std::size_t t = 0; t < seq.offsets.size(); ++t) {
      std::cout << "  frame " << t << ": dx=" << seq.offsets[t].dx << " dy=" << seq.offsets[t].dy << "\n";
    }
  } else if (command == "superres") {
    try {
      const auto r = cmd_superres(cfg);
      r.report.write(std::cout, cfg);
    } catch (const StageFailure& f) {
      if (f.exit_code() == kNumericalError) {
        std::cerr << "outputs were written to " << cfg.output.string() << " before the failure\n";
      }
      throw;
    }
  } else if (command == "denoise") {
    cmd_denoise(cfg);
    std::cout << "wrote denoised volume to " << cfg.output.string() << "\n";
  } else if (command == "psnr") {
    const auto r = cmd_psnr(cfg);
    std::cout << std::setprecision(10) << "psnr = " << r.pooled << "\n";
    for (std::size_t t = 0; t < r.per_frame.size(); ++t) {
      std::cout << "psnr.frame." << t << " = " << r.per_frame[t] << "\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoiser-driven ADMM super-resolution for images and video"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config;
  };
  std::vector<Sub> subs;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"degrade", "Blur, decimate and add noise to an HR volume"},
      {"synth", "Generate a globally translated sequence from a base frame"},
      {"superres", "Run PPP/RED super-resolution on an LR volume"},
      {"denoise", "Apply a denoiser once"},
      {"psnr", "PSNR of input against truth"}};
  subs.reserve(commands.size());
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    subs.push_back({sub, {}});
    sub->add_option("-c,--config", subs.back().config, "key = value configuration file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    const std::string name = s.app->get_name();
    try {
      const Config raw = run_stage("configure", [&] { return gather_config(s.config, s.app->remaining()); });
      return run(name, raw);
    } catch (const StageFailure& f) {
      std::cerr << "ppsr " << name << ": error in stage " << f.what() << "\n";
      return f.exit_code();
    } catch (const std::exception& e) {
      std::cerr << "ppsr " << name << ": " << e.what() << "\n";
      return kIoError;
    }
  }
  return kConfigError;
}
