// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tscn/tscn.hpp"

namespace {

using tscn::ErrorKind;

struct EnhanceArgs {
  std::string in, out, weights, oracle, dump, config, pp = "on", precision = "single";
  std::uint64_t seed = 0;
  int stage = 2;
  bool report_latency = false;
};

int RunEnhanceCommand(const EnhanceArgs& a, const CLI::App& cmd) {
  tscn::pipeline::EngineConfig cfg;
  if (cmd.count("--config")) ApplyConfig(tscn::pipeline::ReadConfigFile(a.config), cfg);
  // Flags given on the command line take precedence over the file.
  if (cmd.count("--weights")) {
    cfg.weights_path = a.weights;
    cfg.seed.reset();
  }
  if (cmd.count("--seed")) {
    cfg.seed = a.seed;
    if (!cmd.count("--weights")) cfg.weights_path.reset();
  }
  if (cmd.count("--stage")) cfg.stage = a.stage;
  if (cmd.count("--pp")) cfg.pp = a.pp == "on";
  if (cmd.count("--oracle-gain")) cfg.oracle_gain = a.oracle;
  if (cmd.count("--dump-spectra")) cfg.dump_spectra = a.dump;
  if (cmd.count("--precision")) cfg.precision = tscn::pipeline::ParsePrecision(a.precision);
  if (a.report_latency) cfg.report_latency = true;
  const auto report = tscn::pipeline::RunEnhance(cfg, a.in, a.out);
  if (cfg.report_latency) std::cout << report.ToJson() << '\n';
  return 0;
}

int RunMixCommand(const std::string& clean_path, const std::string& noise_path, double snr,
                  const std::string& out) {
  const auto clean = tscn::pipeline::ReadWav<double>(clean_path);
  const auto noise = tscn::pipeline::ReadWav<double>(noise_path);
  tscn::pipeline::WriteWav(out, tscn::pipeline::MixAtSnr(clean, noise, snr));
  return 0;
}

int RunInitWeightsCommand(std::uint64_t seed, bool micro, const std::string& out) {
  const auto cfg = micro ? tscn::model::ModelConfig::Micro() : tscn::model::ModelConfig::Full();
  const auto layout = tscn::model::ModelLayout(cfg);
  tscn::nn::SaveParams(out, tscn::nn::InitParams(layout, seed));
  std::cout << "{\"params\":" << tscn::nn::ParamCount(layout)
            << ",\"cme_params\":" << tscn::nn::ParamCount(tscn::model::CmeLayout(cfg)) << "}\n";
  return 0;
}

int RunOverfitCommand(const tscn::train::OverfitConfig& ocfg, const std::string& csv) {
  const auto mcfg = tscn::model::ModelConfig::Micro();
  const auto data = tscn::train::MakeSyntheticPair(ocfg.frames, mcfg.bins, ocfg.seed, ocfg.noise_level);
  const auto res = tscn::train::MicroOverfit(ocfg, mcfg).Run(data);
  if (!csv.empty()) {
    std::ofstream os(csv);
    tscn::Require(static_cast<bool>(os), ErrorKind::kIo, "cannot write '" + csv + "'");
    tscn::train::WriteTrajectoryCsv(os, res.trajectory);
  } else {
    tscn::train::WriteTrajectoryCsv(std::cout, res.trajectory);
  }
  std::cerr << "initial joint loss " << res.initial_joint << ", final " << res.final_joint
            << " (" << 100.0 * res.reduction() << "% reduction)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming two-stage complex-spectrum speech enhancement"};
  app.require_subcommand(1);

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Enhance a 16 kHz mono PCM16 WAV file");
  enhance->add_option("--in", ea.in, "Noisy input WAV")->required();
  enhance->add_option("--out", ea.out, "Enhanced output WAV")->required();
  auto* w = enhance->add_option("--weights", ea.weights, "Weight file");
  auto* s = enhance->add_option("--seed", ea.seed, "Random-init seed instead of a weight file");
  w->excludes(s);
  enhance->add_option("--stage", ea.stage, "1: CME only, 2: CME + CSR")
      ->check(CLI::IsMember({1, 2}));
  enhance->add_option("--pp", ea.pp, "Post-processing on|off")->check(CLI::IsMember({"on", "off"}));
  enhance->add_option("--oracle-gain", ea.oracle,
                      "Clean reference WAV; its ideal gain replaces the network mask");
  enhance->add_option("--dump-spectra", ea.dump, "Write output magnitude spectra (dB) as CSV");
  enhance->add_flag("--report-latency", ea.report_latency,
                    "Print per-frame timing as one JSON line");
  enhance->add_option("--config", ea.config, "key=value config file; flags override it");
  enhance->add_option("--precision", ea.precision, "single|double")
      ->check(CLI::IsMember({"single", "double"}));

  std::string clean_path, noise_path, mix_out;
  double snr = 0;
  auto* mix = app.add_subcommand("mix", "Mix clean speech and noise at a target SNR");
  mix->add_option("--clean", clean_path)->required();
  mix->add_option("--noise", noise_path)->required();
  mix->add_option("--snr", snr, "Target SNR in dB")->required();
  mix->add_option("--out", mix_out)->required();

  std::uint64_t init_seed = 0;
  bool micro = false;
  std::string init_out;
  auto* init = app.add_subcommand("init-weights", "Write a seeded random weight file");
  init->add_option("--seed", init_seed)->required();
  init->add_option("--out", init_out)->required();
  init->add_flag("--micro", micro, "Use the micro configuration");

  tscn::train::OverfitConfig ocfg;
  std::string csv;
  auto* overfit = app.add_subcommand("overfit", "Two-phase micro-config overfit run");
  overfit->add_option("--seed", ocfg.seed);
  overfit->add_option("--steps", ocfg.steps);
  overfit->add_option("--pretrain-steps", ocfg.pretrain_steps);
  overfit->add_option("--frames", ocfg.frames);
  overfit->add_option("--csv", csv, "Trajectory CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tscn::ExitCode(ErrorKind::kUsage);
  }

  try {
    if (*enhance) return RunEnhanceCommand(ea, *enhance);
    if (*mix) return RunMixCommand(clean_path, noise_path, snr, mix_out);
    if (*init) return RunInitWeightsCommand(init_seed, micro, init_out);
    if (*overfit) return RunOverfitCommand(ocfg, csv);
  } catch (const tscn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tscn::ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
