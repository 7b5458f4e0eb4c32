// Command-line front end for the driving lab: policy training, the four
// inference/EFT studies, the behavior sweep and plot-data export.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eftlab/harness/config.hpp"
#include "eftlab/harness/studies.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string preset = "desk";
  std::string out_dir;
  std::int64_t seed = -1;
  bool seed_set = false;
};

eftlab::ExperimentConfig resolve_config(const GlobalOptions& g) {
  eftlab::ExperimentConfig cfg = eftlab::config_from_preset(g.preset);
  if (!g.config_path.empty())
    cfg = eftlab::apply_toml(std::move(cfg),
                             eftlab::TomlTable::parse_file(g.config_path));
  if (g.seed_set) cfg.base_seed = static_cast<std::uint64_t>(g.seed);
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  cfg.preset = g.preset;
  if (g.preset == "paper_scale")
    std::cerr << "warning: paper_scale preset selected; a full run needs "
                 "hours of compute\n";
  cfg.validate();
  return cfg;
}

std::string study_dir(const eftlab::ExperimentConfig& cfg,
                      const std::string& study) {
  return (std::filesystem::path(cfg.output_dir) / study).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-character driving policy lab"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "TOML config file")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "desk|paper_scale")
      ->check(CLI::IsMember({"desk", "paper_scale"}));
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--seed", g.seed, "base seed override")
      ->each([&g](const std::string&) { g.seed_set = true; });
  app.fallthrough();

  std::string checkpoint_path;
  std::string run_dir;

  auto* train = app.add_subcommand("train", "train the shared policy");
  auto* inference =
      app.add_subcommand("inference-study", "character inference convergence");
  inference->add_option("--checkpoint", checkpoint_path, "trained checkpoint")
      ->required();
  auto* ablation = app.add_subcommand("diversity-ablation",
                                      "proposed vs fce_eft vs without_eft");
  ablation->add_option("--checkpoint", checkpoint_path, "trained checkpoint")
      ->required();
  auto* noise =
      app.add_subcommand("noise-study", "inference under trajectory noise");
  noise->add_option("--checkpoint", checkpoint_path, "trained checkpoint")
      ->required();
  auto* ood = app.add_subcommand(
      "ood-study", "out-of-distribution character inference (self-training)");
  auto* behavior =
      app.add_subcommand("behavior-study", "per-component behavior sweep");
  behavior->add_option("--checkpoint", checkpoint_path, "trained checkpoint")
      ->required();
  auto* exportp =
      app.add_subcommand("export-plotdata", "aggregate run CSVs per figure");
  exportp->add_option("--run", run_dir, "completed run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (exportp->parsed()) {
      eftlab::ExportReport report = eftlab::cmd_export_plotdata(run_dir);
      for (const auto& w : report.written) std::cout << w << "\n";
      return 0;
    }
    eftlab::ExperimentConfig cfg = resolve_config(g);
    if (train->parsed()) {
      auto out = eftlab::cmd_train(cfg, study_dir(cfg, "train"));
      std::cout << out.checkpoint_path << "\n";
    } else if (inference->parsed()) {
      eftlab::cmd_inference_study(cfg, checkpoint_path,
                                  study_dir(cfg, "inference_study"));
    } else if (ablation->parsed()) {
      eftlab::cmd_diversity_ablation(cfg, checkpoint_path,
                                     study_dir(cfg, "diversity_ablation"));
    } else if (noise->parsed()) {
      eftlab::cmd_noise_study(cfg, checkpoint_path,
                              study_dir(cfg, "noise_study"));
    } else if (ood->parsed()) {
      eftlab::cmd_ood_study(cfg, study_dir(cfg, "ood_study"));
    } else if (behavior->parsed()) {
      eftlab::cmd_behavior_study(cfg, checkpoint_path,
                                 study_dir(cfg, "behavior_study"));
    }
  } catch (const eftlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
