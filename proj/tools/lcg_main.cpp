#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lcg/errors.hpp"
#include "lcg/experiment.hpp"

namespace {

struct CommonArgs {
  std::optional<std::string> config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sampler;
  std::optional<int> t_start;
};

void add_common(CLI::App* sub, CommonArgs& c) {
  sub->add_option("--config", c.config, "JSON experiment config file");
  sub->add_option("--seed", c.seed, "root seed (overrides the config; some seed is mandatory)");
  sub->add_option("--out", c.out, "output directory (overrides the config)");
  sub->add_option("--sampler", c.sampler, "reverse sampler (overrides the config)")
      ->check(CLI::IsMember({"ddpm", "ddim"}));
  sub->add_option("--t-start", c.t_start, "manipulation start timestep (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided latent diffusion workbench: synthetic worlds, denoiser and classifier "
               "training, composed sampling, latent editing, evaluation"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string train_target;
  bool linear_flag = false;
  bool sequential_flag = false;

  CLI::App* genworld = app.add_subcommand("genworld", "sample an attributed dataset from a world");
  add_common(genworld, common);

  CLI::App* train = app.add_subcommand("train", "train the denoiser or one attribute classifier");
  train->add_option("--target", train_target, "`diffusion` or `classifier:<attribute>`")->required();
  add_common(train, common);

  CLI::App* compose = app.add_subcommand("compose", "guided generation from pure noise");
  add_common(compose, common);

  CLI::App* edit = app.add_subcommand("edit", "edit world samples toward target attributes");
  edit->add_flag("--linear", linear_flag, "closed-form linear edits only (no denoiser needed)");
  edit->add_flag("--sequential", sequential_flag, "apply the config `edits` list one at a time");
  add_common(edit, common);

  CLI::App* eval = app.add_subcommand("eval", "score an existing samples file against the world");
  add_common(eval, common);

  CLI::App* plot = app.add_subcommand("plot", "scatter SVG and classifier correlation heatmap");
  add_common(plot, common);

  CLI::App* elbo = app.add_subcommand(
      "elbo-check", "verify the conditional/unconditional bound decomposition and print the residual");
  add_common(elbo, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    lcg::ExperimentConfig cfg = lcg::load_config(
        common.config ? std::optional<std::filesystem::path>(*common.config) : std::nullopt);
    lcg::apply_overrides(cfg, {common.seed, common.out, common.sampler, common.t_start});

    if (genworld->parsed()) {
      lcg::run_genworld(cfg);
    } else if (train->parsed()) {
      lcg::run_train(cfg, train_target);
    } else if (compose->parsed()) {
      lcg::run_compose(cfg);
    } else if (edit->parsed()) {
      lcg::run_edit(cfg, linear_flag, sequential_flag);
    } else if (eval->parsed()) {
      lcg::run_eval(cfg);
    } else if (plot->parsed()) {
      lcg::run_plot(cfg);
    } else if (elbo->parsed()) {
      return lcg::run_elbo_check(cfg);
    }
    return 0;
  } catch (const lcg::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
