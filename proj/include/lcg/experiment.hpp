#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcg/classifier.hpp"
#include "lcg/denoiser.hpp"
#include "lcg/guidance.hpp"
#include "lcg/io.hpp"
#include "lcg/sampler.hpp"
#include "lcg/schedule.hpp"
#include "lcg/world.hpp"

namespace lcg {

// One edit in a --sequential run: push `attribute` toward `value`.
struct EditSpec {
  std::string attribute;
  int value = 1;
  double alpha = 1.0;
  double gamma = 1.0;
};

// Everything the commands need, read from one JSON document. Unknown keys are
// rejected so typos fail loudly. CLI flags override individual fields after
// parsing; the seed is mandatory once overrides are applied (runs never fall
// back to wall-clock entropy).
struct ExperimentConfig {
  std::string world_preset = "quadrants2d";
  std::optional<WorldSpec> inline_world;
  int n = 20000;

  int T = 100;
  // Defaults follow b_start = 1e-4 * (1000/T), b_end = 0.02 * (1000/T) unless
  // the config pins them explicitly.
  std::optional<double> b_start;
  std::optional<double> b_end;

  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::Tanh;
  int embed_dim = 16;
  DenoiserTrainOptions train;

  ClassifierKind classifier_kind = ClassifierKind::linear;
  ClassifierTrainOptions classifier_train;
  std::vector<std::string> classifier_attributes;  // empty = every world attribute

  std::vector<GuidanceTerm> guidance_terms;
  std::optional<ScaleSchedule> source_gamma;
  double source_sigma2 = 1.0;

  SamplerKind sampler = SamplerKind::ddpm;
  double eta = 0.0;
  int n_samples = 2000;
  std::optional<int> t_start;  // default T/2

  std::vector<EditSpec> edits;

  int elbo_mc = 4;
  int elbo_n = 10;

  bool seed_set = false;
  uint64_t seed = 0;
  std::filesystem::path out = "runs/default";
  std::optional<std::filesystem::path> dataset_path;
  std::optional<std::filesystem::path> denoiser_path;
  std::optional<std::filesystem::path> samples_path;

  // Raw config text, hashed into manifests.
  std::string source_text = "{}";

  WorldSpec world() const;
  NoiseSchedule schedule() const;
  double schedule_b_start() const;
  double schedule_b_end() const;
  int effective_t_start() const;
  std::vector<std::string> attributes_to_train() const;

  std::filesystem::path dataset_csv() const;
  std::filesystem::path dataset_sidecar() const;
  std::filesystem::path denoiser_file() const;
  std::filesystem::path classifier_file(const std::string& attribute) const;
  std::filesystem::path samples_file() const;

  void require_seed() const;  // throws invalid_argument when no seed was given
  uint64_t stage_seed(std::string_view stage) const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path);

struct CliOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sampler;
  std::optional<int> t_start;
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& o);

// Command bodies. Errors surface as exceptions; the CLI maps
// std::invalid_argument and other contract failures to exit 1 and
// NumericError to exit 2.
void run_genworld(const ExperimentConfig& cfg);
void run_train(const ExperimentConfig& cfg, const std::string& target);
void run_compose(const ExperimentConfig& cfg);
void run_edit(const ExperimentConfig& cfg, bool linear_only, bool sequential);
void run_eval(const ExperimentConfig& cfg);
void run_plot(const ExperimentConfig& cfg);
// Prints the decomposition residual; returns 0 when it is below 1e-9, else 2.
int run_elbo_check(const ExperimentConfig& cfg);

}  // namespace lcg
