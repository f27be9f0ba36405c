#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcg/classifier.hpp"
#include "lcg/denoiser.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"

namespace lcg {

// Shortest decimal form that round-trips the exact double.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Dataset files: one header line "d,k,<attribute names>", then rows
// z_1,...,z_d,y_1,...,y_k. A JSON sidecar carries the world and seed.
void write_dataset_csv(const std::filesystem::path& csv_path, const AttributedDataset& ds);
void write_dataset_sidecar(const std::filesystem::path& json_path, const AttributedDataset& ds);
AttributedDataset read_dataset(const std::filesystem::path& csv_path,
                               const std::optional<std::filesystem::path>& sidecar_path);

void write_samples_csv(const std::filesystem::path& path, const std::vector<Vec>& samples, int d);
std::vector<Vec> read_samples_csv(const std::filesystem::path& path);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses);

// Rows of (metric, attribute, value); attribute may be empty.
struct ReportRow {
  std::string metric;
  std::string attribute;
  std::string value;
};
void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

// Square matrix with row/column labels; NaN cells are written as NA.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const Matrix& m);

// Checkpoints are versioned JSON with full-precision parameter arrays.
void save_denoiser(const std::filesystem::path& path, const Denoiser& net, const NoiseSchedule& s,
                   const std::map<std::string, double>& train_info);
std::pair<Denoiser, NoiseSchedule> load_denoiser(const std::filesystem::path& path);

void save_classifier(const std::filesystem::path& path, const LatentClassifier& c,
                     const std::map<std::string, double>& train_info);
LatentClassifier load_classifier(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string artifact_version = "0.1.0";
  std::string wall_clock_utc;
  std::map<std::string, uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, double> metrics;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

uint64_t fnv1a64(const std::string& s);
std::string hash_hex(const std::string& s);

// 2-D scatter (first two coordinates) with one circle per sample, colored by
// the oracle label combination.
void write_scatter_svg(const std::filesystem::path& path, const WorldSpec& w,
                       const std::vector<Vec>& samples);

}  // namespace lcg
