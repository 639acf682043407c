#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace coalab {

enum class ExperimentKind { simulate, lln, clt, coupling, passage };

const char* to_string(ExperimentKind k);

struct ExperimentConfig {
  std::string measure;
  ExperimentKind kind = ExperimentKind::simulate;
  std::vector<std::int64_t> n_grid;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<double> delta;  // subordinator experiments; default_delta when empty
  double z = 0.0;               // passage
  double x = 0.0;               // passage
};

/// SemanticError unless reps >= 2, n_grid is strictly increasing with every
/// n >= 2 (passage: z, x finite instead).
void validate(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);

struct SampleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};

struct ExperimentResult {
  ExperimentConfig config;
  SampleTable samples;
  /// Flat keys; +inf and NaN are stored as the strings "inf" and "nan".
  nlohmann::ordered_json summary;
  /// Normal Q-Q rows (n, prob, sample, normal) for the CLT experiment.
  SampleTable qq;
};

/// Runs the experiment. For every n <= 200 on the grid the sample mean of τ_n
/// is checked against the exact expectation before larger n are simulated;
/// a gap above 4 standard errors throws Error.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

ExperimentResult run_lln(const ExperimentConfig& cfg);
ExperimentResult run_clt(const ExperimentConfig& cfg);
ExperimentResult run_coupling(const ExperimentConfig& cfg);
ExperimentResult run_passage(const ExperimentConfig& cfg);

/// The summary as a pure function of config and raw samples; run_experiment
/// uses it, so re-reading samples.csv reproduces summary.json exactly.
nlohmann::ordered_json summarize_samples(const ExperimentConfig& cfg, const SampleTable& samples);

/// Writes config.echo, samples.csv, summary.json (and qq.csv when present)
/// into dir. Refuses a non-empty existing directory unless force is set.
void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir, bool force);

void write_csv(const SampleTable& t, const std::filesystem::path& file);
SampleTable read_csv(const std::filesystem::path& file);

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);
/// Number or the "inf"/"nan" string, as used in summary.json.
nlohmann::ordered_json json_number(double v);

const char* software_version();

}  // namespace coalab
