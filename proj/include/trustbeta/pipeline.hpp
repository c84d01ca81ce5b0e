#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trustbeta/calibrate.hpp"
#include "trustbeta/diffnet/nets.hpp"
#include "trustbeta/env.hpp"
#include "trustbeta/learning.hpp"
#include "trustbeta/likert.hpp"
#include "trustbeta/serialization.hpp"
#include "trustbeta/trust.hpp"

namespace trustbeta {

// Generating model behind the synthetic co-worker.
struct SyntheticHumanConfig {
  TrustParams lambda_true{1.0, 1.0, 3.7897, 4.5390, 0.0, 0.99};
  bool quantize = true;  // report the nearest Likert level
  int report_noise = 0;  // +/- levels of uniform jitter, 0 or 1
  std::uint64_t seed = 17;

  void validate() const;
};

// Everything the orchestrated run needs besides file locations.
struct PipelineConfig {
  TaskConfig task = TaskConfig::defaults();
  TrainConfig train;
  CalibrationConfig calibration;
  LikertScale likert;
  SyntheticHumanConfig human;
  // Trust parameters used for the live display before the first calibration.
  TrustParams initial_lambda{1.0, 1.0, 1.0, 1.0, 0.0, 0.9};
  int stage3_episodes = 10;
  int stage4_episodes = 5;
  bool warm_start = false;  // seed each recalibration with the previous fit
  AgingRule aging = AgingRule::kRecurrence;  // stage-4 granular replay

  void validate() const;
};

Json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const Json& j);
// Defaults when `path` is empty.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// File layout of one run. Relative entries resolve against the manifest's
// directory.
struct RunManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::string demos = "demos.jsonl";
  std::string policy = "policy.json";
  std::string reward = "reward.json";
  std::string train_losses = "train_losses.csv";
  std::string calibration_set = "stage3_episodes.jsonl";
  std::string lambda = "lambda.json";
  std::string lambda_baseline = "lambda_baseline.json";
  std::string calibration_history = "calibration_history.csv";
  std::string stage4_logs = "stage4_episodes.jsonl";
  std::string stage4_traces = "stage4_traces.csv";
  std::string baseline_traces = "stage4_baseline_traces.csv";
  std::string compare_csv = "compare.csv";
  std::string compare_markdown = "compare.md";
  Json config_hashes = Json::object();  // stage name -> hash of its config

  std::filesystem::path resolve(const std::string& entry) const;

  static RunManifest defaults_in(const std::filesystem::path& directory);
  // Loads an existing manifest or creates the default layout next to it.
  static RunManifest load_or_create(const std::filesystem::path& path);
  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

Json to_json(const RunManifest& manifest);
RunManifest run_manifest_from_json(const Json& j, std::filesystem::path root);

// 64-bit FNV-1a of the compact JSON text.
std::string config_hash(const Json& j);

// What a co-worker sees at the end of a task.
struct EpisodeContext {
  std::int64_t experiment_id = 0;
  const Trajectory* trajectory = nullptr;
  std::span<const double> rewards;
  bool success = false;
  std::span<const TrustEstimate> displayed_trace;
};

class TrustReporter {
 public:
  virtual ~TrustReporter() = default;
  // nullopt means the co-worker stopped answering (end of input).
  virtual std::optional<LikertLevel> report(const EpisodeContext& context) = 0;
  // Unquantized trust behind the last report, if known.
  virtual std::optional<double> last_oracle_trust() const { return std::nullopt; }
};

// Co-worker simulated by the granular model itself with hidden parameters.
class SyntheticHuman : public TrustReporter {
 public:
  SyntheticHuman(SyntheticHumanConfig config, LikertScale likert);

  // Replays earlier episodes so the hidden state continues across runs.
  void resume(std::span<const ExperimentLog> history);

  std::optional<LikertLevel> report(const EpisodeContext& context) override;
  std::optional<double> last_oracle_trust() const override { return last_trust_; }

  const BetaTrustState& state() const { return state_; }

 private:
  SyntheticHumanConfig config_;
  LikertScale likert_;
  BetaTrustState state_;
  std::optional<double> last_trust_;
};

// Prompts on `out` and reads a 1..7 rating per line from `in`; reprompts on
// anything else.
class InteractiveHuman : public TrustReporter {
 public:
  InteractiveHuman(std::istream& in, std::ostream& out, LikertScale likert);
  std::optional<LikertLevel> report(const EpisodeContext& context) override;

 private:
  std::istream& in_;
  std::ostream& out_;
  LikertScale likert_;
};

// One row of a per-timestep trust trace.
struct TraceRow {
  std::int64_t q = 0;
  int t = 0;
  double reward = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  std::string branch;
};

std::string trace_csv(std::span<const TraceRow> rows);

struct Stage3Summary {
  CalibrationSet set;
  TrustParams lambda;
  BinaryTrustParams lambda_baseline;
  double nll = 0.0;
  bool interrupted = false;  // co-worker stopped answering
};

struct Stage4Summary {
  std::vector<ExperimentLog> logs;
  std::vector<TraceRow> granular;
  std::vector<TraceRow> baseline;
};

// Per-episode comparison of both models at task end.
struct ComparisonRow {
  std::int64_t experiment_id = 0;
  LikertLevel report;
  double binary_error = 0.0;  // percentage points
  double binary_max_variance = 0.0;  // percent^2
  double granular_error = 0.0;
  double granular_max_variance = 0.0;
  double binary_final = 0.0;    // percent
  double granular_final = 0.0;  // percent
  std::optional<double> oracle;  // percent
};

std::string comparison_csv(std::span<const ComparisonRow> rows);
std::string comparison_markdown(std::span<const ComparisonRow> rows);

// Stage entry points shared by the CLI and the tests. Each reads its inputs
// through the manifest, validates them, and writes its outputs there.
std::vector<Trajectory> run_demo_gen(const RunManifest& manifest,
                                     const PipelineConfig& config,
                                     std::optional<int> count = {});
Stage2Result run_train(const RunManifest& manifest, const PipelineConfig& config);
Stage3Summary run_stage3(const RunManifest& manifest,
                         const PipelineConfig& config, int episodes,
                         TrustReporter& human, std::ostream* display = nullptr);
Stage4Summary run_stage4(const RunManifest& manifest,
                         const PipelineConfig& config, int episodes,
                         TrustReporter& human);
std::vector<ComparisonRow> run_compare(const RunManifest& manifest,
                                       const PipelineConfig& config);
// Standalone calibration of a JSON-lines CalibrationSet. Writes the fitted
// parameters to `output` and the per-generation best nll to `history`.
CalibrationResult run_calibrate(const RunManifest& manifest,
                                const PipelineConfig& config,
                                const std::filesystem::path& input,
                                const std::filesystem::path& output,
                                const std::filesystem::path& history);
// Trust trace of every logged episode (stage 3 then stage 4) under the
// calibrated parameters.
std::vector<TraceRow> run_export(const RunManifest& manifest,
                                 const std::filesystem::path& out);

// Loaders with schema validation.
std::vector<Trajectory> load_demos(const std::filesystem::path& path, int horizon);
std::vector<ExperimentLog> load_logs(const std::filesystem::path& path,
                                     std::optional<int> horizon = {});
diffnet::PolicyNet load_policy(const std::filesystem::path& path);
diffnet::RewardNet load_reward(const std::filesystem::path& path);

// Granular replay of a sequence of episodes from init_state(params).
std::vector<TraceRow> replay_trace(const TrustParams& params,
                                   std::span<const ExperimentLog> logs);

}  // namespace trustbeta
