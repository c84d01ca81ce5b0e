#include "trustbeta/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "trustbeta/errors.hpp"
#include "trustbeta/logging.hpp"

namespace trustbeta {
namespace {

constexpr std::uint64_t kDemoGenTag = 1;
constexpr std::uint64_t kTrainTag = 2;
constexpr std::uint64_t kStage3Tag = 3;
constexpr std::uint64_t kStage4Tag = 4;
constexpr std::uint64_t kCalibrateTag = 5;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + tag * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

void require_file(const std::filesystem::path& path, const std::string& hint) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("missing " + path.string() + "; " + hint);
  }
}

CalibrationConfig seeded_calibration(const RunManifest& manifest,
                                     const PipelineConfig& config) {
  CalibrationConfig calibration = config.calibration;
  calibration.seed = derive_seed(manifest.seed ^ config.calibration.seed,
                                 kCalibrateTag);
  return calibration;
}

CalibrationSet load_calibration_set(const RunManifest& manifest,
                                    const PipelineConfig& config) {
  const auto path = manifest.resolve(manifest.calibration_set);
  require_file(path, "run `stage3` first");
  CalibrationSet set{load_logs(path, config.task.horizon)};
  set.validate(config.task.horizon);
  return set;
}

TrustParams load_lambda(const RunManifest& manifest) {
  const auto path = manifest.resolve(manifest.lambda);
  require_file(path, "run `stage3` to calibrate the trust parameters first");
  return trust_params_from_json(read_json_file(path));
}

BinaryTrustParams load_lambda_baseline(const RunManifest& manifest) {
  const auto path = manifest.resolve(manifest.lambda_baseline);
  require_file(path, "run `stage3` to calibrate the baseline first");
  return binary_trust_params_from_json(read_json_file(path));
}

BetaTrustState carry_over(const TrustParams& params,
                          std::span<const ExperimentLog> logs) {
  BetaTrustState state = init_state(params);
  for (const ExperimentLog& log : logs) {
    state = run_episode(state, log.rewards, params).final_state;
  }
  return state;
}

BetaTrustState carry_over(const BinaryTrustParams& params,
                          std::span<const ExperimentLog> logs) {
  BetaTrustState state = init_state(params);
  for (const ExperimentLog& log : logs) {
    state = baseline_binary_update(state, log.success_flag, params);
  }
  return state;
}

std::vector<Json> logs_to_json(std::span<const ExperimentLog> logs) {
  std::vector<Json> records;
  records.reserve(logs.size());
  for (const ExperimentLog& log : logs) records.push_back(to_json(log));
  return records;
}

TraceRow make_row(const BetaTrustState& state, int t, double reward,
                  std::string branch) {
  return {state.q,          t,
          reward,           state.alpha,
          state.beta,       trust_mean(state),
          trust_variance(state), std::move(branch)};
}

}  // namespace

void SyntheticHumanConfig::validate() const {
  lambda_true.validate();
  if (report_noise != 0 && report_noise != 1) {
    throw ConfigError("report_noise must be 0 or 1");
  }
}

void PipelineConfig::validate() const {
  task.validate();
  train.validate();
  calibration.de_config().validate();
  human.validate();
  initial_lambda.validate();
  if (stage3_episodes < 1 || stage4_episodes < 1) {
    throw ConfigError("episode counts must be >= 1");
  }
}

Json to_json(const PipelineConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"task", to_json(c.task)},
          {"train", to_json(c.train)},
          {"calibration",
           {{"population", c.calibration.population},
            {"differential_weight", c.calibration.differential_weight},
            {"crossover_rate", c.calibration.crossover_rate},
            {"generations", c.calibration.generations},
            {"seed", c.calibration.seed},
            {"lower", c.calibration.bounds.lower},
            {"upper", c.calibration.bounds.upper}}},
          {"likert_percent", c.likert.mapping()},
          {"human",
           {{"lambda_true", to_json(c.human.lambda_true)},
            {"quantize", c.human.quantize},
            {"report_noise", c.human.report_noise},
            {"seed", c.human.seed}}},
          {"initial_lambda", to_json(c.initial_lambda)},
          {"stage3_episodes", c.stage3_episodes},
          {"stage4_episodes", c.stage4_episodes},
          {"warm_start", c.warm_start},
          {"aging", std::string(to_string(c.aging))}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig c;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  try {
    if (j.contains("schema_version")) require_schema_version(j, "config");
    if (j.contains("task")) c.task = task_config_from_json(j.at("task"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("calibration")) {
      const Json& cal = j.at("calibration");
      c.calibration.population = cal.value("population", c.calibration.population);
      c.calibration.differential_weight =
          cal.value("differential_weight", c.calibration.differential_weight);
      c.calibration.crossover_rate =
          cal.value("crossover_rate", c.calibration.crossover_rate);
      c.calibration.generations = cal.value("generations", c.calibration.generations);
      c.calibration.seed = cal.value("seed", c.calibration.seed);
      c.calibration.bounds.lower = cal.value("lower", c.calibration.bounds.lower);
      c.calibration.bounds.upper = cal.value("upper", c.calibration.bounds.upper);
      if (c.calibration.bounds.lower.size() != TrustParams::kDimension ||
          c.calibration.bounds.upper.size() != TrustParams::kDimension) {
        throw ConfigError("calibration bounds need 6 entries each");
      }
    }
    if (j.contains("likert_percent")) {
      c.likert = LikertScale(j.at("likert_percent").get<LikertScale::Mapping>());
    }
    if (j.contains("human")) {
      const Json& h = j.at("human");
      if (h.contains("lambda_true")) {
        Json stamped = h.at("lambda_true");
        stamped["schema_version"] = kSchemaVersion;
        c.human.lambda_true = trust_params_from_json(stamped);
      }
      c.human.quantize = h.value("quantize", c.human.quantize);
      c.human.report_noise = h.value("report_noise", c.human.report_noise);
      c.human.seed = h.value("seed", c.human.seed);
    }
    if (j.contains("initial_lambda")) {
      Json stamped = j.at("initial_lambda");
      stamped["schema_version"] = kSchemaVersion;
      c.initial_lambda = trust_params_from_json(stamped);
    }
    c.stage3_episodes = j.value("stage3_episodes", c.stage3_episodes);
    c.stage4_episodes = j.value("stage4_episodes", c.stage4_episodes);
    c.warm_start = j.value("warm_start", c.warm_start);
    if (j.contains("aging")) {
      c.aging = aging_rule_from_string(j.at("aging").get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  if (path.empty()) return PipelineConfig{};
  require_file(path, "check --config");
  Json j;
  try {
    j = read_json_file(path);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  }
  return pipeline_config_from_json(j);
}

std::filesystem::path RunManifest::resolve(const std::string& entry) const {
  const std::filesystem::path p(entry);
  return p.is_absolute() ? p : root / p;
}

RunManifest RunManifest::defaults_in(const std::filesystem::path& directory) {
  RunManifest manifest;
  manifest.root = directory;
  return manifest;
}

Json to_json(const RunManifest& m) {
  return {{"schema_version", kSchemaVersion},
          {"seed", m.seed},
          {"demos", m.demos},
          {"policy", m.policy},
          {"reward", m.reward},
          {"train_losses", m.train_losses},
          {"calibration_set", m.calibration_set},
          {"lambda", m.lambda},
          {"lambda_baseline", m.lambda_baseline},
          {"calibration_history", m.calibration_history},
          {"stage4_logs", m.stage4_logs},
          {"stage4_traces", m.stage4_traces},
          {"baseline_traces", m.baseline_traces},
          {"compare_csv", m.compare_csv},
          {"compare_markdown", m.compare_markdown},
          {"config_hashes", m.config_hashes}};
}

RunManifest run_manifest_from_json(const Json& j, std::filesystem::path root) {
  require_schema_version(j, "manifest");
  RunManifest m = RunManifest::defaults_in(std::move(root));
  try {
    m.seed = j.value("seed", m.seed);
    m.demos = j.value("demos", m.demos);
    m.policy = j.value("policy", m.policy);
    m.reward = j.value("reward", m.reward);
    m.train_losses = j.value("train_losses", m.train_losses);
    m.calibration_set = j.value("calibration_set", m.calibration_set);
    m.lambda = j.value("lambda", m.lambda);
    m.lambda_baseline = j.value("lambda_baseline", m.lambda_baseline);
    m.calibration_history = j.value("calibration_history", m.calibration_history);
    m.stage4_logs = j.value("stage4_logs", m.stage4_logs);
    m.stage4_traces = j.value("stage4_traces", m.stage4_traces);
    m.baseline_traces = j.value("baseline_traces", m.baseline_traces);
    m.compare_csv = j.value("compare_csv", m.compare_csv);
    m.compare_markdown = j.value("compare_markdown", m.compare_markdown);
    m.config_hashes = j.value("config_hashes", Json::object());
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  return run_manifest_from_json(read_json_file(path), path.parent_path());
}

RunManifest RunManifest::load_or_create(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) return load(path);
  RunManifest manifest = defaults_in(path.parent_path());
  manifest.save(path);
  return manifest;
}

void RunManifest::save(const std::filesystem::path& path) const {
  write_json_file(path, to_json(*this));
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

SyntheticHuman::SyntheticHuman(SyntheticHumanConfig config, LikertScale likert)
    : config_(std::move(config)),
      likert_(std::move(likert)),
      state_(init_state(config_.lambda_true)) {
  config_.validate();
}

void SyntheticHuman::resume(std::span<const ExperimentLog> history) {
  for (const ExperimentLog& log : history) {
    state_ = run_episode(state_, log.rewards, config_.lambda_true).final_state;
  }
}

std::optional<LikertLevel> SyntheticHuman::report(const EpisodeContext& context) {
  state_ = run_episode(state_, context.rewards, config_.lambda_true).final_state;
  const double percent = 100.0 * trust_mean(state_);
  last_trust_ = percent / 100.0;
  int level = likert_.nearest_level(percent);
  if (config_.report_noise > 0) {
    Rng jitter(derive_seed(config_.seed,
                           static_cast<std::uint64_t>(context.experiment_id)));
    level += static_cast<int>(jitter.uniform_int(-config_.report_noise,
                                                 config_.report_noise));
    level = std::clamp(level, 1, LikertScale::kLevels);
  }
  if (!config_.quantize) return LikertLevel{level, percent};
  return likert_.make_level(level);
}

InteractiveHuman::InteractiveHuman(std::istream& in, std::ostream& out,
                                   LikertScale likert)
    : in_(in), out_(out), likert_(std::move(likert)) {}

std::optional<LikertLevel> InteractiveHuman::report(const EpisodeContext& context) {
  out_ << "\nTask " << context.experiment_id << " finished ("
       << (context.success ? "tile delivered" : "tile not delivered")
       << "). How much do you trust the robot?\n";
  for (int level = 1; level <= LikertScale::kLevels; ++level) {
    out_ << "  " << level << ") " << LikertScale::label(level) << "\n";
  }
  std::string line;
  while (true) {
    out_ << "rating [1-7]> " << std::flush;
    if (!std::getline(in_, line)) return std::nullopt;
    std::istringstream parse(line);
    int level = 0;
    std::string rest;
    if (parse >> level && !(parse >> rest) && level >= 1 &&
        level <= LikertScale::kLevels) {
      return likert_.make_level(level);
    }
    out_ << "Please enter a whole number from 1 to 7.\n";
  }
}

std::string trace_csv(std::span<const TraceRow> rows) {
  std::string out = "q,t,reward,alpha,beta,mean,variance,branch\n";
  for (const TraceRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.q, r.t, num(r.reward),
                       num(r.alpha), num(r.beta), num(r.mean), num(r.variance),
                       r.branch);
  }
  return out;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::string out =
      "experiment_id,report_level,report_percent,binary_final,binary_abs_error,"
      "binary_max_variance,granular_final,granular_abs_error,"
      "granular_max_variance,oracle_percent\n";
  for (const ComparisonRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.experiment_id,
                       r.report.level, num(r.report.percent), num(r.binary_final),
                       num(r.binary_error), num(r.binary_max_variance),
                       num(r.granular_final), num(r.granular_error),
                       num(r.granular_max_variance),
                       r.oracle ? num(*r.oracle) : std::string());
  }
  return out;
}

std::string comparison_markdown(std::span<const ComparisonRow> rows) {
  std::string out =
      "Absolute errors (%) at the end of each inference experiment\n\n"
      "| Inference | Self-reported trust | Binary mu | Binary var_max | "
      "Granular mu | Granular var_max |\n"
      "|---|---|---|---|---|---|\n";
  int index = 1;
  for (const ComparisonRow& r : rows) {
    const bool granular_wins = r.granular_error <= r.binary_error;
    const std::string b = fmt::format("{:.2f}", r.binary_error);
    const std::string g = fmt::format("{:.2f}", r.granular_error);
    out += fmt::format("| {} | {} ({:.0f}%) | {} | {:.2f} | {} | {:.2f} |\n",
                       index++, LikertScale::label(r.report.level),
                       r.report.percent, granular_wins ? b : "**" + b + "**",
                       r.binary_max_variance, granular_wins ? "**" + g + "**" : g,
                       r.granular_max_variance);
  }
  out += "\nBold marks the model with the smaller error. Variances in percent^2.\n";
  return out;
}

std::vector<Trajectory> load_demos(const std::filesystem::path& path, int horizon) {
  require_file(path, "run `demo-gen` first");
  std::vector<Trajectory> demos;
  for (const Json& record : read_jsonl_file(path)) {
    demos.push_back(trajectory_from_json(record, horizon));
  }
  if (demos.empty()) throw SchemaError(path.string() + ": demo corpus is empty");
  return demos;
}

std::vector<ExperimentLog> load_logs(const std::filesystem::path& path,
                                     std::optional<int> horizon) {
  std::vector<ExperimentLog> logs;
  for (const Json& record : read_jsonl_file(path)) {
    logs.push_back(experiment_log_from_json(record, horizon));
  }
  return logs;
}

diffnet::PolicyNet load_policy(const std::filesystem::path& path) {
  require_file(path, "run `train` first");
  Checkpoint checkpoint = checkpoint_from_json(read_json_file(path));
  if (checkpoint.kind != "policy") {
    throw SchemaError(path.string() + " is not a policy checkpoint");
  }
  try {
    return diffnet::PolicyNet(std::move(checkpoint.net));
  } catch (const Error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

diffnet::RewardNet load_reward(const std::filesystem::path& path) {
  require_file(path, "run `train` first");
  Checkpoint checkpoint = checkpoint_from_json(read_json_file(path));
  if (checkpoint.kind != "reward") {
    throw SchemaError(path.string() + " is not a reward checkpoint");
  }
  try {
    return diffnet::RewardNet(std::move(checkpoint.net));
  } catch (const Error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::vector<TraceRow> replay_trace(const TrustParams& params,
                                   std::span<const ExperimentLog> logs) {
  std::vector<TraceRow> rows;
  BetaTrustState state = init_state(params);
  for (const ExperimentLog& log : logs) {
    const EpisodeReplay replay = run_episode(state, log.rewards, params);
    for (std::size_t t = 0; t < log.rewards.size(); ++t) {
      rows.push_back(make_row(replay.states[t], static_cast<int>(t + 1),
                              log.rewards[t],
                              std::string(to_string(replay.branches[t]))));
    }
    state = replay.final_state;
  }
  return rows;
}

std::vector<Trajectory> run_demo_gen(const RunManifest& manifest,
                                     const PipelineConfig& config,
                                     std::optional<int> count) {
  config.task.validate();
  const int n = count.value_or(config.train.demos);
  if (n < 1) throw ConfigError("demo corpus must contain at least one trajectory");
  Rng rng(derive_seed(manifest.seed, kDemoGenTag));
  std::vector<Trajectory> demos;
  std::vector<Json> records;
  for (int i = 0; i < n; ++i) {
    const EnvState start = reset(config.task, rng);
    demos.push_back(synth_demo(start, config.task, rng, config.train.demo_noise));
    records.push_back(to_json(demos.back()));
  }
  write_jsonl_file(manifest.resolve(manifest.demos), records);
  log::info("wrote {} demonstrations to {}", n,
            manifest.resolve(manifest.demos).string());
  return demos;
}

namespace {

void write_checkpoints(const std::filesystem::path& policy_path,
                       const std::filesystem::path& reward_path,
                       const Stage2Result& result, const TrainConfig& train,
                       std::size_t demo_count) {
  Json metadata = {{"train_config", to_json(train)}, {"demos", demo_count}};
  if (!result.history.empty()) {
    metadata["epochs_completed"] = result.history.size();
    metadata["final_bc_loss"] = result.history.back().bc_loss;
    metadata["final_maxent_loss"] = result.history.back().maxent_loss;
  }
  write_json_file(policy_path,
                  to_json(Checkpoint{"policy", result.policy.net(), train.seed, metadata}));
  write_json_file(reward_path,
                  to_json(Checkpoint{"reward", result.reward.net(), train.seed, metadata}));
}

std::filesystem::path with_suffix(const std::filesystem::path& path,
                                  const std::string& suffix) {
  std::filesystem::path out = path;
  out.replace_filename(path.stem().string() + suffix + path.extension().string());
  return out;
}

}  // namespace

Stage2Result run_train(const RunManifest& manifest, const PipelineConfig& config) {
  const auto demos = load_demos(manifest.resolve(manifest.demos), config.task.horizon);
  TrainConfig train = config.train;
  train.seed = derive_seed(manifest.seed ^ config.train.seed, kTrainTag);
  const auto policy_path = manifest.resolve(manifest.policy);
  const auto reward_path = manifest.resolve(manifest.reward);

  Stage2Result result;
  try {
    result = train_stage2(demos, config.task, train);
  } catch (const TrainingDivergence& e) {
    write_checkpoints(with_suffix(policy_path, ".last_good"),
                      with_suffix(reward_path, ".last_good"), e.last_good(), train,
                      demos.size());
    throw;
  }
  write_checkpoints(policy_path, reward_path, result, train, demos.size());

  std::string csv = "epoch,eta,bc_loss,maxent_loss,mean_demo_R,mean_rollout_R\n";
  for (const EpochStats& s : result.history) {
    csv += fmt::format("{},{},{},{},{},{}\n", s.epoch, num(s.eta), num(s.bc_loss),
                       num(s.maxent_loss), num(s.mean_demo_reward),
                       num(s.mean_rollout_reward));
  }
  write_text_file(manifest.resolve(manifest.train_losses), csv);
  return result;
}

Stage3Summary run_stage3(const RunManifest& manifest, const PipelineConfig& config,
                         int episodes, TrustReporter& human, std::ostream* display) {
  if (episodes < 1) throw ConfigError("stage3 needs at least one episode");
  const auto policy = load_policy(manifest.resolve(manifest.policy));
  const auto reward = load_reward(manifest.resolve(manifest.reward));
  const CalibrationConfig calibration = seeded_calibration(manifest, config);
  Rng rng(derive_seed(manifest.seed, kStage3Tag));

  Stage3Summary summary;
  TrustParams current = config.initial_lambda;
  std::optional<TrustParams> previous;
  std::string history = "episode,generation,best_nll\n";

  for (int e = 0; e < episodes; ++e) {
    const EnvState start = reset(config.task, rng);
    ExperimentLog log;
    log.experiment_id = e + 1;
    log.trajectory = rollout(policy, start, config.task, rng, /*stochastic=*/false);
    log.rewards = reward.rewards(log.trajectory);
    log.success_flag = task_success(log.trajectory, config.task);

    const BetaTrustState carried = carry_over(current, summary.set.episodes);
    log.trust_estimates = run_episode(carried, log.rewards, current).estimates;
    if (display) {
      *display << fmt::format("episode {}: success={} trust {:.1f}% -> {:.1f}%\n",
                              log.experiment_id, log.success_flag,
                              100.0 * trust_mean(carried),
                              100.0 * log.trust_estimates.back().mean);
    }

    const EpisodeContext context{log.experiment_id, &log.trajectory, log.rewards,
                                 log.success_flag, log.trust_estimates};
    const auto report = human.report(context);
    if (!report) {
      summary.interrupted = true;
      break;
    }
    log.report = *report;
    log.oracle_trust = human.last_oracle_trust();
    summary.set.episodes.push_back(std::move(log));

    const CalibrationResult fit =
        calibrate(summary.set, calibration,
                  config.warm_start ? previous : std::optional<TrustParams>{});
    current = fit.params;
    previous = fit.params;
    summary.lambda = fit.params;
    summary.nll = fit.nll;
    for (std::size_t g = 0; g < fit.search.history.size(); ++g) {
      history += fmt::format("{},{},{}\n", e + 1, g, num(fit.search.history[g]));
    }
    log::info("stage3 episode {}: nll={:.4f} omega_s={:.4f} omega_f={:.4f}",
              e + 1, fit.nll, fit.params.omega_s, fit.params.omega_f);
  }

  write_jsonl_file(manifest.resolve(manifest.calibration_set),
                   logs_to_json(summary.set.episodes));
  if (summary.set.episodes.empty()) return summary;

  summary.lambda_baseline = calibrate_baseline(summary.set, calibration).params;
  write_json_file(manifest.resolve(manifest.lambda), to_json(summary.lambda));
  write_json_file(manifest.resolve(manifest.lambda_baseline),
                  to_json(summary.lambda_baseline));
  write_text_file(manifest.resolve(manifest.calibration_history), history);
  return summary;
}

Stage4Summary run_stage4(const RunManifest& manifest, const PipelineConfig& config,
                         int episodes, TrustReporter& human) {
  if (episodes < 1) throw ConfigError("stage4 needs at least one episode");
  const TrustParams lambda = load_lambda(manifest);
  const BinaryTrustParams lambda_b = load_lambda_baseline(manifest);
  const CalibrationSet stage3 = load_calibration_set(manifest, config);
  const auto policy = load_policy(manifest.resolve(manifest.policy));
  const auto reward = load_reward(manifest.resolve(manifest.reward));
  Rng rng(derive_seed(manifest.seed, kStage4Tag));

  TrustReplayer granular(lambda, config.aging);
  for (const ExperimentLog& log : stage3.episodes) {
    for (double r : log.rewards) granular.step(r);
  }
  BetaTrustState baseline = carry_over(lambda_b, stage3.episodes);

  Stage4Summary summary;
  const auto first_id = static_cast<std::int64_t>(stage3.episodes.size()) + 1;
  for (int e = 0; e < episodes; ++e) {
    const EnvState start = reset(config.task, rng);
    ExperimentLog log;
    log.experiment_id = first_id + e;
    log.trajectory = rollout(policy, start, config.task, rng, /*stochastic=*/false);
    log.rewards = reward.rewards(log.trajectory);
    log.success_flag = task_success(log.trajectory, config.task);

    for (std::size_t t = 0; t < log.rewards.size(); ++t) {
      const UpdateBranch branch = granular.step(log.rewards[t]);
      const BetaTrustState& s = granular.state();
      log.trust_estimates.push_back(estimate(s));
      summary.granular.push_back(make_row(s, static_cast<int>(t + 1), log.rewards[t],
                                          std::string(to_string(branch))));
      // The binary model holds its estimate until the task is over.
      summary.baseline.push_back(make_row(baseline, static_cast<int>(t + 1),
                                          log.rewards[t], "hold"));
    }
    baseline = baseline_binary_update(baseline, log.success_flag, lambda_b);

    const EpisodeContext context{log.experiment_id, &log.trajectory, log.rewards,
                                 log.success_flag, log.trust_estimates};
    if (const auto report = human.report(context)) log.report = *report;
    log.oracle_trust = human.last_oracle_trust();
    summary.logs.push_back(std::move(log));
    if (!summary.logs.back().report) break;
  }

  write_jsonl_file(manifest.resolve(manifest.stage4_logs), logs_to_json(summary.logs));
  write_text_file(manifest.resolve(manifest.stage4_traces), trace_csv(summary.granular));
  write_text_file(manifest.resolve(manifest.baseline_traces),
                  trace_csv(summary.baseline));
  return summary;
}

std::vector<ComparisonRow> run_compare(const RunManifest& manifest,
                                       const PipelineConfig& config) {
  const TrustParams lambda = load_lambda(manifest);
  const BinaryTrustParams lambda_b = load_lambda_baseline(manifest);
  const CalibrationSet stage3 = load_calibration_set(manifest, config);
  const auto stage4_path = manifest.resolve(manifest.stage4_logs);
  require_file(stage4_path, "run `stage4` first");
  const auto stage4 = load_logs(stage4_path, config.task.horizon);

  BetaTrustState granular = carry_over(lambda, stage3.episodes);
  BetaTrustState baseline = carry_over(lambda_b, stage3.episodes);
  std::vector<ComparisonRow> rows;
  for (const ExperimentLog& log : stage4) {
    const EpisodeReplay replay = run_episode(granular, log.rewards, lambda);
    const BetaTrustState before = baseline;
    baseline = baseline_binary_update(baseline, log.success_flag, lambda_b);
    granular = replay.final_state;
    if (!log.report) continue;

    ComparisonRow row;
    row.experiment_id = log.experiment_id;
    row.report = *log.report;
    row.granular_final = 100.0 * trust_mean(granular);
    row.binary_final = 100.0 * trust_mean(baseline);
    row.granular_error = std::abs(row.report.percent - row.granular_final);
    row.binary_error = std::abs(row.report.percent - row.binary_final);
    double granular_var = 0.0;
    for (const TrustEstimate& e : replay.estimates) {
      granular_var = std::max(granular_var, e.variance);
    }
    row.granular_max_variance = 1e4 * granular_var;
    row.binary_max_variance =
        1e4 * std::max(trust_variance(before), trust_variance(baseline));
    if (log.oracle_trust) row.oracle = 100.0 * *log.oracle_trust;
    rows.push_back(row);
  }
  write_text_file(manifest.resolve(manifest.compare_csv), comparison_csv(rows));
  write_text_file(manifest.resolve(manifest.compare_markdown),
                  comparison_markdown(rows));
  return rows;
}

CalibrationResult run_calibrate(const RunManifest& manifest,
                                const PipelineConfig& config,
                                const std::filesystem::path& input,
                                const std::filesystem::path& output,
                                const std::filesystem::path& history) {
  require_file(input, "expected a JSON-lines calibration set");
  CalibrationSet set{load_logs(input, config.task.horizon)};
  set.validate(config.task.horizon);
  const CalibrationResult fit = calibrate(set, seeded_calibration(manifest, config));
  write_json_file(output, to_json(fit.params));
  std::string csv = "generation,best_nll\n";
  for (std::size_t g = 0; g < fit.search.history.size(); ++g) {
    csv += fmt::format("{},{}\n", g, num(fit.search.history[g]));
  }
  write_text_file(history, csv);
  return fit;
}

std::vector<TraceRow> run_export(const RunManifest& manifest,
                                 const std::filesystem::path& out) {
  const TrustParams lambda = load_lambda(manifest);
  const auto stage3_path = manifest.resolve(manifest.calibration_set);
  require_file(stage3_path, "run `stage3` first");
  std::vector<ExperimentLog> logs = load_logs(stage3_path, std::nullopt);
  const auto stage4_path = manifest.resolve(manifest.stage4_logs);
  if (std::filesystem::exists(stage4_path)) {
    auto stage4 = load_logs(stage4_path, std::nullopt);
    logs.insert(logs.end(), stage4.begin(), stage4.end());
  }
  std::vector<TraceRow> rows = replay_trace(lambda, logs);
  write_text_file(out, trace_csv(rows));
  return rows;
}

}  // namespace trustbeta
