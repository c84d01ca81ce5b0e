#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trustbeta/diffnet/mlp.hpp"
#include "trustbeta/env.hpp"
#include "trustbeta/learning.hpp"
#include "trustbeta/likert.hpp"
#include "trustbeta/trust.hpp"
#include "trustbeta/types.hpp"

namespace trustbeta {

using Json = nlohmann::json;

// Version stamped into every file this project writes. See docs/schema.md.
inline constexpr int kSchemaVersion = 1;

// Throws SchemaError unless `j` is an object stamped with kSchemaVersion.
void require_schema_version(const Json& j, const std::string& what);

Json to_json(const EnvState& state);
EnvState env_state_from_json(const Json& j);

// `horizon`, when given, is enforced on the step count.
Json to_json(const Trajectory& trajectory, bool stamp = true);
Trajectory trajectory_from_json(const Json& j, std::optional<int> horizon = {},
                                bool stamped = true);

Json to_json(const ExperimentLog& log);
ExperimentLog experiment_log_from_json(const Json& j,
                                       std::optional<int> horizon = {});

Json to_json(const TrustParams& params);
TrustParams trust_params_from_json(const Json& j);

Json to_json(const BinaryTrustParams& params);
BinaryTrustParams binary_trust_params_from_json(const Json& j);

Json to_json(const TaskConfig& config);
// Missing keys fall back to TaskConfig::defaults(); a missing max_step is
// derived from the start region and target.
TaskConfig task_config_from_json(const Json& j);

Json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);

// Network checkpoint: architecture, flat weights, seed and free-form
// training metadata.
struct Checkpoint {
  std::string kind;  // "policy" or "reward"
  diffnet::Mlp net;
  std::uint64_t seed = 0;
  Json metadata = Json::object();
};

Json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);

// File helpers. Writes go through a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
std::vector<Json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path,
                      const std::vector<Json>& records);

std::string to_jsonl(const std::vector<Json>& records);

}  // namespace trustbeta
