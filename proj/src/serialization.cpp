#include "trustbeta/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "trustbeta/errors.hpp"

namespace trustbeta {
namespace {

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(what + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& what) {
  const Json& v = field(j, key, what);
  if (!v.is_number()) {
    throw SchemaError(what + ": field '" + key + "' must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw SchemaError(what + ": field '" + key + "' must be finite");
  }
  return x;
}

std::int64_t integer(const Json& j, const char* key, const std::string& what) {
  const Json& v = field(j, key, what);
  if (!v.is_number_integer()) {
    throw SchemaError(what + ": field '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

Vec3 vec3(const Json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) {
    throw SchemaError(what + " must be an array of 3 numbers");
  }
  Vec3 out{};
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw SchemaError(what + " must hold numbers");
    out[i] = v[i].get<double>();
  }
  if (!all_finite(out)) throw SchemaError(what + " must be finite");
  return out;
}

Vec3 vec3_field(const Json& j, const char* key, const std::string& what) {
  return vec3(field(j, key, what), what + "." + key);
}

Json box_json(const Box& box) { return {{"min", box.min}, {"max", box.max}}; }

Box box_from(const Json& j, const std::string& what) {
  return Box{vec3_field(j, "min", what), vec3_field(j, "max", what)};
}

// Wraps library exceptions so every parse failure surfaces as SchemaError.
template <typename F>
auto schema_guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  } catch (const Error& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(TrajectorySource source) {
  return source == TrajectorySource::kHumanDemo ? "human_demo" : "robot_rollout";
}

TrajectorySource trajectory_source_from_string(std::string_view name) {
  if (name == "human_demo") return TrajectorySource::kHumanDemo;
  if (name == "robot_rollout") return TrajectorySource::kRobotRollout;
  throw SchemaError("unknown trajectory source '" + std::string(name) + "'");
}

void require_schema_version(const Json& j, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + ": expected a JSON object");
  const Json& v = field(j, "schema_version", what);
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw SchemaError(what + ": unsupported schema_version " + v.dump());
  }
}

Json to_json(const EnvState& state) {
  return {{"ee_to_target", state.ee_to_target},
          {"dist_obstacle", state.dist_obstacle},
          {"height", state.height}};
}

EnvState env_state_from_json(const Json& j) {
  const std::string what = "state";
  EnvState state;
  state.ee_to_target = vec3_field(j, "ee_to_target", what);
  state.dist_obstacle = number(j, "dist_obstacle", what);
  state.height = number(j, "height", what);
  if (!state.valid()) {
    throw SchemaError("state: distances must be finite and nonnegative");
  }
  return state;
}

Json to_json(const Trajectory& trajectory, bool stamp) {
  Json steps = Json::array();
  for (const Step& step : trajectory.steps) {
    steps.push_back({{"state", to_json(step.state)},
                     {"action", step.action.position}});
  }
  Json j;
  if (stamp) j["schema_version"] = kSchemaVersion;
  j["source"] = std::string(to_string(trajectory.source));
  j["steps"] = std::move(steps);
  return j;
}

Trajectory trajectory_from_json(const Json& j, std::optional<int> horizon,
                                bool stamped) {
  const std::string what = "trajectory";
  if (stamped) require_schema_version(j, what);
  return schema_guard(what, [&] {
    Trajectory trajectory;
    const Json& source = field(j, "source", what);
    if (!source.is_string()) throw SchemaError(what + ": source must be a string");
    trajectory.source = trajectory_source_from_string(source.get<std::string>());
    const Json& steps = field(j, "steps", what);
    if (!steps.is_array()) throw SchemaError(what + ": steps must be an array");
    for (const Json& step : steps) {
      trajectory.steps.push_back(
          {env_state_from_json(field(step, "state", what)),
           EnvAction{vec3(field(step, "action", what), "action")}});
    }
    if (horizon && static_cast<int>(trajectory.steps.size()) != *horizon) {
      throw SchemaError(what + ": expected " + std::to_string(*horizon) +
                        " steps, found " + std::to_string(trajectory.steps.size()));
    }
    return trajectory;
  });
}

Json to_json(const ExperimentLog& log) {
  Json estimates = Json::array();
  for (const TrustEstimate& e : log.trust_estimates) {
    estimates.push_back({e.mean, e.variance});
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment_id"] = log.experiment_id;
  j["trajectory"] = to_json(log.trajectory, /*stamp=*/false);
  j["rewards"] = log.rewards;
  j["trust_estimates"] = std::move(estimates);
  j["report"] = log.report ? Json{{"level", log.report->level},
                                  {"percent", log.report->percent}}
                           : Json(nullptr);
  j["success_flag"] = log.success_flag;
  j["oracle_trust"] = log.oracle_trust ? Json(*log.oracle_trust) : Json(nullptr);
  return j;
}

ExperimentLog experiment_log_from_json(const Json& j, std::optional<int> horizon) {
  const std::string what = "experiment log";
  require_schema_version(j, what);
  return schema_guard(what, [&] {
    ExperimentLog log;
    log.experiment_id = integer(j, "experiment_id", what);
    log.trajectory = trajectory_from_json(field(j, "trajectory", what), horizon,
                                          /*stamped=*/false);
    const Json& rewards = field(j, "rewards", what);
    if (!rewards.is_array()) throw SchemaError(what + ": rewards must be an array");
    for (const Json& r : rewards) {
      if (!r.is_number()) throw SchemaError(what + ": rewards must be numbers");
      const double x = r.get<double>();
      if (!std::isfinite(x) || x < -1.0 || x > 1.0) {
        throw SchemaError(what + ": reward outside [-1, 1]");
      }
      log.rewards.push_back(x);
    }
    const Json& estimates = field(j, "trust_estimates", what);
    if (!estimates.is_array()) {
      throw SchemaError(what + ": trust_estimates must be an array");
    }
    for (const Json& e : estimates) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw SchemaError(what + ": trust estimates are [mean, variance] pairs");
      }
      log.trust_estimates.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    const std::size_t steps = log.trajectory.steps.size();
    if (log.rewards.size() != steps || log.trust_estimates.size() != steps) {
      throw SchemaError(what + ": rewards and trust_estimates must have T entries");
    }
    const Json& report = field(j, "report", what);
    if (!report.is_null()) {
      const auto level = integer(report, "level", what + ".report");
      const double percent = number(report, "percent", what + ".report");
      if (level < 1 || level > LikertScale::kLevels || percent < 0.0 ||
          percent > 100.0) {
        throw SchemaError(what + ": report out of range");
      }
      log.report = LikertLevel{static_cast<int>(level), percent};
    }
    const Json& success = field(j, "success_flag", what);
    if (!success.is_boolean()) throw SchemaError(what + ": success_flag must be a boolean");
    log.success_flag = success.get<bool>();
    if (j.contains("oracle_trust") && !j.at("oracle_trust").is_null()) {
      log.oracle_trust = number(j, "oracle_trust", what);
    }
    return log;
  });
}

Json to_json(const TrustParams& p) {
  return {{"schema_version", kSchemaVersion},
          {"alpha0", p.alpha0},
          {"beta0", p.beta0},
          {"omega_s", p.omega_s},
          {"omega_f", p.omega_f},
          {"epsilon", p.epsilon},
          {"gamma", p.gamma}};
}

TrustParams trust_params_from_json(const Json& j) {
  const std::string what = "trust parameters";
  require_schema_version(j, what);
  return schema_guard(what, [&] {
    TrustParams p{number(j, "alpha0", what), number(j, "beta0", what),
                  number(j, "omega_s", what), number(j, "omega_f", what),
                  number(j, "epsilon", what), number(j, "gamma", what)};
    p.validate();
    return p;
  });
}

Json to_json(const BinaryTrustParams& p) {
  return {{"schema_version", kSchemaVersion},
          {"alpha0", p.alpha0},
          {"beta0", p.beta0},
          {"omega_s", p.omega_s},
          {"omega_f", p.omega_f},
          {"gamma", p.gamma}};
}

BinaryTrustParams binary_trust_params_from_json(const Json& j) {
  const std::string what = "binary trust parameters";
  require_schema_version(j, what);
  return schema_guard(what, [&] {
    BinaryTrustParams p{number(j, "alpha0", what), number(j, "beta0", what),
                        number(j, "omega_s", what), number(j, "omega_f", what),
                        number(j, "gamma", what)};
    p.validate();
    return p;
  });
}

Json to_json(const TaskConfig& c) {
  return {{"workspace", box_json(c.workspace)},
          {"obstacle", {{"center", c.obstacle.center}, {"radius", c.obstacle.radius}}},
          {"target", c.target},
          {"start_region", box_json(c.start_region)},
          {"success_radius", c.success_radius},
          {"max_step", c.max_step},
          {"horizon", c.horizon}};
}

TaskConfig task_config_from_json(const Json& j) {
  const std::string what = "task config";
  TaskConfig c = TaskConfig::defaults();
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  try {
    if (j.contains("workspace")) c.workspace = box_from(j.at("workspace"), what + ".workspace");
    if (j.contains("obstacle")) {
      const Json& o = j.at("obstacle");
      c.obstacle.center = vec3_field(o, "center", what + ".obstacle");
      c.obstacle.radius = number(o, "radius", what + ".obstacle");
    }
    if (j.contains("target")) c.target = vec3(j.at("target"), what + ".target");
    if (j.contains("start_region")) {
      c.start_region = box_from(j.at("start_region"), what + ".start_region");
    }
    if (j.contains("success_radius")) c.success_radius = number(j, "success_radius", what);
    if (j.contains("horizon")) c.horizon = static_cast<int>(integer(j, "horizon", what));
    if (j.contains("max_step") && !j.at("max_step").is_null()) {
      c.max_step = number(j, "max_step", what);
    } else {
      c.max_step = TaskConfig::default_max_step(c.start_region, c.target, c.horizon);
    }
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"eta_min", c.eta_min},
          {"eta_max", c.eta_max},
          {"rollouts", c.rollouts},
          {"demos", c.demos},
          {"demo_noise", c.demo_noise},
          {"policy_learning_rate", c.policy_learning_rate},
          {"reward_learning_rate", c.reward_learning_rate},
          {"reward_steps_per_epoch", c.reward_steps_per_epoch},
          {"hidden", c.hidden},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  if (!j.is_object()) throw ConfigError("train config: expected an object");
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.eta_min = j.value("eta_min", c.eta_min);
    c.eta_max = j.value("eta_max", c.eta_max);
    c.rollouts = j.value("rollouts", c.rollouts);
    c.demos = j.value("demos", c.demos);
    c.demo_noise = j.value("demo_noise", c.demo_noise);
    c.policy_learning_rate = j.value("policy_learning_rate", c.policy_learning_rate);
    c.reward_learning_rate = j.value("reward_learning_rate", c.reward_learning_rate);
    c.reward_steps_per_epoch = j.value("reward_steps_per_epoch", c.reward_steps_per_epoch);
    c.hidden = j.value("hidden", c.hidden);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const Checkpoint& checkpoint) {
  const diffnet::NetSpec& spec = checkpoint.net.spec();
  Json heads = Json::array();
  for (const auto& head : spec.heads) {
    heads.push_back({{"name", head.name},
                     {"size", head.size},
                     {"activation", std::string(diffnet::to_string(head.activation))}});
  }
  const auto params = checkpoint.net.params();
  return {{"schema_version", kSchemaVersion},
          {"kind", checkpoint.kind},
          {"spec",
           {{"layer_sizes", spec.layer_sizes},
            {"hidden_activation", std::string(diffnet::to_string(spec.hidden_activation))},
            {"heads", heads}}},
          {"weights", std::vector<double>(params.begin(), params.end())},
          {"seed", checkpoint.seed},
          {"metadata", checkpoint.metadata}};
}

Checkpoint checkpoint_from_json(const Json& j) {
  const std::string what = "checkpoint";
  require_schema_version(j, what);
  return schema_guard(what, [&] {
    Checkpoint checkpoint;
    checkpoint.kind = field(j, "kind", what).get<std::string>();
    const Json& spec_json = field(j, "spec", what);
    diffnet::NetSpec spec;
    spec.layer_sizes = field(spec_json, "layer_sizes", what).get<std::vector<int>>();
    spec.hidden_activation = diffnet::activation_from_string(
        field(spec_json, "hidden_activation", what).get<std::string>());
    for (const Json& head : field(spec_json, "heads", what)) {
      spec.heads.push_back(
          {field(head, "name", what).get<std::string>(),
           static_cast<int>(integer(head, "size", what)),
           diffnet::activation_from_string(field(head, "activation", what).get<std::string>())});
    }
    auto weights = field(j, "weights", what).get<std::vector<double>>();
    for (double w : weights) {
      if (!std::isfinite(w)) throw SchemaError(what + ": non-finite weight");
    }
    checkpoint.net = diffnet::Mlp(std::move(spec), std::move(weights));
    checkpoint.seed = field(j, "seed", what).get<std::uint64_t>();
    checkpoint.metadata = j.value("metadata", Json::object());
    return checkpoint;
  });
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<Json> read_jsonl_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<Json> records;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      records.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return records;
}

std::string to_jsonl(const std::vector<Json>& records) {
  std::string text;
  for (const Json& record : records) {
    text += record.dump();
    text += '\n';
  }
  return text;
}

void write_jsonl_file(const std::filesystem::path& path,
                      const std::vector<Json>& records) {
  write_text_file(path, to_jsonl(records));
}

}  // namespace trustbeta
