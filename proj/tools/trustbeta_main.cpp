#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trustbeta/errors.hpp"
#include "trustbeta/logging.hpp"
#include "trustbeta/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trustbeta;

namespace {

struct Globals {
  std::string manifest = "trustbeta_run/manifest.json";
  std::optional<std::uint64_t> seed;
  std::string config;
};

struct Session {
  fs::path manifest_path;
  RunManifest manifest;
  PipelineConfig config;

  void record(const std::string& stage) {
    manifest.config_hashes[stage] = config_hash(to_json(config));
    manifest.save(manifest_path);
  }
};

Session open_session(const Globals& g) {
  Session s;
  s.config = load_pipeline_config(g.config);
  s.manifest_path = fs::absolute(g.manifest);
  fs::create_directories(s.manifest_path.parent_path());
  s.manifest = RunManifest::load_or_create(s.manifest_path);
  if (g.seed) s.manifest.seed = *g.seed;
  return s;
}

std::unique_ptr<TrustReporter> make_human(const std::string& kind,
                                          const PipelineConfig& config) {
  if (kind == "interactive") {
    return std::make_unique<InteractiveHuman>(std::cin, std::cout, config.likert);
  }
  return std::make_unique<SyntheticHuman>(config.human, config.likert);
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();

  CLI::App app{"Granular trust estimation for a simulated pick-and-place robot"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--manifest", g.manifest, "Run manifest (created if missing)")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Run seed, stored in the manifest");
  app.add_option("--config", g.config, "Pipeline config JSON");

  auto* demo_gen = app.add_subcommand("demo-gen", "Write synthetic demonstrations");
  std::optional<int> demo_count;
  demo_gen->add_option("-n,--count", demo_count, "Number of demonstrations");

  auto* train = app.add_subcommand("train", "Fit the policy and reward networks");

  auto* stage3 = app.add_subcommand("stage3", "Collect trust reports and calibrate");
  std::string human = "synthetic";
  std::optional<int> stage3_episodes;
  stage3->add_option("--human", human)
      ->check(CLI::IsMember({"interactive", "synthetic"}))
      ->capture_default_str();
  stage3->add_option("--episodes", stage3_episodes);

  auto* stage4 = app.add_subcommand("stage4", "Run frozen inference episodes");
  std::string human4 = "synthetic";
  std::optional<int> stage4_episodes;
  stage4->add_option("--human", human4)
      ->check(CLI::IsMember({"interactive", "synthetic"}))
      ->capture_default_str();
  stage4->add_option("--episodes", stage4_episodes);

  auto* compare = app.add_subcommand("compare", "Granular vs binary error table");

  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "Calibrate trust parameters from a log file");
  std::string cal_input, cal_output, cal_history;
  calibrate_cmd->add_option("--input", cal_input, "JSON-lines experiment logs");
  calibrate_cmd->add_option("--output", cal_output, "Fitted parameters JSON")
      ->required();
  calibrate_cmd->add_option("--history", cal_history, "Per-generation best nll CSV");

  auto* export_cmd = app.add_subcommand("export", "Write the full trust trace CSV");
  std::string export_out;
  export_cmd->add_option("--out", export_out, "Output CSV (default: next to manifest)");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    Session s = open_session(g);
    const RunManifest& m = s.manifest;

    if (*demo_gen) {
      const auto demos = run_demo_gen(m, s.config, demo_count);
      s.record("demo-gen");
      std::cout << fmt::format("wrote {} demonstrations to {}\n", demos.size(),
                               m.resolve(m.demos).string());
    } else if (*train) {
      const Stage2Result result = run_train(m, s.config);
      s.record("train");
      const EpochStats& last = result.history.back();
      std::cout << fmt::format(
          "trained {} epochs: bc_loss={:.4f} maxent_loss={:.4f} "
          "demo_R={:.3f} rollout_R={:.3f}\n",
          result.history.size(), last.bc_loss, last.maxent_loss,
          last.mean_demo_reward, last.mean_rollout_reward);
    } else if (*stage3) {
      auto reporter = make_human(human, s.config);
      const Stage3Summary summary =
          run_stage3(m, s.config, stage3_episodes.value_or(s.config.stage3_episodes),
                     *reporter, &std::cout);
      s.record("stage3");
      if (summary.set.episodes.empty()) {
        std::cout << "no reports collected; nothing calibrated\n";
      } else {
        const TrustParams& l = summary.lambda;
        std::cout << fmt::format(
            "{} episodes{}: nll={:.4f} alpha0={:.4f} beta0={:.4f} omega_s={:.4f} "
            "omega_f={:.4f} epsilon={:.4f} gamma={:.4f}\n",
            summary.set.episodes.size(), summary.interrupted ? " (input ended)" : "",
            summary.nll, l.alpha0, l.beta0, l.omega_s, l.omega_f, l.epsilon, l.gamma);
      }
    } else if (*stage4) {
      std::unique_ptr<TrustReporter> reporter;
      if (human4 == "synthetic") {
        auto synthetic = std::make_unique<SyntheticHuman>(s.config.human, s.config.likert);
        const auto stage3_logs = m.resolve(m.calibration_set);
        if (!std::filesystem::exists(m.resolve(m.lambda)) ||
            !std::filesystem::exists(stage3_logs)) {
          throw ConfigError("no calibrated parameters in " + m.root.string() +
                            "; run `stage3` first");
        }
        synthetic->resume(load_logs(stage3_logs, s.config.task.horizon));
        reporter = std::move(synthetic);
      } else {
        reporter = make_human(human4, s.config);
      }
      const Stage4Summary summary = run_stage4(
          m, s.config, stage4_episodes.value_or(s.config.stage4_episodes), *reporter);
      s.record("stage4");
      for (const ExperimentLog& log : summary.logs) {
        std::cout << fmt::format("episode {}: success={} final trust {:.1f}%\n",
                                 log.experiment_id, log.success_flag,
                                 100.0 * log.trust_estimates.back().mean);
      }
    } else if (*compare) {
      const auto rows = run_compare(m, s.config);
      s.record("compare");
      std::cout << comparison_markdown(rows);
    } else if (*calibrate_cmd) {
      const fs::path input =
          cal_input.empty() ? m.resolve(m.calibration_set) : fs::path(cal_input);
      const fs::path history =
          cal_history.empty() ? fs::path(cal_output).replace_extension(".history.csv")
                              : fs::path(cal_history);
      const CalibrationResult fit = run_calibrate(m, s.config, input, cal_output, history);
      std::cout << fmt::format("nll={:.6f} written to {}\n", fit.nll, cal_output);
    } else if (*export_cmd) {
      const fs::path out =
          export_out.empty() ? m.resolve("trust_trace.csv") : fs::path(export_out);
      const auto rows = run_export(m, out);
      std::cout << fmt::format("wrote {} trace rows to {}\n", rows.size(), out.string());
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  }
}
