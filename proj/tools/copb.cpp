#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copb/copb.hpp"

// copb: generate synthetic daily mobility behaviour with a planned-behaviour
// LLM workflow, ground it to POIs with a gravity model, evaluate against
// reference data, and export fine-tuning datasets from the dialogue logs.
//
// Exit codes: 0 success, 1 partial failure (lenient mode), 2 config error,
// 3 backend error.

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int jobs = 1;
  bool strict = false;
};

copb::CommandOptions options_of(const GlobalArgs& g) {
  copb::CommandOptions opt;
  opt.seed = g.seed;
  if (g.out_dir) opt.out_dir = *g.out_dir;
  opt.jobs = g.jobs;
  opt.strict = g.strict;
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic mobility behaviour generation and evaluation"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--config", global.config_path, "path to the run config JSON")->required();
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value, "override the output directory");
  app.add_option("--jobs", global.jobs, "parallel personas during generate")->default_val(1);
  app.add_flag("--strict", global.strict, "abort on the first per-persona failure");

  auto* personas = app.add_subcommand("personas", "sample persona profiles with homes");
  int n_personas = 0;
  personas->add_option("-n,--count", n_personas, "number of personas")->required();

  auto* generate = app.add_subcommand("generate", "generate intention sequences per persona-day");
  std::string gen_personas_path;
  int days = 1;
  generate->add_option("--personas", gen_personas_path, "persona JSONL file")->required();
  generate->add_option("--days", days, "days per persona")->default_val(1);

  auto* map_cmd = app.add_subcommand("map", "ground intention sequences to POI trajectories");
  std::string map_sequences_path, map_personas_path;
  map_cmd->add_option("--sequences", map_sequences_path, "intention sequence JSONL")->required();
  map_cmd->add_option("--personas", map_personas_path, "persona JSONL file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "compare generated against reference data");
  std::string eval_gen, eval_ref, eval_gen_personas, eval_ref_personas;
  evaluate->add_option("--gen", eval_gen, "generated trajectory JSONL")->required();
  evaluate->add_option("--ref", eval_ref, "reference trajectory JSONL")->required();
  evaluate->add_option("--gen-personas", eval_gen_personas, "generated persona attributes");
  evaluate->add_option("--ref-personas", eval_ref_personas, "reference persona attributes");

  auto* fit = app.add_subcommand("fit-gravity", "fit decay exponent from seed trajectories");
  std::string fit_trajectories;
  fit->add_option("--trajectories", fit_trajectories, "grounded trajectory JSONL")->required();

  auto* build = app.add_subcommand("build-dataset", "export fine-tuning examples from logs");
  std::vector<std::string> build_logs;
  int per_type = 250;
  build->add_option("--logs", build_logs, "dialogue log JSONL files")->required();
  build->add_option("--per-type", per_type, "examples per question tag")->default_val(250);

  CLI11_PARSE(app, argc, argv);
  if (!seed_opt->empty()) global.seed = seed_value;
  if (!out_opt->empty()) global.out_dir = out_value;

  try {
    const copb::RunConfig cfg = copb::load_config(global.config_path);
    const copb::CommandOptions opt = options_of(global);

    if (*personas) {
      copb::cmd_personas(cfg, n_personas, opt);
      return 0;
    }
    if (*generate) {
      const auto result = copb::cmd_generate(cfg, gen_personas_path, days, opt);
      return result.failed_personas > 0 ? 1 : 0;
    }
    if (*map_cmd) {
      const auto result = copb::cmd_map(cfg, map_sequences_path, map_personas_path, opt);
      return result.failed_sequences > 0 ? 1 : 0;
    }
    if (*evaluate) {
      copb::cmd_evaluate(cfg, eval_gen, eval_ref,
                         eval_gen_personas.empty()
                             ? std::nullopt
                             : std::optional<std::filesystem::path>(eval_gen_personas),
                         eval_ref_personas.empty()
                             ? std::nullopt
                             : std::optional<std::filesystem::path>(eval_ref_personas),
                         opt);
      return 0;
    }
    if (*fit) {
      copb::cmd_fit_gravity(cfg, fit_trajectories, opt);
      return 0;
    }
    if (*build) {
      std::vector<std::filesystem::path> logs(build_logs.begin(), build_logs.end());
      copb::cmd_build_dataset(cfg, logs, per_type, opt);
      return 0;
    }
  } catch (const copb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const copb::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 3;
  } catch (const copb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
