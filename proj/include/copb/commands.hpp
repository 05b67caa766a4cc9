#pragma once

#include <atomic>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "copb/baseline.hpp"
#include "copb/config.hpp"
#include "copb/dataset.hpp"
#include "copb/gravity.hpp"
#include "copb/io.hpp"
#include "copb/metrics.hpp"
#include "copb/workflow.hpp"

// Library-level implementations of the CLI subcommands so they can be
// exercised directly from tests. Every command is deterministic given
// (config, seed, scripted backend); file writes are atomic.

namespace copb {

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides config seed
  std::optional<std::filesystem::path> out_dir;
  int jobs = 1;
  bool strict = false;
};

namespace detail {

inline std::uint64_t effective_seed(const RunConfig& cfg, const CommandOptions& opt) {
  return opt.seed.value_or(cfg.seed);
}

inline std::filesystem::path effective_out(const RunConfig& cfg, const CommandOptions& opt) {
  return opt.out_dir.value_or(cfg.out_dir);
}

inline SpatialIndex load_index(const RunConfig& cfg) {
  if (cfg.poi_path.empty()) throw ConfigError("config lacks poi_path");
  return SpatialIndex(read_pois_csv(cfg.poi_path), cfg.poi_index_cell_km);
}

inline CategoryMap load_categories(const RunConfig& cfg) {
  if (cfg.category_map_path.empty()) throw ConfigError("config lacks category_map_path");
  return load_category_map(cfg.category_map_path);
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace detail

// ---------------------------------------------------------------- personas

struct PersonasResult {
  std::filesystem::path path;
  int generated = 0;
  int without_work = 0;
};

inline PersonasResult cmd_personas(const RunConfig& cfg, int n, const CommandOptions& opt = {},
                                   std::ostream& log = std::cerr) {
  detail::require(n >= 0, "persona count must be >= 0");
  const SpatialIndex index = detail::load_index(cfg);
  const CategoryMap cmap = detail::load_categories(cfg);
  detail::require(!cfg.profile_distribution_path.empty(), "config lacks profile_distribution_path");
  const ProfileDistribution dist = load_profile_distribution(cfg.profile_distribution_path);
  dist.validate(index);

  Rng rng(detail::effective_seed(cfg, opt) ^ fnv1a64("personas"));
  std::vector<Persona> personas;
  personas.reserve(n);
  PersonasResult result;
  for (int i = 0; i < n; ++i) {
    const HomeSample home = sample_home(dist, index, rng);
    Persona p;
    p.id = "p" + std::to_string(i);
    p.attributes = home.attributes;
    p.home_region = home.region;
    p.home = home.home;
    try {
      p.work = assign_work(p, index, cfg.gravity, cmap, rng);
    } catch (const CoverageError& e) {
      ++result.without_work;
      log << "persona " << p.id << ": no workplace assigned (" << e.what() << ")\n";
    }
    personas.push_back(std::move(p));
  }

  result.path = detail::effective_out(cfg, opt) / "personas.jsonl";
  write_personas(result.path, personas);
  result.generated = n;
  log << "personas: " << n << " written to " << result.path << "\n";
  return result;
}

// ---------------------------------------------------------------- generate

struct GenerateResult {
  std::filesystem::path sequences_path;
  std::filesystem::path dialogues_path;
  int generated_days = 0;
  int skipped_personas = 0;
  int failed_personas = 0;
  TokenUsage usage;
  std::map<std::string, int> calls_per_tag;
};

/// One intention sequence per persona-day plus the tagged dialogue log.
/// Personas whose requested days already exist in the output are skipped
/// wholesale; fresh personas are generated with per-persona rng streams, so
/// results do not depend on --jobs.
inline GenerateResult cmd_generate(const RunConfig& cfg,
                                   const std::filesystem::path& personas_path, int days,
                                   const CommandOptions& opt = {}, std::ostream& log = std::cerr) {
  detail::require(days >= 1, "days must be >= 1");
  const std::vector<Persona> personas = read_personas(personas_path);
  detail::require(!cfg.templates_dir.empty(), "config lacks templates_dir");
  detail::require(!cfg.fewshot_path.empty(), "config lacks fewshot_path");
  detail::require(!cfg.intention_count_path.empty(), "config lacks intention_count_path");
  const PromptTemplates templates = load_templates(cfg.templates_dir);
  const FewShotBank bank = load_fewshot(cfg.fewshot_path);
  const IntentionCountDistribution dist = load_intention_counts(cfg.intention_count_path);
  const std::uint64_t seed = detail::effective_seed(cfg, opt);

  const std::filesystem::path out = detail::effective_out(cfg, opt);
  GenerateResult result;
  result.sequences_path = out / "sequences.jsonl";
  result.dialogues_path = out / "dialogues.jsonl";

  // Resume: keep records and dialogues of personas whose days are all done.
  std::vector<DayRecord> kept_records;
  DialogueLog kept_log;
  std::set<std::string> done;
  if (std::filesystem::exists(result.sequences_path)) {
    std::map<std::string, std::set<int>> days_done;
    for (const DayRecord& rec : read_day_records(result.sequences_path)) {
      days_done[rec.persona_id].insert(rec.day);
    }
    DialogueLog old_log;
    if (std::filesystem::exists(result.dialogues_path)) {
      old_log = read_dialogue_log(result.dialogues_path);
    }
    for (const Persona& p : personas) {
      const auto it = days_done.find(p.id);
      if (it == days_done.end()) continue;
      bool complete = true;
      for (int d = 0; d < days; ++d) complete = complete && it->second.count(d) > 0;
      if (complete) done.insert(p.id);
    }
    for (const DayRecord& rec : read_day_records(result.sequences_path)) {
      if (done.count(rec.persona_id)) kept_records.push_back(rec);
    }
    for (const DialogueEntry& e : old_log) {
      if (done.count(e.persona_id)) kept_log.push_back(e);
    }
  }
  result.skipped_personas = static_cast<int>(done.size());

  std::unique_ptr<ChatBackend> backend = make_backend(cfg.backend);
  Workflow workflow(*backend, templates, bank, cfg.ablation, cfg.generation);
  workflow.set_extra_vars(cfg.template_vars);

  struct PersonaOutput {
    std::vector<IntentionSequence> sequences;
    DialogueLog log;
    std::string error;
    std::exception_ptr exception;
  };
  std::vector<const Persona*> todo;
  for (const Persona& p : personas) {
    if (!done.count(p.id)) todo.push_back(&p);
  }
  std::vector<PersonaOutput> outputs(todo.size());

  const std::size_t jobs = static_cast<std::size_t>(std::max(1, opt.jobs));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1)) {
      PersonaOutput& po = outputs[i];
      try {
        po.sequences = workflow.generate_days(*todo[i], days, dist, seed, po.log);
      } catch (const Error& e) {
        po.error = e.what();
        po.exception = std::current_exception();
      }
    }
  };
  if (jobs == 1 || todo.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(jobs, todo.size()); ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<DayRecord> all_records = kept_records;
  DialogueLog all_log = kept_log;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const PersonaOutput& po = outputs[i];
    if (!po.error.empty()) {
      ++result.failed_personas;
      log << "persona " << todo[i]->id << " failed: " << po.error << "\n";
      // Partial dialogue is retained for inspection.
      for (const DialogueEntry& e : po.log) all_log.push_back(e);
      if (opt.strict) std::rethrow_exception(po.exception);
      continue;
    }
    for (const IntentionSequence& seq : po.sequences) {
      all_records.push_back(to_record(seq));
      ++result.generated_days;
    }
    for (const DialogueEntry& e : po.log) all_log.push_back(e);
  }

  write_day_records(result.sequences_path, all_records);
  write_dialogue_log(result.dialogues_path, all_log);

  result.usage = backend->total_usage();
  for (const DialogueEntry& e : all_log) ++result.calls_per_tag[e.tag];
  log << "generate: " << result.generated_days << " persona-days, "
      << result.skipped_personas << " personas resumed, usage prompt="
      << result.usage.prompt_tokens << " completion=" << result.usage.completion_tokens << "\n";
  return result;
}

// --------------------------------------------------------------------- map

struct MapResult {
  std::filesystem::path trajectories_path;
  int sequences = 0;
  int trajectories = 0;
  int failed_sequences = 0;
  TokenUsage usage;  // always zero: grounding never calls the backend
  std::vector<std::string> warnings;
};

inline MapResult cmd_map(const RunConfig& cfg, const std::filesystem::path& sequences_path,
                         const std::filesystem::path& personas_path,
                         const CommandOptions& opt = {}, std::ostream& log = std::cerr) {
  const SpatialIndex index = detail::load_index(cfg);
  const CategoryMap cmap = detail::load_categories(cfg);
  const std::vector<DayRecord> records = read_day_records(sequences_path);
  std::map<std::string, Persona> personas;
  for (Persona& p : read_personas(personas_path)) personas.emplace(p.id, std::move(p));
  const std::uint64_t seed = detail::effective_seed(cfg, opt);

  MapResult result;
  std::vector<DayRecord> out_records;
  for (const DayRecord& rec : records) {
    ++result.sequences;
    try {
      const auto violations = validate_sequence(rec);
      if (!violations.empty()) throw ParseError(violations.front().message);
      const IntentionSequence seq = to_sequence(rec);
      const auto it = personas.find(rec.persona_id);
      if (it == personas.end()) throw Error("no persona record for " + rec.persona_id);
      GravityParams params = cfg.gravity;
      params.strict_coverage = params.strict_coverage || opt.strict;
      Rng rng(derive_seed(seed ^ fnv1a64("map"), rec.persona_id,
                          static_cast<std::uint64_t>(rec.day)));
      const std::vector<Trajectory> trajectories =
          map_sequence(it->second, seq, index, params, cmap, rng, std::nullopt, &result.warnings);
      for (const Trajectory& traj : trajectories) {
        out_records.push_back(to_record(traj));
        ++result.trajectories;
      }
    } catch (const Error& e) {
      ++result.failed_sequences;
      log << "sequence " << rec.persona_id << "/" << rec.day << " failed: " << e.what() << "\n";
      if (opt.strict) throw;
    }
  }

  result.trajectories_path = detail::effective_out(cfg, opt) / "trajectories.jsonl";
  write_day_records(result.trajectories_path, out_records);
  for (const std::string& w : result.warnings) log << "warning: " << w << "\n";
  log << "map: " << result.trajectories << " trajectories from " << result.sequences
      << " sequences, backend tokens consumed: " << result.usage.total() << "\n";
  return result;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateResult {
  std::filesystem::path report_path;
  std::filesystem::path heatmap_path;
  MetricReport report;
};

inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& gen_path,
                                   const std::filesystem::path& ref_path,
                                   std::optional<std::filesystem::path> gen_personas = {},
                                   std::optional<std::filesystem::path> ref_personas = {},
                                   const CommandOptions& opt = {},
                                   std::ostream& log = std::cerr) {
  const std::vector<DayRecord> gen = read_day_records(gen_path);
  const std::vector<DayRecord> ref = read_day_records(ref_path);
  const auto check = [](const std::vector<DayRecord>& recs, const std::string& side) {
    for (const DayRecord& rec : recs) {
      const auto violations = validate_sequence(rec);
      if (!violations.empty()) {
        throw ParseError(side + " dataset: persona " + rec.persona_id + " day " +
                         std::to_string(rec.day) + ": " + violations.front().message);
      }
    }
  };
  check(gen, "generated");
  check(ref, "reference");

  const GridSpec grid = cfg.grid_box ? GridSpec::from_box(*cfg.grid_box, cfg.grid_cell_km)
                                     : GridSpec::cover(gen, ref, cfg.grid_cell_km);
  if (cfg.grid_box) {
    std::string offenders;
    int n_outside = 0;
    const auto scan = [&](const std::vector<DayRecord>& recs, const char* side) {
      for (const DayRecord& rec : recs) {
        for (const RawEvent& ev : rec.events) {
          if (ev.lat && ev.lon && !grid.box.contains({*ev.lat, *ev.lon}) && ++n_outside <= 10) {
            offenders += std::string(offenders.empty() ? "" : ", ") + side + ":" +
                         rec.persona_id + "/" + std::to_string(rec.day);
          }
        }
      }
    };
    scan(gen, "gen");
    scan(ref, "ref");
    if (n_outside > 0) {
      throw MetricError(std::to_string(n_outside) +
                        " events outside the configured grid bounding box: " + offenders);
    }
  }

  const auto load_attrs = [](const std::optional<std::filesystem::path>& path) {
    PersonaAttributes attrs;
    if (path) {
      for (const Persona& p : read_personas(*path)) attrs[p.id] = p.attributes;
    }
    return attrs;
  };
  const PersonaAttributes gen_attrs = load_attrs(gen_personas);
  const PersonaAttributes ref_attrs = load_attrs(ref_personas);

  EvaluateResult result;
  result.report = evaluate_datasets(gen, ref, grid, cfg.bins,
                                    gen_attrs.empty() ? nullptr : &gen_attrs,
                                    ref_attrs.empty() ? nullptr : &ref_attrs);
  const std::filesystem::path out = detail::effective_out(cfg, opt);
  result.report_path = out / "report.json";
  result.heatmap_path = out / "heatmap.csv";
  atomic_write(result.report_path, to_json(result.report).dump(2) + "\n");
  export_heatmap_grid(gen, ref, grid, result.heatmap_path);
  log << "evaluate: report written to " << result.report_path << "\n";
  return result;
}

// -------------------------------------------------------------- fit-gravity

struct FitGravityResult {
  std::filesystem::path path;
  DecayFit fit;
  IntentionCountDistribution intention_counts;
};

/// Fits the distance-decay exponent from seed trajectories and also derives
/// the intentions-per-day histogram used by the cap sampler.
inline FitGravityResult cmd_fit_gravity(const RunConfig& cfg,
                                        const std::filesystem::path& trajectories_path,
                                        const CommandOptions& opt = {},
                                        std::ostream& log = std::cerr) {
  const std::vector<DayRecord> records = read_day_records(trajectories_path);
  std::vector<Trajectory> trajectories;
  trajectories.reserve(records.size());
  for (const DayRecord& rec : records) trajectories.push_back(to_trajectory(rec));

  FitGravityResult result;
  result.fit = fit_decay_exponent(std::span<const Trajectory>(trajectories), cfg.gravity);

  std::map<int, int> counts;
  for (const DayRecord& rec : records) {
    if (!rec.events.empty()) ++counts[static_cast<int>(rec.events.size())];
  }
  int total = 0;
  for (const auto& [_, c] : counts) total += c;
  for (const auto& [n, c] : counts) {
    result.intention_counts.histogram[n] = static_cast<double>(c) / total;
  }
  // Exact unit sum for the cap sampler's validation.
  if (!result.intention_counts.histogram.empty()) {
    double sum = 0.0;
    for (const auto& [_, p] : result.intention_counts.histogram) sum += p;
    result.intention_counts.histogram.rbegin()->second += 1.0 - sum;
  }

  Json hist = Json::object();
  for (const auto& [n, p] : result.intention_counts.histogram) {
    hist[std::to_string(n)] = p;
  }
  const Json out_json{{"decay_exponent", result.fit.exponent},
                      {"std_error", result.fit.std_error},
                      {"n_samples", result.fit.n_samples},
                      {"intention_count_histogram", std::move(hist)}};
  result.path = detail::effective_out(cfg, opt) / "gravity_fit.json";
  atomic_write(result.path, out_json.dump(2) + "\n");
  log << "fit-gravity: exponent " << result.fit.exponent << " +/- " << result.fit.std_error
      << " from " << result.fit.n_samples << " displacements\n";
  return result;
}

// ------------------------------------------------------------ build-dataset

inline BuildResult cmd_build_dataset(const RunConfig& cfg,
                                     const std::vector<std::filesystem::path>& log_files,
                                     int per_type, const CommandOptions& opt = {},
                                     std::ostream& log = std::cerr) {
  const std::filesystem::path out = detail::effective_out(cfg, opt) / "finetune.jsonl";
  const BuildResult result =
      build_dataset(log_files, out, per_type, detail::effective_seed(cfg, opt));
  log << "build-dataset: " << result.examples << " examples written to " << result.dataset_path
      << "\n";
  return result;
}

}  // namespace copb
