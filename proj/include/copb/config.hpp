#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "copb/backend.hpp"
#include "copb/core.hpp"
#include "copb/gravity.hpp"
#include "copb/metrics.hpp"
#include "copb/workflow.hpp"

// One declarative JSON config drives every command. Unknown keys are
// rejected, referenced files must exist at load time, and relative paths are
// resolved against the config file's directory. COPB_API_BASE / COPB_API_KEY
// / COPB_MODEL fill backend fields the file leaves empty.

namespace copb {

struct RunConfig {
  BackendConfig backend;
  CompletionParams generation;

  std::filesystem::path templates_dir;
  std::filesystem::path fewshot_path;
  std::filesystem::path category_map_path;
  std::filesystem::path poi_path;
  std::filesystem::path profile_distribution_path;
  std::filesystem::path intention_count_path;

  GravityParams gravity;
  double poi_index_cell_km = 1.0;
  double grid_cell_km = 1.0;
  std::optional<BoundingBox> grid_box;
  BinningConfig bins;

  AblationFlags ablation;
  std::map<std::string, std::string> template_vars;

  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::filesystem::path base_dir;  // directory of the config file
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed,
                       const std::string& context) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + context);
    }
  }
}

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

inline RunConfig config_from_json(const Json& j, const std::filesystem::path& path) {
  check_keys(j,
             {"backend", "generation", "templates_dir", "fewshot_path", "category_map_path",
              "poi_path", "profile_distribution_path", "intention_count_path", "gravity",
              "poi_index_cell_km", "grid", "radius_bins", "ablation", "template_vars", "seed",
              "out_dir"},
             "config");

  RunConfig cfg;
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  if (j.contains("backend")) {
    const Json& b = j["backend"];
    check_keys(b, {"kind", "base_url", "api_key", "model", "transcript_path", "retry",
                   "max_in_flight"},
               "backend");
    cfg.backend.kind = b.value("kind", cfg.backend.kind);
    cfg.backend.base_url = b.value("base_url", std::string{});
    cfg.backend.api_key = b.value("api_key", std::string{});
    cfg.backend.model = b.value("model", std::string{});
    cfg.backend.transcript_path = b.value("transcript_path", std::string{});
    cfg.backend.max_in_flight = b.value("max_in_flight", cfg.backend.max_in_flight);
    if (b.contains("retry")) {
      const Json& r = b["retry"];
      check_keys(r, {"max_attempts", "backoff_initial_ms", "backoff_factor"}, "retry");
      cfg.backend.retry.max_attempts = r.value("max_attempts", cfg.backend.retry.max_attempts);
      cfg.backend.retry.backoff_initial_ms =
          r.value("backoff_initial_ms", cfg.backend.retry.backoff_initial_ms);
      cfg.backend.retry.backoff_factor =
          r.value("backoff_factor", cfg.backend.retry.backoff_factor);
    }
  }
  // Config values win; environment fills what the file leaves empty.
  if (cfg.backend.base_url.empty()) cfg.backend.base_url = env_or("COPB_API_BASE", "");
  if (cfg.backend.api_key.empty()) cfg.backend.api_key = env_or("COPB_API_KEY", "");
  if (cfg.backend.model.empty()) cfg.backend.model = env_or("COPB_MODEL", "gpt-4-turbo");

  if (j.contains("generation")) {
    const Json& g = j["generation"];
    check_keys(g, {"temperature", "max_tokens"}, "generation");
    cfg.generation.temperature = g.value("temperature", cfg.generation.temperature);
    cfg.generation.max_tokens = g.value("max_tokens", cfg.generation.max_tokens);
    if (cfg.generation.temperature < 0.0 || cfg.generation.temperature > 2.0) {
      throw ConfigError("generation.temperature must lie in [0, 2]");
    }
  }
  cfg.generation.model = cfg.backend.model;

  const auto resolve = [&](const std::string& key) -> std::filesystem::path {
    if (!j.contains(key)) return {};
    std::filesystem::path p = j[key].get<std::string>();
    if (p.is_relative()) p = cfg.base_dir / p;
    if (!std::filesystem::exists(p)) {
      throw ConfigError("config references missing file: " + p.string() + " (" + key + ")");
    }
    return p;
  };
  cfg.templates_dir = resolve("templates_dir");
  cfg.fewshot_path = resolve("fewshot_path");
  cfg.category_map_path = resolve("category_map_path");
  cfg.poi_path = resolve("poi_path");
  cfg.profile_distribution_path = resolve("profile_distribution_path");
  cfg.intention_count_path = resolve("intention_count_path");
  if (!cfg.backend.transcript_path.empty()) {
    std::filesystem::path p = cfg.backend.transcript_path;
    if (p.is_relative()) p = cfg.base_dir / p;
    if (!std::filesystem::exists(p)) {
      throw ConfigError("config references missing file: " + p.string() + " (transcript_path)");
    }
    cfg.backend.transcript_path = p.string();
  }

  if (j.contains("gravity")) {
    const Json& g = j["gravity"];
    check_keys(g, {"decay_exponent", "ring_width_km", "max_radius_km", "min_distance_km",
                   "trajectories_per_sequence", "strict_coverage", "fallback_max_radius_km"},
               "gravity");
    cfg.gravity.decay_exponent = g.value("decay_exponent", cfg.gravity.decay_exponent);
    cfg.gravity.ring_width_km = g.value("ring_width_km", cfg.gravity.ring_width_km);
    cfg.gravity.max_radius_km = g.value("max_radius_km", cfg.gravity.max_radius_km);
    cfg.gravity.min_distance_km = g.value("min_distance_km", cfg.gravity.min_distance_km);
    cfg.gravity.trajectories_per_sequence =
        g.value("trajectories_per_sequence", cfg.gravity.trajectories_per_sequence);
    cfg.gravity.strict_coverage = g.value("strict_coverage", cfg.gravity.strict_coverage);
    cfg.gravity.fallback_max_radius_km =
        g.value("fallback_max_radius_km", cfg.gravity.fallback_max_radius_km);
    cfg.gravity.validate();
  }
  cfg.poi_index_cell_km = j.value("poi_index_cell_km", cfg.poi_index_cell_km);

  if (j.contains("grid")) {
    const Json& g = j["grid"];
    check_keys(g, {"cell_size_km", "bbox"}, "grid");
    cfg.grid_cell_km = g.value("cell_size_km", cfg.grid_cell_km);
    if (g.contains("bbox")) {
      const Json& b = g["bbox"];
      check_keys(b, {"lat_min", "lat_max", "lon_min", "lon_max"}, "grid.bbox");
      cfg.grid_box = BoundingBox{b.at("lat_min").get<double>(), b.at("lat_max").get<double>(),
                                 b.at("lon_min").get<double>(), b.at("lon_max").get<double>()};
    }
  }

  if (j.contains("radius_bins")) {
    const Json& b = j["radius_bins"];
    check_keys(b, {"width_km", "max_km"}, "radius_bins");
    cfg.bins.radius_bin_km = b.value("width_km", cfg.bins.radius_bin_km);
    cfg.bins.radius_max_km = b.value("max_km", cfg.bins.radius_max_km);
  }

  if (j.contains("ablation")) {
    const Json& a = j["ablation"];
    check_keys(a, {"use_attitude", "use_norms", "use_pbc"}, "ablation");
    cfg.ablation.use_attitude = a.value("use_attitude", true);
    cfg.ablation.use_norms = a.value("use_norms", true);
    cfg.ablation.use_pbc = a.value("use_pbc", true);
  }

  if (j.contains("template_vars")) {
    for (const auto& [key, value] : j["template_vars"].items()) {
      cfg.template_vars[key] = value.get<std::string>();
    }
  }

  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("out_dir")) {
    std::filesystem::path p = j["out_dir"].get<std::string>();
    cfg.out_dir = p.is_relative() ? cfg.base_dir / p : p;
  }
  return cfg;
}

}  // namespace detail

inline RunConfig load_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return detail::config_from_json(j, path);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace copb
