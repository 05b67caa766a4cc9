#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "copb/core.hpp"
#include "copb/io.hpp"

// Grounding of intention sequences into physical trajectories. Candidate
// POIs are weighted by the density of matching POIs in 1 km concentric rings
// around the previous location times a power-law decay of exact distance,
// then sampled. Home / workplace intentions resolve to persona anchors and
// never touch the sampler.

namespace copb {

struct CoverageError : Error { using Error::Error; };
struct SamplingError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };

struct PoiRecord {
  std::string id;
  std::string name;
  std::string category;
  GeoPoint location;
};

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
};

struct GravityParams {
  double decay_exponent = 2.5;
  double ring_width_km = 1.0;
  double max_radius_km = 10.0;
  double min_distance_km = 0.1;   // clamp applied inside the decay term
  int trajectories_per_sequence = 20;
  bool strict_coverage = false;   // fail instead of widening an empty search
  double fallback_max_radius_km = 40.0;

  void validate() const {
    if (decay_exponent <= 0.0) throw ConfigError("decay_exponent must be > 0");
    if (ring_width_km <= 0.0 || ring_width_km > max_radius_km) {
      throw ConfigError("require 0 < ring_width_km <= max_radius_km");
    }
    if (trajectories_per_sequence < 1) throw ConfigError("trajectories_per_sequence must be >= 1");
  }
};

// ------------------------------------------------------------ spatial index

// Uniform lat/lon cell buckets over the study bounding box. Range queries
// over-collect by cell and exact-filter by haversine, so results match a
// linear scan.
class SpatialIndex {
 public:
  SpatialIndex(std::vector<PoiRecord> pois, double cell_size_km,
               std::optional<BoundingBox> box = std::nullopt)
      : pois_(std::move(pois)), cell_km_(cell_size_km) {
    if (pois_.empty()) throw ConfigError("cannot build spatial index from an empty POI list");
    if (cell_km_ <= 0.0) throw ConfigError("cell_size_km must be > 0");
    if (box) {
      box_ = *box;
      std::string outside;
      int n_outside = 0;
      for (const PoiRecord& p : pois_) {
        if (!box_.contains(p.location)) {
          if (++n_outside <= 10) outside += (outside.empty() ? "" : ", ") + p.id;
        }
      }
      if (n_outside > 0) {
        throw IoError(std::to_string(n_outside) + " POIs outside bounding box: " + outside);
      }
    } else {
      box_ = BoundingBox{pois_.front().location.lat, pois_.front().location.lat,
                         pois_.front().location.lon, pois_.front().location.lon};
      for (const PoiRecord& p : pois_) {
        box_.lat_min = std::min(box_.lat_min, p.location.lat);
        box_.lat_max = std::max(box_.lat_max, p.location.lat);
        box_.lon_min = std::min(box_.lon_min, p.location.lon);
        box_.lon_max = std::max(box_.lon_max, p.location.lon);
      }
    }
    dlat_ = cell_km_ / kKmPerDegree;
    const double mid_lat = (box_.lat_min + box_.lat_max) / 2.0;
    dlon_ = cell_km_ / (kKmPerDegree * std::max(0.01, std::cos(mid_lat * kDegToRad)));
    for (std::uint32_t i = 0; i < pois_.size(); ++i) {
      cells_[cell_key(pois_[i].location)].push_back(i);
      if (!id_index_.emplace(pois_[i].id, i).second) {
        throw IoError("duplicate POI id: " + pois_[i].id);
      }
    }
  }

  const std::vector<PoiRecord>& pois() const { return pois_; }
  const BoundingBox& box() const { return box_; }
  double cell_size_km() const { return cell_km_; }

  const PoiRecord* find(std::string_view id) const {
    const auto it = id_index_.find(std::string(id));
    return it == id_index_.end() ? nullptr : &pois_[it->second];
  }

  struct Hit {
    std::uint32_t poi = 0;
    double distance_km = 0.0;
  };

  /// All POIs with haversine distance <= radius_km, ordered by POI index.
  std::vector<Hit> query_radius(const GeoPoint& center, double radius_km) const {
    std::vector<Hit> hits;
    if (radius_km < 0.0) return hits;
    const double lat_margin = radius_km / kKmPerDegree;
    // Longitude degrees per km grow with |lat|; size the column span at the
    // most poleward latitude the search circle can reach.
    const double worst_lat =
        std::min(89.9, std::max(std::abs(center.lat - lat_margin), std::abs(center.lat + lat_margin)));
    const double lon_margin =
        radius_km / (kKmPerDegree * std::max(0.01, std::cos(worst_lat * kDegToRad)));

    // Cells outside the indexed box are always empty, so the scan stays
    // bounded even for radii far larger than the box.
    const auto [box_row_hi, box_col_hi] = cell_coords({box_.lat_max, box_.lon_max});
    auto [row_lo, col_lo] = cell_coords({center.lat - lat_margin, center.lon - lon_margin});
    auto [row_hi, col_hi] = cell_coords({center.lat + lat_margin, center.lon + lon_margin});
    row_lo = std::max<std::int64_t>(row_lo, 0);
    col_lo = std::max<std::int64_t>(col_lo, 0);
    row_hi = std::min(row_hi, box_row_hi);
    col_hi = std::min(col_hi, box_col_hi);
    for (std::int64_t row = row_lo; row <= row_hi; ++row) {
      for (std::int64_t col = col_lo; col <= col_hi; ++col) {
        const auto it = cells_.find((row << 32) ^ (col & 0xffffffff));
        if (it == cells_.end()) continue;
        for (std::uint32_t idx : it->second) {
          const double d = haversine_km(center, pois_[idx].location);
          if (d <= radius_km) hits.push_back({idx, d});
        }
      }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.poi < b.poi; });
    return hits;
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_coords(const GeoPoint& p) const {
    return {static_cast<std::int64_t>(std::floor((p.lat - box_.lat_min) / dlat_)),
            static_cast<std::int64_t>(std::floor((p.lon - box_.lon_min) / dlon_))};
  }

  std::int64_t cell_key(const GeoPoint& p) const {
    const auto [row, col] = cell_coords(p);
    return (row << 32) ^ (col & 0xffffffff);
  }

  std::vector<PoiRecord> pois_;
  double cell_km_;
  BoundingBox box_;
  double dlat_ = 1.0;
  double dlon_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
  std::unordered_map<std::string, std::uint32_t> id_index_;
};

inline SpatialIndex build_index(std::vector<PoiRecord> pois, double cell_size_km,
                                std::optional<BoundingBox> box = std::nullopt) {
  return SpatialIndex(std::move(pois), cell_size_km, box);
}

// --------------------------------------------------------------- POI files

/// CSV with header id,name,category,lat,lon; names may be double-quoted.
inline std::vector<PoiRecord> read_pois_csv(const std::filesystem::path& path) {
  const auto split_csv = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    return fields;
  };

  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError("empty POI file: " + path.string());
  if (split_csv(lines.front()) != std::vector<std::string>{"id", "name", "category", "lat", "lon"}) {
    throw ParseError(path.string() + ": expected header id,name,category,lat,lon");
  }
  std::vector<PoiRecord> pois;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv(lines[i]);
    if (fields.size() != 5) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected 5 fields");
    }
    try {
      PoiRecord rec{fields[0], fields[1], fields[2],
                    GeoPoint{std::stod(fields[3]), std::stod(fields[4])}};
      if (rec.category.empty()) throw ParseError("empty category");
      if (!rec.location.valid()) throw ParseError("invalid coordinates");
      pois.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return pois;
}

// ------------------------------------------------------------- category map

// Maps each intention to the POI categories that can host it. Home-bound
// intentions and the workplace are anchors resolved from the persona, not
// sampled; the "go to work" category list is still used once per persona to
// place the workplace itself.
class CategoryMap {
 public:
  static bool is_anchor(Intention e) {
    return e == Intention::GoHome || e == Intention::Sleep || e == Intention::GoToWork;
  }

  CategoryMap() = default;

  explicit CategoryMap(std::map<Intention, std::set<std::string>> categories)
      : categories_(std::move(categories)) {
    for (Intention e : all_intentions()) {
      if (e == Intention::GoHome || e == Intention::Sleep) continue;
      const auto it = categories_.find(e);
      if (it == categories_.end() || it->second.empty()) {
        throw ConfigError("category map lacks categories for '" + std::string(label(e)) + "'");
      }
    }
  }

  const std::set<std::string>& categories(Intention e) const {
    static const std::set<std::string> empty;
    const auto it = categories_.find(e);
    return it == categories_.end() ? empty : it->second;
  }

  bool matches(Intention e, std::string_view category) const {
    return categories(e).count(normalize_label(category)) > 0;
  }

 private:
  std::map<Intention, std::set<std::string>> categories_;
};

inline CategoryMap load_category_map(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  std::map<Intention, std::set<std::string>> categories;
  try {
    for (const auto& [key, value] : j.items()) {
      const auto intention = intention_from_label(key);
      if (!intention) throw ConfigError("category map has unknown intention '" + key + "'");
      std::set<std::string>& set = categories[*intention];
      for (const Json& c : value) set.insert(normalize_label(c.get<std::string>()));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return CategoryMap(std::move(categories));
}

// ------------------------------------------------------------ ring weights

/// 1-based ring index for a distance; ring k covers ((k-1)w, kw] and a point
/// exactly at the center falls in ring 1.
inline int ring_of(double r_km, double ring_width_km) {
  if (r_km <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(r_km / ring_width_km)));
}

inline double ring_area_km2(int ring, double ring_width_km) {
  const double outer = ring * ring_width_km;
  const double inner = (ring - 1) * ring_width_km;
  return std::numbers::pi * (outer * outer - inner * inner);
}

/// Density of matching POIs per ring (count / ring area, per km^2).
inline std::vector<double> ring_densities(const SpatialIndex& index, const GeoPoint& center,
                                          const std::set<std::string>& categories,
                                          double ring_width_km = 1.0, double max_radius_km = 10.0) {
  const int n_rings = static_cast<int>(std::ceil(max_radius_km / ring_width_km));
  std::vector<int> counts(n_rings, 0);
  for (const SpatialIndex::Hit& hit : index.query_radius(center, max_radius_km)) {
    if (!categories.count(normalize_label(index.pois()[hit.poi].category))) continue;
    const int ring = ring_of(hit.distance_km, ring_width_km);
    if (ring <= n_rings) ++counts[ring - 1];
  }
  std::vector<double> densities(n_rings, 0.0);
  for (int k = 1; k <= n_rings; ++k) {
    densities[k - 1] = counts[k - 1] / ring_area_km2(k, ring_width_km);
  }
  return densities;
}

struct WeightedCandidate {
  std::uint32_t poi = 0;
  double distance_km = 0.0;
  double weight = 0.0;
};

namespace detail {

/// Gravity weights for one category set around a center: weight =
/// ring_density * clamp(r)^-decay. Origin mass is constant per draw and is
/// absorbed into the sampling normalization.
inline std::vector<WeightedCandidate> weights_for_categories(
    const SpatialIndex& index, const GeoPoint& center, const std::set<std::string>& categories,
    const GravityParams& params, std::vector<std::string>* warnings = nullptr,
    std::string_view what = "destination") {
  params.validate();
  double radius = params.max_radius_km;
  while (true) {
    const std::vector<double> densities =
        ring_densities(index, center, categories, params.ring_width_km, radius);
    std::vector<WeightedCandidate> out;
    for (const SpatialIndex::Hit& hit : index.query_radius(center, radius)) {
      if (!categories.count(normalize_label(index.pois()[hit.poi].category))) continue;
      const int ring = ring_of(hit.distance_km, params.ring_width_km);
      if (ring > static_cast<int>(densities.size())) continue;
      const double r = std::max(hit.distance_km, params.min_distance_km);
      out.push_back({hit.poi, hit.distance_km,
                     densities[ring - 1] * std::pow(r, -params.decay_exponent)});
    }
    if (!out.empty()) return out;
    if (params.strict_coverage || radius * 2.0 > params.fallback_max_radius_km) {
      throw CoverageError("no matching POI for " + std::string(what) + " within " +
                          std::to_string(radius) + " km");
    }
    radius *= 2.0;
    if (warnings) {
      warnings->push_back("no POI for " + std::string(what) + " within " +
                          std::to_string(radius / 2.0) + " km; widening search to " +
                          std::to_string(radius) + " km");
    }
  }
}

}  // namespace detail

inline std::vector<WeightedCandidate> candidate_weights(
    const SpatialIndex& index, const GeoPoint& center, Intention intention,
    const GravityParams& params, const CategoryMap& cmap,
    std::vector<std::string>* warnings = nullptr) {
  if (CategoryMap::is_anchor(intention)) {
    throw Error("candidate_weights called for anchor intention '" + std::string(label(intention)) +
                "'");
  }
  return detail::weights_for_categories(index, center, cmap.categories(intention), params, warnings,
                                        label(intention));
}

/// Draws candidate j with probability weight_j / sum(weights).
inline const WeightedCandidate& sample_destination(std::span<const WeightedCandidate> candidates,
                                                   Rng& rng) {
  if (candidates.empty()) throw SamplingError("no candidates to sample from");
  double total = 0.0;
  for (const WeightedCandidate& c : candidates) {
    if (c.weight < 0.0) throw SamplingError("negative candidate weight");
    total += c.weight;
  }
  if (total <= 0.0) throw SamplingError("all candidate weights are zero");
  const double u = rand_unit(rng) * total;
  double acc = 0.0;
  for (const WeightedCandidate& c : candidates) {
    acc += c.weight;
    if (u < acc) return c;
  }
  return candidates.back();
}

// ------------------------------------------------------------ map sequence

/// Grounds one intention sequence into n physical trajectories; replicas are
/// resampled independently with rng streams derived from `rng`.
inline std::vector<Trajectory> map_sequence(const Persona& persona, const IntentionSequence& seq,
                                            const SpatialIndex& index, const GravityParams& params,
                                            const CategoryMap& cmap, Rng& rng,
                                            std::optional<int> n_replicas = std::nullopt,
                                            std::vector<std::string>* warnings = nullptr) {
  params.validate();
  if (!persona.home.valid()) throw Error("persona home is not set: " + persona.id);
  const bool needs_work = std::any_of(seq.events.begin(), seq.events.end(), [](const auto& e) {
    return e.intention == Intention::GoToWork;
  });
  if (needs_work && !persona.work) {
    throw Error("sequence contains 'go to work' but persona has no workplace: " + persona.id);
  }

  const int n = n_replicas.value_or(params.trajectories_per_sequence);
  std::vector<std::uint64_t> seeds(n);
  for (int i = 0; i < n; ++i) seeds[i] = rng();

  std::vector<Trajectory> out;
  out.reserve(n);
  for (int replica = 0; replica < n; ++replica) {
    Rng replica_rng(seeds[replica]);
    Trajectory traj{persona.id, seq.day_index, {}};
    GeoPoint center = persona.home;
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
      const IntentionEvent& ev = seq.events[i];
      if (ev.intention == Intention::GoHome || ev.intention == Intention::Sleep) {
        traj.points.push_back({ev.window, "home:" + persona.id, persona.home, ev.intention});
        center = persona.home;
        continue;
      }
      if (ev.intention == Intention::GoToWork) {
        traj.points.push_back({ev.window, "work:" + persona.id, *persona.work, ev.intention});
        center = *persona.work;
        continue;
      }
      try {
        const auto weights = candidate_weights(index, center, ev.intention, params, cmap, warnings);
        const WeightedCandidate& chosen = sample_destination(weights, replica_rng);
        const PoiRecord& poi = index.pois()[chosen.poi];
        traj.points.push_back({ev.window, poi.id, poi.location, ev.intention});
        center = poi.location;
      } catch (const CoverageError& e) {
        throw CoverageError("event " + std::to_string(i) + ": " + e.what());
      } catch (const SamplingError& e) {
        throw SamplingError("event " + std::to_string(i) + ": " + e.what());
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

// ------------------------------------------------------------ exponent fit

struct DecayFit {
  double exponent = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

inline std::vector<double> consecutive_displacements_km(std::span<const Trajectory> trajectories) {
  std::vector<double> out;
  for (const Trajectory& traj : trajectories) {
    for (std::size_t i = 0; i + 1 < traj.points.size(); ++i) {
      out.push_back(haversine_km(traj.points[i].location, traj.points[i + 1].location));
    }
  }
  return out;
}

/// Least-squares slope of log(ring count / ring area) against log(ring
/// midpoint distance), negated. Samples outside (min_distance, max_radius]
/// are ignored.
inline DecayFit fit_decay_exponent(std::span<const double> displacements_km,
                                   const GravityParams& params = {}) {
  const int n_rings = static_cast<int>(std::ceil(params.max_radius_km / params.ring_width_km));
  std::vector<long long> counts(n_rings, 0);
  int n_samples = 0;
  for (double r : displacements_km) {
    if (r <= params.min_distance_km || r > params.max_radius_km) continue;
    ++counts[ring_of(r, params.ring_width_km) - 1];
    ++n_samples;
  }
  if (n_samples < 100) {
    throw FitError("need >= 100 in-range displacement samples, got " + std::to_string(n_samples));
  }

  std::vector<double> xs, ys;
  for (int k = 1; k <= n_rings; ++k) {
    if (counts[k - 1] == 0) continue;
    const double midpoint = (k - 0.5) * params.ring_width_km;
    xs.push_back(std::log(midpoint));
    ys.push_back(std::log(counts[k - 1] / ring_area_km2(k, params.ring_width_km)));
  }
  if (xs.size() < 3) throw FitError("need >= 3 occupied rings for the regression");

  const std::size_t n = xs.size();
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= n;
  y_mean /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = ys[i] - y_mean - slope * (xs[i] - x_mean);
    ssr += resid * resid;
  }
  const double variance = n > 2 ? ssr / (n - 2) : 0.0;
  return DecayFit{-slope, std::sqrt(variance / sxx), n_samples};
}

inline DecayFit fit_decay_exponent(std::span<const Trajectory> trajectories,
                                   const GravityParams& params = {}) {
  const std::vector<double> displacements = consecutive_displacements_km(trajectories);
  return fit_decay_exponent(std::span<const double>(displacements), params);
}

// --------------------------------------------------------- persona placing

struct RegionProfile {
  double weight = 0.0;
  std::vector<std::string> residential_pois;
  std::map<std::string, std::map<std::string, double>> attributes;
};

struct ProfileDistribution {
  std::map<std::string, RegionProfile> regions;

  void validate(const SpatialIndex& index) const {
    if (regions.empty()) throw ConfigError("profile distribution has no regions");
    double total = 0.0;
    for (const auto& [region, profile] : regions) {
      if (profile.weight < 0.0) throw ConfigError("negative weight for region " + region);
      total += profile.weight;
      if (profile.residential_pois.empty()) {
        throw ConfigError("region " + region + " has no residential POIs");
      }
      for (const std::string& id : profile.residential_pois) {
        if (!index.find(id)) {
          throw ConfigError("region " + region + " references unknown POI " + id);
        }
      }
      for (const auto& [attr, values] : profile.attributes) {
        double sum = 0.0;
        for (const auto& [_, prob] : values) sum += prob;
        if (std::abs(sum - 1.0) > 1e-6) {
          throw ConfigError("attribute '" + attr + "' probabilities sum to " +
                            std::to_string(sum) + " in region " + region);
        }
      }
    }
    if (total <= 0.0) throw ConfigError("region weights sum to zero");
  }
};

inline ProfileDistribution load_profile_distribution(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  ProfileDistribution dist;
  try {
    for (const auto& [region, body] : j.items()) {
      RegionProfile profile;
      profile.weight = body.at("weight").get<double>();
      for (const Json& id : body.at("residential_pois")) {
        profile.residential_pois.push_back(id.get<std::string>());
      }
      if (body.contains("attributes")) {
        for (const auto& [attr, values] : body.at("attributes").items()) {
          for (const auto& [value, prob] : values.items()) {
            profile.attributes[attr][value] = prob.get<double>();
          }
        }
      }
      dist.regions.emplace(region, std::move(profile));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return dist;
}

struct HomeSample {
  std::string region;
  std::string poi_id;
  GeoPoint home;
  std::map<std::string, std::string> attributes;
};

/// Region by weight, home uniformly among the region's residential POIs,
/// then attribute values from the region's per-attribute distributions.
inline HomeSample sample_home(const ProfileDistribution& dist, const SpatialIndex& index,
                              Rng& rng) {
  dist.validate(index);
  double total = 0.0;
  for (const auto& [_, profile] : dist.regions) total += profile.weight;
  const double u = rand_unit(rng) * total;
  double acc = 0.0;
  const RegionProfile* chosen = nullptr;
  std::string region_id;
  for (const auto& [region, profile] : dist.regions) {
    acc += profile.weight;
    region_id = region;
    chosen = &profile;
    if (u < acc) break;
  }

  HomeSample out;
  out.region = region_id;
  const std::size_t pick =
      std::min(chosen->residential_pois.size() - 1,
               static_cast<std::size_t>(rand_unit(rng) * chosen->residential_pois.size()));
  out.poi_id = chosen->residential_pois[pick];
  out.home = index.find(out.poi_id)->location;
  for (const auto& [attr, values] : chosen->attributes) {
    const double v = rand_unit(rng);
    double cum = 0.0;
    for (const auto& [value, prob] : values) {
      cum += prob;
      out.attributes[attr] = value;
      if (v < cum) break;
    }
  }
  return out;
}

/// Workplace placement: one gravity draw over workplace categories centered
/// at home.
inline GeoPoint assign_work(const Persona& persona, const SpatialIndex& index,
                            const GravityParams& params, const CategoryMap& cmap, Rng& rng,
                            std::vector<std::string>* warnings = nullptr) {
  const auto weights = detail::weights_for_categories(
      index, persona.home, cmap.categories(Intention::GoToWork), params, warnings, "workplace");
  const WeightedCandidate& chosen = sample_destination(weights, rng);
  return index.pois()[chosen.poi].location;
}

}  // namespace copb
