#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "copb/core.hpp"
#include "copb/gravity.hpp"
#include "copb/io.hpp"

// Evaluation suite comparing a generated dataset against a reference one:
// Jensen-Shannon divergences over radius of gyration, daily distinct
// locations, daily intention counts, top-100 rank frequencies, intention
// durations and grid visit frequencies; slice-level intention error against
// majority-vote representative days; OD-matrix MSE; uniqueness overlap; and
// a heatmap grid export.

namespace copb {

struct MetricError : Error { using Error::Error; };

// ------------------------------------------------------------ distributions

struct Histogram {
  std::vector<double> p;

  static Histogram from_counts(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
      if (c < 0.0) throw MetricError("negative count in histogram");
      total += c;
    }
    if (total <= 0.0) throw MetricError("histogram has zero mass");
    Histogram h;
    h.p.reserve(counts.size());
    for (double c : counts) h.p.push_back(c / total);
    return h;
  }
};

/// Shannon information in bits; 0 log 0 taken as 0.
inline double shannon_entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

/// JSD(p;q) = h((p+q)/2) - (h(p)+h(q))/2 with base-2 entropy, so the value
/// lies in [0, 1].
inline double jsd(const Histogram& p, const Histogram& q) {
  if (p.p.size() != q.p.size()) {
    throw MetricError("jsd: mismatched support (" + std::to_string(p.p.size()) + " vs " +
                      std::to_string(q.p.size()) + ")");
  }
  std::vector<double> mid(p.p.size());
  for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (p.p[i] + q.p[i]);
  double v = shannon_entropy_bits(mid) -
             0.5 * (shannon_entropy_bits(p.p) + shannon_entropy_bits(q.p));
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return v;
}

namespace detail {

/// Dataset-level JSD over raw count vectors. Two empty sides compare equal;
/// exactly one empty side is maximal divergence.
inline double jsd_counts(std::span<const double> a, std::span<const double> b,
                         std::vector<std::string>* warnings = nullptr,
                         std::string_view what = "metric") {
  const auto total = [](std::span<const double> v) {
    double t = 0.0;
    for (double x : v) t += x;
    return t;
  };
  const double ta = total(a), tb = total(b);
  if (ta <= 0.0 && tb <= 0.0) return 0.0;
  if (ta <= 0.0 || tb <= 0.0) {
    if (warnings) {
      warnings->push_back(std::string(what) + ": one side has no samples; reporting 1.0");
    }
    return 1.0;
  }
  return jsd(Histogram::from_counts(a), Histogram::from_counts(b));
}

}  // namespace detail

// --------------------------------------------------------------------- grid

struct GridSpec {
  BoundingBox box;
  double cell_size_km = 1.0;
  int rows = 1;
  int cols = 1;

  static GridSpec from_box(const BoundingBox& box, double cell_size_km) {
    if (cell_size_km <= 0.0) throw ConfigError("grid cell_size_km must be > 0");
    GridSpec g;
    g.box = box;
    g.cell_size_km = cell_size_km;
    const double lat_span_km = std::max(0.0, box.lat_max - box.lat_min) * kKmPerDegree;
    const double mid_lat = (box.lat_min + box.lat_max) / 2.0;
    const double lon_span_km = std::max(0.0, box.lon_max - box.lon_min) * kKmPerDegree *
                               std::max(0.01, std::cos(mid_lat * kDegToRad));
    g.rows = std::max(1, static_cast<int>(std::ceil(lat_span_km / cell_size_km)));
    g.cols = std::max(1, static_cast<int>(std::ceil(lon_span_km / cell_size_km)));
    if (static_cast<long long>(g.rows) * g.cols > 100'000'000LL) {
      throw ConfigError("grid of " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                        " cells is too large; enlarge cell_size_km or shrink the bbox");
    }
    return g;
  }

  /// Smallest grid covering every located event in both datasets.
  static GridSpec cover(std::span<const DayRecord> a, std::span<const DayRecord> b,
                        double cell_size_km) {
    bool any = false;
    BoundingBox box;
    const auto grow = [&](std::span<const DayRecord> recs) {
      for (const DayRecord& rec : recs) {
        for (const RawEvent& ev : rec.events) {
          if (!ev.lat || !ev.lon) continue;
          if (!any) {
            box = BoundingBox{*ev.lat, *ev.lat, *ev.lon, *ev.lon};
            any = true;
          } else {
            box.lat_min = std::min(box.lat_min, *ev.lat);
            box.lat_max = std::max(box.lat_max, *ev.lat);
            box.lon_min = std::min(box.lon_min, *ev.lon);
            box.lon_max = std::max(box.lon_max, *ev.lon);
          }
        }
      }
    };
    grow(a);
    grow(b);
    if (!any) box = BoundingBox{0.0, 0.0, 0.0, 0.0};
    return from_box(box, cell_size_km);
  }

  int n_cells() const { return rows * cols; }

  int cell_of(const GeoPoint& p) const {
    if (!box.contains(p)) {
      throw MetricError("point (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                        ") outside grid bounding box");
    }
    const double lat_step = (box.lat_max - box.lat_min) / rows;
    const double lon_step = (box.lon_max - box.lon_min) / cols;
    const int row = lat_step <= 0.0 ? 0
                                    : std::min(rows - 1, static_cast<int>((p.lat - box.lat_min) /
                                                                          lat_step));
    const int col = lon_step <= 0.0 ? 0
                                    : std::min(cols - 1, static_cast<int>((p.lon - box.lon_min) /
                                                                          lon_step));
    return row * cols + col;
  }
};

// ----------------------------------------------------------- radius metric

inline double radius_of_gyration_km(std::span<const GeoPoint> points) {
  if (points.empty()) throw MetricError("radius of gyration needs at least one point");
  GeoPoint centroid;
  for (const GeoPoint& p : points) {
    centroid.lat += p.lat;
    centroid.lon += p.lon;
  }
  centroid.lat /= points.size();
  centroid.lon /= points.size();
  double sum_sq = 0.0;
  for (const GeoPoint& p : points) {
    const double d = haversine_km(p, centroid);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / points.size());
}

inline double radius_of_gyration_km(const Trajectory& traj) {
  std::vector<GeoPoint> pts;
  pts.reserve(traj.points.size());
  for (const TrajectoryPoint& p : traj.points) pts.push_back(p.location);
  return radius_of_gyration_km(std::span<const GeoPoint>(pts));
}

struct BinningConfig {
  double radius_bin_km = 0.5;
  double radius_max_km = 50.0;
  int count_support = 24;  // per-day location / intention counts 0..24 + overflow
};

namespace detail {

inline std::vector<GeoPoint> located_points(const DayRecord& rec) {
  std::vector<GeoPoint> pts;
  for (const RawEvent& ev : rec.events) {
    if (ev.lat && ev.lon) pts.push_back({*ev.lat, *ev.lon});
  }
  return pts;
}

inline std::vector<double> radius_counts(std::span<const DayRecord> recs,
                                         const BinningConfig& bins) {
  const int n_bins = static_cast<int>(std::ceil(bins.radius_max_km / bins.radius_bin_km)) + 1;
  std::vector<double> counts(n_bins, 0.0);
  for (const DayRecord& rec : recs) {
    const auto pts = located_points(rec);
    if (pts.empty()) continue;
    const double rg = radius_of_gyration_km(std::span<const GeoPoint>(pts));
    const int bin = std::min(n_bins - 1, static_cast<int>(rg / bins.radius_bin_km));
    counts[bin] += 1.0;
  }
  return counts;
}

}  // namespace detail

inline double metric_radius(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                            const BinningConfig& bins = {},
                            std::vector<std::string>* warnings = nullptr) {
  return detail::jsd_counts(detail::radius_counts(gen, bins), detail::radius_counts(ref, bins),
                            warnings, "radius");
}

// ------------------------------------------------- location / count metrics

namespace detail {

/// Location identity: the POI id when present, else the grid cell.
inline std::optional<std::string> location_id(const RawEvent& ev, const GridSpec* grid) {
  if (ev.poi_id) return *ev.poi_id;
  if (ev.lat && ev.lon && grid) {
    return "cell:" + std::to_string(grid->cell_of({*ev.lat, *ev.lon}));
  }
  return std::nullopt;
}

inline std::vector<double> count_histogram(std::span<const int> values, int support) {
  std::vector<double> counts(support + 2, 0.0);  // 0..support plus overflow
  for (int v : values) counts[std::min(v, support + 1)] += 1.0;
  return counts;
}

}  // namespace detail

inline double metric_dayloc(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                            const GridSpec* grid = nullptr, const BinningConfig& bins = {},
                            std::vector<std::string>* warnings = nullptr) {
  const auto distinct_per_day = [&](std::span<const DayRecord> recs) {
    std::vector<int> out;
    out.reserve(recs.size());
    for (const DayRecord& rec : recs) {
      std::set<std::string> locations;
      for (const RawEvent& ev : rec.events) {
        if (const auto id = detail::location_id(ev, grid)) locations.insert(*id);
      }
      out.push_back(static_cast<int>(locations.size()));
    }
    return out;
  };
  const auto g = distinct_per_day(gen);
  const auto r = distinct_per_day(ref);
  if (gen.empty() && ref.empty()) return 0.0;
  return detail::jsd_counts(detail::count_histogram(g, bins.count_support),
                            detail::count_histogram(r, bins.count_support), warnings, "dayloc");
}

inline double metric_itdnum(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                            const BinningConfig& bins = {},
                            std::vector<std::string>* warnings = nullptr) {
  const auto events_per_day = [](std::span<const DayRecord> recs) {
    std::vector<int> out;
    out.reserve(recs.size());
    for (const DayRecord& rec : recs) out.push_back(static_cast<int>(rec.events.size()));
    return out;
  };
  if (gen.empty() && ref.empty()) return 0.0;
  return detail::jsd_counts(detail::count_histogram(events_per_day(gen), bins.count_support),
                            detail::count_histogram(events_per_day(ref), bins.count_support),
                            warnings, "itdNum");
}

// ------------------------------------------------------------ g-rank metric

inline constexpr int kGrankTop = 100;

/// Visit counts of each dataset's own top-100 locations, compared by rank
/// index. Datasets with fewer than 100 distinct locations are zero-padded.
inline double metric_grank(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                           const GridSpec* grid = nullptr,
                           std::vector<std::string>* warnings = nullptr) {
  const auto rank_vector = [&](std::span<const DayRecord> recs, std::string_view side) {
    std::map<std::string, double> visits;
    for (const DayRecord& rec : recs) {
      for (const RawEvent& ev : rec.events) {
        if (const auto id = detail::location_id(ev, grid)) visits[*id] += 1.0;
      }
    }
    std::vector<std::pair<std::string, double>> ranked(visits.begin(), visits.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) < kGrankTop && warnings && !ranked.empty()) {
      warnings->push_back("g-rank: " + std::string(side) + " has only " +
                          std::to_string(ranked.size()) + " distinct locations; padding to 100");
    }
    std::vector<double> counts(kGrankTop, 0.0);
    for (int i = 0; i < kGrankTop && i < static_cast<int>(ranked.size()); ++i) {
      counts[i] = ranked[i].second;
    }
    return counts;
  };
  return detail::jsd_counts(rank_vector(gen, "generated"), rank_vector(ref, "reference"), warnings,
                            "g-rank");
}

// ------------------------------------------------------ slice-level metrics

inline constexpr int kSlicesPerDay = 48;
inline constexpr int kSliceMinutes = 30;

using DaySlices = std::array<std::optional<Intention>, kSlicesPerDay>;

/// Labels each half-hour slice by the intention covering its midpoint;
/// uncovered slices stay empty.
inline DaySlices slice_day(const DayRecord& rec) {
  DaySlices slices{};
  for (const RawEvent& ev : rec.events) {
    const auto intention = intention_from_label(ev.intention);
    if (!intention) throw MetricError("unknown intention label '" + ev.intention + "'");
    const TimeWindow w = window_of(ev);
    for (int k = 0; k < kSlicesPerDay; ++k) {
      const int midpoint = k * kSliceMinutes + kSliceMinutes / 2;
      if (midpoint >= w.start && midpoint < w.end) slices[k] = *intention;
    }
  }
  return slices;
}

struct SlicedDay {
  std::string persona_id;
  int day = 0;
  DaySlices slices{};
};

/// Per-slice majority vote across the days of one person; ties go to the
/// label seen on the most recent day.
inline DaySlices aggregate_week(std::span<const SlicedDay> days) {
  std::vector<const SlicedDay*> ordered;
  ordered.reserve(days.size());
  for (const SlicedDay& d : days) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const SlicedDay* a, const SlicedDay* b) { return a->day < b->day; });

  DaySlices out{};
  for (int k = 0; k < kSlicesPerDay; ++k) {
    std::map<int, int> votes;      // label key (-1 = uncovered) -> count
    std::map<int, int> last_seen;  // label key -> latest day index
    for (std::size_t d = 0; d < ordered.size(); ++d) {
      const auto& label_at = ordered[d]->slices[k];
      const int key = label_at ? static_cast<int>(*label_at) : -1;
      ++votes[key];
      last_seen[key] = static_cast<int>(d);
    }
    int best_key = -1;
    int best_votes = -1;
    int best_last = -1;
    for (const auto& [key, count] : votes) {
      const int last = last_seen[key];
      if (count > best_votes || (count == best_votes && last > best_last)) {
        best_key = key;
        best_votes = count;
        best_last = last;
      }
    }
    out[k] = best_key < 0 ? std::nullopt : std::optional<Intention>(static_cast<Intention>(best_key));
  }
  return out;
}

struct ItdErrResult {
  double value = 0.0;
  int matched_personas = 0;
  int skipped_personas = 0;
};

using PersonaAttributes = std::map<std::string, std::map<std::string, std::string>>;

/// Mean share of mismatching half-hour slices between each generated
/// persona's representative day and the representative day of the reference
/// group with identical profile attributes. Without attribute tables on both
/// sides, personas are matched by id instead.
inline ItdErrResult metric_itderr(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                                  const PersonaAttributes* gen_attrs = nullptr,
                                  const PersonaAttributes* ref_attrs = nullptr,
                                  std::vector<std::string>* warnings = nullptr) {
  const bool by_attributes =
      gen_attrs && ref_attrs && !gen_attrs->empty() && !ref_attrs->empty();

  const auto group_key = [&](const std::string& persona_id, const PersonaAttributes* attrs) {
    if (!by_attributes) return persona_id;
    const auto it = attrs->find(persona_id);
    if (it == attrs->end()) return std::string{};
    std::string key;
    for (const auto& [k, v] : it->second) key += k + "=" + v + ";";
    return key;
  };

  const auto slice_by_persona = [](std::span<const DayRecord> recs) {
    std::map<std::string, std::vector<SlicedDay>> out;
    for (const DayRecord& rec : recs) {
      out[rec.persona_id].push_back({rec.persona_id, rec.day, slice_day(rec)});
    }
    return out;
  };

  const auto gen_days = slice_by_persona(gen);
  const auto ref_days = slice_by_persona(ref);

  std::map<std::string, std::vector<SlicedDay>> ref_groups;
  for (const auto& [persona_id, days] : ref_days) {
    const std::string key = group_key(persona_id, ref_attrs);
    if (key.empty()) continue;
    auto& group = ref_groups[key];
    group.insert(group.end(), days.begin(), days.end());
  }

  ItdErrResult result;
  double total_error = 0.0;
  for (const auto& [persona_id, days] : gen_days) {
    const std::string key = group_key(persona_id, gen_attrs);
    const auto group = key.empty() ? ref_groups.end() : ref_groups.find(key);
    if (group == ref_groups.end()) {
      ++result.skipped_personas;
      continue;
    }
    const DaySlices rep_gen = aggregate_week(days);
    const DaySlices rep_ref = aggregate_week(group->second);
    int mismatches = 0;
    for (int k = 0; k < kSlicesPerDay; ++k) {
      if (rep_gen[k] != rep_ref[k]) ++mismatches;
    }
    total_error += static_cast<double>(mismatches) / kSlicesPerDay;
    ++result.matched_personas;
  }
  if (result.skipped_personas > 0 && warnings) {
    warnings->push_back("itdErr: skipped " + std::to_string(result.skipped_personas) +
                        " generated personas with no matching reference group");
  }
  result.value = result.matched_personas > 0 ? total_error / result.matched_personas : 0.0;
  return result;
}

// ----------------------------------------------------------- itdType metric

/// Share of total duration per intention category (10-vector), compared by
/// JSD.
inline double metric_itdtype(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                             std::vector<std::string>* warnings = nullptr) {
  const auto durations = [](std::span<const DayRecord> recs) {
    std::vector<double> minutes(kIntentionCount, 0.0);
    for (const DayRecord& rec : recs) {
      for (const RawEvent& ev : rec.events) {
        const auto intention = intention_from_label(ev.intention);
        if (!intention) throw MetricError("unknown intention label '" + ev.intention + "'");
        minutes[static_cast<int>(*intention)] += window_of(ev).duration();
      }
    }
    return minutes;
  };
  return detail::jsd_counts(durations(gen), durations(ref), warnings, "itdType");
}

// ------------------------------------------------------- aggregated metrics

namespace detail {

inline std::map<int, double> cell_visits(std::span<const DayRecord> recs, const GridSpec& grid) {
  std::map<int, double> visits;
  for (const DayRecord& rec : recs) {
    for (const RawEvent& ev : rec.events) {
      if (ev.lat && ev.lon) visits[grid.cell_of({*ev.lat, *ev.lon})] += 1.0;
    }
  }
  return visits;
}

inline std::pair<std::vector<double>, std::vector<double>> aligned_counts(
    const std::map<int, double>& a, const std::map<int, double>& b) {
  std::set<int> keys;
  for (const auto& [k, _] : a) keys.insert(k);
  for (const auto& [k, _] : b) keys.insert(k);
  std::vector<double> va, vb;
  va.reserve(keys.size());
  vb.reserve(keys.size());
  for (int k : keys) {
    const auto ia = a.find(k);
    const auto ib = b.find(k);
    va.push_back(ia == a.end() ? 0.0 : ia->second);
    vb.push_back(ib == b.end() ? 0.0 : ib->second);
  }
  return {std::move(va), std::move(vb)};
}

}  // namespace detail

inline double metric_locfreq(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                             const GridSpec& grid, std::vector<std::string>* warnings = nullptr) {
  const auto [g, r] =
      detail::aligned_counts(detail::cell_visits(gen, grid), detail::cell_visits(ref, grid));
  return detail::jsd_counts(g, r, warnings, "locfreq");
}

// Row-stochastic transfer probabilities between grid cells, built from
// consecutive located events. Stored sparse; absent entries are zero.
struct OdMatrix {
  int n_cells = 0;
  std::map<std::pair<int, int>, double> probs;

  static OdMatrix build(std::span<const DayRecord> recs, const GridSpec& grid) {
    std::map<std::pair<int, int>, double> counts;
    std::map<int, double> row_totals;
    for (const DayRecord& rec : recs) {
      int previous = -1;
      for (const RawEvent& ev : rec.events) {
        if (!ev.lat || !ev.lon) continue;
        const int cell = grid.cell_of({*ev.lat, *ev.lon});
        if (previous >= 0) {
          counts[{previous, cell}] += 1.0;
          row_totals[previous] += 1.0;
        }
        previous = cell;
      }
    }
    OdMatrix m;
    m.n_cells = grid.n_cells();
    for (const auto& [key, count] : counts) {
      m.probs[key] = count / row_totals[key.first];
    }
    return m;
  }
};

/// Mean squared difference over all n_cells^2 entries of the two matrices.
inline double od_mse(const OdMatrix& a, const OdMatrix& b) {
  if (a.n_cells != b.n_cells) throw MetricError("OD matrices built over different grids");
  if (a.n_cells == 0) return 0.0;
  std::set<std::pair<int, int>> keys;
  for (const auto& [k, _] : a.probs) keys.insert(k);
  for (const auto& [k, _] : b.probs) keys.insert(k);
  double sum_sq = 0.0;
  for (const auto& key : keys) {
    const auto ia = a.probs.find(key);
    const auto ib = b.probs.find(key);
    const double va = ia == a.probs.end() ? 0.0 : ia->second;
    const double vb = ib == b.probs.end() ? 0.0 : ib->second;
    sum_sq += (va - vb) * (va - vb);
  }
  const double n = static_cast<double>(a.n_cells) * static_cast<double>(a.n_cells);
  return sum_sq / n;
}

inline double metric_odsim(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                           const GridSpec& grid) {
  return od_mse(OdMatrix::build(gen, grid), OdMatrix::build(ref, grid));
}

// -------------------------------------------------------------- uniqueness

struct UniquenessResult {
  double mean_overlap = 0.0;
  double max_overlap = 0.0;  // mean over generated days of the closest training day
};

/// Share of identical half-hour intention slices between generated and
/// training days; uncovered-on-both-sides counts as identical.
inline UniquenessResult uniqueness_overlap(std::span<const DayRecord> gen,
                                           std::span<const DayRecord> train) {
  std::vector<DaySlices> g, t;
  g.reserve(gen.size());
  t.reserve(train.size());
  for (const DayRecord& rec : gen) g.push_back(slice_day(rec));
  for (const DayRecord& rec : train) t.push_back(slice_day(rec));
  if (g.empty() || t.empty()) return {};

  double pair_sum = 0.0;
  double max_sum = 0.0;
  for (const DaySlices& gs : g) {
    double best = 0.0;
    for (const DaySlices& ts : t) {
      int same = 0;
      for (int k = 0; k < kSlicesPerDay; ++k) {
        if (gs[k] == ts[k]) ++same;
      }
      const double overlap = static_cast<double>(same) / kSlicesPerDay;
      pair_sum += overlap;
      best = std::max(best, overlap);
    }
    max_sum += best;
  }
  return {pair_sum / (static_cast<double>(g.size()) * t.size()), max_sum / g.size()};
}

// ------------------------------------------------------------ heatmap grid

/// CSV of row,col,gen_freq,ref_freq,diff over every visited cell, row-major.
/// Each frequency column sums to 1 when that dataset has any visits.
inline void export_heatmap_grid(std::span<const DayRecord> gen, std::span<const DayRecord> ref,
                                const GridSpec& grid, const std::filesystem::path& path) {
  const auto normalize = [](std::map<int, double> visits) {
    double total = 0.0;
    for (const auto& [_, v] : visits) total += v;
    if (total > 0.0) {
      for (auto& [_, v] : visits) v /= total;
    }
    return visits;
  };
  const auto g = normalize(detail::cell_visits(gen, grid));
  const auto r = normalize(detail::cell_visits(ref, grid));
  std::set<int> cells;
  for (const auto& [k, _] : g) cells.insert(k);
  for (const auto& [k, _] : r) cells.insert(k);

  std::string out = "row,col,gen_freq,ref_freq,diff\n";
  char buf[128];
  for (int cell : cells) {
    const auto ig = g.find(cell);
    const auto ir = r.find(cell);
    const double fg = ig == g.end() ? 0.0 : ig->second;
    const double fr = ir == r.end() ? 0.0 : ir->second;
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g\n", cell / grid.cols, cell % grid.cols,
                  fg, fr, fg - fr);
    out += buf;
  }
  atomic_write(path, out);
}

// -------------------------------------------------------------- full report

struct DatasetFingerprint {
  long long records = 0;
  long long personas = 0;
  long long events = 0;
  long long located_events = 0;
  int day_min = 0;
  int day_max = 0;
};

inline DatasetFingerprint fingerprint(std::span<const DayRecord> recs) {
  DatasetFingerprint fp;
  std::set<std::string> personas;
  bool first = true;
  for (const DayRecord& rec : recs) {
    ++fp.records;
    personas.insert(rec.persona_id);
    fp.events += static_cast<long long>(rec.events.size());
    for (const RawEvent& ev : rec.events) {
      if (ev.lat && ev.lon) ++fp.located_events;
    }
    if (first || rec.day < fp.day_min) fp.day_min = rec.day;
    if (first || rec.day > fp.day_max) fp.day_max = rec.day;
    first = false;
  }
  fp.personas = static_cast<long long>(personas.size());
  return fp;
}

struct MetricReport {
  double radius = 0.0;
  double dayloc = 0.0;
  double itdnum = 0.0;
  double grank = 0.0;
  double itderr = 0.0;
  double itdtype = 0.0;
  double locfreq = 0.0;
  double odsim = 0.0;
  UniquenessResult uniqueness;
  int itderr_matched = 0;
  int itderr_skipped = 0;

  GridSpec grid;
  BinningConfig bins;
  DatasetFingerprint gen_fp;
  DatasetFingerprint ref_fp;
  std::vector<std::string> warnings;
};

inline MetricReport evaluate_datasets(std::span<const DayRecord> gen,
                                      std::span<const DayRecord> ref, const GridSpec& grid,
                                      const BinningConfig& bins = {},
                                      const PersonaAttributes* gen_attrs = nullptr,
                                      const PersonaAttributes* ref_attrs = nullptr) {
  MetricReport report;
  report.grid = grid;
  report.bins = bins;
  report.gen_fp = fingerprint(gen);
  report.ref_fp = fingerprint(ref);
  report.radius = metric_radius(gen, ref, bins, &report.warnings);
  report.dayloc = metric_dayloc(gen, ref, &grid, bins, &report.warnings);
  report.itdnum = metric_itdnum(gen, ref, bins, &report.warnings);
  report.grank = metric_grank(gen, ref, &grid, &report.warnings);
  const ItdErrResult itderr = metric_itderr(gen, ref, gen_attrs, ref_attrs, &report.warnings);
  report.itderr = itderr.value;
  report.itderr_matched = itderr.matched_personas;
  report.itderr_skipped = itderr.skipped_personas;
  report.itdtype = metric_itdtype(gen, ref, &report.warnings);
  report.locfreq = metric_locfreq(gen, ref, grid, &report.warnings);
  report.odsim = metric_odsim(gen, ref, grid);
  report.uniqueness = uniqueness_overlap(gen, ref);
  return report;
}

inline Json to_json(const MetricReport& r) {
  return Json{
      {"metrics",
       Json{{"radius", r.radius},
            {"dayloc", r.dayloc},
            {"itdNum", r.itdnum},
            {"g_rank", r.grank},
            {"itdErr", r.itderr},
            {"itdType", r.itdtype},
            {"locfreq", r.locfreq},
            {"odSim", r.odsim},
            {"uniqueness", Json{{"mean_overlap", r.uniqueness.mean_overlap},
                                {"max_overlap", r.uniqueness.max_overlap}}}}},
      {"config", Json{{"grid",
                       Json{{"cell_size_km", r.grid.cell_size_km},
                            {"rows", r.grid.rows},
                            {"cols", r.grid.cols},
                            {"lat_min", r.grid.box.lat_min},
                            {"lat_max", r.grid.box.lat_max},
                            {"lon_min", r.grid.box.lon_min},
                            {"lon_max", r.grid.box.lon_max}}},
                      {"radius_bin_km", r.bins.radius_bin_km},
                      {"radius_max_km", r.bins.radius_max_km},
                      {"count_support", r.bins.count_support},
                      {"slice_minutes", kSliceMinutes},
                      {"grank_mode", "rank_aligned"},
                      {"itderr_matched", r.itderr_matched},
                      {"itderr_skipped", r.itderr_skipped}}},
      {"fingerprints",
       Json{{"gen", Json{{"records", r.gen_fp.records},
                         {"personas", r.gen_fp.personas},
                         {"events", r.gen_fp.events},
                         {"located_events", r.gen_fp.located_events},
                         {"day_min", r.gen_fp.day_min},
                         {"day_max", r.gen_fp.day_max}}},
            {"ref", Json{{"records", r.ref_fp.records},
                         {"personas", r.ref_fp.personas},
                         {"events", r.ref_fp.events},
                         {"located_events", r.ref_fp.located_events},
                         {"day_min", r.ref_fp.day_min},
                         {"day_max", r.ref_fp.day_max}}}}},
      {"warnings", r.warnings}};
}

}  // namespace copb
