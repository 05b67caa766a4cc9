#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Core domain types for mobility behaviour generation: geographic points,
// minute-of-day time windows, the closed intention vocabulary, persona
// profiles and the planned-behaviour context, plus sequence validation.

namespace copb {

// ------------------------------------------------------------------ errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// ---------------------------------------------------------------- geometry

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
// Length of one degree of latitude (and of longitude at the equator).
inline constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

struct GeoPoint {
  double lat = 0.0;  // WGS84 degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool valid() const {
    return std::isfinite(lat) && std::isfinite(lon) &&
           lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance in km on a sphere of radius 6371.0 km.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlam = (b.lon - a.lon) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// -------------------------------------------------------------------- time

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kLastMinute = 1439;

// Half-open [start, end) in minutes of day; zero-length windows are legal.
struct TimeWindow {
  int start = 0;
  int end = 0;

  bool valid() const { return start >= 0 && start <= end && end <= kLastMinute; }
  int duration() const { return end - start; }
  bool overlaps(const TimeWindow& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

std::string format_time_window(const TimeWindow& w);
std::optional<TimeWindow> try_parse_time_window(std::string_view text, std::string* err = nullptr);
TimeWindow parse_time_window(std::string_view text);

/// Splits a possibly midnight-crossing [start, end] pair at the day
/// boundary. end < start means the activity runs into the next day.
inline std::pair<TimeWindow, std::optional<TimeWindow>> split_crossing_midnight(int start, int end) {
  if (end >= start) return {TimeWindow{start, end}, std::nullopt};
  return {TimeWindow{start, kLastMinute}, TimeWindow{0, end}};
}

// -------------------------------------------------------------- intentions

enum class Intention : std::uint8_t {
  GoToWork,
  GoHome,
  Eat,
  DoShopping,
  DoSports,
  Excursion,
  Leisure,
  Sleep,
  MedicalTreatment,
  Trivialities,
};

inline constexpr int kIntentionCount = 10;

inline constexpr std::array<std::string_view, kIntentionCount> kIntentionLabels = {
    "go to work",
    "go home",
    "eat",
    "do shopping",
    "do sports",
    "excursion",
    "leisure or entertainment",
    "sleep",
    "medical treatment",
    "handle the trivialities of life",
};

constexpr std::string_view label(Intention e) {
  return kIntentionLabels[static_cast<std::size_t>(e)];
}

inline std::array<Intention, kIntentionCount> all_intentions() {
  std::array<Intention, kIntentionCount> out{};
  for (int i = 0; i < kIntentionCount; ++i) out[i] = static_cast<Intention>(i);
  return out;
}

/// Lowercase, trim, collapse internal whitespace. No fuzzy matching beyond
/// that: the vocabulary is closed and parsing must stay deterministic.
inline std::string normalize_label(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

inline std::optional<Intention> intention_from_label(std::string_view text) {
  const std::string norm = normalize_label(text);
  for (int i = 0; i < kIntentionCount; ++i) {
    if (norm == kIntentionLabels[i]) return static_cast<Intention>(i);
  }
  return std::nullopt;
}

// ------------------------------------------------------------ domain types

struct IntentionEvent {
  TimeWindow window;
  Intention intention = Intention::Sleep;
  friend bool operator==(const IntentionEvent&, const IntentionEvent&) = default;
};

struct IntentionSequence {
  std::string persona_id;
  int day_index = 0;
  std::vector<IntentionEvent> events;
  int cap = kIntentionCount;  // sampled per-day limit on |events|
};

struct TrajectoryPoint {
  TimeWindow window;
  std::string poi_id;
  GeoPoint location;
  Intention intention = Intention::Sleep;
};

struct Trajectory {
  std::string persona_id;
  int day_index = 0;
  std::vector<TrajectoryPoint> points;
};

struct Persona {
  std::string id;
  std::map<std::string, std::string> attributes;  // gender, occupation, ...
  std::string home_region;
  GeoPoint home;
  std::optional<GeoPoint> work;
};

// Planned-behaviour state threaded through generation: elicited preference
// statements, routine statements, and the per-step likelihood map.
struct TpbContext {
  std::vector<std::string> attitude;
  std::vector<std::string> routine;
  std::map<Intention, double> pbc;  // values in [0, 1]

  static std::map<Intention, double> uniform_pbc(double value = 0.5) {
    std::map<Intention, double> m;
    for (Intention e : all_intentions()) m[e] = value;
    return m;
  }
};

// -------------------------------------------------------------- validation

// Untyped per-day record, as read from or written to JSON Lines files.
// Events without poi_id/lat/lon are intention-only.
struct RawEvent {
  std::string start;
  std::string end;
  std::string intention;
  std::optional<std::string> poi_id;
  std::optional<double> lat;
  std::optional<double> lon;
};

struct DayRecord {
  std::string persona_id;
  int day = 0;
  std::vector<RawEvent> events;
  std::optional<int> cap;
};

struct Violation {
  enum class Kind { Window, Order, Overlap, Label, Cap, Location };
  Kind kind = Kind::Window;
  std::size_t event_index = 0;
  std::string message;
};

std::vector<Violation> validate_sequence(const DayRecord& rec);
std::vector<Violation> validate_sequence(const IntentionSequence& seq);
std::vector<Violation> validate_sequence(const Trajectory& traj);

// ------------------------------------------------------------------- rng

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built directly from the 53 top bits, so results
/// do not depend on the standard library's distribution implementation.
inline double rand_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Per-persona / per-replica stream seed: global_seed ^ hash(persona) ^ replica mix.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view persona_id,
                                 std::uint64_t replica = 0) {
  return global_seed ^ fnv1a64(persona_id) ^ (0x9e3779b97f4a7c15ULL * (replica + 1));
}

// ---------------------------------------------------------- implementation

inline std::string format_time_window(const TimeWindow& w) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "(%02d:%02d, %02d:%02d)", w.start / 60, w.start % 60,
                w.end / 60, w.end % 60);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<int> parse_clock(std::string_view token, std::string* err) {
  const auto colon = token.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 >= token.size()) {
    if (err) *err = "malformed clock token '" + std::string(token) + "'";
    return std::nullopt;
  }
  const auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
      return std::isdigit(c) != 0;
    });
  };
  const std::string_view hh = token.substr(0, colon);
  const std::string_view mm = token.substr(colon + 1);
  if (!digits(hh) || !digits(mm) || hh.size() > 2 || mm.size() != 2) {
    if (err) *err = "malformed clock token '" + std::string(token) + "'";
    return std::nullopt;
  }
  const int hours = std::stoi(std::string(hh));
  const int minutes = std::stoi(std::string(mm));
  if (hours > 23) {
    if (err) *err = "invalid hours '" + std::string(hh) + "' in '" + std::string(token) + "'";
    return std::nullopt;
  }
  if (minutes > 59) {
    if (err) *err = "invalid minutes '" + std::string(mm) + "' in '" + std::string(token) + "'";
    return std::nullopt;
  }
  return hours * 60 + minutes;
}

}  // namespace detail

inline std::optional<TimeWindow> try_parse_time_window(std::string_view text, std::string* err) {
  std::string_view s = detail::trim(text);
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
    if (err) *err = "expected \"(HH:MM, HH:MM)\", got '" + std::string(text) + "'";
    return std::nullopt;
  }
  s = s.substr(1, s.size() - 2);
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    if (err) *err = "missing ',' in '" + std::string(text) + "'";
    return std::nullopt;
  }
  const auto start = detail::parse_clock(detail::trim(s.substr(0, comma)), err);
  if (!start) return std::nullopt;
  const auto end = detail::parse_clock(detail::trim(s.substr(comma + 1)), err);
  if (!end) return std::nullopt;
  const TimeWindow w{*start, *end};
  if (!w.valid()) {
    if (err) *err = "window end precedes start in '" + std::string(text) + "'";
    return std::nullopt;
  }
  return w;
}

inline TimeWindow parse_time_window(std::string_view text) {
  std::string err;
  if (auto w = try_parse_time_window(text, &err)) return *w;
  throw ParseError(err);
}

namespace detail {

// Shared ordering/overlap/cap checks over (index -> TimeWindow) access.
template <typename WindowAt>
void check_sequence_shape(std::size_t n, WindowAt&& window_at, std::optional<int> cap,
                          std::vector<Violation>& out) {
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const TimeWindow a = window_at(i);
    const TimeWindow b = window_at(i + 1);
    if (a.overlaps(b)) {
      out.push_back({Violation::Kind::Overlap, i + 1,
                     "event " + std::to_string(i + 1) + " overlaps event " + std::to_string(i)});
    } else if (b.start < a.end) {
      out.push_back({Violation::Kind::Order, i + 1,
                     "event " + std::to_string(i + 1) + " starts before event " +
                         std::to_string(i) + " ends"});
    }
  }
  if (cap && static_cast<int>(n) > *cap) {
    out.push_back({Violation::Kind::Cap, n - 1,
                   "sequence has " + std::to_string(n) + " events, cap is " + std::to_string(*cap)});
  }
}

}  // namespace detail

inline std::vector<Violation> validate_sequence(const DayRecord& rec) {
  std::vector<Violation> out;
  std::vector<TimeWindow> windows(rec.events.size());
  bool windows_ok = true;
  for (std::size_t i = 0; i < rec.events.size(); ++i) {
    const RawEvent& ev = rec.events[i];
    std::string err;
    const auto start = detail::parse_clock(detail::trim(ev.start), &err);
    const auto end = start ? detail::parse_clock(detail::trim(ev.end), &err) : std::nullopt;
    if (!start || !end || *end < *start) {
      out.push_back({Violation::Kind::Window, i,
                     !start || !end ? err : "window end precedes start at event " + std::to_string(i)});
      windows_ok = false;
      continue;
    }
    windows[i] = TimeWindow{*start, *end};
    if (!intention_from_label(ev.intention)) {
      out.push_back({Violation::Kind::Label, i,
                     "unknown intention label '" + ev.intention + "'"});
    }
    const bool has_lat = ev.lat.has_value();
    const bool has_lon = ev.lon.has_value();
    if (has_lat != has_lon ||
        (has_lat && !GeoPoint{*ev.lat, *ev.lon}.valid())) {
      out.push_back({Violation::Kind::Location, i,
                     "invalid location at event " + std::to_string(i)});
    }
  }
  if (windows_ok) {
    detail::check_sequence_shape(
        rec.events.size(), [&](std::size_t i) { return windows[i]; }, rec.cap, out);
  }
  return out;
}

inline std::vector<Violation> validate_sequence(const IntentionSequence& seq) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    if (!seq.events[i].window.valid()) {
      out.push_back({Violation::Kind::Window, i, "invalid window at event " + std::to_string(i)});
    }
  }
  detail::check_sequence_shape(
      seq.events.size(), [&](std::size_t i) { return seq.events[i].window; }, seq.cap, out);
  return out;
}

inline std::vector<Violation> validate_sequence(const Trajectory& traj) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    if (!traj.points[i].window.valid()) {
      out.push_back({Violation::Kind::Window, i, "invalid window at point " + std::to_string(i)});
    }
    if (!traj.points[i].location.valid()) {
      out.push_back({Violation::Kind::Location, i, "invalid location at point " + std::to_string(i)});
    }
  }
  detail::check_sequence_shape(
      traj.points.size(), [&](std::size_t i) { return traj.points[i].window; }, std::nullopt, out);
  return out;
}

}  // namespace copb
