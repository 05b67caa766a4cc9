#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "copb/core.hpp"

// JSON Lines readers/writers for the on-disk formats: per-day event records
// (intention-only or grounded), personas, and generic line files. Writers go
// through a temp file plus rename so partial output never lands under the
// final name.

namespace copb {

using Json = nlohmann::json;

// ------------------------------------------------------------- file helpers

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string buf;
  for (const Json& j : records) {
    buf += j.dump();
    buf += '\n';
  }
  atomic_write(path, buf);
}

// ------------------------------------------------------------- day records

inline Json to_json(const RawEvent& ev) {
  Json j{{"start", ev.start}, {"end", ev.end}, {"intention", ev.intention}};
  if (ev.poi_id) j["poi_id"] = *ev.poi_id;
  if (ev.lat) j["lat"] = *ev.lat;
  if (ev.lon) j["lon"] = *ev.lon;
  return j;
}

inline Json to_json(const DayRecord& rec) {
  Json events = Json::array();
  for (const RawEvent& ev : rec.events) events.push_back(to_json(ev));
  Json j{{"persona_id", rec.persona_id}, {"day", rec.day}, {"events", std::move(events)}};
  if (rec.cap) j["cap"] = *rec.cap;
  return j;
}

inline DayRecord day_record_from_json(const Json& j) {
  DayRecord rec;
  rec.persona_id = j.at("persona_id").get<std::string>();
  rec.day = j.at("day").get<int>();
  if (j.contains("cap")) rec.cap = j.at("cap").get<int>();
  for (const Json& e : j.at("events")) {
    RawEvent ev;
    ev.start = e.at("start").get<std::string>();
    ev.end = e.at("end").get<std::string>();
    ev.intention = e.at("intention").get<std::string>();
    if (e.contains("poi_id")) ev.poi_id = e.at("poi_id").get<std::string>();
    if (e.contains("lat")) ev.lat = e.at("lat").get<double>();
    if (e.contains("lon")) ev.lon = e.at("lon").get<double>();
    rec.events.push_back(std::move(ev));
  }
  return rec;
}

inline std::vector<DayRecord> read_day_records(const std::filesystem::path& path) {
  std::vector<DayRecord> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(day_record_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void write_day_records(const std::filesystem::path& path, const std::vector<DayRecord>& recs) {
  std::vector<Json> lines;
  lines.reserve(recs.size());
  for (const DayRecord& r : recs) lines.push_back(to_json(r));
  write_jsonl(path, lines);
}

// ------------------------------------------------- typed <-> record bridges

inline DayRecord to_record(const IntentionSequence& seq) {
  DayRecord rec{seq.persona_id, seq.day_index, {}, seq.cap};
  for (const IntentionEvent& ev : seq.events) {
    const TimeWindow& w = ev.window;
    rec.events.push_back(RawEvent{format_time_window(w).substr(1, 5),
                                  format_time_window(w).substr(8, 5),
                                  std::string(label(ev.intention)),
                                  std::nullopt, std::nullopt, std::nullopt});
  }
  return rec;
}

inline DayRecord to_record(const Trajectory& traj) {
  DayRecord rec{traj.persona_id, traj.day_index, {}, std::nullopt};
  for (const TrajectoryPoint& pt : traj.points) {
    const std::string formatted = format_time_window(pt.window);
    rec.events.push_back(RawEvent{formatted.substr(1, 5), formatted.substr(8, 5),
                                  std::string(label(pt.intention)), pt.poi_id,
                                  pt.location.lat, pt.location.lon});
  }
  return rec;
}

inline TimeWindow window_of(const RawEvent& ev) {
  std::string err;
  const auto start = detail::parse_clock(detail::trim(ev.start), &err);
  const auto end = detail::parse_clock(detail::trim(ev.end), &err);
  if (!start || !end) throw ParseError("bad event window: " + err);
  return TimeWindow{*start, *end};
}

inline IntentionSequence to_sequence(const DayRecord& rec) {
  IntentionSequence seq{rec.persona_id, rec.day,
                        {}, rec.cap.value_or(std::max<int>(1, rec.events.size()))};
  for (const RawEvent& ev : rec.events) {
    const auto intention = intention_from_label(ev.intention);
    if (!intention) throw ParseError("unknown intention label '" + ev.intention + "'");
    seq.events.push_back({window_of(ev), *intention});
  }
  return seq;
}

inline Trajectory to_trajectory(const DayRecord& rec) {
  Trajectory traj{rec.persona_id, rec.day, {}};
  for (const RawEvent& ev : rec.events) {
    const auto intention = intention_from_label(ev.intention);
    if (!intention) throw ParseError("unknown intention label '" + ev.intention + "'");
    if (!ev.poi_id || !ev.lat || !ev.lon) {
      throw ParseError("event lacks poi_id/lat/lon, not a grounded trajectory");
    }
    traj.points.push_back({window_of(ev), *ev.poi_id, GeoPoint{*ev.lat, *ev.lon}, *intention});
  }
  return traj;
}

// ----------------------------------------------------------------- personas

inline Json to_json(const Persona& p) {
  Json attrs = Json::object();
  for (const auto& [k, v] : p.attributes) attrs[k] = v;
  Json j{{"id", p.id},
         {"attributes", std::move(attrs)},
         {"home", Json{{"lat", p.home.lat}, {"lon", p.home.lon}}},
         {"home_region", p.home_region}};
  if (p.work) j["work"] = Json{{"lat", p.work->lat}, {"lon", p.work->lon}};
  return j;
}

inline Persona persona_from_json(const Json& j) {
  Persona p;
  p.id = j.at("id").get<std::string>();
  for (const auto& [k, v] : j.at("attributes").items()) {
    p.attributes[k] = v.get<std::string>();
  }
  p.home_region = j.value("home_region", std::string{});
  p.home = GeoPoint{j.at("home").at("lat").get<double>(), j.at("home").at("lon").get<double>()};
  if (j.contains("work")) {
    p.work = GeoPoint{j.at("work").at("lat").get<double>(), j.at("work").at("lon").get<double>()};
  }
  return p;
}

inline std::vector<Persona> read_personas(const std::filesystem::path& path) {
  std::vector<Persona> out;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(persona_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void write_personas(const std::filesystem::path& path, const std::vector<Persona>& personas) {
  std::vector<Json> lines;
  lines.reserve(personas.size());
  for (const Persona& p : personas) lines.push_back(to_json(p));
  write_jsonl(path, lines);
}

}  // namespace copb
