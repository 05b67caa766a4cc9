#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "copb/backend.hpp"
#include "copb/core.hpp"
#include "copb/io.hpp"

// Step-by-step intention generation driven by the theory of planned
// behaviour: elicit per-persona preferences (attitude) and routines once,
// then per step infer a perceived-likelihood map, decide the next intention
// and ask for its time window. Every successful exchange is logged with a
// question tag so dialogues can later be replayed into fine-tuning data.

namespace copb {

struct WorkflowError : Error { using Error::Error; };

// Question tags used in dialogue logs: a=attitude, b=routine, c=perceived
// likelihood, d=intention decision, t=time assignment.
inline constexpr std::string_view kTagAttitude = "a";
inline constexpr std::string_view kTagRoutine = "b";
inline constexpr std::string_view kTagPbc = "c";
inline constexpr std::string_view kTagIntention = "d";
inline constexpr std::string_view kTagTime = "t";

// A day is considered covered once the last event ends at or past 23:30.
inline constexpr int kDayCoveredMinute = 23 * 60 + 30;

// ---------------------------------------------------------------- templates

struct PromptTemplates {
  std::string attitude;
  std::string routine;
  std::string pbc;
  std::string intention;
  std::string time;
};

/// Substitutes {name} placeholders; unknown placeholders are left verbatim.
inline std::string render_template(std::string_view tpl,
                                   const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    const auto close = tpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    out.append(tpl.substr(pos, open - pos));
    const std::string name(tpl.substr(open + 1, close - open - 1));
    const auto it = vars.find(name);
    if (it != vars.end()) {
      out.append(it->second);
    } else {
      out.append(tpl.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  return out;
}

inline void validate_templates(const PromptTemplates& t) {
  const auto require = [](std::string_view tpl, std::string_view tpl_name,
                          std::initializer_list<std::string_view> names) {
    for (std::string_view n : names) {
      const std::string needle = "{" + std::string(n) + "}";
      if (tpl.find(needle) == std::string_view::npos) {
        throw ConfigError(std::string(tpl_name) + " template is missing placeholder " + needle);
      }
    }
  };
  require(t.attitude, "attitude", {"profile"});
  require(t.routine, "routine", {"profile"});
  require(t.pbc, "pbc", {"profile", "history"});
  require(t.intention, "intention", {"history", "pbc"});
  require(t.time, "time", {"history", "intention"});
}

inline PromptTemplates load_templates(const std::filesystem::path& dir) {
  PromptTemplates t{read_text_file(dir / "attitude.txt"), read_text_file(dir / "routine.txt"),
                    read_text_file(dir / "pbc.txt"), read_text_file(dir / "intention.txt"),
                    read_text_file(dir / "time.txt")};
  validate_templates(t);
  return t;
}

// ----------------------------------------------------------------- few-shot

struct FewShotEvent {
  std::string start;
  std::string end;
  std::string intention;
  std::string rationale;
};

struct FewShotExample {
  std::string profile;
  std::vector<FewShotEvent> events;
};

struct FewShotBank {
  std::vector<FewShotExample> examples;
};

inline FewShotBank load_fewshot(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  FewShotBank bank;
  try {
    for (const Json& ex : j.at("examples")) {
      FewShotExample e;
      e.profile = ex.value("profile", std::string{});
      DayRecord check{"fewshot", 0, {}, std::nullopt};
      for (const Json& ev : ex.at("events")) {
        FewShotEvent fe{ev.at("start").get<std::string>(), ev.at("end").get<std::string>(),
                        ev.at("intention").get<std::string>(),
                        ev.value("rationale", std::string{})};
        check.events.push_back(RawEvent{fe.start, fe.end, fe.intention, {}, {}, {}});
        e.events.push_back(std::move(fe));
      }
      const auto violations = validate_sequence(check);
      if (!violations.empty()) {
        throw ConfigError("few-shot example " + std::to_string(bank.examples.size()) +
                          " is invalid: " + violations.front().message);
      }
      bank.examples.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (bank.examples.empty()) throw ConfigError("few-shot bank is empty: " + path.string());
  return bank;
}

inline std::string render_fewshot(const FewShotBank& bank) {
  std::string out;
  int n = 0;
  for (const FewShotExample& ex : bank.examples) {
    out += "Example " + std::to_string(++n);
    if (!ex.profile.empty()) out += " (" + ex.profile + ")";
    out += ":\n";
    for (const FewShotEvent& ev : ex.events) {
      out += "  [\"(" + ev.start + ", " + ev.end + ")\", \"" + ev.intention + "\"]";
      if (!ev.rationale.empty()) out += "  // " + ev.rationale;
      out += "\n";
    }
  }
  return out;
}

// ----------------------------------------------------------------- ablation

struct AblationFlags {
  bool use_attitude = true;
  bool use_norms = true;
  bool use_pbc = true;
};

// -------------------------------------------------------- intention budget

// Empirical distribution of intentions-per-day; the per-day cap is sampled
// from it before generation starts.
struct IntentionCountDistribution {
  std::map<int, double> histogram;

  void validate() const {
    if (histogram.empty()) throw ConfigError("intention count distribution is empty");
    double sum = 0.0;
    for (const auto& [count, prob] : histogram) {
      if (count < 1) throw ConfigError("intention count must be >= 1");
      if (prob < 0.0) throw ConfigError("negative probability in intention count distribution");
      sum += prob;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("intention count probabilities sum to " + std::to_string(sum));
    }
  }
};

inline int sample_intention_cap(const IntentionCountDistribution& dist, Rng& rng) {
  dist.validate();
  const double u = rand_unit(rng);
  double acc = 0.0;
  int last = 1;
  for (const auto& [count, prob] : dist.histogram) {
    acc += prob;
    last = count;
    if (u < acc) return count;
  }
  return last;
}

inline IntentionCountDistribution load_intention_counts(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  IntentionCountDistribution dist;
  try {
    for (const auto& [key, value] : j.at("histogram").items()) {
      dist.histogram[std::stoi(key)] = value.get<double>();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  dist.validate();
  return dist;
}

// ------------------------------------------------------------- dialogue log

struct DialogueEntry {
  std::string persona_id;
  int day = 0;
  std::string tag;
  std::vector<ChatMessage> messages;  // prompt messages plus the assistant reply
  TokenUsage usage;
};

using DialogueLog = std::vector<DialogueEntry>;

inline Json to_json(const DialogueEntry& e) {
  Json msgs = Json::array();
  for (const ChatMessage& m : e.messages) {
    msgs.push_back(Json{{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  return Json{{"persona_id", e.persona_id},
              {"day", e.day},
              {"tag", e.tag},
              {"messages", std::move(msgs)},
              {"usage", Json{{"prompt_tokens", e.usage.prompt_tokens},
                             {"completion_tokens", e.usage.completion_tokens}}}};
}

inline DialogueEntry dialogue_entry_from_json(const Json& j) {
  DialogueEntry e;
  e.persona_id = j.at("persona_id").get<std::string>();
  e.day = j.at("day").get<int>();
  e.tag = j.at("tag").get<std::string>();
  for (const Json& m : j.at("messages")) {
    const auto role = role_from_name(m.at("role").get<std::string>());
    if (!role) throw ParseError("unknown role '" + m.at("role").get<std::string>() + "'");
    e.messages.push_back({*role, m.at("content").get<std::string>()});
  }
  e.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0LL);
  e.usage.completion_tokens = j.at("usage").value("completion_tokens", 0LL);
  return e;
}

inline void write_dialogue_log(const std::filesystem::path& path, const DialogueLog& log) {
  std::vector<Json> lines;
  lines.reserve(log.size());
  for (const DialogueEntry& e : log) lines.push_back(to_json(e));
  write_jsonl(path, lines);
}

inline DialogueLog read_dialogue_log(const std::filesystem::path& path) {
  DialogueLog log;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    try {
      log.push_back(dialogue_entry_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

// ------------------------------------------------------------ reply parsing

namespace detail {

/// Extracts the items of the first bracketed list in a reply, e.g.
/// "<Preference>: [a, b]" -> {"a", "b"}. Empty list is legal.
inline std::optional<std::vector<std::string>> parse_bracket_list(std::string_view text) {
  const auto open = text.find('[');
  if (open == std::string_view::npos) return std::nullopt;
  const auto close = text.find(']', open + 1);
  if (close == std::string_view::npos) return std::nullopt;
  std::vector<std::string> items;
  std::string_view inner = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos <= inner.size()) {
    auto comma = inner.find(',', pos);
    if (comma == std::string_view::npos) comma = inner.size();
    const std::string_view item = trim(inner.substr(pos, comma - pos));
    if (!item.empty()) items.emplace_back(item);
    pos = comma + 1;
  }
  return items;
}

inline std::optional<double> parse_likelihood_value(std::string_view token) {
  const std::string norm = normalize_label(token);
  if (norm == "low") return 0.2;
  if (norm == "medium") return 0.5;
  if (norm == "high") return 0.8;
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(norm), &used);
    if (used != norm.size()) return std::nullopt;
    return std::clamp(v, 0.0, 1.0);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Parses "[intention:likelihood, ...]" into a full 10-intention map.
/// Missing intentions default to 0.5; unknown labels are skipped.
inline std::optional<std::map<Intention, double>> parse_likelihood_map(std::string_view text) {
  const auto items = parse_bracket_list(text);
  if (!items) return std::nullopt;
  std::map<Intention, double> out = TpbContext::uniform_pbc();
  bool any = false;
  for (const std::string& item : *items) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) continue;
    const auto intention = intention_from_label(std::string_view(item).substr(0, colon));
    const auto value = parse_likelihood_value(std::string_view(item).substr(colon + 1));
    if (!intention || !value) continue;
    out[*intention] = *value;
    any = true;
  }
  if (!any) return std::nullopt;
  return out;
}

/// Finds the first "(HH:MM, HH:MM)" in free text.
inline std::optional<TimeWindow> find_time_window(std::string_view text) {
  std::size_t pos = 0;
  while ((pos = text.find('(', pos)) != std::string_view::npos) {
    const auto close = text.find(')', pos + 1);
    if (close == std::string_view::npos) return std::nullopt;
    if (auto w = try_parse_time_window(text.substr(pos, close - pos + 1))) return w;
    pos = close + 1;
  }
  return std::nullopt;
}

}  // namespace detail

// ------------------------------------------------------------ text renders

inline std::string render_profile(const Persona& p) {
  std::string out;
  for (const auto& [key, value] : p.attributes) {
    if (!out.empty()) out += "; ";
    out += key + ": " + value;
  }
  if (out.empty()) out = "no recorded attributes";
  return out;
}

inline std::string render_statements(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

inline std::string render_pbc(const std::map<Intention, double>& pbc) {
  std::string out = "[";
  bool first = true;
  for (Intention e : all_intentions()) {
    const auto it = pbc.find(e);
    if (it == pbc.end()) continue;
    if (!first) out += ", ";
    first = false;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", it->second);
    out += std::string(label(e)) + ":" + buf;
  }
  return out + "]";
}

inline std::string render_history(const IntentionSequence& seq, std::string_view carry = {}) {
  std::string out;
  if (!carry.empty()) {
    out += carry;
    out += "\n";
  }
  out += "[";
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    if (i) out += ", ";
    out += "[\"" + format_time_window(seq.events[i].window) + "\", \"" +
           std::string(label(seq.events[i].intention)) + "\"]";
  }
  return out + "]";
}

// ----------------------------------------------------------------- workflow

class Workflow {
 public:
  Workflow(ChatBackend& backend, PromptTemplates templates, FewShotBank bank,
           AblationFlags flags = {}, CompletionParams params = {}, int retry_budget = 3)
      : backend_(backend),
        templates_(std::move(templates)),
        bank_(std::move(bank)),
        flags_(flags),
        params_(std::move(params)),
        retry_budget_(retry_budget),
        fewshot_text_(render_fewshot(bank_)) {
    validate_templates(templates_);
  }

  const AblationFlags& flags() const { return flags_; }

  /// Extra variables merged into every prompt render (e.g. day_of_week).
  void set_extra_vars(std::map<std::string, std::string> vars) { extra_vars_ = std::move(vars); }

  /// Attitude and routine are static context: elicited on the persona's
  /// first day and reused verbatim for every later day.
  const TpbContext& context_for(const Persona& persona, DialogueLog& log, int day = 0) {
    {
      std::lock_guard lock(mutex_);
      if (const auto it = context_cache_.find(persona.id); it != context_cache_.end()) {
        return it->second;
      }
    }
    TpbContext ctx;
    ctx.attitude = query_attitude(persona, log, day);
    ctx.routine = query_routine(persona, log, day);
    ctx.pbc = TpbContext::uniform_pbc();
    std::lock_guard lock(mutex_);
    return context_cache_.emplace(persona.id, std::move(ctx)).first->second;
  }

  std::vector<std::string> query_attitude(const Persona& persona, DialogueLog& log, int day = 0) {
    if (!flags_.use_attitude) return {};
    if (persona.attributes.empty()) throw WorkflowError("persona has no attributes: " + persona.id);
    auto vars = base_vars(persona);
    return ask(persona, day, kTagAttitude, render_template(templates_.attitude, vars), log,
               [](std::string_view reply) { return detail::parse_bracket_list(reply); });
  }

  std::vector<std::string> query_routine(const Persona& persona, DialogueLog& log, int day = 0) {
    if (!flags_.use_norms) return {};
    auto vars = base_vars(persona);
    return ask(persona, day, kTagRoutine, render_template(templates_.routine, vars), log,
               [](std::string_view reply) { return detail::parse_bracket_list(reply); });
  }

  std::map<Intention, double> query_pbc(const Persona& persona, const TpbContext& ctx,
                                        const IntentionSequence& history, DialogueLog& log,
                                        std::string_view carry = {}) {
    if (!flags_.use_pbc) return TpbContext::uniform_pbc();
    auto vars = base_vars(persona);
    vars["attitude"] = render_statements(ctx.attitude);
    vars["routine"] = render_statements(ctx.routine);
    vars["history"] = render_history(history, carry);
    return ask(persona, history.day_index, kTagPbc, render_template(templates_.pbc, vars), log,
               [](std::string_view reply) { return detail::parse_likelihood_map(reply); });
  }

  Intention decide_next_intention(const Persona& persona, const TpbContext& ctx,
                                  const std::map<Intention, double>& pbc,
                                  const IntentionSequence& history, DialogueLog& log,
                                  std::string_view carry = {}) {
    if (static_cast<int>(history.events.size()) >= history.cap) {
      throw WorkflowError("intention cap already reached for " + persona.id);
    }
    auto vars = base_vars(persona);
    vars["attitude"] = render_statements(ctx.attitude);
    vars["routine"] = render_statements(ctx.routine);
    vars["pbc"] = render_pbc(pbc);
    vars["history"] = render_history(history, carry);
    return ask(persona, history.day_index, kTagIntention,
               render_template(templates_.intention, vars), log,
               [](std::string_view reply) { return intention_from_label(reply); });
  }

  TimeWindow assign_time(const Persona& persona, const IntentionSequence& history, Intention next,
                         DialogueLog& log, std::string_view carry = {}) {
    const int min_start = history.events.empty() ? 0 : history.events.back().window.end;
    auto vars = base_vars(persona);
    vars["history"] = render_history(history, carry);
    vars["intention"] = std::string(label(next));
    return ask(persona, history.day_index, kTagTime, render_template(templates_.time, vars), log,
               [min_start](std::string_view reply) -> std::optional<TimeWindow> {
                 const auto w = detail::find_time_window(reply);
                 if (!w || w->start < min_start) return std::nullopt;
                 return w;
               });
  }

  /// Runs the full decision chain for one persona-day. The attitude/routine
  /// exchanges happen at most once per persona; each step issues a
  /// perceived-likelihood query, an intention decision and a time inquiry.
  IntentionSequence generate_day(const Persona& persona, int day_index,
                                 const IntentionCountDistribution& dist, Rng& rng,
                                 DialogueLog& log, std::string_view carry = {}) {
    const int cap = sample_intention_cap(dist, rng);
    const TpbContext& ctx = context_for(persona, log, day_index);
    IntentionSequence seq{persona.id, day_index, {}, cap};
    while (static_cast<int>(seq.events.size()) < cap) {
      const auto pbc = query_pbc(persona, ctx, seq, log, carry);
      const Intention next = decide_next_intention(persona, ctx, pbc, seq, log, carry);
      const TimeWindow window = assign_time(persona, seq, next, log, carry);
      seq.events.push_back({window, next});
      if (window.end >= kDayCoveredMinute) break;
      // A sleep event after the day has started is treated as turning in.
      if (next == Intention::Sleep && seq.events.size() > 1) break;
    }
    const auto violations = validate_sequence(seq);
    if (!violations.empty()) {
      throw WorkflowError("generated day violates sequence invariants: " +
                          violations.front().message);
    }
    return seq;
  }

  /// Multi-day driver: shared cached attitude/routine, with each day's last
  /// event summarized into the next day's history.
  std::vector<IntentionSequence> generate_days(const Persona& persona, int n_days,
                                               const IntentionCountDistribution& dist,
                                               std::uint64_t global_seed, DialogueLog& log) {
    std::vector<IntentionSequence> out;
    std::string carry;
    for (int day = 0; day < n_days; ++day) {
      Rng rng(derive_seed(global_seed, persona.id, static_cast<std::uint64_t>(day)));
      out.push_back(generate_day(persona, day, dist, rng, log, carry));
      const IntentionSequence& seq = out.back();
      if (!seq.events.empty()) {
        const IntentionEvent& last = seq.events.back();
        carry = "Yesterday's last activity: " + std::string(label(last.intention)) +
                ", ending at " + format_time_window(last.window).substr(8, 5) + ".";
      }
    }
    return out;
  }

 private:
  std::map<std::string, std::string> base_vars(const Persona& persona) {
    std::map<std::string, std::string> vars = extra_vars_;
    vars["profile"] = render_profile(persona);
    vars["fewshot"] = fewshot_text_;
    vars["attitude"] = "[]";
    vars["routine"] = "[]";
    vars["pbc"] = "[]";
    vars["history"] = "[]";
    vars["intention"] = "";
    return vars;
  }

  int next_turn(const std::string& persona_id, std::string_view tag) {
    std::lock_guard lock(mutex_);
    return turns_[persona_id + "\x1f" + std::string(tag)]++;
  }

  // One tagged exchange with the retry budget applied to malformed replies.
  // Retries reuse the same (tag, persona, turn) key, so a scripted backend
  // answers them identically. Only the successful attempt is logged.
  template <typename ParseFn>
  auto ask(const Persona& persona, int day, std::string_view tag, std::string prompt,
           DialogueLog& log, ParseFn&& parse) ->
      typename std::invoke_result_t<ParseFn, std::string_view>::value_type {
    const RequestContext ctx{std::string(tag), persona.id, next_turn(persona.id, tag)};
    const std::vector<ChatMessage> messages{{Role::User, std::move(prompt)}};
    std::string last_reply;
    for (int attempt = 0; attempt <= retry_budget_; ++attempt) {
      const Completion completion = backend_.complete(messages, params_, ctx);
      last_reply = completion.text;
      if (auto parsed = parse(std::string_view(completion.text))) {
        DialogueEntry entry{persona.id, day, std::string(tag), messages, completion.usage};
        entry.messages.push_back({Role::Assistant, completion.text});
        log.push_back(std::move(entry));
        return *parsed;
      }
    }
    throw WorkflowError("unparseable '" + std::string(tag) + "' reply after " +
                        std::to_string(retry_budget_) + " retries: " + last_reply.substr(0, 200));
  }

  ChatBackend& backend_;
  PromptTemplates templates_;
  FewShotBank bank_;
  AblationFlags flags_;
  CompletionParams params_;
  int retry_budget_;
  std::string fewshot_text_;
  std::map<std::string, std::string> extra_vars_;
  std::map<std::string, TpbContext> context_cache_;
  std::map<std::string, int> turns_;
  std::mutex mutex_;
};

}  // namespace copb
