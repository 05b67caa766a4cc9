#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "copb/backend.hpp"
#include "copb/core.hpp"
#include "copb/io.hpp"
#include "copb/workflow.hpp"

// Turns logged generation dialogues into a chat-format fine-tuning dataset:
// a fixed number of examples per question type (attitude, routine, perceived
// likelihood, intention decision), sampled without replacement and stratified
// across personas.

namespace copb {

struct BuildError : Error { using Error::Error; };

// The four fine-tuning question tags. Time-assignment exchanges (tag "t")
// stay in the dialogue log but are not part of the dataset.
inline constexpr std::array<std::string_view, 4> kQuestionTags = {kTagAttitude, kTagRoutine,
                                                                  kTagPbc, kTagIntention};

inline bool is_question_tag(std::string_view tag) {
  return std::find(kQuestionTags.begin(), kQuestionTags.end(), tag) != kQuestionTags.end();
}

struct FinetuneExample {
  std::vector<ChatMessage> messages;  // verbatim sub-dialogue, ends with the assistant reply
  std::string tag;
  std::string persona_id;
  int day = 0;
};

struct DatasetManifest {
  std::map<std::string, int> counts_per_tag;
  std::uint64_t seed = 0;
  std::vector<std::string> source_files;
  std::string content_hash;  // fnv1a-64 over the dataset file bytes, hex
};

namespace detail {

inline std::string hex64(std::uint64_t value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

// Deterministic Fisher-Yates; std::shuffle is implementation-defined.
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rand_unit(rng) * i);
    std::swap(items[i - 1], items[std::min(j, i - 1)]);
  }
}

}  // namespace detail

/// Samples `per_type` examples per question tag from the logs, round-robin
/// across personas so no single persona dominates a tag. Deterministic under
/// the seed.
inline std::vector<FinetuneExample> select_examples(const DialogueLog& log, int per_type,
                                                    std::uint64_t seed) {
  std::vector<FinetuneExample> out;
  for (std::string_view tag : kQuestionTags) {
    // Bucket candidates by persona, preserving log order inside a bucket.
    std::map<std::string, std::vector<const DialogueEntry*>> by_persona;
    for (const DialogueEntry& entry : log) {
      if (entry.tag == tag) by_persona[entry.persona_id].push_back(&entry);
    }
    long long available = 0;
    for (const auto& [_, entries] : by_persona) available += entries.size();
    if (available < per_type) {
      throw BuildError("not enough '" + std::string(tag) + "' examples: need " +
                       std::to_string(per_type) + ", have " + std::to_string(available));
    }

    Rng rng(seed ^ fnv1a64(tag));
    std::vector<std::string> personas;
    for (const auto& [persona_id, _] : by_persona) personas.push_back(persona_id);
    detail::seeded_shuffle(personas, rng);
    for (auto& [_, entries] : by_persona) detail::seeded_shuffle(entries, rng);

    int taken = 0;
    std::size_t round = 0;
    while (taken < per_type) {
      bool progressed = false;
      for (const std::string& persona_id : personas) {
        const auto& entries = by_persona[persona_id];
        if (round >= entries.size()) continue;
        const DialogueEntry& entry = *entries[round];
        out.push_back({entry.messages, entry.tag, entry.persona_id, entry.day});
        progressed = true;
        if (++taken == per_type) break;
      }
      if (!progressed) break;
      ++round;
    }
  }
  return out;
}

inline Json to_json(const FinetuneExample& ex) {
  Json msgs = Json::array();
  for (const ChatMessage& m : ex.messages) {
    msgs.push_back(Json{{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  return Json{{"messages", std::move(msgs)},
              {"tag", ex.tag},
              {"persona_id", ex.persona_id},
              {"day", ex.day}};
}

struct BuildResult {
  std::filesystem::path dataset_path;
  std::filesystem::path manifest_path;
  DatasetManifest manifest;
  int examples = 0;
};

inline BuildResult build_dataset(const std::vector<std::filesystem::path>& log_files,
                                 const std::filesystem::path& dataset_path, int per_type,
                                 std::uint64_t seed) {
  if (per_type < 1) throw BuildError("per_type must be >= 1");
  DialogueLog log;
  for (const auto& file : log_files) {
    const DialogueLog part = read_dialogue_log(file);
    log.insert(log.end(), part.begin(), part.end());
  }
  const std::vector<FinetuneExample> examples = select_examples(log, per_type, seed);

  std::string content;
  DatasetManifest manifest;
  manifest.seed = seed;
  for (const auto& file : log_files) manifest.source_files.push_back(file.string());
  for (const FinetuneExample& ex : examples) {
    content += to_json(ex).dump();
    content += '\n';
    ++manifest.counts_per_tag[ex.tag];
  }
  manifest.content_hash = detail::hex64(fnv1a64(content));
  atomic_write(dataset_path, content);

  Json mj{{"counts_per_tag", manifest.counts_per_tag},
          {"seed", manifest.seed},
          {"source_files", manifest.source_files},
          {"content_hash", manifest.content_hash},
          {"examples", examples.size()}};
  const std::filesystem::path manifest_path = dataset_path.string() + ".manifest.json";
  atomic_write(manifest_path, mj.dump(2) + "\n");
  return {dataset_path, manifest_path, manifest, static_cast<int>(examples.size())};
}

// ---------------------------------------------------------------- validate

struct DatasetViolation {
  std::size_t line = 0;  // 0 = file-level
  std::string message;
};

/// Re-reads a built dataset and checks line validity, legal role
/// alternation, and (when the manifest is present) tag counts and content
/// hash. Violations are data, not faults.
inline std::vector<DatasetViolation> validate_dataset(const std::filesystem::path& dataset_path) {
  std::vector<DatasetViolation> out;
  std::string content;
  try {
    content = read_text_file(dataset_path);
  } catch (const Error& e) {
    return {{0, e.what()}};
  }

  std::map<std::string, int> counts;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    ++line_no;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      out.push_back({line_no, std::string("unparseable line: ") + e.what()});
      continue;
    }
    try {
      const std::string tag = j.at("tag").get<std::string>();
      if (!is_question_tag(tag)) {
        out.push_back({line_no, "unknown question tag '" + tag + "'"});
      } else {
        ++counts[tag];
      }
      const Json& msgs = j.at("messages");
      if (msgs.empty()) {
        out.push_back({line_no, "empty message list"});
        continue;
      }
      Role previous = Role::System;
      bool first = true;
      for (const Json& m : msgs) {
        const auto role = role_from_name(m.at("role").get<std::string>());
        if (!role) {
          out.push_back({line_no, "unknown role"});
          break;
        }
        if (!first && *role != Role::System && previous == *role) {
          out.push_back({line_no, "role does not alternate"});
          break;
        }
        previous = *role;
        first = false;
      }
      const auto last_role = role_from_name(msgs.back().at("role").get<std::string>());
      if (!last_role || *last_role != Role::Assistant) {
        out.push_back({line_no, "final message is not an assistant reply"});
      }
    } catch (const Json::exception& e) {
      out.push_back({line_no, std::string("bad example shape: ") + e.what()});
    }
  }

  const std::filesystem::path manifest_path = dataset_path.string() + ".manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    try {
      const Json mj = Json::parse(read_text_file(manifest_path));
      for (const auto& [tag, count] : mj.at("counts_per_tag").items()) {
        if (counts[tag] != count.get<int>()) {
          out.push_back({0, "manifest mismatch: tag '" + tag + "' has " +
                                std::to_string(counts[tag]) + " examples, manifest says " +
                                std::to_string(count.get<int>())});
        }
      }
      const std::string hash = mj.at("content_hash").get<std::string>();
      if (hash != detail::hex64(fnv1a64(content))) {
        out.push_back({0, "manifest mismatch: content hash differs"});
      }
    } catch (const Json::exception& e) {
      out.push_back({0, std::string("unreadable manifest: ") + e.what()});
    }
  }
  return out;
}

}  // namespace copb
