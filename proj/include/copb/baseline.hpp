#pragma once

#include <string>
#include <vector>

#include "copb/backend.hpp"
#include "copb/core.hpp"
#include "copb/gravity.hpp"
#include "copb/workflow.hpp"

// Prompt-cost comparator for the vanilla single-model alternative: every
// step's prompt carries the candidate POI list (name and distance) inline,
// and each dialogue yields exactly one physical trajectory. Used to measure
// how much token cost the gravity grounding removes.

namespace copb {

struct InlinePoiPromptStats {
  TokenUsage usage;  // estimated, ceil(chars/4)
  int steps = 0;
  long long pois_listed = 0;
};

/// Builds the per-step prompts such a baseline would send for one day and
/// returns their estimated token cost. Candidates are every POI within
/// max_radius_km of the previous location, which starts at home.
inline InlinePoiPromptStats inline_poi_prompt_cost(const Persona& persona,
                                                   const IntentionSequence& seq,
                                                   const SpatialIndex& index,
                                                   const GravityParams& params) {
  InlinePoiPromptStats stats;
  IntentionSequence history{seq.persona_id, seq.day_index, {}, seq.cap};
  GeoPoint center = persona.home;
  for (const IntentionEvent& ev : seq.events) {
    std::string prompt = "You are a resident with this profile: " + render_profile(persona) +
                         ".\nYour day so far: " + render_history(history) +
                         "\nNearby places you could go next, with distances:\n";
    const auto hits = index.query_radius(center, params.max_radius_km);
    char line[160];
    for (const SpatialIndex::Hit& hit : hits) {
      const PoiRecord& poi = index.pois()[hit.poi];
      std::snprintf(line, sizeof(line), "- %s (%s, %.2f km)\n", poi.name.c_str(),
                    poi.category.c_str(), hit.distance_km);
      prompt += line;
    }
    prompt +=
        "Choose your next activity, its time window, and the exact place from the list above. "
        "Answer as [\"(HH:MM, HH:MM)\", \"activity\", \"place\"].";

    stats.usage.prompt_tokens += estimate_tokens(prompt);
    // Replies carry the window, activity and chosen place name.
    stats.usage.completion_tokens += 24;
    stats.usage.estimated = true;
    ++stats.steps;
    stats.pois_listed += static_cast<long long>(hits.size());

    history.events.push_back(ev);
    // Cost model only: assume the walk stays near home, matching the
    // anchor-heavy structure of real days.
    center = persona.home;
  }
  return stats;
}

}  // namespace copb
