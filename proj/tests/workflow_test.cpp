#include <catch2/catch.hpp>

#include <map>
#include <string>

#include "copb/workflow.hpp"
#include "test_util.hpp"

using namespace copb;

namespace {

// In-memory backend scripted by (tag, turn); persona-agnostic.
class TestBackend : public ChatBackend {
 public:
  void script(std::string_view tag, int turn, std::string reply, TokenUsage usage = {10, 5}) {
    replies_[{std::string(tag), turn}] = Completion{std::move(reply), usage};
  }
  void script_all_turns(std::string_view tag, std::string reply) {
    fallback_[std::string(tag)] = Completion{std::move(reply), {10, 5}};
  }

  std::map<std::string, int> calls_per_tag;

 protected:
  Completion do_complete(const std::vector<ChatMessage>&, const CompletionParams&,
                         const RequestContext& ctx) override {
    ++calls_per_tag[ctx.tag];
    last_prompt = ctx.tag;
    if (const auto it = replies_.find({ctx.tag, ctx.turn}); it != replies_.end()) {
      return it->second;
    }
    if (const auto it = fallback_.find(ctx.tag); it != fallback_.end()) {
      return it->second;
    }
    throw BackendError("unscripted tag '" + ctx.tag + "' turn " + std::to_string(ctx.turn));
  }

 public:
  std::string last_prompt;

 private:
  std::map<std::pair<std::string, int>, Completion> replies_;
  std::map<std::string, Completion> fallback_;
};

PromptTemplates test_templates() {
  return PromptTemplates{
      "Profile: {profile}\nReply as <Preference>: [item, item].",
      "Profile: {profile}\nReply as <Routine>: [item, item].",
      "Profile: {profile}\nAttitude: {attitude}\nRoutine: {routine}\nSo far: {history}\n"
      "Reply as <Perceived likelihood>: [intention:likelihood, ...].",
      "Examples:\n{fewshot}\nProfile: {profile}\nAttitude: {attitude}\nRoutine: {routine}\n"
      "Likelihoods: {pbc}\nSo far: {history}\nReply with exactly one intention.",
      "So far: {history}\nNext intention: {intention}\nReply with its window (HH:MM, HH:MM).",
  };
}

FewShotBank test_bank() {
  FewShotBank bank;
  FewShotExample ex;
  ex.profile = "retired teacher";
  ex.events = {{"00:00", "07:30", "sleep", "usual night"},
               {"08:10", "09:00", "eat", "breakfast at home"},
               {"10:00", "11:30", "do sports", "morning walk"}};
  bank.examples.push_back(ex);
  return bank;
}

Persona test_persona(const std::string& id = "p1") {
  Persona p;
  p.id = id;
  p.attributes = {{"gender", "female"}, {"occupation", "IT engineer"}};
  p.home_region = "R1";
  p.home = GeoPoint{39.90, 116.40};
  p.work = GeoPoint{39.95, 116.45};
  return p;
}

// Scripts the worked example day: sleep, work, eat, shopping, home.
void script_example_day(TestBackend& backend) {
  backend.script(kTagAttitude, 0,
                 "\xE2\x9F\xA8Preference\xE2\x9F\xA9: [enjoys dining out, dislikes long trips]");
  backend.script(kTagRoutine, 0, "\xE2\x9F\xA8Routine\xE2\x9F\xA9: [office hours on weekdays]");
  backend.script_all_turns(kTagPbc,
                           "\xE2\x9F\xA8Perceived likelihood\xE2\x9F\xA9: [sleep:high, eat:0.6]");
  backend.script(kTagIntention, 0, "sleep");
  backend.script(kTagIntention, 1, "go to work");
  backend.script(kTagIntention, 2, "eat");
  backend.script(kTagIntention, 3, "do shopping");
  backend.script(kTagIntention, 4, "go home");
  backend.script(kTagTime, 0, "(00:00, 08:33)");
  backend.script(kTagTime, 1, "(09:47, 17:49)");
  backend.script(kTagTime, 2, "(18:45, 19:49)");
  backend.script(kTagTime, 3, "(20:01, 20:35)");
  backend.script(kTagTime, 4, "(21:40, 23:59)");
}

}  // namespace

TEST_CASE("template rendering substitutes known placeholders only") {
  CHECK(render_template("a {x} b {y} c {z}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2 c {z}");
  CHECK(render_template("{x}{x}", {{"x", "ha"}}) == "haha");
  CHECK(render_template("no placeholders", {}) == "no placeholders");
}

TEST_CASE("template validation requires the operation's placeholders") {
  PromptTemplates t = test_templates();
  t.pbc = "missing everything";
  CHECK_THROWS_AS(validate_templates(t), ConfigError);
  CHECK_THROWS_WITH(validate_templates(t), Catch::Contains("{profile}"));
}

TEST_CASE("attitude elicitation parses bracketed statement lists") {
  TestBackend backend;
  backend.script(kTagAttitude, 0,
                 "\xE2\x9F\xA8Preference\xE2\x9F\xA9: [enjoys dining out, dislikes long trips]");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  const auto attitude = wf.query_attitude(test_persona(), log);
  REQUIRE(attitude.size() == 2);
  CHECK(attitude[0] == "enjoys dining out");
  CHECK(attitude[1] == "dislikes long trips");
  CHECK(backend.calls_per_tag[std::string(kTagAttitude)] == 1);
  REQUIRE(log.size() == 1);
  CHECK(log[0].tag == kTagAttitude);
  CHECK(log[0].messages.back().role == Role::Assistant);
}

TEST_CASE("ablated attitude makes zero backend calls") {
  TestBackend backend;
  Workflow wf(backend, test_templates(), test_bank(), AblationFlags{false, true, true});
  DialogueLog log;
  CHECK(wf.query_attitude(test_persona(), log).empty());
  CHECK(backend.call_count() == 0);
  CHECK(log.empty());
}

TEST_CASE("malformed attitude replies are retried then fail") {
  TestBackend backend;
  backend.script_all_turns(kTagAttitude, "no list here");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  CHECK_THROWS_AS(wf.query_attitude(test_persona(), log), WorkflowError);
  CHECK(backend.calls_per_tag[std::string(kTagAttitude)] == 4);  // 1 attempt + R=3 retries
  CHECK(log.empty());
}

TEST_CASE("empty routine list is valid") {
  TestBackend backend;
  backend.script(kTagRoutine, 0, "\xE2\x9F\xA8Routine\xE2\x9F\xA9: []");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  CHECK(wf.query_routine(test_persona(), log).empty());
  CHECK(backend.call_count() == 1);
}

TEST_CASE("likelihood parsing: defaults, clamping, ordinal words") {
  TestBackend backend;
  backend.script(kTagPbc, 0,
                 "\xE2\x9F\xA8Perceived likelihood\xE2\x9F\xA9: "
                 "[eat:0.9, go to work:0.1, do sports:high, excursion:1.7]");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  IntentionSequence history{"p1", 0, {}, 6};
  const auto pbc = wf.query_pbc(test_persona(), TpbContext{}, history, log);
  CHECK(pbc.at(Intention::Eat) == 0.9);
  CHECK(pbc.at(Intention::GoToWork) == 0.1);
  CHECK(pbc.at(Intention::DoSports) == 0.8);   // "high"
  CHECK(pbc.at(Intention::Excursion) == 1.0);  // clamped
  CHECK(pbc.at(Intention::Sleep) == 0.5);      // missing -> default
  CHECK(pbc.size() == static_cast<std::size_t>(kIntentionCount));
}

TEST_CASE("ablated perceived control is uniform with zero calls") {
  TestBackend backend;
  Workflow wf(backend, test_templates(), test_bank(), AblationFlags{true, true, false});
  DialogueLog log;
  IntentionSequence history{"p1", 0, {}, 6};
  const auto pbc = wf.query_pbc(test_persona(), TpbContext{}, history, log);
  for (const auto& [_, v] : pbc) CHECK(v == 0.5);
  CHECK(backend.call_count() == 0);
}

TEST_CASE("intention decisions only accept the closed vocabulary") {
  TestBackend backend;
  backend.script(kTagIntention, 0, "  Sleep ");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  IntentionSequence history{"p1", 0, {}, 6};
  CHECK(wf.decide_next_intention(test_persona(), TpbContext{}, TpbContext::uniform_pbc(), history,
                                 log) == Intention::Sleep);

  TestBackend off_vocab;
  off_vocab.script_all_turns(kTagIntention, "commute home");
  Workflow wf2(off_vocab, test_templates(), test_bank());
  CHECK_THROWS_AS(wf2.decide_next_intention(test_persona(), TpbContext{},
                                            TpbContext::uniform_pbc(), history, log),
                  WorkflowError);
  CHECK(off_vocab.calls_per_tag[std::string(kTagIntention)] == 4);
}

TEST_CASE("time assignment rejects backward and overlapping windows") {
  IntentionSequence history{"p1", 0, {}, 6};
  history.events.push_back({TimeWindow{587, 1069}, Intention::GoToWork});

  TestBackend good;
  good.script(kTagTime, 0, "The window is (18:45, 19:49).");
  Workflow wf(good, test_templates(), test_bank());
  DialogueLog log;
  CHECK(wf.assign_time(test_persona(), history, Intention::Eat, log) == TimeWindow{1125, 1189});

  TestBackend backward;
  backward.script_all_turns(kTagTime, "(17:00, 16:00)");
  Workflow wf2(backward, test_templates(), test_bank());
  CHECK_THROWS_AS(wf2.assign_time(test_persona(), history, Intention::Eat, log), WorkflowError);

  TestBackend overlapping;
  overlapping.script_all_turns(kTagTime, "(17:00, 18:00)");  // starts before 17:49
  Workflow wf3(overlapping, test_templates(), test_bank());
  CHECK_THROWS_AS(wf3.assign_time(test_persona(), history, Intention::Eat, log), WorkflowError);
}

TEST_CASE("intention cap sampling") {
  IntentionCountDistribution point{{{4, 1.0}}};
  Rng rng(1);
  for (int i = 0; i < 10; ++i) CHECK(sample_intention_cap(point, rng) == 4);

  IntentionCountDistribution split{{{4, 0.5}, {6, 0.5}}};
  Rng a(99), b(99);
  CHECK(sample_intention_cap(split, a) == sample_intention_cap(split, b));

  // Law of large numbers: mean of 10k draws from {4: .5, 6: .5} is ~5.
  Rng many(7);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += sample_intention_cap(split, many);
  CHECK(sum / 10000.0 == Approx(5.0).margin(0.1));

  CHECK_THROWS_AS(sample_intention_cap(IntentionCountDistribution{}, rng), ConfigError);
  CHECK_THROWS_AS(sample_intention_cap(IntentionCountDistribution{{{3, 0.5}}}, rng), ConfigError);
}

TEST_CASE("generate_day reproduces the worked example") {
  TestBackend backend;
  script_example_day(backend);
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  Rng rng(42);
  const IntentionSequence seq =
      wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{6, 1.0}}}, rng, log);

  REQUIRE(seq.events.size() == 5);  // cap 6, but the day is covered by 23:59
  const std::vector<std::pair<std::string, Intention>> expected{
      {"(00:00, 08:33)", Intention::Sleep},       {"(09:47, 17:49)", Intention::GoToWork},
      {"(18:45, 19:49)", Intention::Eat},         {"(20:01, 20:35)", Intention::DoShopping},
      {"(21:40, 23:59)", Intention::GoHome}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(format_time_window(seq.events[i].window) == expected[i].first);
    CHECK(seq.events[i].intention == expected[i].second);
  }
  CHECK(validate_sequence(seq).empty());

  // Call-count contract: one attitude, one routine, one pbc/decision/time
  // triple per event.
  std::map<std::string, int> tags;
  for (const DialogueEntry& e : log) ++tags[e.tag];
  CHECK(tags[std::string(kTagAttitude)] == 1);
  CHECK(tags[std::string(kTagRoutine)] == 1);
  CHECK(tags[std::string(kTagPbc)] == 5);
  CHECK(tags[std::string(kTagIntention)] == 5);
  CHECK(tags[std::string(kTagTime)] == 5);
}

TEST_CASE("cap of one yields a single-event day") {
  TestBackend backend;
  script_example_day(backend);
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  Rng rng(1);
  const IntentionSequence seq =
      wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{1, 1.0}}}, rng, log);
  CHECK(seq.events.size() == 1);
  CHECK(seq.cap == 1);
}

TEST_CASE("an evening sleep decision ends the day early") {
  TestBackend backend;
  backend.script(kTagAttitude, 0, "[x]");
  backend.script(kTagRoutine, 0, "[y]");
  backend.script_all_turns(kTagPbc, "[sleep:high]");
  backend.script(kTagIntention, 0, "eat");
  backend.script(kTagIntention, 1, "sleep");
  backend.script(kTagTime, 0, "(18:00, 19:00)");
  backend.script(kTagTime, 1, "(22:00, 23:00)");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  Rng rng(5);
  const IntentionSequence seq =
      wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{8, 1.0}}}, rng, log);
  REQUIRE(seq.events.size() == 2);
  CHECK(seq.events.back().intention == Intention::Sleep);
}

TEST_CASE("fully ablated runs log only decision and time exchanges") {
  TestBackend backend;
  script_example_day(backend);
  Workflow wf(backend, test_templates(), test_bank(), AblationFlags{false, false, false});
  DialogueLog log;
  Rng rng(42);
  const IntentionSequence seq =
      wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{6, 1.0}}}, rng, log);
  CHECK(seq.events.size() == 5);
  for (const DialogueEntry& e : log) {
    CHECK((e.tag == kTagIntention || e.tag == kTagTime));
  }
  CHECK(log.size() == 10);
}

TEST_CASE("attitude and routine are cached across a persona's days") {
  TestBackend backend;
  script_example_day(backend);
  // Day 1: a short morning then an evening at home.
  backend.script(kTagIntention, 5, "eat");
  backend.script(kTagIntention, 6, "go home");
  backend.script(kTagTime, 5, "(08:00, 09:00)");
  backend.script(kTagTime, 6, "(10:00, 23:40)");
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  const auto days =
      wf.generate_days(test_persona(), 2, IntentionCountDistribution{{{6, 1.0}}}, 42, log);
  REQUIRE(days.size() == 2);
  CHECK(days[0].events.size() == 5);
  CHECK(days[1].events.size() == 2);
  CHECK(backend.calls_per_tag[std::string(kTagAttitude)] == 1);
  CHECK(backend.calls_per_tag[std::string(kTagRoutine)] == 1);

  // The static context is byte-identical across days (single elicitation).
  DialogueLog scratch;
  const TpbContext& ctx = wf.context_for(test_persona(), scratch);
  CHECK(scratch.empty());  // cache hit, no new exchanges
  CHECK(ctx.attitude == std::vector<std::string>{"enjoys dining out", "dislikes long trips"});
}

TEST_CASE("generation is reproducible with a scripted backend and fixed seed") {
  const auto run = [] {
    TestBackend backend;
    script_example_day(backend);
    Workflow wf(backend, test_templates(), test_bank());
    DialogueLog log;
    Rng rng(42);
    const IntentionSequence seq =
        wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{6, 1.0}}}, rng, log);
    std::string bytes = to_json(to_record(seq)).dump();
    for (const DialogueEntry& e : log) bytes += to_json(e).dump();
    return bytes;
  };
  CHECK(run() == run());
}

TEST_CASE("dialogue log round-trips through JSON Lines") {
  copb_test::TempDir tmp;
  TestBackend backend;
  script_example_day(backend);
  Workflow wf(backend, test_templates(), test_bank());
  DialogueLog log;
  Rng rng(42);
  wf.generate_day(test_persona(), 0, IntentionCountDistribution{{{6, 1.0}}}, rng, log);

  const auto path = tmp.file("dialogues.jsonl");
  write_dialogue_log(path, log);
  const DialogueLog loaded = read_dialogue_log(path);
  REQUIRE(loaded.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(to_json(loaded[i]) == to_json(log[i]));
  }
}

TEST_CASE("few-shot banks must contain valid example days") {
  copb_test::TempDir tmp;
  copb_test::write_file(tmp.file("bad.json"), R"({"examples": [{"events": [
    {"start": "09:00", "end": "08:00", "intention": "eat"}]}]})");
  CHECK_THROWS_AS(load_fewshot(tmp.file("bad.json")), ConfigError);

  copb_test::write_file(tmp.file("good.json"), R"({"examples": [{"profile": "clerk", "events": [
    {"start": "00:00", "end": "07:00", "intention": "sleep", "rationale": "night"},
    {"start": "08:00", "end": "17:00", "intention": "go to work"}]}]})");
  const FewShotBank bank = load_fewshot(tmp.file("good.json"));
  REQUIRE(bank.examples.size() == 1);
  CHECK(bank.examples[0].events.size() == 2);
  const std::string rendered = render_fewshot(bank);
  CHECK_THAT(rendered, Catch::Contains("(00:00, 07:00)"));
  CHECK_THAT(rendered, Catch::Contains("night"));
}
