// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria run against the bundled demo assets plus
// synthetic inputs built in place; every tolerance is pinned in code.
//
// Usage: copb_acceptance [assets_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "copb/copb.hpp"

using namespace copb;

namespace {

struct Checker {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void close(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream msg;
      msg << what << ": got " << got << ", want " << want << " +/- " << tol;
      failures.push_back(msg.str());
    }
  }
  void exactly(double got, double want, const std::string& what) {
    if (got != want) {
      std::ostringstream msg;
      msg << what << ": got " << got << ", want exactly " << want;
      failures.push_back(msg.str());
    }
  }
};

struct TempOut {
  std::filesystem::path path;
  explicit TempOut(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("copb_acceptance_" + tag + "_" +
                                                     std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempOut() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

std::ostringstream null_log;

std::filesystem::path g_assets;

RunConfig demo_config() { return load_config(g_assets / "config_demo.json"); }

// ---------------------------------------------------------------- criteria

// Independent brute-force of h((p+q)/2) - (h(p)+h(q))/2.
double jsd_reference(const std::vector<double>& p, const std::vector<double>& q) {
  const auto h = [](const std::vector<double>& d) {
    double out = 0.0;
    for (double v : d) {
      if (v > 0.0) out -= v * std::log2(v);
    }
    return out;
  };
  std::vector<double> mid(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mid[i] = (p[i] + q[i]) / 2.0;
  return h(mid) - (h(p) + h(q)) / 2.0;
}

void criterion_jsd_oracle(Checker& check) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t support = 2 + rng() % 63;
    std::vector<double> p(support), q(support);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < support; ++i) {
      p[i] = (rng() >> 11) * 0x1.0p-53;
      q[i] = (rng() >> 11) * 0x1.0p-53;
      if (rng() % 4 == 0) p[i] = 0.0;
      if (rng() % 4 == 0) q[i] = 0.0;
      sp += p[i];
      sq += q[i];
    }
    if (sp <= 0.0 || sq <= 0.0) continue;
    for (std::size_t i = 0; i < support; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double got = jsd(Histogram{p}, Histogram{q});
    check.close(got, jsd_reference(p, q), 1e-9, "jsd vs brute force, trial " +
                                                    std::to_string(trial));
    if (!check.failures.empty()) return;
  }
  check.exactly(jsd(Histogram{{0.3, 0.7}}, Histogram{{0.3, 0.7}}), 0.0, "jsd(p,p)");
  check.exactly(jsd(Histogram{{1.0, 0.0}}, Histogram{{0.0, 1.0}}), 1.0, "jsd([1,0],[0,1])");
}

void criterion_gravity_sampling(Checker& check) {
  // 32 candidates with gravity-shaped weights (near places dominate).
  std::vector<WeightedCandidate> candidates;
  double total = 0.0;
  for (std::uint32_t i = 0; i < 32; ++i) {
    const double r = 0.25 + 9.5 * i / 31.0;
    const double w = std::pow(r, -2.5);
    candidates.push_back({i, r, w});
    total += w;
  }
  const int draws = 100000;
  std::vector<double> counts(32, 0.0);
  Rng rng(987654321);
  for (int i = 0; i < draws; ++i) {
    counts[sample_destination(candidates, rng).poi] += 1.0;
  }
  double l1 = 0.0;
  for (std::uint32_t i = 0; i < 32; ++i) {
    l1 += std::abs(counts[i] / draws - candidates[i].weight / total);
  }
  check.require(l1 < 0.01, "empirical frequency L1 distance " + std::to_string(l1) + " >= 0.01");
}

// Displacements drawn from the ring-density model the fitter assumes.
std::vector<double> ring_model_displacements(double exponent, int n, Rng& rng) {
  std::vector<double> ring_weight(10);
  double total = 0.0;
  for (int k = 1; k <= 10; ++k) {
    ring_weight[k - 1] = ring_area_km2(k, 1.0) * std::pow(k - 0.5, -exponent);
    total += ring_weight[k - 1];
  }
  std::vector<double> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    const double u = rand_unit(rng) * total;
    double acc = 0.0;
    int ring = 10;
    for (int k = 1; k <= 10; ++k) {
      acc += ring_weight[k - 1];
      if (u < acc) {
        ring = k;
        break;
      }
    }
    const double r = (ring - 1) + rand_unit(rng);
    if (r > 0.1 && r <= 10.0) out.push_back(r);
  }
  return out;
}

void criterion_exponent_fit(Checker& check) {
  Rng rng(13579);
  const auto steep = ring_model_displacements(2.5, 10000, rng);
  const DecayFit fit_steep = fit_decay_exponent(std::span<const double>(steep));
  check.close(fit_steep.exponent, 2.5, 0.1, "recovered exponent (2.5 corpus)");

  const auto shallow = ring_model_displacements(1.0, 10000, rng);
  const DecayFit fit_shallow = fit_decay_exponent(std::span<const double>(shallow));
  check.close(fit_shallow.exponent, 1.0, 0.1, "recovered exponent (1.0 corpus)");
}

void criterion_scripted_end_to_end(Checker& check) {
  const RunConfig cfg = demo_config();
  const std::filesystem::path personas = g_assets / "personas_demo.jsonl";

  struct RunBytes {
    std::string sequences;
    std::string dialogues;
    std::string trajectories;
    int n_trajectories = 0;
    int n_days = 0;
  };
  const auto run = [&](const std::string& tag) {
    TempOut out("e2e_" + tag);
    CommandOptions opt;
    opt.out_dir = out.path;
    const GenerateResult gen = cmd_generate(cfg, personas, 1, opt, null_log);
    const MapResult mapped = cmd_map(cfg, gen.sequences_path, personas, opt, null_log);
    return RunBytes{read_text_file(gen.sequences_path), read_text_file(gen.dialogues_path),
                    read_text_file(mapped.trajectories_path), mapped.trajectories,
                    gen.generated_days};
  };

  const RunBytes first = run("a");
  const RunBytes second = run("b");
  check.require(first.sequences == second.sequences && first.dialogues == second.dialogues &&
                    first.trajectories == second.trajectories,
                "repeat runs are not byte-identical");
  const std::string& sequences_a = first.sequences;
  const std::string& trajectories_a = first.trajectories;
  const int n_traj = first.n_trajectories;
  const int n_days = first.n_days;
  check.require(n_days == 2, "expected 2 generated persona-days, got " + std::to_string(n_days));
  check.require(n_traj == 40,
                "expected 20 trajectories per sequence (40 total), got " + std::to_string(n_traj));

  // The generated day must be exactly the worked example.
  const std::vector<std::tuple<std::string, std::string, std::string>> expected{
      {"00:00", "08:33", "sleep"},
      {"09:47", "17:49", "go to work"},
      {"18:45", "19:49", "eat"},
      {"20:01", "20:35", "do shopping"},
      {"21:40", "23:59", "go home"}};
  std::istringstream seq_stream(sequences_a);
  std::string line;
  int records = 0;
  while (std::getline(seq_stream, line)) {
    if (line.empty()) continue;
    ++records;
    const DayRecord rec = day_record_from_json(Json::parse(line));
    check.require(validate_sequence(rec).empty(), "generated sequence fails validation");
    check.require(rec.events.size() == expected.size(), "wrong event count");
    for (std::size_t i = 0; i < expected.size() && i < rec.events.size(); ++i) {
      const auto& [start, end, intention] = expected[i];
      check.require(rec.events[i].start == start && rec.events[i].end == end &&
                        rec.events[i].intention == intention,
                    "event " + std::to_string(i) + " deviates from the worked example");
    }
  }
  check.require(records == 2, "expected 2 sequence records");

  std::istringstream traj_stream(trajectories_a);
  int traj_records = 0;
  while (std::getline(traj_stream, line)) {
    if (line.empty()) continue;
    ++traj_records;
    const DayRecord rec = day_record_from_json(Json::parse(line));
    check.require(validate_sequence(rec).empty(), "trajectory fails validation");
    for (std::size_t i = 1; i < rec.events.size(); ++i) {
      const auto intention = intention_from_label(rec.events[i].intention);
      if (intention && !CategoryMap::is_anchor(*intention)) {
        const double hop = haversine_km({*rec.events[i - 1].lat, *rec.events[i - 1].lon},
                                        {*rec.events[i].lat, *rec.events[i].lon});
        check.require(hop <= 10.0 + 1e-9, "non-anchor hop exceeds 10 km");
      }
    }
  }
  check.require(traj_records == 40, "expected 40 trajectory records");
}

std::vector<DayRecord> synthetic_corpus(int personas, int days_each) {
  std::vector<DayRecord> out;
  std::mt19937_64 rng(4451);
  for (int p = 0; p < personas; ++p) {
    const double home_lat = 39.88 + (p % 10) * 0.004;
    const double home_lon = 116.38 + (p / 10) * 0.004;
    for (int d = 0; d < days_each; ++d) {
      DayRecord rec{"p" + std::to_string(p), d, {}, std::nullopt};
      rec.events.push_back({"00:00", "07:30", "sleep", "home" + std::to_string(p), home_lat,
                            home_lon});
      rec.events.push_back({"08:30", "17:00", "go to work", "work" + std::to_string(p % 7),
                            39.95 + (p % 7) * 0.003, 116.45});
      if ((p + d) % 3 != 0) {
        rec.events.push_back({"18:00", "19:00", "eat",
                              "rest" + std::to_string(static_cast<int>(rng() % 40)),
                              39.92 + (rng() % 30) * 0.001, 116.41 + (rng() % 30) * 0.001});
      }
      rec.events.push_back({"20:00", "23:30", "go home", "home" + std::to_string(p), home_lat,
                            home_lon});
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void criterion_self_evaluation(Checker& check) {
  const RunConfig cfg = demo_config();
  TempOut out("selfeval");
  const auto corpus = synthetic_corpus(50, 20);  // 1000 trajectory records
  write_day_records(out.path / "corpus.jsonl", corpus);

  CommandOptions opt;
  opt.out_dir = out.path;
  const EvaluateResult eval =
      cmd_evaluate(cfg, out.path / "corpus.jsonl", out.path / "corpus.jsonl", {}, {}, opt,
                   null_log);
  check.exactly(eval.report.radius, 0.0, "radius");
  check.exactly(eval.report.dayloc, 0.0, "dayloc");
  check.exactly(eval.report.itdnum, 0.0, "itdNum");
  check.exactly(eval.report.grank, 0.0, "g_rank");
  check.exactly(eval.report.itderr, 0.0, "itdErr");
  check.exactly(eval.report.itdtype, 0.0, "itdType");
  check.exactly(eval.report.locfreq, 0.0, "locfreq");
  check.exactly(eval.report.odsim, 0.0, "odSim");
}

void criterion_ablation_contract(Checker& check) {
  const RunConfig base_cfg = demo_config();
  const std::filesystem::path personas = g_assets / "personas_demo.jsonl";

  const auto tag_counts = [&](const RunConfig& cfg, const std::string& tag) {
    TempOut out("ablate_" + tag);
    CommandOptions opt;
    opt.out_dir = out.path;
    return cmd_generate(cfg, personas, 1, opt, null_log).calls_per_tag;
  };

  const auto base = tag_counts(base_cfg, "base");
  const auto count = [](const std::map<std::string, int>& m, const char* tag) {
    const auto it = m.find(tag);
    return it == m.end() ? 0 : it->second;
  };

  RunConfig wo_a = base_cfg;
  wo_a.ablation.use_attitude = false;
  const auto a = tag_counts(wo_a, "wo_a");
  check.require(count(a, "a") == 0, "wo_A: attitude calls should drop to 0");
  check.require(count(a, "b") == count(base, "b") && count(a, "c") == count(base, "c") &&
                    count(a, "d") == count(base, "d") && count(a, "t") == count(base, "t"),
                "wo_A: other tag counts changed");

  RunConfig wo_sn = base_cfg;
  wo_sn.ablation.use_norms = false;
  const auto sn = tag_counts(wo_sn, "wo_sn");
  check.require(count(sn, "b") == 0, "wo_SN: routine calls should drop to 0");
  check.require(count(sn, "a") == count(base, "a") && count(sn, "c") == count(base, "c") &&
                    count(sn, "d") == count(base, "d") && count(sn, "t") == count(base, "t"),
                "wo_SN: other tag counts changed");

  RunConfig wo_pbc = base_cfg;
  wo_pbc.ablation.use_pbc = false;
  const auto pbc = tag_counts(wo_pbc, "wo_pbc");
  check.require(count(pbc, "c") == 0, "wo_PBC: likelihood calls should drop to 0");
  check.require(count(pbc, "a") == count(base, "a") && count(pbc, "b") == count(base, "b") &&
                    count(pbc, "d") == count(base, "d") && count(pbc, "t") == count(base, "t"),
                "wo_PBC: other tag counts changed");
}

void criterion_token_amortization(Checker& check) {
  const RunConfig cfg = demo_config();
  TempOut out("tokens");

  // One persona, one sequence, grounded into 20 trajectories.
  const auto personas = read_personas(g_assets / "personas_demo.jsonl");
  write_personas(out.path / "single.jsonl", {personas.front()});
  CommandOptions opt;
  opt.out_dir = out.path;
  const GenerateResult gen = cmd_generate(cfg, out.path / "single.jsonl", 1, opt, null_log);
  const double per_trajectory = tokens_per_trajectory(gen.usage, 1, 20);
  check.exactly(per_trajectory * 20.0, static_cast<double>(gen.usage.total()),
                "20 * tokens_per_trajectory vs sequence total");

  // The inline-POI baseline pays its whole prompt bill per trajectory.
  const SpatialIndex index(read_pois_csv(cfg.poi_path), cfg.poi_index_cell_km);
  const auto sequences = read_day_records(gen.sequences_path);
  check.require(sequences.size() == 1, "expected a single generated sequence");
  const IntentionSequence seq = to_sequence(sequences.front());
  const InlinePoiPromptStats baseline =
      inline_poi_prompt_cost(personas.front(), seq, index, cfg.gravity);
  const double ratio = static_cast<double>(baseline.usage.total()) / per_trajectory;
  check.require(ratio >= 20.0,
                "inline-POI baseline per-trajectory tokens only " + std::to_string(ratio) +
                    "x ours; expected >= 20x");
}

void criterion_dataset_construction(Checker& check) {
  TempOut out("dataset");
  DialogueLog log;
  for (int p = 0; p < 260; ++p) {
    const std::string persona = "p" + std::to_string(p);
    for (std::string_view tag : kQuestionTags) {
      DialogueEntry e;
      e.persona_id = persona;
      e.day = 0;
      e.tag = std::string(tag);
      e.messages = {{Role::User, "question " + std::string(tag) + " for " + persona},
                    {Role::Assistant, "answer for " + persona}};
      e.usage = {30, 10};
      log.push_back(std::move(e));
    }
  }
  write_dialogue_log(out.path / "log.jsonl", log);

  const BuildResult built =
      build_dataset({out.path / "log.jsonl"}, out.path / "finetune.jsonl", 250, 4242);
  check.require(built.examples == 1000, "expected 1000 examples");
  for (std::string_view tag : kQuestionTags) {
    const auto it = built.manifest.counts_per_tag.find(std::string(tag));
    check.require(it != built.manifest.counts_per_tag.end() && it->second == 250,
                  "tag '" + std::string(tag) + "' does not have 250 examples");
  }
  for (const std::string& line : read_lines(built.dataset_path)) {
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception&) {
      check.require(false, "dataset line is not valid JSON");
      break;
    }
    const Json& msgs = j.at("messages");
    check.require(!msgs.empty() && msgs.back().at("role") == "assistant",
                  "example does not end with an assistant reply");
  }
  check.require(validate_dataset(built.dataset_path).empty(), "validate_dataset found violations");

  const std::string first = read_text_file(built.dataset_path);
  build_dataset({out.path / "log.jsonl"}, out.path / "finetune2.jsonl", 250, 4242);
  check.require(first == read_text_file(out.path / "finetune2.jsonl"),
                "dataset build is not deterministic under a fixed seed");
}

void criterion_uniqueness(Checker& check) {
  DayRecord g{"p1", 0, {}, std::nullopt};
  g.events.push_back({"00:00", "08:00", "sleep", {}, {}, {}});
  g.events.push_back({"09:00", "17:00", "go to work", {}, {}, {}});
  const UniquenessResult self = uniqueness_overlap(std::vector<DayRecord>{g},
                                                   std::vector<DayRecord>{g});
  check.exactly(self.mean_overlap, 1.0, "reflexive mean overlap");
  check.exactly(self.max_overlap, 1.0, "reflexive max overlap");

  DayRecord all_eat{"p1", 0, {}, std::nullopt};
  all_eat.events.push_back({"00:00", "23:59", "eat", {}, {}, {}});
  DayRecord all_work{"t1", 0, {}, std::nullopt};
  all_work.events.push_back({"00:00", "23:59", "go to work", {}, {}, {}});
  const UniquenessResult disjoint = uniqueness_overlap(std::vector<DayRecord>{all_eat},
                                                       std::vector<DayRecord>{all_work});
  check.exactly(disjoint.mean_overlap, 0.0, "disjoint mean overlap");

  // 12 of 48 slices shared: six hours of sleep against an all-sleep day.
  DayRecord partial{"p1", 0, {}, std::nullopt};
  partial.events.push_back({"00:00", "06:00", "sleep", {}, {}, {}});
  partial.events.push_back({"06:00", "23:59", "eat", {}, {}, {}});
  DayRecord full_sleep{"t1", 0, {}, std::nullopt};
  full_sleep.events.push_back({"00:00", "23:59", "sleep", {}, {}, {}});
  const UniquenessResult quarter = uniqueness_overlap(std::vector<DayRecord>{partial},
                                                      std::vector<DayRecord>{full_sleep});
  check.close(quarter.mean_overlap, 0.25, 1e-12, "12-of-48 overlap");
}

void criterion_itderr_aggregation(Checker& check) {
  // Worked case: 5 days eating at noon vs 2 days working -> "eat".
  std::vector<SlicedDay> week;
  for (int d = 0; d < 7; ++d) {
    SlicedDay sd{"r1", d, {}};
    sd.slices[24] = d < 5 ? Intention::Eat : Intention::GoToWork;
    week.push_back(sd);
  }
  const DaySlices rep = aggregate_week(week);
  check.require(rep[24] == Intention::Eat, "majority vote should pick 'eat'");

  // A generated day differing from the representative in exactly one slice.
  std::vector<DayRecord> ref;
  for (int d = 0; d < 7; ++d) {
    DayRecord rec{"p1", d, {}, std::nullopt};
    rec.events.push_back({"12:00", "12:30", d < 5 ? "eat" : "go to work", {}, {}, {}});
    ref.push_back(std::move(rec));
  }
  std::vector<DayRecord> gen;
  DayRecord g{"p1", 0, {}, std::nullopt};
  g.events.push_back({"12:00", "12:30", "eat", {}, {}, {}});
  g.events.push_back({"13:00", "13:30", "eat", {}, {}, {}});  // extra covered slice
  gen.push_back(std::move(g));
  const ItdErrResult result = metric_itderr(gen, ref);
  check.close(result.value, 1.0 / 48.0, 1e-12, "single differing slice");
}

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<void(Checker&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_assets = argc > 1 ? std::filesystem::path(argv[1])
                      : std::filesystem::path(COPB_SOURCE_DIR) / "assets";
  if (!std::filesystem::exists(g_assets / "config_demo.json")) {
    std::fprintf(stderr, "assets directory not found at %s\n", g_assets.string().c_str());
    return 2;
  }

  const std::vector<Criterion> criteria{
      {1, "jsd-oracle-equivalence", 5.0, criterion_jsd_oracle},
      {2, "gravity-sampling-correctness", 10.0, criterion_gravity_sampling},
      {3, "exponent-fit-recovery", 10.0, criterion_exponent_fit},
      {4, "scripted-end-to-end", 5.0, criterion_scripted_end_to_end},
      {5, "self-evaluation-zeros", 10.0, criterion_self_evaluation},
      {6, "ablation-contract", 10.0, criterion_ablation_contract},
      {7, "token-amortization", 10.0, criterion_token_amortization},
      {8, "dataset-construction", 10.0, criterion_dataset_construction},
      {9, "uniqueness-metric", 5.0, criterion_uniqueness},
      {10, "itderr-aggregation", 5.0, criterion_itderr_aggregation},
  };

  int failed = 0;
  for (const Criterion& criterion : criteria) {
    Checker check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > criterion.time_limit_s) {
      std::ostringstream msg;
      msg << "took " << elapsed << "s, limit " << criterion.time_limit_s << "s";
      check.failures.push_back(msg.str());
    }
    if (check.failures.empty()) {
      std::printf("PASS  %2d %-32s (%.2fs)\n", criterion.id, criterion.name.c_str(), elapsed);
    } else {
      ++failed;
      std::printf("FAIL  %2d %-32s (%.2fs): %s\n", criterion.id, criterion.name.c_str(), elapsed,
                  check.failures.front().c_str());
      for (std::size_t i = 1; i < check.failures.size() && i < 4; ++i) {
        std::printf("          %s\n", check.failures[i].c_str());
      }
    }
  }
  if (failed > 0) {
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
