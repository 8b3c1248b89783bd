#include "supercorrect/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "supercorrect/text.hpp"
#include "supercorrect/util.hpp"

namespace supercorrect {

using nlohmann::json;

bool answers_equal(std::string_view a, std::string_view b) {
  std::string na = normalize_answer(a);
  std::string nb = normalize_answer(b);
  auto ra = parse_rational(na);
  auto rb = parse_rational(nb);
  if (ra && rb) return *ra == *rb;
  return iequals(na, nb);
}

double EvalRun::accuracy() const {
  if (outcomes.empty()) return 0.0;
  int correct = 0;
  for (const auto& o : outcomes) correct += o.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

int EvalRun::flag_count() const {
  int flags = 0;
  for (const auto& o : outcomes) flags += o.flagged ? 1 : 0;
  return flags;
}

std::map<Topic, TopicStats> EvalRun::per_topic() const {
  std::map<Topic, TopicStats> out;
  for (const auto& o : outcomes) {
    if (!o.topic) continue;
    TopicStats& stats = out[*o.topic];
    ++stats.total;
    stats.correct += o.correct ? 1 : 0;
  }
  return out;
}

json EvalRun::to_json() const {
  json rows = json::array();
  for (const auto& o : outcomes) {
    json row = {{"problem_id", o.problem_id},
                {"extracted_answer", o.extracted_answer},
                {"correct", o.correct},
                {"flagged", o.flagged}};
    if (o.topic) row["topic"] = to_string(*o.topic);
    if (o.difficulty) row["difficulty"] = *o.difficulty;
    rows.push_back(std::move(row));
  }
  json topics = json::object();
  for (const auto& [topic, stats] : per_topic())
    topics[std::string(to_string(topic))] = {
        {"correct", stats.correct}, {"total", stats.total}, {"accuracy", stats.accuracy()}};
  return {{"schema", "evalrun.v1"}, {"run_id", run_id},       {"seed", seed},
          {"timestamp", timestamp}, {"accuracy", accuracy()}, {"flags", flag_count()},
          {"outcomes", rows},       {"per_topic", topics}};
}

EvalRun score_run(const std::vector<ProblemRecord>& problems,
                  const std::vector<std::string>& traces, std::string run_id) {
  if (problems.size() != traces.size())
    throw std::invalid_argument("score_run: expected one trace per problem");
  EvalRun run;
  run.run_id = std::move(run_id);
  run.timestamp = utc_timestamp();
  run.outcomes.reserve(problems.size());
  for (size_t i = 0; i < problems.size(); ++i) {
    const ProblemRecord& p = problems[i];
    Outcome o;
    o.problem_id = p.id;
    o.topic = p.topic;
    o.difficulty = p.difficulty;
    ParseResult parsed = parse_template(traces[i]);
    if (!parsed.ok()) {
      o.flagged = true;
    } else {
      o.extracted_answer = extract_answer(*parsed.tpl);
      o.correct = answers_equal(o.extracted_answer, p.gt_answer);
    }
    run.outcomes.push_back(std::move(o));
  }
  return run;
}

json SelfCorrectionResult::to_json() const {
  return {{"schema", "selfcorrect.v1"},
          {"base_accuracy", base.accuracy()},
          {"corrected_accuracy", corrected.accuracy()},
          {"delta", delta},
          {"base", base.to_json()},
          {"corrected", corrected.to_json()}};
}

SelfCorrectionResult self_correction_eval(const std::vector<ProblemRecord>& problems,
                                          Gateway& gateway, const PromptRegistry& prompts,
                                          ModelRole student, const ForgeOptions& opts) {
  struct Slot {
    Outcome base;
    Outcome corrected;
  };
  std::vector<Slot> slots(problems.size());

  parallel_for_ordered(problems.size(), opts.workers, [&](size_t i) {
    const ProblemRecord& p = problems[i];
    Slot& slot = slots[i];
    slot.base.problem_id = slot.corrected.problem_id = p.id;
    slot.base.topic = slot.corrected.topic = p.topic;
    slot.base.difficulty = slot.corrected.difficulty = p.difficulty;

    GenerationRequest base_req;
    base_req.role = student;
    base_req.prompt = prompts.render(PromptKind::ht_reasoning, p.problem);
    base_req.temperature = opts.temperature;
    base_req.max_tokens = opts.max_tokens;
    base_req.seed = opts.seed;

    std::optional<HierarchicalTemplate> base_tpl;
    try {
      ParseResult parsed = parse_template(gateway.generate(base_req));
      if (parsed.ok())
        base_tpl = std::move(parsed.tpl);
      else
        slot.base.flagged = true;
    } catch (const GatewayError&) {
      slot.base.flagged = true;
    }
    if (base_tpl) {
      slot.base.extracted_answer = extract_answer(*base_tpl);
      slot.base.correct = answers_equal(slot.base.extracted_answer, p.gt_answer);
    }

    // Correction pass reviews the full serialized base trace. Keep the base
    // answer when the pass is unparseable or reports no error.
    slot.corrected = slot.base;
    if (!base_tpl) {
      slot.corrected.flagged = true;
      return;
    }
    GenerationRequest fix_req;
    fix_req.role = student;
    fix_req.prompt = prompts.render(PromptKind::correction, p.problem, std::nullopt,
                                    serialize_template(*base_tpl));
    fix_req.temperature = opts.temperature;
    fix_req.max_tokens = opts.max_tokens;
    fix_req.seed = opts.seed;
    try {
      ParseResult parsed = parse_template(gateway.generate(fix_req));
      if (!parsed.ok()) {
        slot.corrected.flagged = true;
        return;
      }
      if (!locate_first_error(*parsed.tpl)) return;  // no error reported
      slot.corrected.extracted_answer = extract_answer(*parsed.tpl);
      slot.corrected.correct = answers_equal(slot.corrected.extracted_answer, p.gt_answer);
    } catch (const GatewayError&) {
      slot.corrected.flagged = true;
    }
  });

  SelfCorrectionResult result;
  result.base.run_id = "base";
  result.corrected.run_id = "corrected";
  result.base.timestamp = result.corrected.timestamp = utc_timestamp();
  for (auto& slot : slots) {
    result.base.outcomes.push_back(std::move(slot.base));
    result.corrected.outcomes.push_back(std::move(slot.corrected));
  }
  result.delta = result.corrected.accuracy() - result.base.accuracy();
  return result;
}

json StabilityReport::to_json() const {
  return {{"schema", "stability.v1"}, {"n_runs", n_runs},     {"accuracies", accuracies},
          {"mean", mean},             {"variance", variance}, {"aborted", aborted}};
}

StabilityReport stability_eval(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                               const PromptRegistry& prompts, ModelRole student, int n_runs,
                               const std::vector<uint64_t>& seeds, const ForgeOptions& opts) {
  if (n_runs < 2) throw std::invalid_argument("stability_eval requires n_runs >= 2");
  if (!seeds.empty() && seeds.size() != static_cast<size_t>(n_runs))
    throw std::invalid_argument("stability_eval: seed list must match n_runs");

  std::vector<std::optional<double>> per_run(n_runs);
  std::vector<bool> failed(n_runs, false);

  parallel_for_ordered(static_cast<size_t>(n_runs), opts.workers, [&](size_t r) {
    uint64_t seed = seeds.empty() ? opts.seed.value_or(0) + r : seeds[r];
    int correct = 0;
    int answered = 0;
    for (const auto& p : problems) {
      GenerationRequest req;
      req.role = student;
      req.prompt = prompts.render(PromptKind::ht_reasoning, p.problem);
      req.temperature = opts.temperature;
      req.max_tokens = opts.max_tokens;
      req.seed = seed;
      try {
        ParseResult parsed = parse_template(gateway.generate(req));
        ++answered;
        if (parsed.ok() &&
            answers_equal(extract_answer(*parsed.tpl), p.gt_answer))
          ++correct;
      } catch (const GatewayError&) {
        // counts as incorrect; a run with zero answered problems failed
      }
    }
    if (answered == 0 && !problems.empty()) {
      failed[r] = true;
      return;
    }
    per_run[r] =
        problems.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(problems.size());
  });

  StabilityReport report;
  report.n_runs = n_runs;
  for (int r = 0; r < n_runs; ++r) {
    if (failed[r])
      report.aborted = true;
    else if (per_run[r])
      report.accuracies.push_back(*per_run[r]);
  }
  if (!report.accuracies.empty()) {
    double sum = 0.0;
    for (double a : report.accuracies) sum += a;
    report.mean = sum / static_cast<double>(report.accuracies.size());
    double sq = 0.0;
    for (double a : report.accuracies) sq += (a - report.mean) * (a - report.mean);
    report.variance = sq / static_cast<double>(report.accuracies.size());
  }
  return report;
}

std::string per_topic_csv(const EvalRun& run) {
  std::ostringstream ss;
  ss << "topic,correct,total,accuracy\n";
  for (const auto& [topic, stats] : run.per_topic())
    ss << to_string(topic) << "," << stats.correct << "," << stats.total << ","
       << stats.accuracy() << "\n";
  return ss.str();
}

}  // namespace supercorrect
