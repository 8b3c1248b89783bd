#include "supercorrect/forge.hpp"

#include <stdexcept>

#include "supercorrect/eval.hpp"
#include "supercorrect/jsonl.hpp"
#include "supercorrect/util.hpp"

namespace supercorrect {

using nlohmann::json;

std::string_view to_string(Topic topic) {
  switch (topic) {
    case Topic::algebra: return "algebra";
    case Topic::counting_probability: return "counting_probability";
    case Topic::intermediate_algebra: return "intermediate_algebra";
    case Topic::number_theory: return "number_theory";
    case Topic::geometry: return "geometry";
    case Topic::prealgebra: return "prealgebra";
    case Topic::precalculus: return "precalculus";
    case Topic::other: return "other";
  }
  return "?";
}

Topic topic_from_string(std::string_view name) {
  for (int i = 0; i < kTopicCount; ++i) {
    Topic t = static_cast<Topic>(i);
    if (name == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown topic: " + std::string(name));
}

json BuildReport::to_json() const {
  return {{"accepted", accepted},
          {"parse_failed", parse_failed},
          {"answer_mismatch", answer_mismatch},
          {"correct", correct},
          {"wrong", wrong},
          {"dropped_no_error", dropped_no_error},
          {"rejected_fallback", rejected_fallback}};
}

namespace {

std::vector<std::string> diagnostic_strings(const ParseResult& parsed) {
  std::vector<std::string> out;
  for (const auto& d : parsed.diagnostics) {
    out.push_back(std::string(to_string(d.severity)) + ":" + std::string(to_string(d.code)) + "@" +
                  std::to_string(d.begin) + ": " + d.message);
  }
  return out;
}

// Generate + parse with one reprompt on parse failure. Returns the parsed
// template or the failing ParseResult of the final attempt.
struct GenParse {
  std::optional<HierarchicalTemplate> tpl;
  ParseResult last_parse;
  std::string last_text;
};

GenParse generate_parsed(Gateway& gateway, const GenerationRequest& req) {
  GenParse out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    out.last_text = gateway.generate(req);
    out.last_parse = parse_template(out.last_text);
    if (out.last_parse.ok()) {
      out.tpl = out.last_parse.tpl;
      return out;
    }
  }
  return out;
}

}  // namespace

SftBuild build_sft_dataset(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                           const PromptRegistry& prompts, ModelRole teacher,
                           const ForgeOptions& opts) {
  for (const auto& p : problems)
    if (trim(p.gt_solution).empty())
      throw std::invalid_argument("build_sft_dataset: problem " + p.id + " has no gt_solution");

  struct Slot {
    std::optional<SftRecord> record;
    std::optional<QuarantineEntry> quarantine;
    bool mismatch = false;
  };
  std::vector<Slot> slots(problems.size());

  parallel_for_ordered(problems.size(), opts.workers, [&](size_t i) {
    const ProblemRecord& p = problems[i];
    GenerationRequest req;
    req.role = teacher;
    req.prompt = prompts.render(PromptKind::extract_template, p.problem, p.gt_solution);
    req.temperature = 0.0;
    req.max_tokens = opts.max_tokens;
    req.seed = opts.seed;

    GenParse gen = generate_parsed(gateway, req);
    if (!gen.tpl) {
      slots[i].quarantine = QuarantineEntry{p.id, "build_sft", "parse_failed", gen.last_text,
                                            diagnostic_strings(gen.last_parse)};
      return;
    }
    gen.tpl->source_role = SourceRole::teacher;
    std::string answer = extract_answer(*gen.tpl);
    if (!answers_equal(answer, p.gt_answer)) {
      slots[i].mismatch = true;
      slots[i].quarantine = QuarantineEntry{
          p.id, "build_sft", "answer_mismatch",
          "extracted '" + answer + "' vs ground truth '" + p.gt_answer + "'", {}};
      return;
    }
    slots[i].record = SftRecord{p.id, p.problem, std::move(*gen.tpl), std::move(answer)};
  });

  SftBuild build;
  for (auto& slot : slots) {
    if (slot.record) {
      ++build.report.accepted;
      build.records.push_back(std::move(*slot.record));
    } else if (slot.mismatch) {
      ++build.report.answer_mismatch;
      build.quarantine.push_back(std::move(*slot.quarantine));
    } else if (slot.quarantine) {
      ++build.report.parse_failed;
      build.quarantine.push_back(std::move(*slot.quarantine));
    }
  }
  return build;
}

ErrorBuild build_error_dataset(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                               const PromptRegistry& prompts, ModelRole student,
                               const ForgeOptions& opts) {
  struct Slot {
    std::optional<ErrorRecord> record;
    std::optional<QuarantineEntry> quarantine;
    bool correct = false;
  };
  std::vector<Slot> slots(problems.size());

  parallel_for_ordered(problems.size(), opts.workers, [&](size_t i) {
    const ProblemRecord& p = problems[i];
    GenerationRequest req;
    req.role = student;
    req.prompt = prompts.render(PromptKind::ht_reasoning, p.problem);
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
    req.seed = opts.seed;

    GenParse gen = generate_parsed(gateway, req);
    if (!gen.tpl) {
      slots[i].quarantine = QuarantineEntry{p.id, "build_errors", "parse_failed", gen.last_text,
                                            diagnostic_strings(gen.last_parse)};
      return;
    }
    gen.tpl->source_role = SourceRole::student;
    std::string answer = extract_answer(*gen.tpl);
    if (answers_equal(answer, p.gt_answer)) {
      slots[i].correct = true;
      return;
    }
    slots[i].record = ErrorRecord{p.id, std::move(*gen.tpl), std::move(answer), std::nullopt};
  });

  ErrorBuild build;
  for (auto& slot : slots) {
    if (slot.record) {
      ++build.report.wrong;
      build.records.push_back(std::move(*slot.record));
    } else if (slot.correct) {
      ++build.report.correct;
    } else if (slot.quarantine) {
      ++build.report.parse_failed;
      build.quarantine.push_back(std::move(*slot.quarantine));
    }
  }
  return build;
}

std::optional<int> locate_first_error(const HierarchicalTemplate& annotated) {
  for (const auto& step : annotated.steps)
    if (step.annotated()) return step.index;
  return std::nullopt;
}

namespace {

// The annotation block starts at the error step k: analysis is the first
// Cause at index >= k, the corrective text the first Correction at index
// >= k (the fixtures place it one step later when the corrected step
// replaces the flawed one).
std::optional<CorrectionAnnotation> annotation_from(const HierarchicalTemplate& tpl, int k) {
  CorrectionAnnotation out;
  bool any = false;
  for (const auto& step : tpl.steps) {
    if (step.index < k) continue;
    if (out.analysis.empty() && step.cause) {
      out.analysis = *step.cause;
      any = true;
    }
    if (out.correction.empty() && step.correction) {
      out.correction = *step.correction;
      any = true;
    }
    if (!out.analysis.empty() && !out.correction.empty()) break;
  }
  if (!any) return std::nullopt;
  return out;
}

const TemplateStep* find_step(const HierarchicalTemplate& tpl, int index) {
  for (const auto& step : tpl.steps)
    if (step.index == index) return &step;
  return nullptr;
}

}  // namespace

PairBuild build_correction_pairs(const std::vector<ProblemRecord>& problems,
                                 const std::vector<ErrorRecord>& errors, Gateway& gateway,
                                 const PromptRegistry& prompts, ModelRole teacher,
                                 ModelRole student, const ForgeOptions& opts) {
  std::map<std::string, const ProblemRecord*> by_id;
  for (const auto& p : problems) by_id[p.id] = &p;

  struct Slot {
    std::optional<CorrectionPair> pair;
    std::optional<QuarantineEntry> quarantine;
    bool no_error = false;
    bool fallback = false;
  };
  std::vector<Slot> slots(errors.size());

  parallel_for_ordered(errors.size(), opts.workers, [&](size_t i) {
    const ErrorRecord& err = errors[i];
    auto problem_it = by_id.find(err.problem_id);
    if (problem_it == by_id.end()) {
      slots[i].quarantine = QuarantineEntry{
          err.problem_id, "build_pairs", "missing_problem", "no such id in problems file", {}};
      return;
    }
    const ProblemRecord& p = *problem_it->second;
    std::string trace_text = serialize_template(err.trace);

    GenerationRequest teacher_req;
    teacher_req.role = teacher;
    teacher_req.prompt =
        prompts.render(PromptKind::grounded_correction, p.problem, p.gt_solution, trace_text);
    teacher_req.max_tokens = opts.max_tokens;
    teacher_req.seed = opts.seed;
    GenParse teacher_gen = generate_parsed(gateway, teacher_req);
    if (!teacher_gen.tpl) {
      slots[i].quarantine = QuarantineEntry{p.id, "build_pairs", "teacher_parse_failed",
                                            teacher_gen.last_text,
                                            diagnostic_strings(teacher_gen.last_parse)};
      return;
    }

    auto k = locate_first_error(*teacher_gen.tpl);
    if (!k) {
      slots[i].no_error = true;
      return;
    }
    auto chosen = annotation_from(*teacher_gen.tpl, *k);
    if (!chosen) {
      slots[i].no_error = true;
      return;
    }

    CorrectionPair pair;
    pair.problem_id = p.id;
    pair.error_step_index = *k;
    for (const auto& step : teacher_gen.tpl->steps)
      if (step.index < *k) pair.prefix_steps.push_back(step);
    pair.chosen = std::move(*chosen);

    // Student annotates the same trace with the same correction prompt but
    // no ground-truth access.
    GenerationRequest student_req;
    student_req.role = student;
    student_req.prompt = prompts.render(PromptKind::correction, p.problem, std::nullopt, trace_text);
    student_req.temperature = opts.temperature;
    student_req.max_tokens = opts.max_tokens;
    student_req.seed = opts.seed;
    GenParse student_gen = generate_parsed(gateway, student_req);

    std::optional<CorrectionAnnotation> rejected;
    if (student_gen.tpl) rejected = annotation_from(*student_gen.tpl, *k);
    if (!rejected) {
      // Fall back to the student's step-k text verbatim with empty analysis.
      const TemplateStep* step = nullptr;
      if (student_gen.tpl) step = find_step(*student_gen.tpl, *k);
      if (!step) step = find_step(err.trace, *k);
      CorrectionAnnotation fb;
      fb.correction = step ? step->text : "";
      rejected = std::move(fb);
      slots[i].fallback = true;
    }
    pair.rejected = std::move(*rejected);
    slots[i].pair = std::move(pair);
  });

  PairBuild build;
  for (auto& slot : slots) {
    if (slot.fallback) ++build.report.rejected_fallback;
    if (slot.pair) {
      ++build.report.accepted;
      build.pairs.push_back(std::move(*slot.pair));
    } else if (slot.no_error) {
      ++build.report.dropped_no_error;
    } else if (slot.quarantine) {
      ++build.report.parse_failed;
      build.quarantine.push_back(std::move(*slot.quarantine));
    }
  }
  return build;
}

// --- JSONL persistence ---------------------------------------------------

namespace {

json problem_to_json(const ProblemRecord& p) {
  json row = {{"id", p.id},
              {"problem", p.problem},
              {"gt_answer", p.gt_answer},
              {"gt_solution", p.gt_solution}};
  if (p.topic) row["topic"] = to_string(*p.topic);
  if (p.difficulty) row["difficulty"] = *p.difficulty;
  return row;
}

ProblemRecord problem_from_json(const json& row) {
  ProblemRecord p;
  p.id = row.at("id").get<std::string>();
  p.problem = row.at("problem").get<std::string>();
  p.gt_answer = row.at("gt_answer").get<std::string>();
  p.gt_solution = row.value("gt_solution", "");
  if (row.contains("topic")) p.topic = topic_from_string(row.at("topic").get<std::string>());
  if (row.contains("difficulty")) p.difficulty = row.at("difficulty").get<int>();
  return p;
}

HierarchicalTemplate must_parse(const std::string& text, const std::string& what) {
  ParseResult parsed = parse_template(text);
  if (!parsed.ok())
    throw std::runtime_error(what + ": stored template no longer parses: " +
                             parsed.describe_errors());
  return std::move(*parsed.tpl);
}

}  // namespace

void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& problems) {
  std::vector<json> rows;
  rows.reserve(problems.size());
  for (const auto& p : problems) rows.push_back(problem_to_json(p));
  write_jsonl(path, "problems.v1", rows);
}

std::vector<ProblemRecord> read_problems(const std::filesystem::path& path) {
  std::vector<ProblemRecord> out;
  for (const json& row : read_jsonl(path, "problems.v1")) out.push_back(problem_from_json(row));
  return out;
}

void write_sft_records(const std::filesystem::path& path, const std::vector<SftRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records)
    rows.push_back({{"id", r.problem_id},
                    {"problem", r.problem},
                    {"template_text", serialize_template(r.tpl)},
                    {"answer", r.extracted_answer}});
  write_jsonl(path, "sft.v1", rows);
}

std::vector<SftRecord> read_sft_records(const std::filesystem::path& path) {
  std::vector<SftRecord> out;
  for (const json& row : read_jsonl(path, "sft.v1")) {
    SftRecord r;
    r.problem_id = row.at("id").get<std::string>();
    r.problem = row.at("problem").get<std::string>();
    r.tpl = must_parse(row.at("template_text").get<std::string>(), path.string());
    r.extracted_answer = row.at("answer").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_error_records(const std::filesystem::path& path,
                         const std::vector<ErrorRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    json row = {{"id", r.problem_id},
                {"trace_text", serialize_template(r.trace)},
                {"wrong_answer", r.wrong_answer}};
    if (r.first_error_step) row["k"] = *r.first_error_step;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, "err.v1", rows);
}

std::vector<ErrorRecord> read_error_records(const std::filesystem::path& path) {
  std::vector<ErrorRecord> out;
  for (const json& row : read_jsonl(path, "err.v1")) {
    ErrorRecord r;
    r.problem_id = row.at("id").get<std::string>();
    r.trace = must_parse(row.at("trace_text").get<std::string>(), path.string());
    r.trace.source_role = SourceRole::student;
    r.wrong_answer = row.at("wrong_answer").get<std::string>();
    if (row.contains("k")) r.first_error_step = row.at("k").get<int>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_correction_pairs(const std::filesystem::path& path,
                            const std::vector<CorrectionPair>& pairs) {
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) {
    json prefix = json::array();
    for (const auto& step : p.prefix_steps) prefix.push_back(serialize_step(step));
    rows.push_back({{"id", p.problem_id},
                    {"prefix_texts", std::move(prefix)},
                    {"k", p.error_step_index},
                    {"chosen", {{"analysis", p.chosen.analysis}, {"correction", p.chosen.correction}}},
                    {"rejected",
                     {{"analysis", p.rejected.analysis}, {"correction", p.rejected.correction}}}});
  }
  write_jsonl(path, "pairs.v1", rows);
}

std::vector<CorrectionPair> read_correction_pairs(const std::filesystem::path& path) {
  std::vector<CorrectionPair> out;
  for (const json& row : read_jsonl(path, "pairs.v1")) {
    CorrectionPair p;
    p.problem_id = row.at("id").get<std::string>();
    p.error_step_index = row.at("k").get<int>();
    for (const json& text : row.at("prefix_texts")) {
      auto step = parse_step_block(text.get<std::string>());
      if (!step)
        throw std::runtime_error(path.string() + ": stored prefix step no longer parses");
      p.prefix_steps.push_back(std::move(*step));
    }
    p.chosen.analysis = row.at("chosen").at("analysis").get<std::string>();
    p.chosen.correction = row.at("chosen").at("correction").get<std::string>();
    p.rejected.analysis = row.at("rejected").at("analysis").get<std::string>();
    p.rejected.correction = row.at("rejected").at("correction").get<std::string>();
    out.push_back(std::move(p));
  }
  return out;
}

void write_quarantine(const std::filesystem::path& path,
                      const std::vector<QuarantineEntry>& entries) {
  std::vector<json> rows;
  rows.reserve(entries.size());
  for (const auto& q : entries)
    rows.push_back({{"id", q.problem_id},
                    {"stage", q.stage},
                    {"reason", q.reason},
                    {"payload", q.payload},
                    {"diagnostics", q.diagnostics}});
  write_jsonl(path, "quarantine.v1", rows);
}

}  // namespace supercorrect
