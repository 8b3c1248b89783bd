#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "supercorrect/gateway.hpp"
#include "supercorrect/template.hpp"

namespace supercorrect {

enum class Topic {
  algebra,
  counting_probability,
  intermediate_algebra,
  number_theory,
  geometry,
  prealgebra,
  precalculus,
  other,
};

std::string_view to_string(Topic topic);
Topic topic_from_string(std::string_view name);
inline constexpr int kTopicCount = 8;

// A math problem with its ground-truth answer and worked solution.
struct ProblemRecord {
  std::string id;
  std::string problem;      // x
  std::string gt_answer;    // known-correct final answer
  std::string gt_solution;  // worked reference solution
  std::optional<Topic> topic;
  std::optional<int> difficulty;  // 1..5

  bool operator==(const ProblemRecord&) const = default;
};

// Teacher-extracted template whose answer matched ground truth.
struct SftRecord {
  std::string problem_id;
  std::string problem;
  HierarchicalTemplate tpl;
  std::string extracted_answer;

  bool operator==(const SftRecord&) const = default;
};

// Student trace whose answer missed ground truth.
struct ErrorRecord {
  std::string problem_id;
  HierarchicalTemplate trace;
  std::string wrong_answer;
  std::optional<int> first_error_step;

  bool operator==(const ErrorRecord&) const = default;
};

struct CorrectionAnnotation {
  std::string analysis;
  std::string correction;

  bool operator==(const CorrectionAnnotation&) const = default;
};

// One preference row: the teacher's grounded annotation of the first error
// step (chosen) against the student's own ungrounded annotation (rejected),
// conditioned on the verified prefix steps.
struct CorrectionPair {
  std::string problem_id;
  std::vector<TemplateStep> prefix_steps;  // exactly k-1 steps
  int error_step_index = 0;                // k
  CorrectionAnnotation chosen;
  CorrectionAnnotation rejected;
  SourceRole chosen_source = SourceRole::teacher;
  SourceRole rejected_source = SourceRole::student;

  bool operator==(const CorrectionPair&) const = default;
};

struct QuarantineEntry {
  std::string problem_id;
  std::string stage;
  std::string reason;
  std::string payload;
  std::vector<std::string> diagnostics;
};

struct BuildReport {
  int accepted = 0;
  int parse_failed = 0;
  int answer_mismatch = 0;
  int correct = 0;
  int wrong = 0;
  int dropped_no_error = 0;
  int rejected_fallback = 0;

  nlohmann::json to_json() const;
};

struct ForgeOptions {
  double temperature = 0.7;  // sampling temperature for student traces
  int max_tokens = 4096;
  int workers = 4;
  std::optional<uint64_t> seed;
};

struct SftBuild {
  std::vector<SftRecord> records;
  BuildReport report;
  std::vector<QuarantineEntry> quarantine;
};

// Teacher transforms each ground-truth solution into a hierarchical
// template; records that fail to parse after one reprompt or whose answer
// does not match ground truth are quarantined, never written.
SftBuild build_sft_dataset(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                           const PromptRegistry& prompts, ModelRole teacher = ModelRole::teacher,
                           const ForgeOptions& opts = {});

struct ErrorBuild {
  std::vector<ErrorRecord> records;
  BuildReport report;
  std::vector<QuarantineEntry> quarantine;
};

// Student solves each problem; only traces whose extracted answer differs
// from ground truth are emitted.
ErrorBuild build_error_dataset(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                               const PromptRegistry& prompts,
                               ModelRole student = ModelRole::student_ref,
                               const ForgeOptions& opts = {});

// Smallest step index carrying a Cause or Correction annotation; nullopt
// when the annotator judged the trace error-free.
std::optional<int> locate_first_error(const HierarchicalTemplate& annotated);

struct PairBuild {
  std::vector<CorrectionPair> pairs;
  BuildReport report;
  std::vector<QuarantineEntry> quarantine;
};

// For each error trace, the teacher annotates with ground-truth access
// (chosen) and the student annotates without it (rejected), both via the
// correction prompts. The teacher's error localization k is authoritative;
// the student's annotation is sliced at that step.
PairBuild build_correction_pairs(const std::vector<ProblemRecord>& problems,
                                 const std::vector<ErrorRecord>& errors, Gateway& gateway,
                                 const PromptRegistry& prompts,
                                 ModelRole teacher = ModelRole::teacher,
                                 ModelRole student = ModelRole::student_ref,
                                 const ForgeOptions& opts = {});

// JSONL persistence. Schemas: problems.v1, sft.v1 {id, problem,
// template_text, answer}, err.v1 {id, trace_text, wrong_answer, k?},
// pairs.v1 {id, prefix_texts[], k, chosen{analysis, correction},
// rejected{analysis, correction}}, quarantine.v1.
void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& problems);
std::vector<ProblemRecord> read_problems(const std::filesystem::path& path);
void write_sft_records(const std::filesystem::path& path, const std::vector<SftRecord>& records);
std::vector<SftRecord> read_sft_records(const std::filesystem::path& path);
void write_error_records(const std::filesystem::path& path, const std::vector<ErrorRecord>& records);
std::vector<ErrorRecord> read_error_records(const std::filesystem::path& path);
void write_correction_pairs(const std::filesystem::path& path,
                            const std::vector<CorrectionPair>& pairs);
std::vector<CorrectionPair> read_correction_pairs(const std::filesystem::path& path);
void write_quarantine(const std::filesystem::path& path,
                      const std::vector<QuarantineEntry>& entries);

}  // namespace supercorrect
