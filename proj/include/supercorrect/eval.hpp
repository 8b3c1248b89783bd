#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "supercorrect/forge.hpp"

namespace supercorrect {

// Shared answer-equivalence predicate: trim, strip trailing punctuation,
// \frac{a}{b} -> a/b, thousands separators removed; exact rational
// comparison when both sides parse as rationals, case-insensitive string
// equality otherwise. Symmetric and reflexive on normalized forms.
bool answers_equal(std::string_view a, std::string_view b);

struct Outcome {
  std::string problem_id;
  std::string extracted_answer;
  bool correct = false;
  std::optional<Topic> topic;
  std::optional<int> difficulty;
  bool flagged = false;  // unparseable trace or failed correction pass
};

struct TopicStats {
  int correct = 0;
  int total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct EvalRun {
  std::string run_id;
  std::vector<Outcome> outcomes;
  uint64_t seed = 0;
  std::string timestamp;

  double accuracy() const;
  int flag_count() const;
  std::map<Topic, TopicStats> per_topic() const;
  nlohmann::json to_json() const;
};

// Scores one trace per problem (positional). Unparseable traces count as
// incorrect and are flagged.
EvalRun score_run(const std::vector<ProblemRecord>& problems,
                  const std::vector<std::string>& traces, std::string run_id = "run");

struct SelfCorrectionResult {
  EvalRun base;
  EvalRun corrected;
  double delta = 0.0;  // corrected.accuracy - base.accuracy
  nlohmann::json to_json() const;
};

// Two-pass protocol: the student first solves with the hierarchical
// reasoning prompt, then reviews its own serialized trace with the
// correction prompt. The correction pass's answer wins whenever it reports
// an error, even when that makes the result worse; a no-error report or an
// unparseable correction pass keeps the base answer.
SelfCorrectionResult self_correction_eval(const std::vector<ProblemRecord>& problems,
                                          Gateway& gateway, const PromptRegistry& prompts,
                                          ModelRole student = ModelRole::policy,
                                          const ForgeOptions& opts = {});

struct StabilityReport {
  int n_runs = 0;
  std::vector<double> accuracies;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  bool aborted = false;   // a run failed entirely; accuracies hold the rest
  nlohmann::json to_json() const;
};

// Repeats the evaluation n_runs times with per-run seeds and reports the
// population mean/variance of accuracy. Runs execute independently.
StabilityReport stability_eval(const std::vector<ProblemRecord>& problems, Gateway& gateway,
                               const PromptRegistry& prompts, ModelRole student, int n_runs,
                               const std::vector<uint64_t>& seeds, const ForgeOptions& opts = {});

std::string per_topic_csv(const EvalRun& run);

}  // namespace supercorrect
