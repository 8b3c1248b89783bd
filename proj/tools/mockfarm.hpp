#pragma once

#include <memory>
#include <string>
#include <vector>

#include "supercorrect/forge.hpp"
#include "supercorrect/gateway.hpp"
#include "supercorrect/prompts.hpp"

namespace supercorrect::mockfarm {

// Knobs for the synthetic arithmetic corpus and its scripted model
// responses. Everything downstream of the seed is deterministic.
struct FarmConfig {
  int problem_count = 100;
  uint64_t seed = 42;
  double student_wrong_rate = 0.4;
  double student_garbled_rate = 0.03;
  double teacher_mismatch_rate = 0.03;
  double teacher_garbled_rate = 0.02;
  double teacher_no_error_rate = 0.05;   // grounded pass finds nothing
  double student_no_error_rate = 0.20;   // self-correction claims all fine
  double student_fix_garbled_rate = 0.10;
};

struct Farm {
  std::vector<ProblemRecord> problems;
  std::shared_ptr<ScriptedBackend> backend;
};

// Builds arithmetic problems plus scripted teacher/student responses for
// every prompt the pipeline will render: template extraction, hierarchical
// reasoning, grounded corrections, and self-corrections.
Farm make_farm(const PromptRegistry& prompts, const FarmConfig& cfg);

// Well-formed student reasoning template for an arithmetic problem ending in
// `answer`; the computation happens in step 3.
std::string student_reasoning_template(const ProblemRecord& p, const std::string& answer);

// Transformed trace in correction format: the given steps with a Cause and
// Correction inserted at step k and the final answer replaced. Generalized
// is dropped, matching the correction prompt's output contract.
std::string correction_response(const HierarchicalTemplate& trace, int k, const std::string& cause,
                                const std::string& correction, const std::string& final_answer);

// Transformed trace with no annotations: the annotator judged it correct.
std::string no_error_response(const HierarchicalTemplate& trace);

// Student backend whose answer is correct with probability p per
// (problem, seed) pair, hash-derived so runs are reproducible. Responds to
// hierarchical-reasoning prompts for the given problems under any role.
std::shared_ptr<ScriptedBackend> make_bernoulli_student(std::vector<ProblemRecord> problems,
                                                        double p_correct);

}  // namespace supercorrect::mockfarm
