#include "mockfarm.hpp"

#include <random>
#include <stdexcept>

#include "supercorrect/util.hpp"

namespace supercorrect::mockfarm {

namespace {

constexpr Topic kTopics[7] = {
    Topic::algebra,        Topic::counting_probability, Topic::intermediate_algebra,
    Topic::number_theory,  Topic::geometry,             Topic::prealgebra,
    Topic::precalculus,
};

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double unit_from_hash(uint64_t h) {
  return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
}

std::string teacher_template(const ProblemRecord& p, const std::string& expr,
                             const std::string& answer) {
  std::string out;
  out += "<Step1>\nIdentify the operands and the operation.\nWe must evaluate " + expr + ".\n</Step1>\n";
  out += "<Step2>\nCarry out the arithmetic.\n<Key>\nCompute carefully: " + expr + " = " + answer +
         ".\n</Key>\n</Step2>\n";
  out += "<Step3>\nState the result.\nThe value of " + expr + " is " + answer + ".\n</Step3>\n";
  out +=
      "<Generalized>\nIdentify the operands, apply the operation with care, and report the "
      "result.\n</Generalized>\n";
  out += "<Answer>\n" + answer + "\n</Answer>\n";
  return out;
}

}  // namespace

std::string student_reasoning_template(const ProblemRecord& p, const std::string& answer) {
  std::string expr = p.problem;
  std::string out;
  out += "<Step1>\nRead the problem.\n" + p.problem + "\n</Step1>\n";
  out += "<Step2>\nSet up the computation from the problem statement.\n</Step2>\n";
  out += "<Step3>\nCompute the operation.\nThe computation gives " + answer + ".\n</Step3>\n";
  out += "<Step4>\nReport the answer.\n</Step4>\n";
  out += "<Generalized>\nRead carefully, set up the expression, compute, and report.\n</Generalized>\n";
  out += "<Answer>\n" + answer + "\n</Answer>\n";
  return out;
}

std::string correction_response(const HierarchicalTemplate& trace, int k, const std::string& cause,
                                const std::string& correction, const std::string& final_answer) {
  HierarchicalTemplate out;
  out.steps = trace.steps;
  for (auto& step : out.steps) {
    if (step.index == k) {
      step.cause = cause;
      step.correction = correction;
    }
  }
  out.answer = final_answer;
  return serialize_template(out);
}

std::string no_error_response(const HierarchicalTemplate& trace) {
  HierarchicalTemplate out;
  out.steps = trace.steps;
  out.answer = trace.answer;
  return serialize_template(out);
}

Farm make_farm(const PromptRegistry& prompts, const FarmConfig& cfg) {
  Farm farm;
  farm.backend = std::make_shared<ScriptedBackend>();
  std::mt19937_64 rng(cfg.seed);
  auto unit = [&rng] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

  const ModelRole student_roles[] = {ModelRole::student_base, ModelRole::student_ref,
                                     ModelRole::policy};

  for (int i = 0; i < cfg.problem_count; ++i) {
    long a = 2 + static_cast<long>(rng() % 98);
    long b = 2 + static_cast<long>(rng() % 98);
    int op = static_cast<int>(rng() % 3);
    if (op == 1 && b > a) std::swap(a, b);
    long value = op == 0 ? a + b : op == 1 ? a - b : a * b;
    const char* sym = op == 0 ? "+" : op == 1 ? "-" : "*";
    std::string expr = std::to_string(a) + " " + sym + " " + std::to_string(b);

    ProblemRecord p;
    char id[16];
    std::snprintf(id, sizeof(id), "P%04d", i + 1);
    p.id = id;
    p.problem = "Compute " + expr + ".";
    p.gt_answer = std::to_string(value);
    p.gt_solution = "Identify the operands " + std::to_string(a) + " and " + std::to_string(b) +
                    ". Apply the operation: " + expr + " = " + p.gt_answer + ". The answer is " +
                    p.gt_answer + ".";
    p.topic = kTopics[i % 7];
    p.difficulty = 1 + i % 5;

    // Teacher template extraction.
    double u_teacher = unit();
    std::string teacher_text;
    if (u_teacher < cfg.teacher_garbled_rate) {
      teacher_text = "<Step1>\nThe solution transformation went off the rails";
    } else if (u_teacher < cfg.teacher_garbled_rate + cfg.teacher_mismatch_rate) {
      teacher_text = teacher_template(p, expr, std::to_string(value + 1));
    } else {
      teacher_text = teacher_template(p, expr, p.gt_answer);
    }
    farm.backend->add(ModelRole::teacher,
                      prompts.render(PromptKind::extract_template, p.problem, p.gt_solution).text,
                      teacher_text);

    // Student reasoning pass.
    bool wrong = unit() < cfg.student_wrong_rate;
    bool garbled = unit() < cfg.student_garbled_rate;
    long wrong_value = value + 1 + static_cast<long>(rng() % 3);
    std::string student_answer = wrong ? std::to_string(wrong_value) : p.gt_answer;
    std::string student_text = garbled ? "<Step1>\nI lost track of the question"
                                       : student_reasoning_template(p, student_answer);
    std::string ht_prompt = prompts.render(PromptKind::ht_reasoning, p.problem).text;
    for (ModelRole role : student_roles) farm.backend->add(role, ht_prompt, student_text);

    // Correction passes exist only for parseable wrong traces.
    double u_no_error = unit();
    double u_fix = unit();
    long weaker_value = wrong_value + 1;
    if (wrong && !garbled) {
      ParseResult parsed = parse_template(student_text);
      const HierarchicalTemplate& trace = *parsed.tpl;
      std::string trace_text = serialize_template(trace);

      std::string grounded =
          u_no_error < cfg.teacher_no_error_rate
              ? no_error_response(trace)
              : correction_response(
                    trace, 3,
                    "The arithmetic in this step is wrong: " + expr + " is not " + student_answer + ".",
                    "Recompute the operation: " + expr + " = " + p.gt_answer + ".", p.gt_answer);
      farm.backend->add(
          ModelRole::teacher,
          prompts.render(PromptKind::grounded_correction, p.problem, p.gt_solution, trace_text).text,
          grounded);

      std::string self_fix;
      if (u_fix < cfg.student_no_error_rate) {
        self_fix = no_error_response(trace);
      } else if (u_fix < cfg.student_no_error_rate + cfg.student_fix_garbled_rate) {
        self_fix = "The steps look <wrong> to me";
      } else {
        self_fix = correction_response(
            trace, 3, "There might be a slip in the arithmetic.",
            "Recheck the computation: " + expr + " = " + std::to_string(weaker_value) + ".",
            std::to_string(weaker_value));
      }
      std::string fix_prompt =
          prompts.render(PromptKind::correction, p.problem, std::nullopt, trace_text).text;
      for (ModelRole role : student_roles) farm.backend->add(role, fix_prompt, self_fix);
    }

    farm.problems.push_back(std::move(p));
  }
  return farm;
}

std::shared_ptr<ScriptedBackend> make_bernoulli_student(std::vector<ProblemRecord> problems,
                                                        double p_correct) {
  auto backend = std::make_shared<ScriptedBackend>();
  auto by_text = std::make_shared<std::map<std::string, ProblemRecord>>();
  for (auto& p : problems) (*by_text)[p.problem] = std::move(p);

  backend->set_fallback([by_text, p_correct](const GenerationRequest& req)
                            -> std::optional<std::string> {
    if (req.prompt.attachments.empty() || req.prompt.attachments[0].first != "problem")
      return std::nullopt;
    auto it = by_text->find(req.prompt.attachments[0].second);
    if (it == by_text->end()) return std::nullopt;
    const ProblemRecord& p = it->second;
    uint64_t h = fnv1a64(p.id + ":" + std::to_string(req.seed.value_or(0)));
    bool correct = unit_from_hash(h) < p_correct;
    long gt = std::strtol(p.gt_answer.c_str(), nullptr, 10);
    std::string answer = correct ? p.gt_answer : std::to_string(gt + 1);
    return student_reasoning_template(p, answer);
  });
  return backend;
}

}  // namespace supercorrect::mockfarm
