#include "supercorrect/prompts.hpp"

#include <stdexcept>

#include "supercorrect/util.hpp"

namespace supercorrect {

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::extract_template: return "extract_template";
    case PromptKind::ht_reasoning: return "ht_reasoning";
    case PromptKind::grounded_correction: return "grounded_correction";
    case PromptKind::correction: return "correction";
  }
  return "?";
}

std::string_view prompt_filename(PromptKind kind) {
  switch (kind) {
    case PromptKind::extract_template: return "extract_template.txt";
    case PromptKind::ht_reasoning: return "ht_reasoning.txt";
    case PromptKind::grounded_correction: return "grounded_correction.txt";
    case PromptKind::correction: return "correction.txt";
  }
  return "?";
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir) {
  PromptRegistry reg;
  for (PromptKind kind : {PromptKind::extract_template, PromptKind::ht_reasoning,
                          PromptKind::grounded_correction, PromptKind::correction}) {
    auto path = dir / prompt_filename(kind);
    reg.texts_[static_cast<int>(kind)] = read_file(path);
  }
  return reg;
}

const std::string& PromptRegistry::instruction(PromptKind kind) const {
  return texts_[static_cast<int>(kind)];
}

RenderedPrompt PromptRegistry::render(PromptKind kind, std::string_view problem,
                                      std::optional<std::string_view> solution,
                                      std::optional<std::string_view> trace) const {
  const bool wants_solution =
      kind == PromptKind::extract_template || kind == PromptKind::grounded_correction;
  const bool wants_trace =
      kind == PromptKind::grounded_correction || kind == PromptKind::correction;

  if (wants_solution && !solution)
    throw std::invalid_argument(std::string(to_string(kind)) + " requires a reference solution");
  if (!wants_solution && solution)
    throw std::invalid_argument(std::string(to_string(kind)) + " does not take a solution");
  if (wants_trace && !trace)
    throw std::invalid_argument(std::string(to_string(kind)) + " requires a reasoning trace");
  if (!wants_trace && trace)
    throw std::invalid_argument(std::string(to_string(kind)) + " does not take a trace");

  RenderedPrompt out;
  out.kind = kind;
  out.attachments.emplace_back("problem", std::string(problem));
  if (solution) out.attachments.emplace_back("reference_solution", std::string(*solution));
  if (trace) out.attachments.emplace_back("reasoning_steps", std::string(*trace));

  out.text = instruction(kind);
  out.text += "\n\nProblem:\n";
  out.text += problem;
  if (solution) {
    out.text += "\n\nReference Solution:\n";
    out.text += *solution;
  }
  if (trace) {
    out.text += "\n\nReasoning steps to be Checked:\n";
    out.text += *trace;
  }
  return out;
}

}  // namespace supercorrect
