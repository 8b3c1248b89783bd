#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace supercorrect {

// The four instruction prompts, stored as data files (prompts/*.txt), one
// per kind, loaded verbatim.
enum class PromptKind {
  extract_template,    // teacher: solution -> hierarchical template
  ht_reasoning,        // student: solve with hierarchical thoughts
  grounded_correction, // teacher: annotate errors, with reference solution
  correction,          // student: annotate errors, no reference solution
};

std::string_view to_string(PromptKind kind);
std::string_view prompt_filename(PromptKind kind);

struct RenderedPrompt {
  PromptKind kind = PromptKind::ht_reasoning;
  std::string text;
  std::vector<std::pair<std::string, std::string>> attachments;  // (label, payload)
};

class PromptRegistry {
 public:
  // Reads the four prompt files from `dir`. Throws if any is missing.
  static PromptRegistry load(const std::filesystem::path& dir);

  const std::string& instruction(PromptKind kind) const;

  // Appends the labeled attachments after the instruction block in fixed
  // order problem -> solution -> trace. Enforces per-kind attachment rules;
  // violations throw std::invalid_argument.
  RenderedPrompt render(PromptKind kind, std::string_view problem,
                        std::optional<std::string_view> solution = std::nullopt,
                        std::optional<std::string_view> trace = std::nullopt) const;

 private:
  std::string texts_[4];
};

}  // namespace supercorrect
