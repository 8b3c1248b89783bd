#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace supercorrect {

enum class SourceRole { teacher, student };

// One reasoning step. `text` holds the step's own prose (trimmed, inner
// newlines preserved); the first line doubles as the step title.
struct TemplateStep {
  int index = 0;
  std::string text;
  std::optional<std::string> key;
  std::optional<std::string> cause;
  std::optional<std::string> correction;

  std::optional<std::string> title() const;
  std::string body() const;
  bool annotated() const { return cause.has_value() || correction.has_value(); }

  bool operator==(const TemplateStep&) const = default;
};

struct HierarchicalTemplate {
  std::vector<TemplateStep> steps;
  std::optional<std::string> generalized;  // absent in correction traces
  std::string answer;                      // raw answer body
  SourceRole source_role = SourceRole::teacher;

  // Structural equality; source_role is pipeline provenance, not document
  // structure, so it does not participate.
  bool operator==(const HierarchicalTemplate& o) const {
    return steps == o.steps && generalized == o.generalized && answer == o.answer;
  }
};

enum class Severity { error, warning };

enum class DiagnosticCode {
  unclosed_tag,
  index_gap,
  duplicate_section,
  missing_answer,
  orphan_correction,
  unknown_tag,
};

std::string_view to_string(DiagnosticCode code);
std::string_view to_string(Severity severity);

struct ParseDiagnostic {
  Severity severity = Severity::error;
  size_t begin = 0;  // byte offsets into the source document
  size_t end = 0;
  DiagnosticCode code = DiagnosticCode::unknown_tag;
  std::string message;
};

struct ParseResult {
  std::optional<HierarchicalTemplate> tpl;  // set iff no error-severity diagnostics
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return tpl.has_value(); }
  bool has_errors() const;
  bool has_warnings() const;
  std::string describe_errors() const;
};

// Parses the hierarchical thought-template tag language. Accepts both the
// "<Step1>" and "<Step 1:>" spellings, case-insensitive tag names, and an
// unslashed repeat of a section tag as its close (with a warning). Pure
// function of the input bytes.
ParseResult parse_template(std::string_view source);

// Canonical form: "<StepN>" spelling, trimmed bodies, Cause before
// Correction, one section per line group. parse(serialize(t)) is
// structurally equal to t, and serialize∘parse∘serialize is byte-stable.
std::string serialize_template(const HierarchicalTemplate& t);
std::string serialize_step(const TemplateStep& step);

// Parses one serialized "<StepN>...</StepN>" block regardless of its index.
// Returns nullopt if the text is not a single well-formed step.
std::optional<TemplateStep> parse_step_block(std::string_view text);

// Pulls the final answer value out of the answer body: a bare value, a
// trailing "is <value>" clause, or a trailing value token win; otherwise the
// trimmed body is returned as-is. Throws std::invalid_argument on an empty
// answer body.
std::string extract_answer(const HierarchicalTemplate& t);

}  // namespace supercorrect
