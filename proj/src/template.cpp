#include "supercorrect/template.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "supercorrect/text.hpp"
#include "supercorrect/util.hpp"

namespace supercorrect {

std::optional<std::string> TemplateStep::title() const {
  if (text.empty()) return std::nullopt;
  size_t nl = text.find('\n');
  return nl == std::string::npos ? text : trim(text.substr(0, nl));
}

std::string TemplateStep::body() const {
  size_t nl = text.find('\n');
  if (nl == std::string::npos) return "";
  return trim(text.substr(nl + 1));
}

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::unclosed_tag: return "unclosed_tag";
    case DiagnosticCode::index_gap: return "index_gap";
    case DiagnosticCode::duplicate_section: return "duplicate_section";
    case DiagnosticCode::missing_answer: return "missing_answer";
    case DiagnosticCode::orphan_correction: return "orphan_correction";
    case DiagnosticCode::unknown_tag: return "unknown_tag";
  }
  return "?";
}

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

bool ParseResult::has_errors() const {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::error) return true;
  return false;
}

bool ParseResult::has_warnings() const {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::warning) return true;
  return false;
}

std::string ParseResult::describe_errors() const {
  std::ostringstream ss;
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::error) continue;
    ss << to_string(d.code) << " @" << d.begin << ": " << d.message << "; ";
  }
  return ss.str();
}

namespace {

enum class TagName { step, key, generalized, answer, cause, correction, unknown };

struct Tag {
  bool closing = false;
  TagName name = TagName::unknown;
  std::string word;
  int index = -1;
  size_t begin = 0;
  size_t end = 0;  // one past '>'
};

TagName classify(std::string_view word) {
  std::string w = to_lower(word);
  if (w == "step") return TagName::step;
  if (w == "key") return TagName::key;
  if (w == "generalized") return TagName::generalized;
  if (w == "answer") return TagName::answer;
  if (w == "cause") return TagName::cause;
  if (w == "correction") return TagName::correction;
  return TagName::unknown;
}

// Recognizes </? name [index] [:] > with optional spaces between the parts.
// The name must start immediately after '<' (or '</') so comparisons like
// "a < b" stay literal text.
std::optional<Tag> try_parse_tag(std::string_view s, size_t pos) {
  constexpr size_t kMaxTagLen = 64;
  Tag tag;
  tag.begin = pos;
  size_t i = pos + 1;
  if (i < s.size() && s[i] == '/') {
    tag.closing = true;
    ++i;
  }
  size_t word_begin = i;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
  if (i == word_begin) return std::nullopt;
  tag.word = std::string(s.substr(word_begin, i - word_begin));
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    int idx = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      idx = idx * 10 + (s[i] - '0');
      if (idx > 9999) return std::nullopt;
      ++i;
    }
    tag.index = idx;
  }
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  if (i < s.size() && s[i] == ':') {
    ++i;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  if (i >= s.size() || s[i] != '>') return std::nullopt;
  tag.end = i + 1;
  if (tag.end - tag.begin > kMaxTagLen) return std::nullopt;
  tag.name = classify(tag.word);
  return tag;
}

class Parser {
 public:
  // In fragment mode steps may start at any index and the Answer section is
  // not required; used for parsing isolated step blocks.
  explicit Parser(std::string_view source, bool fragment = false)
      : src_(source), fragment_(fragment) {}

  ParseResult run() {
    size_t pos = 0;
    while (pos < src_.size()) {
      size_t lt = src_.find('<', pos);
      if (lt == std::string_view::npos) {
        append_text(src_.substr(pos), pos);
        break;
      }
      if (lt > pos) append_text(src_.substr(pos, lt - pos), pos);
      auto tag = try_parse_tag(src_, lt);
      if (!tag) {
        append_text(src_.substr(lt, 1), lt);
        pos = lt + 1;
        continue;
      }
      handle_tag(*tag);
      pos = tag->end;
    }
    finish();

    ParseResult result;
    result.diagnostics = std::move(diags_);
    bool errored = false;
    for (const auto& d : result.diagnostics)
      if (d.severity == Severity::error) errored = true;
    if (!errored) {
      HierarchicalTemplate t;
      t.steps = std::move(steps_);
      t.generalized = std::move(generalized_);
      t.answer = answer_.value_or("");
      result.tpl = std::move(t);
    }
    return result;
  }

 private:
  void diag(Severity sev, DiagnosticCode code, size_t begin, size_t end, std::string msg) {
    diags_.push_back({sev, begin, end, code, std::move(msg)});
  }

  std::string* active_text() {
    if (open_ann_) return &ann_text_;
    if (cur_step_) return &step_text_;
    if (open_sec_) return &sec_text_;
    return nullptr;
  }

  void append_text(std::string_view chunk, size_t at) {
    if (std::string* acc = active_text()) {
      acc->append(chunk);
      return;
    }
    if (stray_.empty()) stray_begin_ = at;
    stray_.append(chunk);
  }

  void flush_stray() {
    if (trim(stray_).empty()) {
      stray_.clear();
      return;
    }
    diag(Severity::warning, DiagnosticCode::unknown_tag, stray_begin_,
         stray_begin_ + stray_.size(), "stray text outside tagged sections ignored");
    stray_.clear();
  }

  void close_annotation(const Tag& at, bool via_repeat_open) {
    std::optional<std::string>* slot = nullptr;
    const char* label = nullptr;
    switch (*open_ann_) {
      case TagName::key: slot = &cur_step_->key; label = "Key"; break;
      case TagName::cause: slot = &cur_step_->cause; label = "Cause"; break;
      case TagName::correction: slot = &cur_step_->correction; label = "Correction"; break;
      default: break;
    }
    if (via_repeat_open)
      diag(Severity::warning, DiagnosticCode::unclosed_tag, at.begin, at.end,
           std::string("<") + label + "> closed by a repeated open tag");
    std::string content = trim(ann_text_);
    if (slot->has_value())
      diag(Severity::warning, DiagnosticCode::duplicate_section, at.begin, at.end,
           std::string("extra <") + label + "> in step " + std::to_string(cur_step_->index) +
               " ignored; keeping the first");
    else
      *slot = std::move(content);
    open_ann_.reset();
    ann_text_.clear();
  }

  void finalize_step(const Tag& at) {
    if (open_ann_) {
      diag(Severity::warning, DiagnosticCode::unclosed_tag, at.begin, at.end,
           "annotation left open at step close");
      close_annotation(at, false);
    }
    cur_step_->text = trim(step_text_);
    if (cur_step_->cause.has_value() != cur_step_->correction.has_value()) {
      const char* present = cur_step_->cause ? "Cause" : "Correction";
      diag(Severity::warning, DiagnosticCode::orphan_correction, at.begin, at.end,
           std::string("step ") + std::to_string(cur_step_->index) + " carries <" + present +
               "> without its counterpart");
    }
    steps_.push_back(std::move(*cur_step_));
    cur_step_.reset();
    step_text_.clear();
  }

  void close_section(const Tag& at, bool via_repeat_open) {
    const char* label = *open_sec_ == TagName::generalized ? "Generalized" : "Answer";
    if (via_repeat_open)
      diag(Severity::warning, DiagnosticCode::unclosed_tag, at.begin, at.end,
           std::string("<") + label + "> closed by a repeated open tag");
    std::string content = trim(sec_text_);
    if (!sec_discard_) {
      if (*open_sec_ == TagName::generalized)
        generalized_ = std::move(content);
      else
        answer_ = std::move(content);
    }
    open_sec_.reset();
    sec_text_.clear();
    sec_discard_ = false;
  }

  void open_step(const Tag& tag) {
    if (generalized_ || answer_ || open_sec_) {
      diag(Severity::error, DiagnosticCode::duplicate_section, tag.begin, tag.end,
           "step opened after the Generalized/Answer sections");
    }
    if (fragment_ && steps_.empty() && tag.index > 0) first_index_ = tag.index;
    int expected = first_index_ + static_cast<int>(steps_.size());
    if (tag.index < 0) {
      diag(Severity::error, DiagnosticCode::index_gap, tag.begin, tag.end,
           "step tag without an index");
    } else if (tag.index != expected) {
      diag(Severity::error, DiagnosticCode::index_gap, tag.begin, tag.end,
           "expected <Step" + std::to_string(expected) + ">, found <Step" +
               std::to_string(tag.index) + ">");
    }
    cur_step_.emplace();
    cur_step_->index = tag.index < 0 ? expected : tag.index;
    step_text_.clear();
  }

  void handle_tag(const Tag& tag) {
    flush_stray();
    switch (tag.name) {
      case TagName::step: handle_step_tag(tag); return;
      case TagName::key:
      case TagName::cause:
      case TagName::correction: handle_annotation_tag(tag); return;
      case TagName::generalized:
      case TagName::answer: handle_section_tag(tag); return;
      case TagName::unknown: {
        std::string raw(src_.substr(tag.begin, tag.end - tag.begin));
        diag(Severity::warning, DiagnosticCode::unknown_tag, tag.begin, tag.end,
             "unknown tag " + raw + " kept as literal text");
        append_text(raw, tag.begin);
        return;
      }
    }
  }

  void handle_step_tag(const Tag& tag) {
    if (!tag.closing) {
      if (cur_step_) {
        diag(Severity::error, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
             "step " + std::to_string(tag.index) + " opened inside step " +
                 std::to_string(cur_step_->index) + " (nested or unclosed step)");
        finalize_step(tag);
      }
      open_step(tag);
      return;
    }
    if (!cur_step_) {
      diag(Severity::error, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
           "step close without a matching open");
      return;
    }
    if (tag.index >= 0 && tag.index != cur_step_->index) {
      diag(Severity::error, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
           "close tag index " + std::to_string(tag.index) + " does not match open step " +
               std::to_string(cur_step_->index));
    }
    finalize_step(tag);
  }

  void handle_annotation_tag(const Tag& tag) {
    if (!cur_step_) {
      // Annotations belong inside steps. Tolerated as stray markup so one
      // sloppy model response does not void the whole trace.
      std::string raw(src_.substr(tag.begin, tag.end - tag.begin));
      diag(Severity::warning, DiagnosticCode::unknown_tag, tag.begin, tag.end,
           "annotation tag " + raw + " outside of a step ignored");
      return;
    }
    if (tag.closing) {
      if (open_ann_ && *open_ann_ == tag.name) {
        close_annotation(tag, false);
      } else {
        diag(Severity::warning, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
             "close tag without a matching open ignored");
      }
      return;
    }
    if (open_ann_ && *open_ann_ == tag.name) {
      close_annotation(tag, true);
      return;
    }
    if (open_ann_) {
      diag(Severity::warning, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
           "annotation implicitly closed by the next annotation");
      close_annotation(tag, false);
    }
    open_ann_ = tag.name;
    ann_text_.clear();
  }

  void handle_section_tag(const Tag& tag) {
    const char* label = tag.name == TagName::generalized ? "Generalized" : "Answer";
    if (cur_step_) {
      diag(Severity::error, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
           std::string("<") + label + "> inside step " + std::to_string(cur_step_->index) +
               " (missing step close)");
      finalize_step(tag);
    }
    bool have = tag.name == TagName::generalized ? generalized_.has_value() : answer_.has_value();
    if (tag.closing) {
      if (open_sec_ && *open_sec_ == tag.name) {
        close_section(tag, false);
      } else {
        diag(Severity::warning, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
             "close tag without a matching open ignored");
      }
      return;
    }
    if (open_sec_ && *open_sec_ == tag.name) {
      close_section(tag, true);  // unslashed close, Appendix style
      return;
    }
    if (open_sec_) {
      diag(Severity::warning, DiagnosticCode::unclosed_tag, tag.begin, tag.end,
           "section implicitly closed by the next section");
      close_section(tag, false);
      have = tag.name == TagName::generalized ? generalized_.has_value() : answer_.has_value();
    }
    if (have) {
      diag(Severity::error, DiagnosticCode::duplicate_section, tag.begin, tag.end,
           std::string("duplicate <") + label + "> section");
      sec_discard_ = true;
    }
    open_sec_ = tag.name;
    sec_text_.clear();
  }

  void finish() {
    flush_stray();
    size_t end = src_.size();
    Tag eof{false, TagName::unknown, "", -1, end, end};
    if (open_ann_) {
      diag(Severity::error, DiagnosticCode::unclosed_tag, end, end,
           "annotation still open at end of document");
      close_annotation(eof, false);
    }
    if (cur_step_) {
      diag(Severity::error, DiagnosticCode::unclosed_tag, end, end,
           "step " + std::to_string(cur_step_->index) + " still open at end of document");
      finalize_step(eof);
    }
    if (open_sec_) {
      const char* label = *open_sec_ == TagName::generalized ? "Generalized" : "Answer";
      diag(Severity::error, DiagnosticCode::unclosed_tag, end, end,
           std::string("<") + label + "> still open at end of document");
      close_section(eof, false);
    }
    if (fragment_) return;
    if (steps_.empty())
      diag(Severity::error, DiagnosticCode::index_gap, end, end, "no steps found (expected <Step1>)");
    if (!answer_)
      diag(Severity::error, DiagnosticCode::missing_answer, end, end, "missing <Answer> section");
    else if (trim(*answer_).empty())
      diag(Severity::error, DiagnosticCode::missing_answer, end, end, "empty answer body");
  }

  std::string_view src_;
  bool fragment_ = false;
  int first_index_ = 1;
  std::vector<ParseDiagnostic> diags_;
  std::vector<TemplateStep> steps_;
  std::optional<std::string> generalized_;
  std::optional<std::string> answer_;

  std::optional<TemplateStep> cur_step_;
  std::string step_text_;
  std::optional<TagName> open_ann_;
  std::string ann_text_;
  std::optional<TagName> open_sec_;
  std::string sec_text_;
  bool sec_discard_ = false;
  std::string stray_;
  size_t stray_begin_ = 0;
};

}  // namespace

ParseResult parse_template(std::string_view source) { return Parser(source).run(); }

std::optional<TemplateStep> parse_step_block(std::string_view text) {
  ParseResult result = Parser(text, /*fragment=*/true).run();
  if (!result.tpl || result.tpl->steps.size() != 1) return std::nullopt;
  return result.tpl->steps.front();
}

std::string serialize_step(const TemplateStep& step) {
  std::string out = "<Step" + std::to_string(step.index) + ">\n";
  if (!step.text.empty()) out += step.text + "\n";
  if (step.key) out += "<Key>\n" + *step.key + "\n</Key>\n";
  if (step.cause) out += "<Cause>\n" + *step.cause + "\n</Cause>\n";
  if (step.correction) out += "<Correction>\n" + *step.correction + "\n</Correction>\n";
  out += "</Step" + std::to_string(step.index) + ">\n";
  return out;
}

std::string serialize_template(const HierarchicalTemplate& t) {
  std::string out;
  for (const auto& step : t.steps) out += serialize_step(step);
  if (t.generalized) out += "<Generalized>\n" + *t.generalized + "\n</Generalized>\n";
  out += "<Answer>\n" + t.answer + "\n</Answer>\n";
  return out;
}

std::string extract_answer(const HierarchicalTemplate& t) {
  std::string body = trim(t.answer);
  if (body.empty()) throw std::invalid_argument("empty answer body");
  return extract_final_value(body);
}

}  // namespace supercorrect
