#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace supercorrect {

// Exact rational with canonical sign and reduced terms.
struct Rational {
  long long num = 0;
  long long den = 1;
  bool operator==(const Rational&) const = default;
};

// Rewrites LaTeX fractions (\frac{a}{b} -> a/b), unwraps \boxed{...}, drops
// $ and \( \) \[ \] delimiters, removes thousands separators, and collapses
// whitespace runs.
std::string clean_math_text(std::string_view s);

// clean_math_text plus trailing punctuation strip; the canonical form used
// for answer comparison.
std::string normalize_answer(std::string_view raw);

// Parses "[+-]d+", "[+-]d+.d+" and "[+-]a/b" forms (whole string only).
std::optional<Rational> parse_rational(std::string_view s);

// True when the whole string is a single numeric value token.
bool is_value_token(std::string_view s);

// The answer-extraction rule: bare value, "... is <value>", or a trailing
// value token; otherwise the trimmed body unchanged.
std::string extract_final_value(std::string_view answer_body);

}  // namespace supercorrect
