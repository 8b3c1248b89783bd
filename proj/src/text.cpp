#include "supercorrect/text.hpp"

#include <cctype>
#include <cstdlib>
#include <numeric>

#include "supercorrect/util.hpp"

namespace supercorrect {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Extracts the contents of a balanced {...} group starting at `pos` (which
// must point at '{'); returns the contents and advances pos past '}'.
std::optional<std::string> take_brace_group(std::string_view s, size_t& pos) {
  if (pos >= s.size() || s[pos] != '{') return std::nullopt;
  int depth = 0;
  size_t start = pos + 1;
  for (size_t i = pos; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}') {
      --depth;
      if (depth == 0) {
        std::string inner(s.substr(start, i - start));
        pos = i + 1;
        return inner;
      }
    }
  }
  return std::nullopt;
}

bool match_command(std::string_view s, size_t pos, std::string_view cmd) {
  return s.compare(pos, cmd.size(), cmd) == 0;
}

}  // namespace

std::string clean_math_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '\\') {
      bool handled = false;
      for (std::string_view frac : {"\\frac", "\\dfrac", "\\tfrac"}) {
        if (match_command(s, i, frac)) {
          size_t pos = i + frac.size();
          auto a = take_brace_group(s, pos);
          auto b = a ? take_brace_group(s, pos) : std::nullopt;
          if (a && b) {
            out += clean_math_text(*a);
            out += '/';
            out += clean_math_text(*b);
            i = pos;
            handled = true;
          }
          break;
        }
      }
      if (handled) continue;
      if (match_command(s, i, "\\boxed")) {
        size_t pos = i + 6;
        if (auto inner = take_brace_group(s, pos)) {
          out += clean_math_text(*inner);
          i = pos;
          continue;
        }
      }
      if (i + 1 < s.size() && (s[i + 1] == '(' || s[i + 1] == ')' || s[i + 1] == '[' ||
                               s[i + 1] == ']')) {
        i += 2;
        continue;
      }
      out += c;
      ++i;
      continue;
    }
    if (c == '$') {
      ++i;
      continue;
    }
    if (c == ',' && !out.empty() && is_digit(out.back()) && i + 3 < s.size() &&
        is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]) &&
        (i + 4 >= s.size() || !is_digit(s[i + 4]))) {
      ++i;  // thousands separator
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out += ' ';
      ++i;
      continue;
    }
    out += c;
    ++i;
  }
  return trim(out);
}

std::string normalize_answer(std::string_view raw) {
  std::string s = clean_math_text(raw);
  while (!s.empty()) {
    char c = s.back();
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == ':') {
      s.pop_back();
      while (!s.empty() && s.back() == ' ') s.pop_back();
    } else {
      break;
    }
  }
  return trim(s);
}

namespace {

struct ParsedNumber {
  long long mantissa = 0;
  int frac_digits = 0;
  bool ok = false;
};

// "[+-]?digits[.digits]" -> mantissa scaled by 10^frac_digits.
ParsedNumber parse_decimal(std::string_view s) {
  ParsedNumber r;
  if (s.empty()) return r;
  size_t i = 0;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i >= s.size() || !is_digit(s[i])) return r;
  unsigned long long mag = 0;
  int digits = 0;
  for (; i < s.size() && is_digit(s[i]); ++i) {
    mag = mag * 10 + static_cast<unsigned>(s[i] - '0');
    if (++digits > 18) return r;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    if (i >= s.size() || !is_digit(s[i])) return r;
    for (; i < s.size() && is_digit(s[i]); ++i) {
      mag = mag * 10 + static_cast<unsigned>(s[i] - '0');
      ++r.frac_digits;
      if (++digits > 18) return r;
    }
  }
  if (i != s.size()) return r;
  r.mantissa = neg ? -static_cast<long long>(mag) : static_cast<long long>(mag);
  r.ok = true;
  return r;
}

long long pow10ll(int n) {
  long long p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view s) {
  if (s.empty()) return std::nullopt;
  size_t slash = std::string_view::npos;
  // Skip a leading sign so "-1/4" splits on the right '/'.
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '/') {
      if (slash != std::string_view::npos) return std::nullopt;
      slash = i;
    }
  }
  if (s[0] == '/') return std::nullopt;

  ParsedNumber num, den;
  if (slash == std::string_view::npos) {
    num = parse_decimal(s);
    den = ParsedNumber{1, 0, true};
  } else {
    num = parse_decimal(s.substr(0, slash));
    den = parse_decimal(s.substr(slash + 1));
  }
  if (!num.ok || !den.ok || den.mantissa == 0) return std::nullopt;
  if (num.frac_digits > 15 || den.frac_digits > 15) return std::nullopt;

  // a.b / c.d == (a.b * 10^d') / (c.d * 10^b') after clearing decimals.
  __int128 n = static_cast<__int128>(num.mantissa) * pow10ll(den.frac_digits);
  __int128 d = static_cast<__int128>(den.mantissa) * pow10ll(num.frac_digits);
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 a = n < 0 ? -n : n;
  __int128 b = d;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a == 0) a = 1;
  n /= a;
  d /= a;
  constexpr __int128 kMax = 0x7fffffffffffffffLL;
  if (n > kMax || n < -kMax || d > kMax) return std::nullopt;
  return Rational{static_cast<long long>(n), static_cast<long long>(d)};
}

bool is_value_token(std::string_view s) { return parse_rational(s).has_value(); }

std::string extract_final_value(std::string_view answer_body) {
  std::string trimmed = trim(answer_body);
  if (trimmed.empty()) return trimmed;
  std::string cleaned = normalize_answer(trimmed);
  if (is_value_token(cleaned)) return cleaned;
  size_t space = cleaned.find_last_of(' ');
  if (space != std::string::npos) {
    std::string last = cleaned.substr(space + 1);
    if (is_value_token(last)) return last;
  }
  return trimmed;
}

}  // namespace supercorrect
