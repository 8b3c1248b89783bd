#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supercorrect/gateway.hpp"

namespace supercorrect {

// Order-1 (bigram) language model with softmax rows: V initial logits plus a
// V x V next-given-previous logit matrix, so V^2 + V parameters in total.
// Small enough for closed-form gradients and exact chain-rule structure.
class ToyLM : public LogProbProvider {
 public:
  explicit ToyLM(int vocab_size);
  static ToyLM random(int vocab_size, uint64_t seed, double scale = 1.0);

  int vocab_size() const override { return vocab_; }
  size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Conditional log-probabilities of each continuation token. The first
  // token conditions on the last prefix token, or on the initial logits when
  // the prefix is empty; later tokens condition on their predecessor.
  std::vector<double> score(std::span<const int> prefix,
                            std::span<const int> continuation) const override;

  // Accumulates weight * d(sum log p(continuation|prefix))/d(params) into
  // grad, which must have param_count() entries.
  void accumulate_score_grad(std::span<const int> prefix, std::span<const int> continuation,
                             double weight, std::span<double> grad) const;

  std::vector<double> row_log_probs(int prev) const;  // prev == -1 -> initial row

  // Checkpoint: {"schema":"toylm.v1","V":...,"params":[...]}
  void save(const std::filesystem::path& path) const;
  static ToyLM load(const std::filesystem::path& path);

  bool operator==(const ToyLM& o) const { return vocab_ == o.vocab_ && params_ == o.params_; }

 private:
  int check_token(int token) const;
  const double* row(int prev) const;  // logits row for prev (-1 -> initial)
  size_t row_offset(int prev) const;

  int vocab_;
  std::vector<double> params_;  // [initial V][transition V*V row-major]
};

// Fixed-vocabulary tokenizer for the toy provider. Character mode maps each
// byte of the alphabet to one id; word mode splits on whitespace.
class ToyTokenizer {
 public:
  enum class Mode { chars, words };

  static ToyTokenizer ascii_chars();  // printable ASCII + newline (95 + 1 ids)
  ToyTokenizer(Mode mode, std::vector<std::string> symbols);

  int vocab_size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  // Throws on out-of-vocabulary input when strict; otherwise substitutes
  // replacement_id().
  std::vector<int> encode(std::string_view text, bool strict = true) const;
  std::string decode(std::span<const int> tokens) const;
  int replacement_id() const { return replacement_id_; }

 private:
  Mode mode_;
  std::vector<std::string> symbols_;
  std::vector<int> byte_map_;  // chars mode
  int replacement_id_ = 0;
};

}  // namespace supercorrect
