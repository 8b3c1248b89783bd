#include "supercorrect/toylm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "supercorrect/util.hpp"

namespace supercorrect {

using nlohmann::json;

ToyLM::ToyLM(int vocab_size) : vocab_(vocab_size) {
  if (vocab_size < 2 || vocab_size > 256)
    throw std::invalid_argument("ToyLM vocab size must be in [2, 256]");
  params_.assign(static_cast<size_t>(vocab_size) * vocab_size + vocab_size, 0.0);
}

ToyLM ToyLM::random(int vocab_size, uint64_t seed, double scale) {
  ToyLM model(vocab_size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  for (double& p : model.params_) p = dist(rng);
  return model;
}

size_t ToyLM::row_offset(int prev) const {
  if (prev < 0) return 0;
  return static_cast<size_t>(vocab_) + static_cast<size_t>(prev) * vocab_;
}

const double* ToyLM::row(int prev) const { return params_.data() + row_offset(prev); }

int ToyLM::check_token(int token) const {
  if (token < 0 || token >= vocab_)
    throw std::out_of_range("token id " + std::to_string(token) + " outside vocabulary of " +
                            std::to_string(vocab_));
  return token;
}

std::vector<double> ToyLM::row_log_probs(int prev) const {
  const double* logits = row(prev < 0 ? -1 : check_token(prev));
  double max_logit = logits[0];
  for (int j = 1; j < vocab_; ++j) max_logit = std::max(max_logit, logits[j]);
  double sum = 0.0;
  for (int j = 0; j < vocab_; ++j) sum += std::exp(logits[j] - max_logit);
  double log_z = max_logit + std::log(sum);
  std::vector<double> out(vocab_);
  for (int j = 0; j < vocab_; ++j) out[j] = logits[j] - log_z;
  return out;
}

std::vector<double> ToyLM::score(std::span<const int> prefix,
                                 std::span<const int> continuation) const {
  for (int t : prefix) check_token(t);
  std::vector<double> out;
  out.reserve(continuation.size());
  int prev = prefix.empty() ? -1 : prefix.back();
  for (int token : continuation) {
    check_token(token);
    out.push_back(row_log_probs(prev)[token]);
    prev = token;
  }
  return out;
}

void ToyLM::accumulate_score_grad(std::span<const int> prefix, std::span<const int> continuation,
                                  double weight, std::span<double> grad) const {
  if (grad.size() != params_.size())
    throw std::invalid_argument("gradient buffer size mismatch");
  int prev = prefix.empty() ? -1 : check_token(prefix.back());
  for (int token : continuation) {
    check_token(token);
    // d log softmax(row)[token] / d row[c] = 1{c==token} - softmax(row)[c]
    std::vector<double> log_probs = row_log_probs(prev);
    size_t base = row_offset(prev);
    for (int c = 0; c < vocab_; ++c) grad[base + c] -= weight * std::exp(log_probs[c]);
    grad[base + token] += weight;
    prev = token;
  }
}

void ToyLM::save(const std::filesystem::path& path) const {
  json doc = {{"schema", "toylm.v1"}, {"V", vocab_}, {"params", params_}};
  atomic_write_file(path, doc.dump() + "\n");
}

ToyLM ToyLM::load(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path));
  if (doc.value("schema", "") != "toylm.v1")
    throw std::runtime_error("checkpoint " + path.string() + ": expected schema toylm.v1, found '" +
                             doc.value("schema", "<none>") + "'");
  ToyLM model(doc.at("V").get<int>());
  auto params = doc.at("params").get<std::vector<double>>();
  if (params.size() != model.param_count())
    throw std::runtime_error("checkpoint parameter count mismatch");
  std::copy(params.begin(), params.end(), model.params_.begin());
  return model;
}

ToyTokenizer ToyTokenizer::ascii_chars() {
  std::vector<std::string> symbols;
  symbols.emplace_back("\n");
  for (char c = ' '; c <= '~'; ++c) symbols.emplace_back(1, c);
  return ToyTokenizer(Mode::chars, std::move(symbols));
}

ToyTokenizer::ToyTokenizer(Mode mode, std::vector<std::string> symbols)
    : mode_(mode), symbols_(std::move(symbols)) {
  if (symbols_.empty() || symbols_.size() > 256)
    throw std::invalid_argument("tokenizer vocabulary must have 1..256 symbols");
  if (mode_ == Mode::chars) {
    byte_map_.assign(256, -1);
    for (size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_[i].size() != 1)
        throw std::invalid_argument("char tokenizer symbols must be single bytes");
      byte_map_[static_cast<unsigned char>(symbols_[i][0])] = static_cast<int>(i);
    }
    int q = byte_map_[static_cast<unsigned char>('?')];
    replacement_id_ = q >= 0 ? q : 0;
  }
}

std::vector<int> ToyTokenizer::encode(std::string_view text, bool strict) const {
  std::vector<int> out;
  if (mode_ == Mode::chars) {
    out.reserve(text.size());
    for (unsigned char c : text) {
      int id = byte_map_[c];
      if (id < 0) {
        if (strict)
          throw std::out_of_range(std::string("character '") + static_cast<char>(c) +
                                  "' not in tokenizer vocabulary");
        id = replacement_id_;
      }
      out.push_back(id);
    }
    return out;
  }
  std::unordered_map<std::string_view, int> index;
  for (size_t i = 0; i < symbols_.size(); ++i) index.emplace(symbols_[i], static_cast<int>(i));
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) break;
    auto it = index.find(text.substr(start, pos - start));
    if (it == index.end()) {
      if (strict)
        throw std::out_of_range("word '" + std::string(text.substr(start, pos - start)) +
                                "' not in tokenizer vocabulary");
      out.push_back(replacement_id_);
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

std::string ToyTokenizer::decode(std::span<const int> tokens) const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    int t = tokens[i];
    if (t < 0 || t >= vocab_size()) throw std::out_of_range("token id outside vocabulary");
    if (mode_ == Mode::words && i > 0) out += ' ';
    out += symbols_[static_cast<size_t>(t)];
  }
  return out;
}

}  // namespace supercorrect
