#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "supercorrect/prompts.hpp"

namespace supercorrect {

enum class ModelRole { teacher, student_base, student_ref, policy };

std::string_view to_string(ModelRole role);
ModelRole model_role_from_string(std::string_view name);

struct GenerationRequest {
  ModelRole role = ModelRole::teacher;
  RenderedPrompt prompt;
  double temperature = 0.0;
  int max_tokens = 4096;
  std::optional<uint64_t> seed;
};

// Stable identity of a request for scripted-mock lookup and audit logging:
// fnv1a64 over "<role>\n<prompt text>".
std::string request_hash(const GenerationRequest& req);

struct BackendReply {
  int status = 200;  // HTTP-style status; 200 means usable text
  std::string text;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One completion attempt against some model host. Retries live in Gateway.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply complete(const GenerationRequest& req) = 0;
  virtual std::string_view name() const = 0;
};

// Deterministic mock: exact responses keyed by request_hash, with an
// optional programmatic fallback. Identical request -> identical bytes.
class ScriptedBackend : public Backend {
 public:
  using Fallback = std::function<std::optional<std::string>(const GenerationRequest&)>;

  void add(ModelRole role, std::string_view prompt_text, std::string response);
  void add_keyed(std::string key_hex, std::string response);
  void set_fallback(Fallback fn) { fallback_ = std::move(fn); }

  // mock.v1 file: {"schema":"mock.v1","entries":{"<hash>":"<response>"}}
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  BackendReply complete(const GenerationRequest& req) override;
  std::string_view name() const override { return "scripted"; }

  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
  Fallback fallback_;
};

// OpenAI-style chat-completions client over HTTP(S). One user message
// carrying the rendered prompt.
class HttpBackend : public Backend {
 public:
  struct Config {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string api_key;
    std::map<ModelRole, std::string> models;
    int timeout_seconds = 120;
  };

  explicit HttpBackend(Config cfg) : cfg_(std::move(cfg)) {}
  BackendReply complete(const GenerationRequest& req) override;
  std::string_view name() const override { return "http"; }

 private:
  Config cfg_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 1000;  // doubled per attempt
  bool jitter = true;
};

// Single entry point for all model traffic: bounded-parallel admission,
// retry with exponential backoff on transport errors / 429 / 5xx, and a
// JSONL audit log of every attempt.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry = {}, int max_parallel = 4,
          std::optional<std::filesystem::path> audit_log = std::nullopt);

  // Returns the completion text. Throws GatewayError after retries are
  // exhausted or on an empty completion.
  std::string generate(const GenerationRequest& req);

  const RetryPolicy& retry_policy() const { return retry_; }

 private:
  void audit(const GenerationRequest& req, int attempt, std::string_view status);
  void acquire();
  void release();

  std::shared_ptr<Backend> backend_;
  RetryPolicy retry_;
  int max_parallel_;
  int in_flight_ = 0;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  std::mutex audit_mutex_;
  std::optional<std::ofstream> audit_out_;
  std::mt19937_64 jitter_rng_{0x5eed};
};

// Scores conditional token log-probabilities of a continuation given a
// prefix. Implementations must be pure w.r.t. their parameters.
class LogProbProvider {
 public:
  virtual ~LogProbProvider() = default;
  virtual std::vector<double> score(std::span<const int> prefix,
                                    std::span<const int> continuation) const = 0;
  virtual int vocab_size() const = 0;
};

// Sum of per-token conditional log-probabilities; <= 0. Continuation must be
// non-empty.
double sequence_logprob(const LogProbProvider& provider, std::span<const int> prefix,
                        std::span<const int> continuation);

}  // namespace supercorrect
