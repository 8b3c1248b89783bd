#include "supercorrect/gateway.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "supercorrect/util.hpp"

namespace supercorrect {

using nlohmann::json;

std::string_view to_string(ModelRole role) {
  switch (role) {
    case ModelRole::teacher: return "teacher";
    case ModelRole::student_base: return "student_base";
    case ModelRole::student_ref: return "student_ref";
    case ModelRole::policy: return "policy";
  }
  return "?";
}

ModelRole model_role_from_string(std::string_view name) {
  if (name == "teacher") return ModelRole::teacher;
  if (name == "student_base") return ModelRole::student_base;
  if (name == "student_ref") return ModelRole::student_ref;
  if (name == "policy") return ModelRole::policy;
  throw std::invalid_argument("unknown model role: " + std::string(name));
}

std::string request_hash(const GenerationRequest& req) {
  std::string key(to_string(req.role));
  key += '\n';
  key += req.prompt.text;
  return fnv1a64_hex(key);
}

void ScriptedBackend::add(ModelRole role, std::string_view prompt_text, std::string response) {
  std::string key(to_string(role));
  key += '\n';
  key += prompt_text;
  entries_[fnv1a64_hex(key)] = std::move(response);
}

void ScriptedBackend::add_keyed(std::string key_hex, std::string response) {
  entries_[std::move(key_hex)] = std::move(response);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path));
  if (doc.value("schema", "") != "mock.v1")
    throw std::runtime_error("mock script " + path.string() + ": expected schema mock.v1, found '" +
                             doc.value("schema", "<none>") + "'");
  auto backend = std::make_shared<ScriptedBackend>();
  for (auto& [key, value] : doc.at("entries").items())
    backend->entries_[key] = value.get<std::string>();
  return backend;
}

void ScriptedBackend::save(const std::filesystem::path& path) const {
  json doc;
  doc["schema"] = "mock.v1";
  doc["entries"] = json::object();
  for (const auto& [key, value] : entries_) doc["entries"][key] = value;
  atomic_write_file(path, doc.dump(2) + "\n");
}

BackendReply ScriptedBackend::complete(const GenerationRequest& req) {
  auto it = entries_.find(request_hash(req));
  if (it != entries_.end()) return {200, it->second};
  if (fallback_) {
    if (auto text = fallback_(req)) return {200, *text};
  }
  throw GatewayError("scripted backend has no response for request " + request_hash(req) +
                     " (role " + std::string(to_string(req.role)) + ")");
}

namespace {

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base) {
  auto scheme_end = base.find("://");
  size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = base.find('/', host_start);
  if (path_start == std::string::npos) return {base, ""};
  std::string prefix = base.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base.substr(0, path_start), prefix};
}

}  // namespace

BackendReply HttpBackend::complete(const GenerationRequest& req) {
  auto [origin, prefix] = split_base_url(cfg_.base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  client.set_read_timeout(cfg_.timeout_seconds, 0);

  auto model_it = cfg_.models.find(req.role);
  json body = {
      {"model", model_it == cfg_.models.end() ? "default" : model_it->second},
      {"messages", json::array({{{"role", "user"}, {"content", req.prompt.text}}})},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens},
  };
  if (req.seed) body["seed"] = *req.seed;

  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransportError("http transport failure: " + httplib::to_string(res.error()));
  if (res->status != 200) return {res->status, res->body};

  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw GatewayError("backend returned unparseable JSON");
  try {
    return {200, reply.at("choices").at(0).at("message").at("content").get<std::string>()};
  } catch (const json::exception& e) {
    throw GatewayError(std::string("unexpected completion payload: ") + e.what());
  }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy retry, int max_parallel,
                 std::optional<std::filesystem::path> audit_log)
    : backend_(std::move(backend)), retry_(retry), max_parallel_(std::max(1, max_parallel)) {
  if (audit_log) {
    if (audit_log->has_parent_path()) std::filesystem::create_directories(audit_log->parent_path());
    audit_out_.emplace(*audit_log, std::ios::app);
    if (!*audit_out_) throw std::runtime_error("cannot open audit log: " + audit_log->string());
  }
}

void Gateway::acquire() {
  std::unique_lock lock(slots_mutex_);
  slots_cv_.wait(lock, [&] { return in_flight_ < max_parallel_; });
  ++in_flight_;
}

void Gateway::release() {
  {
    std::lock_guard lock(slots_mutex_);
    --in_flight_;
  }
  slots_cv_.notify_one();
}

void Gateway::audit(const GenerationRequest& req, int attempt, std::string_view status) {
  if (!audit_out_) return;
  json line = {
      {"ts", utc_timestamp()},
      {"role", to_string(req.role)},
      {"request_hash", request_hash(req)},
      {"attempt", attempt},
      {"status", status},
  };
  std::lock_guard lock(audit_mutex_);
  *audit_out_ << line.dump() << "\n";
  audit_out_->flush();
}

std::string Gateway::generate(const GenerationRequest& req) {
  acquire();
  struct Release {
    Gateway* g;
    ~Release() { g->release(); }
  } releaser{this};

  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (attempt > 1) {
      int64_t delay = retry_.base_delay_ms << (attempt - 2);
      if (retry_.jitter && delay > 0) {
        std::lock_guard lock(audit_mutex_);
        delay += static_cast<int64_t>(jitter_rng_() % static_cast<uint64_t>(delay + 1) / 2);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    try {
      BackendReply reply = backend_->complete(req);
      if (reply.status == 200) {
        if (reply.text.empty()) {
          audit(req, attempt, "empty");
          last_error = "empty completion";
          continue;
        }
        audit(req, attempt, "ok");
        return reply.text;
      }
      audit(req, attempt, "http_" + std::to_string(reply.status));
      if (reply.status == 429 || reply.status >= 500) {
        last_error = "http status " + std::to_string(reply.status);
        continue;
      }
      throw GatewayError("backend rejected request with status " + std::to_string(reply.status));
    } catch (const TransportError& e) {
      audit(req, attempt, "transport_error");
      last_error = e.what();
    }
  }
  throw GatewayError("request failed after " + std::to_string(retry_.max_attempts) +
                     " attempts: " + last_error);
}

double sequence_logprob(const LogProbProvider& provider, std::span<const int> prefix,
                        std::span<const int> continuation) {
  if (continuation.empty())
    throw std::invalid_argument("sequence_logprob requires a non-empty continuation");
  double total = 0.0;
  for (double lp : provider.score(prefix, continuation)) total += lp;
  return total;
}

}  // namespace supercorrect
