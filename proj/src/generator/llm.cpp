#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

#include "evoopt/common/rng.hpp"
#include "evoopt/dsl/ast.hpp"
#include "evoopt/generator/generator.hpp"
#include "httplib.h"
#include "json.hpp"

namespace evoopt::gen {
namespace {

using Clock = std::chrono::steady_clock;

// Process-wide limiter shared by every in-flight call; each HTTP attempt
// (retries included) counts as one request start.
class Throttle {
 public:
  void acquire(int max_concurrent, int requests_per_minute) {
    std::unique_lock lock(m_);
    for (;;) {
      prune(Clock::now());
      if (in_flight_ < max_concurrent &&
          (requests_per_minute <= 0 ||
           static_cast<int>(starts_.size()) < requests_per_minute)) {
        ++in_flight_;
        starts_.push_back(Clock::now());
        return;
      }
      if (in_flight_ >= max_concurrent) {
        cv_.wait(lock);
      } else {
        cv_.wait_until(lock, starts_.front() + std::chrono::minutes(1));
      }
    }
  }

  void release() {
    std::lock_guard lock(m_);
    --in_flight_;
    cv_.notify_all();
  }

 private:
  void prune(Clock::time_point now) {
    while (!starts_.empty() && now - starts_.front() > std::chrono::minutes(1))
      starts_.pop_front();
  }

  std::mutex m_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::deque<Clock::time_point> starts_;
};

Throttle& throttle() {
  static Throttle t;
  return t;
}

std::string require_api_key() {
  const char* key = std::getenv(kApiKeyEnvVar);
  if (key == nullptr || *key == '\0')
    throw MissingCredentials(std::string(kApiKeyEnvVar) + " is not set");
  return key;
}

// scheme://host[:port] for the client, the rest as a path prefix
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

std::string grammar_summary(const dsl::Signature& sig) {
  std::ostringstream out;
  out << "The language: floating-point expressions over the variables";
  for (const auto& v : sig.variables()) out << " " << v;
  out << ". Operators: + - * / min(a, b) max(a, b) abs(x) safe_log(x) "
         "safe_exp(x), and conditionals of the form "
         "`if <expr> <cmp> <expr> then <expr> else <expr>` with comparison "
         "operators < <= > >=. No other syntax exists.";
  return out.str();
}

std::string render_prompt(const GenerationRequest& req) {
  std::ostringstream out;
  out << req.task_description << "\n\n"
      << grammar_summary(*req.signature) << "\n\n"
      << "Known programs, worst to best, with their scores:\n";
  for (const auto& ex : req.exemplars)
    out << "[fitness " << ex.fitness << "] " << ex.source << "\n";
  out << "\nPropose one improved program. Reply with exactly one fenced code "
         "block containing a single expression in the language, nothing "
         "else.";
  return out.str();
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::string trim(std::string s) {
  auto issp = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && issp(s[b])) ++b;
  while (e > b && issp(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string extract_code_block(const std::string& content) {
  auto open = content.find("```");
  if (open == std::string::npos) return "";
  auto body = open + 3;
  auto close = content.find("```", body);
  if (close == std::string::npos) return "";
  std::string inner = content.substr(body, close - body);
  // anything on the opening-fence line is an info string, not content
  auto nl = inner.find('\n');
  if (nl != std::string::npos) inner = inner.substr(nl + 1);
  return trim(inner);
}

std::vector<std::string> llm_generate(const GenerationRequest& req,
                                      const GeneratorEndpoint& ep) {
  if (req.signature == nullptr || req.exemplars.empty() ||
      req.num_candidates < 1)
    throw std::invalid_argument("malformed generation request");
  if (ep.base_url.empty())
    throw std::invalid_argument("llm generator without a base_url");
  std::string api_key = require_api_key();

  auto [root, prefix] = split_base_url(ep.base_url);
  httplib::Client client(root);
  auto timeout = std::chrono::milliseconds(
      static_cast<long long>(ep.timeout_seconds * 1000.0));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
  const std::string path = prefix + "/v1/chat/completions";

  nlohmann::json body{
      {"model", ep.model_name},
      {"temperature", ep.temperature},
      {"messages",
       {{{"role", "system"},
         {"content",
          "You improve small programs written in a restricted expression "
          "language."}},
        {{"role", "user"}, {"content", render_prompt(req)}}}}};
  const std::string payload = body.dump();

  Rng jitter(derive_seed(req.seed, 0x6c6c6d2d6a697474ull));
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(req.num_candidates));

  for (int c = 0; c < req.num_candidates; ++c) {
    std::string content;
    for (int attempt = 0;; ++attempt) {
      throttle().acquire(ep.max_concurrent, ep.requests_per_minute);
      auto res = client.Post(path, headers, payload, "application/json");
      throttle().release();

      bool retry;
      std::string why;
      int status = 0;
      if (!res) {
        retry = true;
        why = "transport failure: " + httplib::to_string(res.error());
      } else if (res->status < 200 || res->status >= 300) {
        status = res->status;
        retry = retryable_status(status);
        why = "http status " + std::to_string(status);
      } else {
        content = res->body;
        break;
      }
      if (attempt >= ep.max_retries || !retry) {
        if (status != 0)
          throw GenerationError(GenerationError::Kind::HttpStatus, why, status);
        throw GenerationError(GenerationError::Kind::Transport, why);
      }
      double scale = static_cast<double>(1 << attempt);
      auto delay = std::chrono::milliseconds(static_cast<long long>(
          ep.backoff_base_ms * scale * (1.0 + 0.25 * jitter.uniform01())));
      std::this_thread::sleep_for(delay);
    }

    std::string text;
    try {
      auto parsed = nlohmann::json::parse(content);
      text = parsed.at("choices").at(0).at("message").at("content")
                 .get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw GenerationError(GenerationError::Kind::EmptyResponse,
                            "response carries no message content");
    }
    if (trim(text).empty())
      throw GenerationError(GenerationError::Kind::EmptyResponse,
                            "empty completion");
    std::string block = extract_code_block(text);
    if (block.empty())
      throw GenerationError(GenerationError::Kind::NoCodeBlock,
                            "no fenced code block in completion");
    if (block.size() > dsl::kMaxSourceBytes)
      throw GenerationError(GenerationError::Kind::NoCodeBlock,
                            "fenced block exceeds the source cap");
    out.push_back(std::move(block));
  }
  return out;
}

}  // namespace evoopt::gen
