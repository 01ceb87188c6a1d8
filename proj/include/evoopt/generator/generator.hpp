#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoopt/dsl/program.hpp"

namespace evoopt::gen {

struct Exemplar {
  std::string source;
  double fitness = 0.0;
};

struct GenerationRequest {
  std::string task_description;
  const dsl::Signature* signature = nullptr;
  std::vector<Exemplar> exemplars;  // ascending fitness, best last
  int num_candidates = 1;
  std::uint64_t seed = 0;
};

struct GeneratorEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::string model_name = "default";
  double timeout_seconds = 30.0;
  int max_retries = 3;
  double temperature = 1.0;  // [0, 2]
  // Retry pacing and global throttling; the 1s backoff base is shrunk by
  // tests so retry paths stay fast.
  int backoff_base_ms = 1000;
  int max_concurrent = 2;
  int requests_per_minute = 0;  // 0 = uncapped
};

struct GenerationError : std::runtime_error {
  enum class Kind { Transport, HttpStatus, NoCodeBlock, EmptyResponse };
  GenerationError(Kind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind(kind), status(status) {}
  Kind kind;
  int status;  // HttpStatus only
};

struct MissingCredentials : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kApiKeyEnvVar = "EVOOPT_LLM_API_KEY";

// Seeded grammar mutations over the exemplars: per candidate, a parent is
// drawn rank-weighted (best exemplar carries twice the weight of the rest),
// then one of five mutations is applied: scale a constant by 2 or 0.5,
// perturb a constant by 10%, swap a binary operator, splice a random subtree
// from another exemplar, or wrap the root in a fresh comparison. Candidates
// breaking the node or source caps are rejected and redrawn up to 8 times,
// after which the parent's own text is emitted. Same request, same output.
std::vector<std::string> mock_generate(const GenerationRequest& req);

// One chat-completion call per candidate against {base_url}/v1/chat/
// completions, bearer-authorized from EVOOPT_LLM_API_KEY. The reply's first
// fenced code block is the candidate; a missing or oversized block is a
// NoCodeBlock error. Transport faults and HTTP 429/5xx retry with doubling,
// jittered backoff; other statuses fail immediately. Calls are throttled
// globally to max_concurrent in flight and requests_per_minute starts.
std::vector<std::string> llm_generate(const GenerationRequest& req,
                                      const GeneratorEndpoint& ep);

// First fenced code block of a chat reply, trimmed; empty result when there
// is no complete fence. Exposed for tests.
std::string extract_code_block(const std::string& content);

}  // namespace evoopt::gen
