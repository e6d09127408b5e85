#pragma once

#include <functional>
#include <map>
#include <string>

#include "mcgs/engine.hpp"
#include "mcgs/synthetic.hpp"

namespace mcgs {

struct LlmOptions {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model = "default";
  std::string token_env = "MCGS_API_TOKEN";  // name of the env var holding the key
  int max_retries = 2;
  double timeout_seconds = 30.0;
  double temperature = 0.5;
};

// POSTs `body` to base_url + path with the given headers and returns the
// response body. Throws Error{EngineFailure} on transport problems. The
// default implementation is an HTTP client; tests swap in a fake.
using LlmTransport = std::function<std::string(
    const std::string& path, const std::string& body,
    const std::map<std::string, std::string>& headers)>;

LlmTransport default_llm_transport(const LlmOptions& options);

// Chat-completion backed proposal engine. Each request renders the operator,
// the target payload, the references and the knowledge entries into one chat
// exchange; the reply must be a JSON object {"plan", "artifact", "analysis"}
// (optionally inside a ```json fence). Transport errors and malformed
// replies are retried up to max_retries, then raise Error{EngineFailure}.
// Review reuses the deterministic structural checks of the synthetic engine.
class LlmEngine : public ProposalEngine {
 public:
  explicit LlmEngine(LlmOptions options);
  LlmEngine(LlmOptions options, LlmTransport transport);

  SolutionPayload propose(const ProposalRequest& request) override;
  ReviewVerdict review(const SolutionPayload& candidate, const TaskSpec& task) override;

  // The exact request body propose() would send; exposed for tests.
  Json build_request_body(const ProposalRequest& request) const;

 private:
  LlmOptions options_;
  LlmTransport transport_;
  SyntheticEngine reviewer_;
};

}  // namespace mcgs
