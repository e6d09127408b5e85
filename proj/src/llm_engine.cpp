#include "mcgs/llm_engine.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <sstream>

#include "mcgs/errors.hpp"
#include "mcgs/serde.hpp"

namespace mcgs {

namespace {

constexpr const char* kCompletionsPath = "/v1/chat/completions";

std::string strip_code_fence(const std::string& content) {
  std::string s = content;
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return s;
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.rfind("```", 0) != 0) return s;
  const auto line_end = s.find('\n');
  if (line_end == std::string::npos) return s;
  std::string body = s.substr(line_end + 1);
  const auto closing = body.rfind("```");
  if (closing != std::string::npos) body = body.substr(0, closing);
  return body;
}

std::string describe_operator(OperatorKind op) {
  switch (op) {
    case OperatorKind::Draft:
      return "Draft a brand new solution for the task.";
    case OperatorKind::Debug:
      return "Repair the target solution; it failed execution.";
    case OperatorKind::ImproveNormal:
      return "Improve the target solution with a focused change.";
    case OperatorKind::ImproveFE:
      return "Improve the target solution's feature engineering.";
    case OperatorKind::ImproveCS:
      return "Improve the target solution's case-specific strategy.";
    case OperatorKind::Fusion:
      return "Fuse the strongest ideas of the referenced solutions into one.";
    case OperatorKind::CodeReview:
      return "Review the target solution.";
    case OperatorKind::Ensemble:
      return "Combine the referenced solutions into an ensemble.";
  }
  return "Work on the solution.";
}

}  // namespace

LlmTransport default_llm_transport(const LlmOptions& options) {
  return [options](const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers) {
    httplib::Client client(options.base_url);
    const auto timeout = std::chrono::milliseconds(
        static_cast<long long>(options.timeout_seconds * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [key, value] : headers) h.emplace(key, value);
    const httplib::Result res = client.Post(path, h, body, "application/json");
    if (!res) {
      raise(Errc::EngineFailure,
            "llm transport error: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      raise(Errc::EngineFailure,
            "llm endpoint returned status " + std::to_string(res->status));
    }
    return res->body;
  };
}

LlmEngine::LlmEngine(LlmOptions options)
    : options_(std::move(options)), transport_(default_llm_transport(options_)) {}

LlmEngine::LlmEngine(LlmOptions options, LlmTransport transport)
    : options_(std::move(options)), transport_(std::move(transport)) {}

Json LlmEngine::build_request_body(const ProposalRequest& request) const {
  std::ostringstream user;
  user << "Task: " << request.task.description << "\n";
  user << "Metric: " << request.task.metric_name << " ("
       << to_string(request.task.direction) << ")\n";
  user << "Operation: " << describe_operator(request.op) << "\n";
  if (!request.target.artifact.empty()) {
    user << "Target artifact:\n" << request.target.artifact << "\n";
    if (request.target_metric) {
      user << "Target metric value: " << *request.target_metric << "\n";
    }
    if (!request.target.analysis.empty()) {
      user << "Target analysis: " << request.target.analysis << "\n";
    }
  }
  if (!request.references.empty()) {
    user << "Reference solutions:\n";
    for (const ReferencePayload& r : request.references) {
      user << "- node " << r.node << " [" << to_string(r.state);
      if (r.metric) user << ", metric " << *r.metric;
      user << "]: " << r.payload.artifact << "\n";
    }
  }
  if (!request.kb_context.empty()) {
    user << "Knowledge entries:\n";
    for (const KnowledgeEntry& e : request.kb_context) {
      user << "- " << e.title << ": " << e.guidance << "\n";
    }
  }
  user << "Respond with a single JSON object with string fields "
          "\"plan\", \"artifact\" and \"analysis\". The artifact must be a "
          "JSON document {\"coords\": ["
       << request.task.design_dims << " integers in [0, "
       << request.task.design_cardinality - 1 << "]], \"metric\": \""
       << request.task.metric_name << "\"} encoded as a string.";

  return Json{{"model", options_.model},
              {"temperature", options_.temperature},
              {"messages",
               Json::array({Json{{"role", "system"},
                                 {"content",
                                  "You design candidate solutions for an automated "
                                  "machine learning search. Always answer with one "
                                  "JSON object and nothing else."}},
                            Json{{"role", "user"}, {"content", user.str()}}})}};
}

SolutionPayload LlmEngine::propose(const ProposalRequest& request) {
  const Json body = build_request_body(request);
  std::map<std::string, std::string> headers;
  if (const char* token = std::getenv(options_.token_env.c_str());
      token != nullptr && token[0] != '\0') {
    headers["Authorization"] = std::string("Bearer ") + token;
  }

  std::string last_error = "no attempts made";
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    std::string raw;
    try {
      raw = transport_(kCompletionsPath, body.dump(), headers);
    } catch (const Error& e) {
      last_error = e.what();
      continue;
    }
    const Json response = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (response.is_discarded() || !response.contains("choices") ||
        !response["choices"].is_array() || response["choices"].empty()) {
      last_error = "response is not a chat completion";
      continue;
    }
    const Json& message = response["choices"][0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string()) {
      last_error = "completion carries no message content";
      continue;
    }
    const std::string content =
        strip_code_fence(message["message"]["content"].get<std::string>());
    const Json parsed = Json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("plan") ||
        !parsed.contains("artifact") || !parsed.contains("analysis") ||
        !parsed["plan"].is_string() || !parsed["artifact"].is_string() ||
        !parsed["analysis"].is_string()) {
      last_error = "completion content is not a {plan, artifact, analysis} object";
      continue;
    }
    SolutionPayload out;
    out.plan = parsed["plan"].get<std::string>();
    out.artifact = parsed["artifact"].get<std::string>();
    out.analysis = parsed["analysis"].get<std::string>();
    return out;
  }
  raise(Errc::EngineFailure,
        "llm propose failed after " + std::to_string(options_.max_retries + 1) +
            " attempts: " + last_error);
}

ReviewVerdict LlmEngine::review(const SolutionPayload& candidate,
                                const TaskSpec& task) {
  return reviewer_.review(candidate, task);
}

}  // namespace mcgs
