#pragma once

#include <string>

#include "json.hpp"
#include "twg/policy.hpp"

namespace twg {

struct RemoteConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8000"
  std::string path = "/v1/chat/completions";
  std::string api_token;  // sent as "Authorization: Bearer <token>" when set
  std::string model;
  int timeout_ms = 30000;
  int max_attempts = 3;       // total tries per request
  int backoff_base_ms = 250;  // sleep base_ms * 2^attempt between tries
  int max_inflight = 8;
  bool expect_logprobs = false;
};

// Wire format (see docs/protocol.md). Messages carry text parts and
// "video_view" parts with the frame plan and resolved attachments; the
// endpoint is responsible for fetching and tokenizing actual frames.
nlohmann::ordered_json generation_request_to_json(const GenerationRequest& req,
                                                  const std::string& model);
GenerationResponse generation_response_from_json(const nlohmann::json& body);

// Chat-completion style HTTP client. Retries transient failures (connect
// errors, 408/429/5xx) up to max_attempts with exponential backoff, then
// throws TransportError. Concurrent generate() calls are capped at
// max_inflight.
class RemotePolicy : public Policy {
 public:
  explicit RemotePolicy(RemoteConfig cfg);
  ~RemotePolicy() override;

  std::string kind() const override { return "remote"; }
  bool reports_logprobs() const override { return cfg_.expect_logprobs; }
  GenerationResponse generate(const GenerationRequest& req) const override;

  const RemoteConfig& config() const { return cfg_; }

 private:
  RemoteConfig cfg_;
  struct Inflight;
  Inflight* inflight_;
};

}  // namespace twg
