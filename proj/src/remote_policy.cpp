#include "twg/remote_policy.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "httplib.h"

namespace twg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string role_name(Role role) { return role == Role::Environment ? "user" : "assistant"; }

std::string grain_name(Grain grain) { return grain == Grain::Coarse ? "coarse" : "fine"; }

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

ordered_json generation_request_to_json(const GenerationRequest& req, const std::string& model) {
  ordered_json j;
  if (!model.empty()) j["model"] = model;
  ordered_json messages = ordered_json::array();
  for (const Message& m : req.context) {
    ordered_json msg;
    msg["role"] = role_name(m.role);
    ordered_json content = ordered_json::array();
    if (!m.text.empty()) {
      content.push_back(ordered_json{{"type", "text"}, {"text", m.text}});
    }
    for (const ViewPayload& v : m.views) {
      ordered_json part;
      part["type"] = "video_view";
      part["grain"] = grain_name(v.spec.grain);
      part["frame_count"] = v.spec.frame_count;
      part["tokens_per_frame"] = v.spec.tokens_per_frame;
      part["timestamps"] = v.spec.timestamps;
      ordered_json frames = ordered_json::array();
      for (const FrameAttachment& f : v.frames) {
        frames.push_back(ordered_json{{"t", f.t}, {"payload", f.payload}});
      }
      part["frames"] = std::move(frames);
      content.push_back(std::move(part));
    }
    msg["content"] = std::move(content);
    messages.push_back(std::move(msg));
  }
  j["messages"] = std::move(messages);
  j["temperature"] = req.sampling.temperature;
  j["top_p"] = req.sampling.top_p;
  j["top_k"] = req.sampling.top_k;
  j["repetition_penalty"] = req.sampling.repetition_penalty;
  j["max_tokens"] = req.sampling.max_new_tokens;
  j["seed"] = req.seed;
  return j;
}

GenerationResponse generation_response_from_json(const json& body) {
  GenerationResponse resp;
  const json& choice = body.at("choices").at(0);
  const json& content = choice.at("message").at("content");
  if (!content.is_string()) {
    throw TransportError("endpoint response: choices[0].message.content is not a string");
  }
  resp.text = content.get<std::string>();
  if (choice.contains("logprob_total") && choice.at("logprob_total").is_number()) {
    resp.total_logprob = choice.at("logprob_total").get<double>();
  }
  if (body.contains("usage") && body.at("usage").contains("completion_tokens")) {
    resp.token_count = body.at("usage").at("completion_tokens").get<int>();
  } else {
    resp.token_count = approximate_token_count(resp.text);
  }
  return resp;
}

// Counting semaphore with a runtime cap.
struct RemotePolicy::Inflight {
  std::mutex mu;
  std::condition_variable cv;
  int available;

  explicit Inflight(int cap) : available(cap) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }

  void release() {
    {
      std::lock_guard<std::mutex> lock(mu);
      ++available;
    }
    cv.notify_one();
  }
};

RemotePolicy::RemotePolicy(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw std::invalid_argument("RemotePolicy: base_url is empty");
  if (cfg_.max_attempts < 1) throw std::invalid_argument("RemotePolicy: max_attempts must be >= 1");
  if (cfg_.max_inflight < 1) throw std::invalid_argument("RemotePolicy: max_inflight must be >= 1");
  inflight_ = new Inflight(cfg_.max_inflight);
}

RemotePolicy::~RemotePolicy() { delete inflight_; }

GenerationResponse RemotePolicy::generate(const GenerationRequest& req) const {
  const std::string body = generation_request_to_json(req, cfg_.model).dump();

  inflight_->acquire();
  struct Release {
    Inflight* s;
    ~Release() { s->release(); }
  } release{inflight_};

  std::string last_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) {
      const auto backoff =
          std::chrono::milliseconds(static_cast<long long>(cfg_.backoff_base_ms) << (attempt - 1));
      std::this_thread::sleep_for(backoff);
    }
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!cfg_.api_token.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg_.api_token);
    }
    auto result = client.Post(cfg_.path, headers, body, "application/json");
    if (!result) {
      last_error = "connection failed (" + httplib::to_string(result.error()) + ")";
      continue;
    }
    if (result->status == 200) {
      try {
        return generation_response_from_json(json::parse(result->body));
      } catch (const json::exception& e) {
        throw TransportError(std::string("endpoint returned unparseable body: ") + e.what());
      }
    }
    if (!retryable_status(result->status)) {
      throw TransportError("endpoint returned status " + std::to_string(result->status));
    }
    last_error = "status " + std::to_string(result->status);
  }
  throw TransportError("endpoint unreachable after " + std::to_string(cfg_.max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace twg
