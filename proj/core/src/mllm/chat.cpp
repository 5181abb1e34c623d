#include "prefalign/mllm/chat.hpp"

#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "prefalign/digest.hpp"
#include "prefalign/error.hpp"
#include "prefalign/image.hpp"

namespace prefalign::mllm {

using nlohmann::json;

std::string image_data_url(std::span<const std::uint8_t> image_bytes) {
  const ImageInfo info = inspect_image(image_bytes, 0);
  return std::string("data:") + mime_type(info.format) + ";base64," + base64_encode(image_bytes);
}

std::string to_wire_json(const ChatRequest& request, const std::string& model, double temperature,
                         int max_tokens) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content = json::array();
    for (const auto& part : m.content) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", img.data_url}}}});
      }
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  json body = {{"model", model},
               {"messages", std::move(messages)},
               {"temperature", temperature},
               {"max_tokens", max_tokens}};
  return body.dump();
}

std::string content_from_wire_json(const std::string& body) {
  const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) fail(ErrorCode::kTransport, "chat response is not JSON");
  const auto* content = [&]() -> const json* {
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty()) {
      return nullptr;
    }
    const json& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")) return nullptr;
    return &choice["message"]["content"];
  }();
  if (content == nullptr || !content->is_string()) {
    fail(ErrorCode::kTransport, "chat response lacks choices[0].message.content");
  }
  return content->get<std::string>();
}

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    fail(ErrorCode::kInvalidArgument, "MLLM endpoint is not an http(s) URL: " + config_.endpoint);
  }
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  const auto timeout_s = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  client.set_write_timeout(timeout_s, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const std::string body =
      to_wire_json(request, config_.model, config_.temperature, config_.max_tokens);
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    fail(ErrorCode::kTransport, "chat request failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::kTransport, "chat endpoint returned HTTP " + std::to_string(res->status));
  }
  return content_from_wire_json(res->body);
}

bool HttpChatClient::reachable() {
  httplib::Client client(origin_);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(2, 0);
  // Any HTTP response at all means the service is up.
  return static_cast<bool>(client.Get("/"));
}

ScriptedChatClient::ScriptedChatClient(std::vector<Outcome> script, bool reachable)
    : script_(std::move(script)), reachable_(reachable) {
  if (script_.empty()) fail(ErrorCode::kInvalidArgument, "scripted client needs a script");
}

std::string ScriptedChatClient::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  const std::size_t idx = std::min(seen_.size(), script_.size() - 1);
  seen_.push_back(request);
  const Outcome& out = script_[idx];
  if (std::holds_alternative<TransportFailure>(out)) {
    fail(ErrorCode::kTransport, "scripted transport failure");
  }
  return std::get<std::string>(out);
}

std::size_t ScriptedChatClient::request_count() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::vector<ChatRequest> ScriptedChatClient::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

}  // namespace prefalign::mllm
