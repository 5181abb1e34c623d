#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace prefalign::mllm {

struct TextPart {
  std::string text;
};
struct ImagePart {
  std::string data_url;  // data:image/png;base64,...
};
using ContentPart = std::variant<TextPart, ImagePart>;

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::vector<ContentPart> content;
};

// One chat-completion request. `fixture_key` and `content_digest` identify
// the semantic inputs (template kind, image digest, prompts) independent of
// instruction wording and retry lines, so replay stays stable across retries.
struct ChatRequest {
  std::string fixture_key;
  std::string content_digest;
  std::vector<ChatMessage> messages;
};

std::string image_data_url(std::span<const std::uint8_t> image_bytes);

// Serializes to the JSON chat-completion body:
// {model, messages:[{role, content:[{type:text,text}|{type:image_url,image_url:{url}}]}],
//  temperature, max_tokens}
std::string to_wire_json(const ChatRequest& request, const std::string& model, double temperature,
                         int max_tokens);

// Extracts choices[0].message.content; throws kTransport on a malformed body.
std::string content_from_wire_json(const std::string& body);

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Throws Error{kTransport} on network / protocol failure.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual bool reachable() = 0;
};

struct HttpChatConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "qwen-vl-72b";
  std::string api_key;
  std::chrono::seconds timeout{120};
  double temperature = 0.2;
  int max_tokens = 1024;
};

// Stateless per request; safe to share across threads.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);
  std::string complete(const ChatRequest& request) override;
  bool reachable() override;

 private:
  HttpChatConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

// Test double: plays back a fixed script of outcomes and records every
// request it receives. After the script is exhausted the last outcome
// repeats.
class ScriptedChatClient final : public ChatClient {
 public:
  struct TransportFailure {};
  using Outcome = std::variant<std::string, TransportFailure>;

  explicit ScriptedChatClient(std::vector<Outcome> script, bool reachable = true);
  std::string complete(const ChatRequest& request) override;
  bool reachable() override { return reachable_; }

  std::size_t request_count() const;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::vector<Outcome> script_;
  std::vector<ChatRequest> seen_;
  bool reachable_;
};

}  // namespace prefalign::mllm
