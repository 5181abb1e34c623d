#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "prefalign/mllm/chat.hpp"

namespace prefalign::mllm {

// Canned MLLM transcripts keyed by (template kind, request content digest).
// Read-only after construction.
class FixtureStore {
 public:
  struct Fixture {
    std::string key;
    std::string request_digest;
    std::string response;
  };

  FixtureStore() = default;

  // Loads every *.json file in `dir`. Each file holds one fixture object
  // {key, request_digest, response} or an array of them.
  static FixtureStore load_directory(const std::filesystem::path& dir);

  void add(Fixture fixture);

  // Throws kUnknownFixture when absent.
  const std::string& replay(std::string_view key, std::string_view request_digest) const;
  bool contains(std::string_view key, std::string_view request_digest) const;
  std::size_t size() const { return fixtures_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, std::string, std::less<>> fixtures_;
};

// Deterministic MLLM stand-in backed by a FixtureStore.
class ReplayChatClient final : public ChatClient {
 public:
  explicit ReplayChatClient(FixtureStore store) : store_(std::move(store)) {}
  std::string complete(const ChatRequest& request) override;
  bool reachable() override { return true; }
  const FixtureStore& store() const { return store_; }

 private:
  FixtureStore store_;
};

}  // namespace prefalign::mllm
