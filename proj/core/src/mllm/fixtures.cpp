#include "prefalign/mllm/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "prefalign/error.hpp"

namespace prefalign::mllm {

using nlohmann::json;

namespace {

FixtureStore::Fixture fixture_from_json(const json& j, const std::filesystem::path& source) {
  if (!j.is_object() || !j.contains("key") || !j.contains("request_digest") ||
      !j.contains("response") || !j["key"].is_string() || !j["request_digest"].is_string() ||
      !j["response"].is_string()) {
    fail(ErrorCode::kCorruptPayload, "fixture in " + source.string() +
                                         " needs string fields key, request_digest, response");
  }
  return {j["key"].get<std::string>(), j["request_digest"].get<std::string>(),
          j["response"].get<std::string>()};
}

}  // namespace

FixtureStore FixtureStore::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIo, "fixture directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  FixtureStore store;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const json parsed = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) fail(ErrorCode::kCorruptPayload, "invalid JSON in " + path.string());
    if (parsed.is_array()) {
      for (const auto& item : parsed) store.add(fixture_from_json(item, path));
    } else {
      store.add(fixture_from_json(parsed, path));
    }
  }
  return store;
}

void FixtureStore::add(Fixture fixture) {
  fixtures_[{std::move(fixture.key), std::move(fixture.request_digest)}] =
      std::move(fixture.response);
}

const std::string& FixtureStore::replay(std::string_view key,
                                        std::string_view request_digest) const {
  const auto it = fixtures_.find(std::pair<std::string, std::string>(key, request_digest));
  if (it == fixtures_.end()) {
    fail(ErrorCode::kUnknownFixture,
         "no fixture for " + std::string(key) + " / " + std::string(request_digest));
  }
  return it->second;
}

bool FixtureStore::contains(std::string_view key, std::string_view request_digest) const {
  return fixtures_.count(std::pair<std::string, std::string>(key, request_digest)) > 0;
}

std::string ReplayChatClient::complete(const ChatRequest& request) {
  return store_.replay(request.fixture_key, request.content_digest);
}

}  // namespace prefalign::mllm
