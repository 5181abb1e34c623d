#include "prefalign/gateway/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prefalign/error.hpp"
#include "prefalign/mllm/fixtures.hpp"

namespace prefalign::gateway {
namespace {

using nlohmann::json;

template <typename T>
void take(const json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

void overlay_mllm(const json& j, MllmSettings& m) {
  take(j, "mode", m.mode);
  take(j, "fixture_dir", m.fixture_dir);
  take(j, "endpoint", m.http.endpoint);
  take(j, "model", m.http.model);
  take(j, "api_key", m.http.api_key);
  if (j.contains("timeout_s")) m.http.timeout = std::chrono::seconds(j.at("timeout_s").get<long>());
  take(j, "temperature", m.http.temperature);
  take(j, "max_tokens", m.http.max_tokens);
  take(j, "retries", m.retries);
  take(j, "max_image_bytes", m.max_image_bytes);
}

void overlay_backend(const json& j, BackendSettings& b) {
  take(j, "name", b.name);
  take(j, "weight_seed", b.toy.weight_seed);
  take(j, "modulated_sites", b.toy.modulated_sites);
  take(j, "encoder_seed", b.encoder.seed);
  take(j, "sequence_length", b.encoder.sequence_length);
  take(j, "embed_dim", b.encoder.dim);
  b.toy.embed_dim = b.encoder.dim;
}

void overlay_sampler(const json& j, pipeline::GenerationConfig& g) {
  take(j, "alpha", g.alpha);
  take(j, "lambda", g.lambda);
  take(j, "guidance", g.sampler.guidance_omega);
  take(j, "steps", g.sampler.steps);
  take(j, "seed", g.sampler.seed);
  take(j, "latent_h", g.sampler.latent_h);
  take(j, "latent_w", g.sampler.latent_w);
  take(j, "latent_c", g.sampler.latent_c);
  take(j, "step_size", g.sampler.step_size);
}

void overlay_service(const json& j, ServiceSettings& s) {
  take(j, "host", s.host);
  take(j, "port", s.port);
  take(j, "data_dir", s.data_dir);
  take(j, "cors_origin", s.cors_origin);
  if (j.contains("round_timeout_s")) {
    s.round_timeout = std::chrono::seconds(j.at("round_timeout_s").get<long>());
  }
}

}  // namespace

void Config::validate() const {
  generation.validate();
  if (mllm.mode != "mock" && mllm.mode != "http") {
    fail(ErrorCode::kInvalidArgument, "mllm mode must be 'mock' or 'http'");
  }
  if (mllm.retries < 0) fail(ErrorCode::kInvalidArgument, "mllm retries must be >= 0");
  if (service.port < 0 || service.port > 65535) fail(ErrorCode::kInvalidArgument, "port out of range");
  if (service.round_timeout.count() <= 0) {
    fail(ErrorCode::kInvalidArgument, "round timeout must be positive");
  }
  if (generation.sampler.latent_c != backend.toy.latent_channels && backend.name == "toy") {
    fail(ErrorCode::kInvalidArgument, "sampler latent_c must match the toy backend's channels");
  }
}

Config parse_config(std::string_view json_text, Config base) {
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) fail(ErrorCode::kCorruptPayload, "config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (key != "mllm" && key != "backend" && key != "sampler" && key != "service") {
        fail(ErrorCode::kCorruptPayload, "unknown config section '" + key + "'");
      }
    }
    if (j.contains("mllm")) overlay_mllm(j.at("mllm"), base.mllm);
    if (j.contains("backend")) overlay_backend(j.at("backend"), base.backend);
    if (j.contains("sampler")) overlay_sampler(j.at("sampler"), base.generation);
    if (j.contains("service")) overlay_service(j.at("service"), base.service);
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptPayload, std::string("bad config: ") + e.what());
  }
  return base;
}

Config load_config_file(const std::filesystem::path& path, Config base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return std::string(v);
  return std::nullopt;
}

void apply_environment(Config& config, const EnvLookup& env) {
  if (auto key = env("PREFALIGN_MLLM_API_KEY")) config.mllm.http.api_key = *key;
  if (auto endpoint = env("PREFALIGN_MLLM_ENDPOINT")) config.mllm.http.endpoint = *endpoint;
}

Config resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  Config config = file ? load_config_file(*file) : Config{};
  apply_environment(config, env);
  return config;
}

std::unique_ptr<mllm::ChatClient> make_chat_client(const MllmSettings& settings) {
  if (settings.mode == "http") return std::make_unique<mllm::HttpChatClient>(settings.http);
  if (settings.mode == "mock") {
    return std::make_unique<mllm::ReplayChatClient>(
        mllm::FixtureStore::load_directory(settings.fixture_dir));
  }
  fail(ErrorCode::kInvalidArgument, "unknown mllm mode '" + settings.mode + "'");
}

}  // namespace prefalign::gateway
