#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "prefalign/backend.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/mllm/chat.hpp"
#include "prefalign/mllm/operations.hpp"
#include "prefalign/pipeline.hpp"

namespace prefalign::gateway {

struct MllmSettings {
  std::string mode = "mock";  // mock | http
  std::string fixture_dir;    // transcript corpus for mock mode
  mllm::HttpChatConfig http;
  int retries = mllm::kDefaultRetries;
  std::size_t max_image_bytes = mllm::kDefaultMaxImageBytes;
};

struct BackendSettings {
  std::string name = "toy";  // toy | external:<name>
  backend::ToyDenoiserConfig toy;
  encode::MockEncoderConfig encoder;
};

struct ServiceSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;  // empty: keep sessions and images in memory
  std::string cors_origin = "*";
  std::chrono::seconds round_timeout{300};
};

// File layout, every key optional:
// {
//   "mllm":    {"mode", "fixture_dir", "endpoint", "model", "api_key", "timeout_s",
//               "temperature", "max_tokens", "retries", "max_image_bytes"},
//   "backend": {"name", "weight_seed", "modulated_sites", "encoder_seed",
//               "sequence_length", "embed_dim"},
//   "sampler": {"alpha", "lambda", "guidance", "steps", "seed", "latent_h",
//               "latent_w", "latent_c", "step_size"},
//   "service": {"host", "port", "data_dir", "cors_origin", "round_timeout_s"}
// }
struct Config {
  MllmSettings mllm;
  BackendSettings backend;
  pipeline::GenerationConfig generation;
  ServiceSettings service;

  // Throws kInvalidArgument / kLambdaOutOfRange.
  void validate() const;
};

// Overlays a config file onto `base`. Throws kIo / kCorruptPayload.
Config load_config_file(const std::filesystem::path& path, Config base = {});
Config parse_config(std::string_view json_text, Config base = {});

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// PREFALIGN_MLLM_API_KEY and PREFALIGN_MLLM_ENDPOINT.
void apply_environment(Config& config, const EnvLookup& env = process_env);

// defaults < file < environment. Command-line overrides go on top.
Config resolve_config(const std::optional<std::filesystem::path>& file,
                      const EnvLookup& env = process_env);

std::unique_ptr<mllm::ChatClient> make_chat_client(const MllmSettings& settings);

}  // namespace prefalign::gateway
