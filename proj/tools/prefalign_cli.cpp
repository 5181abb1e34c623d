// prefalign: one-shot generation and the HTTP gateway.
//
//   prefalign generate --prompt "a boat on a lake" --reference ref.png --seed 7 --out out/
//   prefalign serve --port 8080 --mllm http --mllm-endpoint http://host/v1/chat/completions

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "prefalign/backend.hpp"
#include "prefalign/digest.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/error.hpp"
#include "prefalign/gateway/config.hpp"
#include "prefalign/gateway/service.hpp"
#include "prefalign/gateway/store.hpp"
#include "prefalign/pipeline.hpp"

namespace fs = std::filesystem;
using namespace prefalign;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::optional<std::string> config_file;
  std::optional<std::string> backend;
  std::optional<std::string> mllm;
  std::optional<std::string> mllm_endpoint;
};

struct GenerateFlags {
  std::string prompt;
  std::string reference;
  std::string out;
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<double> guidance;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> trace_dir;
};

struct ServeFlags {
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> data_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file");
  cmd->add_option("--backend", f.backend, "toy | external:<name>");
  cmd->add_option("--mllm", f.mllm, "mock | http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--mllm-endpoint", f.mllm_endpoint, "chat-completion URL");
}

gateway::Config build_config(const CommonFlags& f) {
  gateway::Config config =
      gateway::resolve_config(f.config_file ? std::optional<fs::path>(*f.config_file) : std::nullopt);
  if (config.mllm.fixture_dir.empty()) config.mllm.fixture_dir = PREFALIGN_DEFAULT_FIXTURE_DIR;
  if (f.backend) config.backend.name = *f.backend;
  if (f.mllm) config.mllm.mode = *f.mllm;
  if (f.mllm_endpoint) config.mllm.http.endpoint = *f.mllm_endpoint;
  return config;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::kInvalidArgument || code == ErrorCode::kLambdaOutOfRange;
}

int run_generate(const CommonFlags& common, const GenerateFlags& f) {
  gateway::Config config;
  try {
    config = build_config(common);
    if (f.alpha) config.generation.alpha = *f.alpha;
    if (f.lambda) config.generation.lambda = *f.lambda;
    if (f.guidance) config.generation.sampler.guidance_omega = *f.guidance;
    if (f.steps) config.generation.sampler.steps = *f.steps;
    if (f.seed) config.generation.sampler.seed = *f.seed;
    config.validate();
  } catch (const Error& e) {
    std::cerr << "error: " << code_name(e.code()) << ": " << e.what() << '\n';
    return is_usage_error(e.code()) ? kExitUsage : kExitFailure;
  }

  const std::string reference = read_file(f.reference);
  const std::span<const std::uint8_t> image(reinterpret_cast<const std::uint8_t*>(reference.data()),
                                            reference.size());

  // Same inputs, same id: session.json is reproducible byte for byte.
  pipeline::SessionOptions options;
  options.session_id =
      sha256_hex(sha256_hex(image) + "\n" + f.prompt + "\n" +
                 std::to_string(config.generation.sampler.seed))
          .substr(0, 32);
  options.retries = config.mllm.retries;
  options.max_image_bytes = config.mllm.max_image_bytes;
  options.config = config.generation;

  auto chat = gateway::make_chat_client(config.mllm);
  pipeline::SessionState state = pipeline::create_session(image, f.prompt, *chat, options);

  const encode::MockTextEncoder encoder(config.backend.encoder);
  auto diffusion = backend::make_backend(config.backend.name, {config.backend.toy});
  auto result = pipeline::run_round(state, {encoder, *diffusion});
  result.state.revision = 1;

  const fs::path out(f.out);
  fs::create_directories(out);
  write_file(out / "image.png",
             std::string_view(reinterpret_cast<const char*>(result.png.data()), result.png.size()));
  write_file(out / "session.json", pipeline::serialize_session(result.state));
  write_file(out / "provenance.json", pipeline::provenance_json(result.state));

  if (f.trace_dir) {
    if (auto* toy = dynamic_cast<backend::ToyDenoiser*>(diffusion.get())) {
      const auto inputs = pipeline::current_inputs(result.state);
      const auto embeddings = encode::build_embedding_group(
          pipeline::generation_group(inputs.group, inputs.plan), inputs.keywords,
          inputs.config.alpha, encoder);
      const auto x_t = backend::initial_latent(inputs.config.sampler);
      compose::ModulationTrace trace;
      toy->conditional_prediction(x_t, inputs.config.sampler.steps - 1,
                                  {embeddings, inputs.plan, inputs.config.lambda}, &trace);
      compose::dump_trace(trace, *f.trace_dir);
    } else {
      spdlog::warn("--trace-dir is only supported on the toy backend");
    }
  }

  std::cout << "image " << result.state.rounds.back().image_ref << '\n'
            << "session " << result.state.session_id << '\n';
  return 0;
}

int run_serve(const CommonFlags& common, const ServeFlags& f) {
  gateway::Config config;
  try {
    config = build_config(common);
    if (f.host) config.service.host = *f.host;
    if (f.port) config.service.port = *f.port;
    if (f.data_dir) config.service.data_dir = *f.data_dir;
    config.validate();
  } catch (const Error& e) {
    std::cerr << "error: " << code_name(e.code()) << ": " << e.what() << '\n';
    return is_usage_error(e.code()) ? kExitUsage : kExitFailure;
  }

  const fs::path data = config.service.data_dir;
  gateway::SessionStore sessions(data.empty() ? fs::path() : data / "sessions");
  gateway::ImageStore images(data.empty() ? fs::path() : data / "images");
  auto chat = gateway::make_chat_client(config.mllm);
  const encode::MockTextEncoder encoder(config.backend.encoder);

  gateway::GatewayService service(config, {*chat, encoder, sessions, images});
  gateway::HttpServer server(service);
  spdlog::info("listening on {}:{}", config.service.host, config.service.port);
  if (!server.listen(config.service.host, config.service.port)) {
    std::cerr << "error: io_error: cannot bind " << config.service.host << ':'
              << config.service.port << '\n';
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-aligned text-to-image orchestration"};
  app.require_subcommand(1);

  CommonFlags common;
  GenerateFlags gen;
  ServeFlags serve;

  auto* generate = app.add_subcommand("generate", "Run the full pipeline once");
  add_common(generate, common);
  generate->add_option("--prompt", gen.prompt, "base prompt")->required();
  generate->add_option("--reference", gen.reference, "reference image (PNG/JPEG)")->required();
  generate->add_option("--out", gen.out, "output directory")->required();
  generate->add_option("--alpha", gen.alpha, "preference injection strength");
  generate->add_option("--lambda", gen.lambda, "complex-branch blend weight");
  generate->add_option("--guidance", gen.guidance, "classifier-free guidance scale");
  generate->add_option("--steps", gen.steps, "denoising steps");
  generate->add_option("--seed", gen.seed, "sampler seed");
  generate->add_option("--trace-dir", gen.trace_dir, "dump per-branch latents of the first step");

  auto* srv = app.add_subcommand("serve", "Run the HTTP gateway");
  add_common(srv, common);
  srv->add_option("--host", serve.host, "bind address");
  srv->add_option("--port", serve.port, "bind port");
  srv->add_option("--data-dir", serve.data_dir, "persist sessions and images here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (generate->parsed()) return run_generate(common, gen);
    return run_serve(common, serve);
  } catch (const Error& e) {
    std::cerr << "error: " << code_name(e.code()) << ": " << e.what() << '\n';
    if (!e.raw_text().empty()) std::cerr << "raw response:\n" << e.raw_text() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kExitFailure;
  }
}
