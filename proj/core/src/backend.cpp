#include "prefalign/backend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "prefalign/error.hpp"
#include "prefalign/rng.hpp"

namespace prefalign::backend {
namespace {

constexpr int kDecodeScale = 8;
constexpr const char* kSiteName = "mid";

Matrix draw(SeededRng& rng, int rows, int cols, int fan_in) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  }
  return m;
}

void require_shape(const LatentFeatureMap& a, const LatentFeatureMap& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, "noise predictions differ in shape");
}

}  // namespace

void SamplerConfig::validate() const {
  if (steps < 1) fail(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (!std::isfinite(guidance_omega) || guidance_omega < 0.0) {
    fail(ErrorCode::kInvalidArgument, "guidance must be finite and >= 0");
  }
  if (latent_h < 1 || latent_w < 1 || latent_c < 1) {
    fail(ErrorCode::kInvalidArgument, "latent dimensions must be >= 1");
  }
  if (!std::isfinite(step_size) || step_size <= 0.0) {
    fail(ErrorCode::kInvalidArgument, "step size must be finite and > 0");
  }
}

NoisePrediction cfg_combine(const NoisePrediction& eps_uncond, const NoisePrediction& eps_cond,
                            double omega) {
  require_shape(eps_uncond, eps_cond);
  NoisePrediction out = eps_uncond;
  // Same value as u + omega (c - u), but exact at omega = 0 and omega = 1.
  out.cells = (1.0 - omega) * eps_uncond.cells + omega * eps_cond.cells;
  return out;
}

ToyDenoiser::ToyDenoiser(ToyDenoiserConfig config) : config_(std::move(config)) {
  const int c = config_.latent_channels;
  const int m = config_.model_channels;
  const int d = config_.embed_dim;
  const int k = config_.key_dim;
  if (c < 1 || m < 1 || d < 1 || k < 1) {
    fail(ErrorCode::kInvalidArgument, "toy denoiser dimensions must be >= 1");
  }
  SeededRng rng(config_.weight_seed);
  embed_in_ = draw(rng, c, m, c);
  embed_bias_ = draw(rng, 1, m, c);
  attention_.query = draw(rng, m, k, m);
  attention_.key = draw(rng, d, k, d);
  attention_.value = draw(rng, d, m, d);
  embed_out_ = draw(rng, m, c, m);
}

Capabilities ToyDenoiser::capabilities() const {
  return {"toy", config_.latent_channels, config_.embed_dim, kDecodeScale, {kSiteName}};
}

RowVector ToyDenoiser::timestep_bias(int t) const {
  SeededRng rng(config_.weight_seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1)));
  RowVector bias(config_.latent_channels);
  for (int j = 0; j < config_.latent_channels; ++j) {
    bias(j) = config_.timestep_bias_scale * rng.gaussian();
  }
  return bias;
}

bool ToyDenoiser::site_modulated(std::string_view site) const {
  return config_.modulated_sites.empty() ||
         config_.modulated_sites.contains(std::string(site));
}

LatentFeatureMap ToyDenoiser::project_in(const LatentFeatureMap& x_t) const {
  if (x_t.channels() != config_.latent_channels) {
    fail(ErrorCode::kShapeMismatch, "latent has " + std::to_string(x_t.channels()) +
                                        " channels, denoiser expects " +
                                        std::to_string(config_.latent_channels));
  }
  LatentFeatureMap h;
  h.height = x_t.height;
  h.width = x_t.width;
  h.cells = (x_t.cells * embed_in_).rowwise() + embed_bias_;
  return h;
}

NoisePrediction ToyDenoiser::project_out(const LatentFeatureMap& hidden,
                                         const LatentFeatureMap& attended, int t) const {
  NoisePrediction eps;
  eps.height = hidden.height;
  eps.width = hidden.width;
  eps.cells = ((hidden.cells + attended.cells) * embed_out_).rowwise() + timestep_bias(t);
  return eps;
}

NoisePrediction ToyDenoiser::conditional_prediction(const LatentFeatureMap& x_t, int t,
                                                    const Conditioning& cond,
                                                    compose::ModulationTrace* trace) const {
  const LatentFeatureMap h = project_in(x_t);
  LatentFeatureMap attended =
      site_modulated(kSiteName)
          ? compose::modulated_attention(h, cond.group, cond.plan, attention_, cond.lambda, trace)
          : compose::cross_attention(h, cond.group.complex, attention_);
  return project_out(h, attended, t);
}

NoisePrediction ToyDenoiser::plain_prediction(const LatentFeatureMap& x_t, int t,
                                              const TokenEmbeddingSequence& prompt) const {
  const LatentFeatureMap h = project_in(x_t);
  return project_out(h, compose::cross_attention(h, prompt, attention_), t);
}

NoisePrediction ToyDenoiser::denoise_step(const LatentFeatureMap& x_t, int t,
                                          const Conditioning& cond, const SamplerConfig& config) {
  NoisePrediction eps = cfg_combine(plain_prediction(x_t, t, cond.group.unconditional),
                                    conditional_prediction(x_t, t, cond), config.guidance_omega);
  if (!eps.cells.allFinite()) {
    fail(ErrorCode::kBackendFailure, "noise prediction diverged at step " + std::to_string(t));
  }
  return eps;
}

LatentFeatureMap ToyDenoiser::update(const LatentFeatureMap& x_t, const NoisePrediction& eps,
                                     int /*t*/, const SamplerConfig& config) {
  require_shape(x_t, eps);
  LatentFeatureMap out = x_t;
  out.cells -= config.step_size * eps.cells;
  return out;
}

RgbImage ToyDenoiser::decode_latent(const LatentFeatureMap& z) {
  if (z.channels() < 1 || z.height < 1 || z.width < 1) {
    fail(ErrorCode::kBackendFailure, "cannot decode an empty latent");
  }
  if (!z.cells.allFinite()) fail(ErrorCode::kBackendFailure, "latent contains non-finite values");
  RgbImage img;
  img.width = z.width * kDecodeScale;
  img.height = z.height * kDecodeScale;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int r = y / kDecodeScale;
      const int c = x / kDecodeScale;
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(128.0 + 64.0 * z.at(r, c, k % z.channels()), 0.0, 255.0);
        img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3 + k] =
            static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return img;
}

LatentFeatureMap initial_latent(const SamplerConfig& config) {
  config.validate();
  LatentFeatureMap x(config.latent_h, config.latent_w, config.latent_c);
  SeededRng rng(config.seed);
  for (Eigen::Index i = 0; i < x.cells.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cells.cols(); ++j) x.cells(i, j) = rng.gaussian();
  }
  return x;
}

SampleResult sample(DiffusionBackend& backend, const Conditioning& cond,
                    const SamplerConfig& config, bool keep_trajectory) {
  SampleResult result{initial_latent(config), {}};
  if (keep_trajectory) result.trajectory.reserve(static_cast<std::size_t>(config.steps));
  for (int t = config.steps - 1; t >= 0; --t) {
    const NoisePrediction eps = backend.denoise_step(result.final_latent, t, cond, config);
    result.final_latent = backend.update(result.final_latent, eps, t, config);
    if (keep_trajectory) result.trajectory.push_back(result.final_latent);
  }
  return result;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackendFactory>& registry() {
  static std::map<std::string, BackendFactory> r;
  return r;
}

}  // namespace

void register_external_backend(const std::string& name, BackendFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<DiffusionBackend> make_backend(std::string_view spec, const BackendOptions& options) {
  if (spec == "toy") return std::make_unique<ToyDenoiser>(options.toy);
  constexpr std::string_view kPrefix = "external:";
  if (spec.starts_with(kPrefix)) {
    const std::string name(spec.substr(kPrefix.size()));
    BackendFactory factory;
    {
      std::lock_guard lock(registry_mutex());
      auto it = registry().find(name);
      if (it != registry().end()) factory = it->second;
    }
    if (!factory) fail(ErrorCode::kBackendFailure, "no adapter registered as '" + name + "'");
    auto backend = factory(options);
    if (!backend) fail(ErrorCode::kBackendFailure, "adapter '" + name + "' failed to load");
    return backend;
  }
  fail(ErrorCode::kBackendFailure, "unknown backend '" + std::string(spec) + "'");
}

}  // namespace prefalign::backend
