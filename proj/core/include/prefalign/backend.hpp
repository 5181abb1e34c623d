#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prefalign/compose.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/image.hpp"
#include "prefalign/layout.hpp"
#include "prefalign/tensor.hpp"

namespace prefalign::backend {

inline constexpr int kDefaultSteps = 30;
inline constexpr double kDefaultGuidance = 5.0;
inline constexpr double kDefaultAlpha = 0.7;
inline constexpr double kDefaultLambda = 0.2;

struct SamplerConfig {
  int steps = kDefaultSteps;
  double guidance_omega = kDefaultGuidance;
  std::uint64_t seed = 0;
  int latent_h = 8;
  int latent_w = 8;
  int latent_c = 4;
  double step_size = 0.05;  // toy update rule only

  // Throws kInvalidArgument.
  void validate() const;
  bool operator==(const SamplerConfig&) const = default;
};

// What a denoiser needs from the pipeline at each attention site.
struct Conditioning {
  const encode::EmbeddingGroup& group;
  const layout::LayoutPlan& plan;
  double lambda;
};

// eps_uncond + omega * (eps_cond - eps_uncond). Throws kShapeMismatch.
NoisePrediction cfg_combine(const NoisePrediction& eps_uncond, const NoisePrediction& eps_cond,
                            double omega);

struct Capabilities {
  std::string name;
  int latent_channels = 0;
  int embed_dim = 0;
  int decode_scale = 8;
  std::vector<std::string> attention_sites;
};

// Adapter contract. A handle serves one generation at a time.
class DiffusionBackend {
 public:
  virtual ~DiffusionBackend() = default;
  virtual Capabilities capabilities() const = 0;
  // Guided noise prediction at step index t (counting down from steps-1).
  // Throws kBackendFailure on adapter faults.
  virtual NoisePrediction denoise_step(const LatentFeatureMap& x_t, int t, const Conditioning& cond,
                                       const SamplerConfig& config) = 0;
  // Solver update; the toy rule is x - step_size * eps.
  virtual LatentFeatureMap update(const LatentFeatureMap& x_t, const NoisePrediction& eps, int t,
                                  const SamplerConfig& config) = 0;
  virtual RgbImage decode_latent(const LatentFeatureMap& z) = 0;
};

struct ToyDenoiserConfig {
  std::uint64_t weight_seed = 0;
  int latent_channels = 4;
  int model_channels = 8;
  int embed_dim = 32;
  int key_dim = 16;
  double timestep_bias_scale = 0.1;
  // Attention sites that receive region modulation; empty means all. The toy
  // network has a single site named "mid".
  std::set<std::string> modulated_sites;
};

// Seeded stand-in for a U-Net: per-cell input projection, one cross-attention
// site, per-cell output projection, and a per-step bias.
//
// Weights are drawn from SeededRng(weight_seed).gaussian() in this order, each
// row-major and scaled by 1/sqrt(fan_in):
//   embed_in (c x m, fan_in c), embed_bias (m, fan_in c),
//   W_q (m x k, fan_in m), W_k (d x k, fan_in d), W_v (d x m, fan_in d),
//   embed_out (m x c, fan_in m)
// with c = latent channels, m = model channels, d = embedding dim, k = key dim.
// The bias for step t is timestep_bias_scale * SeededRng(weight_seed ^
// (0x9E3779B97F4A7C15 * (t + 1))).gaussian() for each of the c channels.
//
// forward: h = x W_in + b_in; a = attention(h); eps = (h + a) W_out + bias_t.
class ToyDenoiser final : public DiffusionBackend {
 public:
  explicit ToyDenoiser(ToyDenoiserConfig config = {});

  Capabilities capabilities() const override;
  NoisePrediction denoise_step(const LatentFeatureMap& x_t, int t, const Conditioning& cond,
                               const SamplerConfig& config) override;
  LatentFeatureMap update(const LatentFeatureMap& x_t, const NoisePrediction& eps, int t,
                          const SamplerConfig& config) override;
  // Per-channel affine 128 + 64 z into [0, 255] (RGB channel k reads latent
  // channel k mod c), nearest-neighbour upsampled 8x.
  RgbImage decode_latent(const LatentFeatureMap& z) override;

  // Pre-CFG conditional prediction through the modulated site.
  NoisePrediction conditional_prediction(const LatentFeatureMap& x_t, int t,
                                         const Conditioning& cond,
                                         compose::ModulationTrace* trace = nullptr) const;
  // Prediction with plain attention over one sequence.
  NoisePrediction plain_prediction(const LatentFeatureMap& x_t, int t,
                                   const TokenEmbeddingSequence& prompt) const;

  const compose::AttentionWeights& attention() const { return attention_; }
  const Matrix& embed_in() const { return embed_in_; }
  const RowVector& embed_bias() const { return embed_bias_; }
  const Matrix& embed_out() const { return embed_out_; }
  RowVector timestep_bias(int t) const;

 private:
  LatentFeatureMap project_in(const LatentFeatureMap& x_t) const;
  NoisePrediction project_out(const LatentFeatureMap& hidden, const LatentFeatureMap& attended,
                              int t) const;
  bool site_modulated(std::string_view site) const;

  ToyDenoiserConfig config_;
  Matrix embed_in_;
  RowVector embed_bias_;
  compose::AttentionWeights attention_;
  Matrix embed_out_;
};

struct SampleResult {
  LatentFeatureMap final_latent;
  std::vector<LatentFeatureMap> trajectory;  // one entry per step when requested
};

// x_T is a seeded Gaussian draw (SeededRng(config.seed), raster order, channel
// fastest); then `steps` iterations of denoise_step + update for t = steps-1
// down to 0.
SampleResult sample(DiffusionBackend& backend, const Conditioning& cond,
                    const SamplerConfig& config, bool keep_trajectory = false);

LatentFeatureMap initial_latent(const SamplerConfig& config);

struct BackendOptions {
  ToyDenoiserConfig toy;
};

using BackendFactory = std::function<std::unique_ptr<DiffusionBackend>(const BackendOptions&)>;

// Registers an adapter reachable as "external:<name>".
void register_external_backend(const std::string& name, BackendFactory factory);

// `spec` is "toy" or "external:<name>". Throws kBackendFailure for unknown
// adapters.
std::unique_ptr<DiffusionBackend> make_backend(std::string_view spec, const BackendOptions& options);

}  // namespace prefalign::backend
