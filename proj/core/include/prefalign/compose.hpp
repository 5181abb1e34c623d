#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "prefalign/encode.hpp"
#include "prefalign/layout.hpp"
#include "prefalign/tensor.hpp"

namespace prefalign::compose {

// Single-head projections. query: c x d_k, key: d x d_k, value: d x c.
struct AttentionWeights {
  Matrix query;
  Matrix key;
  Matrix value;

  int latent_channels() const { return static_cast<int>(query.rows()); }
  int embed_dim() const { return static_cast<int>(key.rows()); }
  int key_dim() const { return static_cast<int>(query.cols()); }
  // Throws kShapeMismatch / kInvalidArgument.
  void validate() const;
};

// Softmax(Q K^T / sqrt(d_k)) for Q = z W_q, K = P W_k; (h*w) x L.
Matrix attention_probabilities(const LatentFeatureMap& z, const TokenEmbeddingSequence& prompt,
                               const AttentionWeights& weights);

// Softmax(Q K^T / sqrt(d_k)) V with V = P W_v, reshaped to z's h x w x c.
LatentFeatureMap cross_attention(const LatentFeatureMap& z, const TokenEmbeddingSequence& prompt,
                                 const AttentionWeights& weights);

struct CompositeLayer {
  std::reference_wrapper<const LatentFeatureMap> latent;
  std::reference_wrapper<const layout::BinaryGrid> mask;
};

// Copies `background`, then paints each layer's latent into the cells its
// mask sets, in the given order (last writer wins).
LatentFeatureMap composite_latents(const LatentFeatureMap& background,
                                   const std::vector<CompositeLayer>& layers);

// lambda * complex + (1 - lambda) * composed, elementwise.
LatentFeatureMap blend(const LatentFeatureMap& complex, const LatentFeatureMap& composed,
                       double lambda);

// Per-branch intermediates of one modulated_attention call, in plan order.
struct ModulationTrace {
  LatentFeatureMap complex;
  LatentFeatureMap background;
  std::vector<LatentFeatureMap> entities;
  std::vector<layout::RegionMask> masks;
  LatentFeatureMap composite;
  LatentFeatureMap output;
};

// Runs cross-attention once per prompt-group member, composites the entity
// branches over the background branch in plan order, and blends the result
// with the complex branch.
LatentFeatureMap modulated_attention(const LatentFeatureMap& z, const encode::EmbeddingGroup& group,
                                     const layout::LayoutPlan& plan,
                                     const AttentionWeights& weights, double lambda,
                                     ModulationTrace* trace = nullptr);

// Writes each traced grid as <name>.bin (little-endian float64, raster
// order) plus <name>.json ({"shape":[h,w,c],"dtype":"<f8"}). Masks use
// "|u1" and shape [h,w].
void dump_trace(const ModulationTrace& trace, const std::filesystem::path& dir);

}  // namespace prefalign::compose
