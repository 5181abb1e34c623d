#include "prefalign/compose.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "prefalign/error.hpp"

namespace prefalign::compose {
namespace {

void require_same_shape(const LatentFeatureMap& a, const LatentFeatureMap& b, const char* what) {
  if (!a.same_shape(b)) fail(ErrorCode::kShapeMismatch, std::string(what) + ": latent shapes differ");
}

void check_inputs(const LatentFeatureMap& z, const TokenEmbeddingSequence& prompt,
                  const AttentionWeights& weights) {
  weights.validate();
  if (z.channels() != weights.latent_channels()) {
    fail(ErrorCode::kShapeMismatch, "latent channels " + std::to_string(z.channels()) +
                                        " != attention input " +
                                        std::to_string(weights.latent_channels()));
  }
  if (prompt.dim() != weights.embed_dim()) {
    fail(ErrorCode::kShapeMismatch, "embedding dim " + std::to_string(prompt.dim()) +
                                        " != attention key input " +
                                        std::to_string(weights.embed_dim()));
  }
  if (prompt.length() < 1) fail(ErrorCode::kShapeMismatch, "empty token sequence");
}

}  // namespace

void AttentionWeights::validate() const {
  if (query.rows() < 1 || query.cols() < 1 || key.rows() < 1) {
    fail(ErrorCode::kShapeMismatch, "attention weights are empty");
  }
  if (key.cols() != query.cols()) fail(ErrorCode::kShapeMismatch, "W_q and W_k key dims differ");
  if (value.rows() != key.rows()) fail(ErrorCode::kShapeMismatch, "W_k and W_v input dims differ");
  if (value.cols() != query.rows()) {
    fail(ErrorCode::kShapeMismatch, "W_v output dim must match latent channels");
  }
  if (!query.allFinite() || !key.allFinite() || !value.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "attention weights contain non-finite entries");
  }
}

Matrix attention_probabilities(const LatentFeatureMap& z, const TokenEmbeddingSequence& prompt,
                               const AttentionWeights& weights) {
  check_inputs(z, prompt, weights);
  const Matrix q = z.cells * weights.query;
  const Matrix k = prompt.tokens * weights.key;
  Matrix scores = (q * k.transpose()) / std::sqrt(static_cast<double>(weights.key_dim()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return scores;
}

LatentFeatureMap cross_attention(const LatentFeatureMap& z, const TokenEmbeddingSequence& prompt,
                                 const AttentionWeights& weights) {
  const Matrix probs = attention_probabilities(z, prompt, weights);
  LatentFeatureMap out;
  out.height = z.height;
  out.width = z.width;
  out.cells = probs * (prompt.tokens * weights.value);
  return out;
}

LatentFeatureMap composite_latents(const LatentFeatureMap& background,
                                   const std::vector<CompositeLayer>& layers) {
  LatentFeatureMap out = background;
  for (const auto& layer : layers) {
    const LatentFeatureMap& latent = layer.latent.get();
    const layout::BinaryGrid& mask = layer.mask.get();
    require_same_shape(background, latent, "composite");
    if (mask.height != background.height || mask.width != background.width) {
      fail(ErrorCode::kShapeMismatch, "composite: mask shape differs from latent");
    }
    for (std::size_t cell = 0; cell < mask.cells.size(); ++cell) {
      if (mask.cells[cell]) {
        out.cells.row(static_cast<Eigen::Index>(cell)) = latent.cells.row(static_cast<Eigen::Index>(cell));
      }
    }
  }
  return out;
}

LatentFeatureMap blend(const LatentFeatureMap& complex, const LatentFeatureMap& composed,
                       double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorCode::kLambdaOutOfRange, "lambda must lie in [0, 1]");
  }
  require_same_shape(complex, composed, "blend");
  LatentFeatureMap out;
  out.height = complex.height;
  out.width = complex.width;
  out.cells = lambda * complex.cells + (1.0 - lambda) * composed.cells;
  return out;
}

LatentFeatureMap modulated_attention(const LatentFeatureMap& z, const encode::EmbeddingGroup& group,
                                     const layout::LayoutPlan& plan,
                                     const AttentionWeights& weights, double lambda,
                                     ModulationTrace* trace) {
  if (plan.entries.size() != group.per_entity.size()) {
    fail(ErrorCode::kLengthMismatch, "plan has " + std::to_string(plan.entries.size()) +
                                         " entries for " + std::to_string(group.per_entity.size()) +
                                         " entity embeddings");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorCode::kLambdaOutOfRange, "lambda must lie in [0, 1]");
  }

  LatentFeatureMap complex = cross_attention(z, group.complex, weights);
  LatentFeatureMap background = cross_attention(z, group.background, weights);

  std::vector<LatentFeatureMap> entities;
  std::vector<layout::RegionMask> masks;
  entities.reserve(plan.entries.size());
  masks.reserve(plan.entries.size());
  for (const auto& entry : plan.entries) {
    if (entry.entity_index >= group.per_entity.size()) {
      fail(ErrorCode::kLengthMismatch, "plan references entity " +
                                           std::to_string(entry.entity_index) + " out of range");
    }
    entities.push_back(cross_attention(z, group.per_entity[entry.entity_index], weights));
    masks.push_back(layout::rasterize_mask(entry.region, z.height, z.width));
  }

  std::vector<CompositeLayer> layers;
  layers.reserve(entities.size());
  for (std::size_t i = 0; i < entities.size(); ++i) {
    layers.push_back({std::cref(entities[i]), std::cref(masks[i].grid)});
  }
  LatentFeatureMap composite = composite_latents(background, layers);
  LatentFeatureMap output = blend(complex, composite, lambda);

  if (trace != nullptr) {
    trace->complex = std::move(complex);
    trace->background = std::move(background);
    trace->entities = std::move(entities);
    trace->masks = std::move(masks);
    trace->composite = std::move(composite);
    trace->output = output;
  }
  return output;
}

namespace {

void write_latent(const LatentFeatureMap& map, const std::filesystem::path& dir,
                  const std::string& name) {
  std::ofstream bin(dir / (name + ".bin"), std::ios::binary);
  for (Eigen::Index i = 0; i < map.cells.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.cells.cols(); ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(map.cells(i, j));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      bin.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  nlohmann::json header = {{"shape", {map.height, map.width, map.channels()}}, {"dtype", "<f8"}};
  std::ofstream(dir / (name + ".json")) << header.dump() << '\n';
}

void write_mask(const layout::BinaryGrid& grid, const std::filesystem::path& dir,
                const std::string& name) {
  std::ofstream bin(dir / (name + ".bin"), std::ios::binary);
  bin.write(reinterpret_cast<const char*>(grid.cells.data()),
            static_cast<std::streamsize>(grid.cells.size()));
  nlohmann::json header = {{"shape", {grid.height, grid.width}}, {"dtype", "|u1"}};
  std::ofstream(dir / (name + ".json")) << header.dump() << '\n';
}

}  // namespace

void dump_trace(const ModulationTrace& trace, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_latent(trace.complex, dir, "complex");
  write_latent(trace.background, dir, "background");
  for (std::size_t i = 0; i < trace.entities.size(); ++i) {
    write_latent(trace.entities[i], dir, "entity_" + std::to_string(i));
    write_mask(trace.masks[i].grid, dir, "mask_" + std::to_string(i));
  }
  write_latent(trace.composite, dir, "composite");
  write_latent(trace.output, dir, "output");
}

}  // namespace prefalign::compose
