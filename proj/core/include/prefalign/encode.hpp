#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prefalign/mllm/types.hpp"
#include "prefalign/tensor.hpp"

namespace prefalign::encode {

// Adapter contract for text encoders: text -> L x d grid with constant (L, d).
// Implementations must be safe for concurrent const use.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual TokenEmbeddingSequence encode(std::string_view text) const = 0;
  virtual int sequence_length() const = 0;
  virtual int dim() const = 0;
};

struct MockEncoderConfig {
  std::uint64_t seed = 0;
  int sequence_length = 16;
  int dim = 32;
};

// Deterministic stand-in for a CLIP-style encoder.
//
// Tokenization: lowercase ASCII; each run of alphanumerics is a token and
// every other non-space character is a token of its own. Slot 0 holds
// "<bos>", then up to L-2 text tokens (excess is truncated with a warning),
// then "<eos>", then "<pad>" in every remaining slot.
//
// Row for (token, position): state = fnv1a64(token)
//   ^ (seed * 0x9E3779B97F4A7C15) ^ ((position + 1) * 0xD1B54A32D192ED03);
// component j = 2 * unit_double(splitmix64(state)) - 1, drawn in order j = 0..d-1.
class MockTextEncoder final : public TextEncoder {
 public:
  explicit MockTextEncoder(MockEncoderConfig config = {});
  TokenEmbeddingSequence encode(std::string_view text) const override;
  int sequence_length() const override { return config_.sequence_length; }
  int dim() const override { return config_.dim; }

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  MockEncoderConfig config_;
};

inline constexpr double kDegenerateNorm = 1e-8;

// Per token row i: r_i = v_i - (<v_i,u_i>/<u_i,u_i>) u_i with v = pref and
// u = prompt; rows with ||u_i|| < eps_norm pass v_i through unchanged.
TokenEmbeddingSequence orthogonal_reject(const TokenEmbeddingSequence& pref,
                                         const TokenEmbeddingSequence& prompt,
                                         double eps_norm = kDegenerateNorm);

// prompt + alpha * orthogonal_reject(pref, prompt).
TokenEmbeddingSequence inject_preference(const TokenEmbeddingSequence& prompt,
                                         const TokenEmbeddingSequence& pref, double alpha);

struct EmbeddingGroup {
  TokenEmbeddingSequence complex;
  std::vector<TokenEmbeddingSequence> per_entity;  // group entity order
  TokenEmbeddingSequence background;
  TokenEmbeddingSequence unconditional;            // plain empty-text encoding
  double alpha = 0.0;

  bool operator==(const EmbeddingGroup&) const = default;
};

// Encodes every member of the prompt group and injects the encoded keyword
// text into each. The unconditional branch is never injected.
EmbeddingGroup build_embedding_group(const mllm::EnrichedPromptGroup& group,
                                     const mllm::KeywordSet& keywords, double alpha,
                                     const TextEncoder& encoder);

}  // namespace prefalign::encode
