#include "prefalign/encode.hpp"

#include <cctype>
#include <cmath>

#include <spdlog/spdlog.h>

#include "prefalign/error.hpp"
#include "prefalign/rng.hpp"

namespace prefalign::encode {
namespace {

void require_same_shape(const TokenEmbeddingSequence& a, const TokenEmbeddingSequence& b) {
  if (a.length() != b.length() || a.dim() != b.dim()) {
    fail(ErrorCode::kShapeMismatch,
         "embedding shapes differ: " + std::to_string(a.length()) + "x" + std::to_string(a.dim()) +
             " vs " + std::to_string(b.length()) + "x" + std::to_string(b.dim()));
  }
}

}  // namespace

MockTextEncoder::MockTextEncoder(MockEncoderConfig config) : config_(config) {
  if (config_.sequence_length < 2 || config_.dim < 1) {
    fail(ErrorCode::kInvalidArgument, "mock encoder needs L >= 2 and d >= 1");
  }
}

std::vector<std::string> MockTextEncoder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current.push_back(static_cast<char>(std::tolower(ch)));
      continue;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
    if (!std::isspace(ch)) tokens.emplace_back(1, static_cast<char>(ch));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TokenEmbeddingSequence MockTextEncoder::encode(std::string_view text) const {
  const int length = config_.sequence_length;
  const int dim = config_.dim;
  auto words = tokenize(text);
  const std::size_t budget = static_cast<std::size_t>(length - 2);
  if (words.size() > budget) {
    spdlog::warn("encoder: truncating {} tokens to {}", words.size(), budget);
    words.resize(budget);
  }

  std::vector<std::string> slots;
  slots.reserve(static_cast<std::size_t>(length));
  slots.emplace_back("<bos>");
  for (auto& w : words) slots.push_back(std::move(w));
  slots.emplace_back("<eos>");
  while (slots.size() < static_cast<std::size_t>(length)) slots.emplace_back("<pad>");

  TokenEmbeddingSequence out;
  out.source_text = std::string(text);
  out.tokens.resize(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    std::uint64_t state = fnv1a64(slots[static_cast<std::size_t>(pos)]) ^
                          (config_.seed * 0x9E3779B97F4A7C15ull) ^
                          (static_cast<std::uint64_t>(pos + 1) * 0xD1B54A32D192ED03ull);
    for (int j = 0; j < dim; ++j) {
      out.tokens(pos, j) = 2.0 * unit_double(splitmix64(state)) - 1.0;
    }
  }
  return out;
}

TokenEmbeddingSequence orthogonal_reject(const TokenEmbeddingSequence& pref,
                                         const TokenEmbeddingSequence& prompt, double eps_norm) {
  require_same_shape(pref, prompt);
  TokenEmbeddingSequence out;
  out.source_text = pref.source_text;
  out.tokens = pref.tokens;
  for (Eigen::Index i = 0; i < prompt.length(); ++i) {
    const auto u = prompt.tokens.row(i);
    const double uu = u.squaredNorm();
    if (std::sqrt(uu) < eps_norm) continue;
    const double coeff = pref.tokens.row(i).dot(u) / uu;
    out.tokens.row(i) -= coeff * u;
  }
  return out;
}

TokenEmbeddingSequence inject_preference(const TokenEmbeddingSequence& prompt,
                                         const TokenEmbeddingSequence& pref, double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    fail(ErrorCode::kInvalidArgument, "alpha must be finite and >= 0");
  }
  const TokenEmbeddingSequence rejected = orthogonal_reject(pref, prompt);
  TokenEmbeddingSequence out;
  out.source_text = prompt.source_text;
  out.tokens = prompt.tokens + alpha * rejected.tokens;
  return out;
}

EmbeddingGroup build_embedding_group(const mllm::EnrichedPromptGroup& group,
                                     const mllm::KeywordSet& keywords, double alpha,
                                     const TextEncoder& encoder) {
  mllm::check_invariants(group);
  const TokenEmbeddingSequence pref = encoder.encode(mllm::preference_text(keywords));
  auto injected = [&](const std::string& text) {
    return inject_preference(encoder.encode(text), pref, alpha);
  };

  EmbeddingGroup out;
  out.alpha = alpha;
  out.complex = injected(group.complex_prompt);
  out.per_entity.reserve(group.entities.size());
  for (const auto& e : group.entities) out.per_entity.push_back(injected(e.sub_prompt));
  out.background = injected(group.background_prompt);
  out.unconditional = encoder.encode("");
  return out;
}

}  // namespace prefalign::encode
