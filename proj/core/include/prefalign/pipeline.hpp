#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prefalign/backend.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/layout.hpp"
#include "prefalign/mllm/chat.hpp"
#include "prefalign/mllm/operations.hpp"
#include "prefalign/mllm/types.hpp"

namespace prefalign::pipeline {

inline constexpr int kSchemaVersion = 1;

struct GenerationConfig {
  double alpha = backend::kDefaultAlpha;
  double lambda = backend::kDefaultLambda;
  backend::SamplerConfig sampler;

  // Throws kInvalidArgument / kLambdaOutOfRange.
  void validate() const;
  bool operator==(const GenerationConfig&) const = default;
};

// Everything that determines one round's image on a deterministic stack.
struct RoundInputs {
  mllm::KeywordSet keywords;
  mllm::EnrichedPromptGroup group;
  layout::LayoutPlan plan;
  GenerationConfig config;

  bool operator==(const RoundInputs&) const = default;
};

struct RoundRecord {
  std::size_t round_index = 0;
  std::string input_digest;
  std::uint64_t seed = 0;
  std::string image_ref;  // sha256 of the PNG bytes
  RoundInputs inputs;

  bool operator==(const RoundRecord&) const = default;
};

struct SessionState {
  std::string session_id;
  std::uint64_t revision = 0;
  std::string reference_image;  // sha256 of the uploaded bytes
  std::string base_prompt;
  mllm::KeywordSet keywords;
  mllm::EnrichedPromptGroup group;
  layout::LayoutPlan plan;
  GenerationConfig config;
  std::vector<RoundRecord> rounds;

  bool operator==(const SessionState&) const = default;
};

// Equality ignoring session_id and revision.
bool same_content(const SessionState& a, const SessionState& b);

// Throws kInvalidArgument when keywords, group, plan and config are not
// jointly valid.
void check_invariants(const SessionState& state);

namespace edit {
struct ReplaceKeywords {
  mllm::KeywordSet keywords;
};
struct AddEntity {
  std::string name;
  std::string sub_prompt;
  std::optional<layout::Region> region;  // absent: ask the planner
};
struct RemoveEntity {
  std::string name;
};
struct EditSubPrompt {
  std::string name;
  std::string text;
};
struct MoveRegion {
  std::string name;
  layout::Region region;
};
struct SetAlpha {
  double value;
};
struct SetLambda {
  double value;
};
struct SetBasePrompt {
  std::string text;
};
struct SetSeed {
  std::uint64_t value;
};
}  // namespace edit

using SessionEdit =
    std::variant<edit::ReplaceKeywords, edit::AddEntity, edit::RemoveEntity, edit::EditSubPrompt,
                 edit::MoveRegion, edit::SetAlpha, edit::SetLambda, edit::SetBasePrompt,
                 edit::SetSeed>;

std::string_view edit_name(const SessionEdit& e);

struct SessionOptions {
  std::string session_id;  // empty: random
  int retries = mllm::kDefaultRetries;
  std::size_t max_image_bytes = mllm::kDefaultMaxImageBytes;
  GenerationConfig config;
};

// understand -> enrich -> plan -> validate/order. Nothing is returned when
// any stage throws.
SessionState create_session(std::span<const std::uint8_t> reference_image,
                            std::string_view base_prompt, mllm::ChatClient& chat,
                            const SessionOptions& options = {});

// Pure transition. Only AddEntity without a region talks to `planner`, with
// a single-entity plan request; it throws kInvalidArgument when planner is
// null in that case. Errors: kUnknownEntity, kDuplicateEntity, kInvalidRegion,
// kLambdaOutOfRange, kInvalidArgument.
SessionState apply_edit(const SessionState& state, const SessionEdit& edit,
                        mllm::ChatClient* planner = nullptr,
                        int retries = mllm::kDefaultRetries);

// All-or-nothing sequential application.
SessionState apply_edits(const SessionState& state, std::span<const SessionEdit> edits,
                         mllm::ChatClient* planner = nullptr,
                         int retries = mllm::kDefaultRetries);

struct GenerationDeps {
  const encode::TextEncoder& encoder;
  backend::DiffusionBackend& backend;
};

// The prompt group handed to the encoder: each entity's text is its located
// sub-prompt from the plan.
mllm::EnrichedPromptGroup generation_group(const mllm::EnrichedPromptGroup& group,
                                           const layout::LayoutPlan& plan);

RoundInputs current_inputs(const SessionState& state);
std::string input_digest(const RoundInputs& inputs);

std::vector<std::uint8_t> render(const RoundInputs& inputs, GenerationDeps deps);

struct RoundResult {
  SessionState state;
  std::vector<std::uint8_t> png;
};

RoundResult run_round(const SessionState& state, GenerationDeps deps);

// Re-renders a stored round; the PNG's sha256 equals record.image_ref on a
// deterministic stack.
std::vector<std::uint8_t> replay(const RoundRecord& record, GenerationDeps deps);

// JSON with a schema_version field. deserialize throws kCorruptPayload and
// kSchemaVersionMismatch.
std::string serialize_session(const SessionState& state);
SessionState deserialize_session(std::string_view bytes);

// Provenance sidecar: keywords, prompts, plan, config.
std::string provenance_json(const SessionState& state);

// PATCH body: JSON array of {"op": <edit name>, ...}. Throws kCorruptPayload.
std::vector<SessionEdit> parse_edits(std::string_view json);
std::string edits_to_json(std::span<const SessionEdit> edits);

}  // namespace prefalign::pipeline
