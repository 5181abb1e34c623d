#pragma once

#include <string>
#include <string_view>

#include "prefalign/mllm/types.hpp"

namespace prefalign::mllm {

// Keyword extraction instruction for one rubric category. The artistic-style
// rendering is the reference wording; other categories reuse its skeleton.
std::string extraction_instruction(Category category);

// Prompt enrichment instruction followed by one worked example of the
// "Entities: / Complex prompt: / Background prompt:" output format.
std::string enrichment_instruction();

// Regional planning instruction followed by one worked example of the
// "Layout:" output format.
std::string planning_instruction();

// Per-request inputs appended after the instruction.
std::string enrichment_inputs(std::string_view base_prompt, const KeywordSet& keywords);
std::string planning_inputs(const EnrichedPromptGroup& group, const KeywordSet& keywords);

// "Artistic Style: a, b\nEmotional/Atmospheric: ...", "None" for empty buckets.
std::string keyword_listing(const KeywordSet& keywords);

enum class TemplateKind { kExtract, kEnrich, kPlan };

// System line appended on each retry, restating the required output format.
std::string corrective_line(TemplateKind kind);

}  // namespace prefalign::mllm
