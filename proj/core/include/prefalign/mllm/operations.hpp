#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefalign/mllm/chat.hpp"
#include "prefalign/mllm/templates.hpp"
#include "prefalign/mllm/types.hpp"

namespace prefalign::mllm {

inline constexpr int kDefaultRetries = 2;
inline constexpr std::size_t kDefaultMaxImageBytes = 20u * 1024u * 1024u;

// Fixture keys and content digests. A digest covers only the semantic inputs
// of a request, so retries and template wording do not change it.
std::string extract_fixture_key(Category category);  // "extract:<category_key>"
inline constexpr std::string_view kEnrichFixtureKey = "enrich";
inline constexpr std::string_view kPlanFixtureKey = "plan";

std::string extract_digest(std::span<const std::uint8_t> image);
std::string enrich_digest(std::string_view base_prompt, const KeywordSet& keywords,
                          std::span<const std::uint8_t> image);
std::string plan_digest(const EnrichedPromptGroup& group, const KeywordSet& keywords);

// One request per rubric category; lexicon matches decide the bucket and
// unmatched keywords stay in the category they were requested for.
KeywordSet extract_keywords(std::span<const std::uint8_t> image, ChatClient& chat,
                            int retries = kDefaultRetries,
                            std::size_t max_image_bytes = kDefaultMaxImageBytes);

// `image` may be empty, in which case enrichment sees keywords only.
EnrichedPromptGroup enrich_prompt(std::string_view base_prompt, const KeywordSet& keywords,
                                  ChatClient& chat, int retries = kDefaultRetries,
                                  std::span<const std::uint8_t> image = {});

// Exactly one proposal per entity, returned in group entity order. Boxes are
// not validated here.
std::vector<RegionProposal> plan_regions(const EnrichedPromptGroup& group,
                                         const KeywordSet& keywords, ChatClient& chat,
                                         int retries = kDefaultRetries);

}  // namespace prefalign::mllm
