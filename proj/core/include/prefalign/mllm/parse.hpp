#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prefalign/mllm/types.hpp"

namespace prefalign::mllm {

// All parsers are pure and anchor on the LAST occurrence of each labeled
// line, since chain-of-thought preambles may repeat labels. Failures throw
// Error{kParseError} carrying the input text.

// Raw entries of the final "Keywords:" line. A lone "None" / "N/A" yields an
// empty list; a line with nothing after the colon is a parse error.
std::vector<std::string> parse_keyword_list(std::string_view text);

// Flat keyword list classified into the rubric by lexicon, unmatched
// keywords land in Category::kOther.
KeywordSet parse_keyword_response(std::string_view text);

EnrichedPromptGroup parse_enrichment(std::string_view text, std::string_view base_prompt);

std::vector<RegionProposal> parse_layout(std::string_view text);

// Inverse renderings in the example output formats.
std::string render_keyword_line(const KeywordSet& keywords);
std::string render_enrichment(const EnrichedPromptGroup& group);
std::string render_layout(const std::vector<RegionProposal>& proposals);

}  // namespace prefalign::mllm
