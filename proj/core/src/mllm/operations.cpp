#include "prefalign/mllm/operations.hpp"

#include <optional>

#include <spdlog/spdlog.h>

#include "prefalign/digest.hpp"
#include "prefalign/error.hpp"
#include "prefalign/image.hpp"
#include "prefalign/mllm/parse.hpp"

namespace prefalign::mllm {
namespace {

ChatMessage system_message(std::string text) {
  return {"system", {TextPart{std::move(text)}}};
}

// Sends `request` up to retries+1 times. Transport failures are resent
// unchanged; unparseable replies get a corrective system line appended before
// the next attempt. The last failure is rethrown with the raw reply attached.
template <class Parse>
auto run_with_retries(ChatClient& chat, ChatRequest request, int retries, TemplateKind kind,
                      Parse&& parse) -> decltype(parse(std::string{})) {
  if (retries < 0) fail(ErrorCode::kInvalidArgument, "retries must be >= 0");
  std::optional<Error> last;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    std::string reply;
    try {
      reply = chat.complete(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport) throw;
      spdlog::warn("{}: attempt {} failed: {}", request.fixture_key, attempt + 1, e.what());
      last = e;
      continue;
    }
    try {
      return parse(reply);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseError && e.code() != ErrorCode::kMissingEntity) throw;
      spdlog::warn("{}: attempt {} unparseable: {}", request.fixture_key, attempt + 1, e.what());
      const ErrorCode code = e.code() == ErrorCode::kMissingEntity ? ErrorCode::kMissingEntity
                                                                    : ErrorCode::kMalformedResponse;
      last = Error(code, request.fixture_key + ": " + e.what(), reply);
      request.messages.push_back(system_message(corrective_line(kind)));
    }
  }
  throw *last;
}

}  // namespace

std::string extract_fixture_key(Category category) {
  return "extract:" + std::string(category_key(category));
}

std::string extract_digest(std::span<const std::uint8_t> image) { return sha256_hex(image); }

std::string enrich_digest(std::string_view base_prompt, const KeywordSet& keywords,
                          std::span<const std::uint8_t> image) {
  std::string content(base_prompt);
  content += '\n';
  content += preference_text(keywords);
  content += '\n';
  if (!image.empty()) content += sha256_hex(image);
  return sha256_hex(content);
}

std::string plan_digest(const EnrichedPromptGroup& group, const KeywordSet& keywords) {
  std::string content = preference_text(keywords);
  content += '\n';
  for (const auto& e : group.entities) {
    content += e.name;
    content += '\t';
    content += e.sub_prompt;
    content += '\n';
  }
  return sha256_hex(content);
}

KeywordSet extract_keywords(std::span<const std::uint8_t> image, ChatClient& chat, int retries,
                            std::size_t max_image_bytes) {
  inspect_image(image, max_image_bytes);
  const std::string data_url = image_data_url(image);
  const std::string digest = extract_digest(image);

  KeywordSet merged;
  std::string last_reply;
  for (Category category : kAllCategories) {
    ChatRequest request;
    request.fixture_key = extract_fixture_key(category);
    request.content_digest = digest;
    request.messages.push_back(system_message(extraction_instruction(category)));
    request.messages.push_back(
        {"user", {TextPart{"Identify the " + std::string(category_label(category)) +
                           " keywords of this image."},
                  ImagePart{data_url}}});

    const auto keywords = run_with_retries(
        chat, std::move(request), retries, TemplateKind::kExtract,
        [&](const std::string& reply) {
          last_reply = reply;
          return parse_keyword_list(reply);
        });
    for (const auto& kw : keywords) {
      const Category target = classify_keyword(kw).value_or(category);
      if (!merged.add(target, kw)) spdlog::warn("dropping keyword \"{}\"", kw);
    }
  }
  if (merged.empty()) {
    fail(ErrorCode::kMalformedResponse, "extraction produced no keywords", last_reply);
  }
  return merged;
}

EnrichedPromptGroup enrich_prompt(std::string_view base_prompt, const KeywordSet& keywords,
                                  ChatClient& chat, int retries,
                                  std::span<const std::uint8_t> image) {
  if (trim(base_prompt).empty()) fail(ErrorCode::kInvalidArgument, "base prompt is empty");
  check_invariants(keywords);

  ChatRequest request;
  request.fixture_key = std::string(kEnrichFixtureKey);
  request.content_digest = enrich_digest(base_prompt, keywords, image);
  request.messages.push_back(system_message(enrichment_instruction()));
  ChatMessage user{"user", {TextPart{enrichment_inputs(base_prompt, keywords)}}};
  if (!image.empty()) user.content.push_back(ImagePart{image_data_url(image)});
  request.messages.push_back(std::move(user));

  return run_with_retries(chat, std::move(request), retries, TemplateKind::kEnrich,
                          [&](const std::string& reply) {
                            return parse_enrichment(reply, base_prompt);
                          });
}

std::vector<RegionProposal> plan_regions(const EnrichedPromptGroup& group,
                                         const KeywordSet& keywords, ChatClient& chat,
                                         int retries) {
  if (group.entities.empty()) fail(ErrorCode::kInvalidArgument, "planning needs >= 1 entity");

  ChatRequest request;
  request.fixture_key = std::string(kPlanFixtureKey);
  request.content_digest = plan_digest(group, keywords);
  request.messages.push_back(system_message(planning_instruction()));
  request.messages.push_back({"user", {TextPart{planning_inputs(group, keywords)}}});

  return run_with_retries(
      chat, std::move(request), retries, TemplateKind::kPlan, [&](const std::string& reply) {
        auto proposals = parse_layout(reply);
        if (proposals.size() > group.entities.size()) {
          fail(ErrorCode::kParseError, "layout has " + std::to_string(proposals.size()) +
                                           " boxes for " + std::to_string(group.entities.size()) +
                                           " entities");
        }
        std::vector<std::optional<RegionProposal>> slots(group.entities.size());
        for (auto& p : proposals) {
          std::optional<std::size_t> idx;
          for (std::size_t i = 0; i < group.entities.size(); ++i) {
            if (to_lower(group.entities[i].name) == to_lower(p.entity)) idx = i;
          }
          if (!idx) fail(ErrorCode::kParseError, "layout names unknown entity \"" + p.entity + "\"");
          if (slots[*idx]) fail(ErrorCode::kParseError, "entity \"" + p.entity + "\" boxed twice");
          p.entity = group.entities[*idx].name;
          slots[*idx] = std::move(p);
        }
        std::vector<RegionProposal> ordered;
        for (std::size_t i = 0; i < slots.size(); ++i) {
          if (!slots[i]) {
            fail(ErrorCode::kMissingEntity,
                 "layout omits entity \"" + group.entities[i].name + "\"");
          }
          ordered.push_back(std::move(*slots[i]));
        }
        return ordered;
      });
}

}  // namespace prefalign::mllm
