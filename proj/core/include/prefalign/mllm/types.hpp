#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefalign::mllm {

// Five-way preference rubric, in serialization order.
enum class Category : std::size_t {
  kArtisticStyle = 0,
  kEmotionalAtmospheric,
  kThematic,
  kVisualElements,
  kOther,
};

inline constexpr std::size_t kCategoryCount = 5;
inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::kArtisticStyle, Category::kEmotionalAtmospheric, Category::kThematic,
    Category::kVisualElements, Category::kOther};

inline constexpr std::size_t kMaxKeywordsPerCategory = 8;
inline constexpr std::size_t kMaxKeywordWords = 5;

// snake_case field name used in JSON ("artistic_style", ...).
std::string_view category_key(Category c);
// Human label used inside instructions ("Artistic Style", ...).
std::string_view category_label(Category c);
std::optional<Category> category_from_key(std::string_view key);

class KeywordSet {
 public:
  const std::vector<std::string>& operator[](Category c) const {
    return buckets_[static_cast<std::size_t>(c)];
  }

  // Adds a trimmed keyword unless it is empty, longer than five words, a
  // case-insensitive duplicate within the category, or the category is full.
  // Returns whether the keyword was stored.
  bool add(Category c, std::string_view keyword);

  std::size_t size() const;
  bool empty() const { return size() == 0; }

  bool operator==(const KeywordSet&) const = default;

 private:
  std::array<std::vector<std::string>, kCategoryCount> buckets_;
};

// Throws kInvalidArgument when any invariant is violated (including an empty
// union).
void check_invariants(const KeywordSet& keywords);

// Comma-joined flattening in rubric order; the y_key text fed to the encoder.
std::string preference_text(const KeywordSet& keywords);

// Lexicon lookup. nullopt when no seed term matches.
std::optional<Category> classify_keyword(std::string_view keyword);

struct Entity {
  std::string name;
  std::string sub_prompt;

  bool operator==(const Entity&) const = default;
};

inline constexpr std::size_t kMaxEntities = 8;
inline constexpr std::size_t kSubPromptWordLimit = 30;
inline constexpr std::size_t kComplexPromptWordLimit = 40;
inline constexpr std::size_t kBackgroundWordLimit = 12;

struct EnrichedPromptGroup {
  std::string base_prompt;
  std::string complex_prompt;
  std::vector<Entity> entities;
  std::string background_prompt;

  std::optional<std::size_t> find(std::string_view name) const;
  bool operator==(const EnrichedPromptGroup&) const = default;
};

// Hard invariants throw kInvalidArgument; word-limit overruns are returned as
// warning strings.
std::vector<std::string> check_invariants(const EnrichedPromptGroup& group);

struct RegionProposal {
  std::string entity;
  std::array<double, 4> raw_box{};  // x_left, y_top, x_right, y_bottom
  std::string located_sub_prompt;

  bool operator==(const RegionProposal&) const = default;
};

std::size_t word_count(std::string_view text);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace prefalign::mllm
