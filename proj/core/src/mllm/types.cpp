#include "prefalign/mllm/types.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "prefalign/error.hpp"

namespace prefalign::mllm {
namespace {

// Seed terms per category, lowercase. Multi-word terms match as contiguous
// word sequences inside a keyword.
const std::array<std::vector<std::string_view>, kCategoryCount>& lexicon() {
  static const std::array<std::vector<std::string_view>, kCategoryCount> kLexicon = {{
      {"expressionism", "impressionism", "post-impressionism", "surrealism", "cubism",
       "abstract", "realism", "minimalism", "pop art", "art nouveau", "art deco", "baroque",
       "renaissance", "romanticism", "fauvism", "pointillism", "ukiyo-e", "oil painting",
       "watercolor", "watercolour", "acrylic", "gouache", "fresco", "impasto",
       "digital painting", "digital art", "painting", "sketch", "charcoal", "ink", "pencil",
       "illustration", "photorealism", "photography", "sculpture", "mixed media", "graffiti",
       "collage", "anime", "concept art", "pixel art", "3d render", "engraving", "woodcut",
       "tonalism", "lithograph"},
      {"tension", "gloom", "gloomy", "melancholy", "serene", "serenity", "calm", "joy",
       "joyful", "happy", "sadness", "sad", "fear", "awe", "nostalgia", "nostalgic",
       "romantic", "warm", "warmth", "mysterious", "mystery", "eerie", "dreamy", "peaceful",
       "tranquil", "hope", "hopeful", "loneliness", "lonely", "anxiety", "dread",
       "excitement", "intensity", "intense", "whimsical", "cozy", "somber", "ominous",
       "dramatic", "ethereal", "playful", "uplifting", "bittersweet", "turbulent"},
      {"nature", "urbanization", "urban", "city", "solitude", "isolation", "war", "love",
       "death", "rebirth", "journey", "freedom", "religion", "spirituality", "mythology",
       "myth", "fantasy", "science fiction", "sci-fi", "cyberpunk", "futuristic", "dystopia",
       "dystopian", "utopia", "history", "industrial", "technology", "childhood", "family",
       "memory", "maritime", "pastoral", "apocalypse", "post-apocalyptic", "decay",
       "heroism", "adventure", "exploration", "cosmos", "space", "seasons", "village"},
      {"fog", "mist", "light", "lighting", "shadow", "shadows", "contrast", "color", "colour",
       "colors", "palette", "swirl", "swirling", "brushstrokes", "texture", "symmetry",
       "asymmetry", "geometric shapes", "rule of thirds", "composition", "perspective",
       "depth of field", "bokeh", "silhouette", "vibrant", "muted", "monochrome", "pastel",
       "neon", "glow", "golden hour", "reflection", "reflections", "gradient", "lines",
       "pattern", "blue", "red", "green", "yellow", "gray", "grey", "night sky", "stars"},
      {"cat", "dog", "bird", "horse", "car", "cars", "boat", "ship", "building", "tree",
       "flower", "flowers", "robot", "person", "child", "woman", "man", "character", "text",
       "logo", "signature", "wood", "metal", "glass", "stone", "clock", "book", "lamp",
       "bridge", "train", "mask", "crown", "sword", "guitar", "umbrella", "lantern",
       "window", "chair", "mirror", "candle"},
  }};
  return kLexicon;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

bool contains_sequence(const std::vector<std::string>& words, const std::vector<std::string>& seq) {
  if (seq.empty() || seq.size() > words.size()) return false;
  for (std::size_t i = 0; i + seq.size() <= words.size(); ++i) {
    if (std::equal(seq.begin(), seq.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string_view category_key(Category c) {
  switch (c) {
    case Category::kArtisticStyle: return "artistic_style";
    case Category::kEmotionalAtmospheric: return "emotional_atmospheric";
    case Category::kThematic: return "thematic";
    case Category::kVisualElements: return "visual_elements";
    case Category::kOther: return "other";
  }
  return "other";
}

std::string_view category_label(Category c) {
  switch (c) {
    case Category::kArtisticStyle: return "Artistic Style";
    case Category::kEmotionalAtmospheric: return "Emotional/Atmospheric";
    case Category::kThematic: return "Thematic";
    case Category::kVisualElements: return "Visual Elements";
    case Category::kOther: return "Others";
  }
  return "Others";
}

std::optional<Category> category_from_key(std::string_view key) {
  for (Category c : kAllCategories) {
    if (category_key(c) == key) return c;
  }
  return std::nullopt;
}

std::string trim(std::string_view text) {
  auto is_space = [](unsigned char ch) { return std::isspace(ch) != 0; };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return std::string(text);
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

bool KeywordSet::add(Category c, std::string_view keyword) {
  std::string kw = trim(keyword);
  const std::size_t words = word_count(kw);
  if (words == 0 || words > kMaxKeywordWords) return false;
  auto& bucket = buckets_[static_cast<std::size_t>(c)];
  if (bucket.size() >= kMaxKeywordsPerCategory) return false;
  const std::string lowered = to_lower(kw);
  for (const auto& existing : bucket) {
    if (to_lower(existing) == lowered) return false;
  }
  bucket.push_back(std::move(kw));
  return true;
}

std::size_t KeywordSet::size() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.size();
  return n;
}

void check_invariants(const KeywordSet& keywords) {
  if (keywords.empty()) fail(ErrorCode::kInvalidArgument, "keyword set is empty");
  for (Category c : kAllCategories) {
    const auto& bucket = keywords[c];
    if (bucket.size() > kMaxKeywordsPerCategory) {
      fail(ErrorCode::kInvalidArgument,
           std::string("too many keywords in ") + std::string(category_key(c)));
    }
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      const std::size_t words = word_count(bucket[i]);
      if (bucket[i] != trim(bucket[i]) || words == 0 || words > kMaxKeywordWords) {
        fail(ErrorCode::kInvalidArgument, "invalid keyword \"" + bucket[i] + "\"");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (to_lower(bucket[i]) == to_lower(bucket[j])) {
          fail(ErrorCode::kInvalidArgument, "duplicate keyword \"" + bucket[i] + "\"");
        }
      }
    }
  }
}

std::string preference_text(const KeywordSet& keywords) {
  std::string out;
  for (Category c : kAllCategories) {
    for (const auto& kw : keywords[c]) {
      if (!out.empty()) out += ", ";
      out += kw;
    }
  }
  return out;
}

std::optional<Category> classify_keyword(std::string_view keyword) {
  const auto words = split_words(to_lower(keyword));
  if (words.empty()) return std::nullopt;
  std::optional<Category> best;
  std::size_t best_score = 0;
  for (Category c : kAllCategories) {
    std::size_t score = 0;
    for (std::string_view term : lexicon()[static_cast<std::size_t>(c)]) {
      if (contains_sequence(words, split_words(term))) ++score;
    }
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  if (best) return best;
  // Unlisted art movements ("Vorticism") still read as style.
  for (const auto& w : words) {
    if (w.size() > 4 && w.ends_with("ism")) return Category::kArtisticStyle;
  }
  return std::nullopt;
}

std::optional<std::size_t> EnrichedPromptGroup::find(std::string_view name) const {
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (entities[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> check_invariants(const EnrichedPromptGroup& group) {
  if (trim(group.base_prompt).empty()) fail(ErrorCode::kInvalidArgument, "base prompt is empty");
  if (group.entities.size() > kMaxEntities) {
    fail(ErrorCode::kInvalidArgument,
         "prompt group has " + std::to_string(group.entities.size()) + " entities; limit is 8");
  }
  const std::string background = to_lower(group.background_prompt);
  for (std::size_t i = 0; i < group.entities.size(); ++i) {
    const auto& e = group.entities[i];
    if (trim(e.name).empty()) fail(ErrorCode::kInvalidArgument, "entity name is empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (group.entities[j].name == e.name) {
        fail(ErrorCode::kInvalidArgument, "duplicate entity \"" + e.name + "\"");
      }
    }
    if (background.find(to_lower(e.name)) != std::string::npos) {
      fail(ErrorCode::kInvalidArgument,
           "background prompt mentions entity \"" + e.name + "\"");
    }
  }

  std::vector<std::string> warnings;
  for (const auto& e : group.entities) {
    if (word_count(e.sub_prompt) > kSubPromptWordLimit) {
      warnings.push_back("sub-prompt for \"" + e.name + "\" exceeds 30 words");
    }
  }
  if (word_count(group.complex_prompt) > kComplexPromptWordLimit) {
    warnings.push_back("complex prompt exceeds 40 words");
  }
  if (word_count(group.background_prompt) > kBackgroundWordLimit) {
    warnings.push_back("background prompt exceeds 12 words");
  }
  return warnings;
}

}  // namespace prefalign::mllm
