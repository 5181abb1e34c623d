#include "prefalign/mllm/templates.hpp"

#include <sstream>

namespace prefalign::mllm {
namespace {

struct Rubric {
  std::string_view subject;      // "artistic style"
  std::string_view focus;        // what the summary concentrates on
  std::string_view familiar;     // breadth of expertise
  std::string_view identify;     // what to look for
  std::string_view expertise;    // "art history"
  std::string_view step1;
  std::string_view step2;
  std::string_view basis;        // "art movements and visual techniques"
  std::string_view listed;       // "art movements or techniques"
  std::string_view listed_eg;    // "Expressionism, Oil Painting"
  std::string_view example1_title;
  std::string_view example1;
  std::string_view example2_title;
  std::string_view example2;
};

const Rubric& rubric(Category c) {
  static const Rubric kArtistic{
      "artistic style",
      "the art movements and visual techniques",
      "a wide range of traditional and modern art movements (such as Expressionism, "
      "Surrealism, Cubism, etc.) and visual techniques (like oil painting, watercolor, "
      "digital painting, sculpture, etc.)",
      "relevant art movements and visual techniques",
      "art history",
      "Begin by identifying whether the image aligns with any known art movements (e.g., "
      "Expressionism, Cubism, Abstract Expressionism, Surrealism, etc.). Look for visual cues "
      "such as emotional expression, color contrast, abstraction, or symbolic elements that "
      "may indicate a specific movement.",
      "focus on the techniques used to create the image. Check for traditional techniques "
      "(like oil painting, fresco, or watercolor) or modern ones (such as digital painting, "
      "mixed media, or graffiti).",
      "art movements and visual techniques",
      "art movements or techniques",
      "Expressionism, Oil Painting",
      "Van Gogh's Starry Night",
      "Expressionism, Oil Painting, Impasto, Post-Impressionism",
      "Digital Concept Art",
      "Surrealism, Digital Painting, Neon Sculpture, Cyberpunk Aesthetic."};
  static const Rubric kEmotional{
      "emotional and atmospheric resonance",
      "the moods and atmospheres the image evokes",
      "a wide range of emotional tones (such as Serenity, Melancholy, Tension, Joy, etc.) and "
      "atmospheric qualities (like gloom, dreaminess, warmth, eeriness, etc.)",
      "the dominant emotions and atmospheric qualities",
      "visual psychology and emotional expression in art",
      "Begin by identifying the dominant emotion the image conveys (e.g., Serenity, "
      "Melancholy, Tension, Joy, Awe, etc.). Look for visual cues such as color temperature, "
      "lighting, facial expressions, or weather that may indicate a specific emotion.",
      "focus on the atmosphere of the scene. Check for qualities such as gloom, haze, warmth, "
      "eeriness, or calm that shape how the image feels.",
      "emotions and atmospheric qualities",
      "emotions or atmospheres",
      "Tension, Gloom",
      "Van Gogh's Starry Night",
      "Turbulent, Awe, Melancholy, Dreamy",
      "Rainy Harbor at Dusk",
      "Gloom, Tension, Loneliness, Somber."};
  static const Rubric kThematic{
      "thematic content",
      "the themes and subjects the image is about",
      "a wide range of themes (such as Nature, Urbanization, Solitude, Mythology, etc.) and "
      "narrative subjects (like journeys, conflict, childhood, decay, etc.)",
      "the central themes and narrative subjects",
      "iconography and visual storytelling",
      "Begin by identifying the central theme of the image (e.g., Nature, Urbanization, "
      "Solitude, Mythology, etc.). Look for visual cues such as setting, recurring motifs, or "
      "symbolic objects that may indicate a specific theme.",
      "focus on the narrative the image suggests. Check for stories of journeys, conflict, "
      "memory, decay, or celebration that the scene implies.",
      "themes and narrative subjects",
      "themes or subjects",
      "Nature, Urbanization",
      "Van Gogh's Starry Night",
      "Nature, Night, Village Life, Cosmos",
      "Ruined Metropolis",
      "Urbanization, Decay, Post-Apocalyptic, Isolation."};
  static const Rubric kVisual{
      "visual elements",
      "the color, light, composition, and texture",
      "a wide range of visual properties (such as color palettes, lighting, contrast, "
      "texture, etc.) and compositional devices (like symmetry, asymmetry, rule of thirds, "
      "leading lines, etc.)",
      "the salient color, lighting, texture, and layout properties",
      "visual design and composition",
      "Begin by identifying the dominant color palette and lighting of the image (e.g., "
      "Muted Blue Palette, High Contrast, Golden Hour, etc.). Look for visual cues such as "
      "hue, saturation, shadows, or highlights that characterize the image.",
      "focus on composition and texture. Check for arrangements such as symmetry, "
      "asymmetry, rule of thirds, geometric shapes, or swirling brushstrokes.",
      "visual properties and compositional devices",
      "visual properties or devices",
      "High Contrast, Rule of Thirds",
      "Van Gogh's Starry Night",
      "Swirling Brushstrokes, Deep Blue Palette, Glowing Stars, High Contrast",
      "Neon City Street",
      "Neon Glow, Magenta Palette, Reflections, Asymmetry."};
  static const Rubric kOther{
      "other distinctive preferences",
      "specific objects, characters, or details that do not fit style, emotion, theme, or "
      "visual elements",
      "a wide range of recurring subjects (such as a specific animal, a landmark, a vehicle, "
      "a costume, etc.) and distinctive details (like a signature, a logo, a particular "
      "material, etc.)",
      "specific objects or details a viewer would want to see again",
      "visual culture",
      "Begin by identifying whether the image contains a specific object or character that "
      "stands out (e.g., a special cat, a red umbrella, a vintage car, etc.). Look for visual "
      "cues such as placement, emphasis, or repetition that mark it as important.",
      "focus on distinctive materials or details. Check for textures, props, or ornaments "
      "that are not captured by style, emotion, theme, or visual elements.",
      "objects and details",
      "objects or details",
      "Black Cat, Red Umbrella",
      "Van Gogh's Starry Night",
      "Cypress Tree, Church Steeple",
      "Cyberpunk Street Vendor",
      "Robot Arm, Paper Lantern."};
  switch (c) {
    case Category::kArtisticStyle: return kArtistic;
    case Category::kEmotionalAtmospheric: return kEmotional;
    case Category::kThematic: return kThematic;
    case Category::kVisualElements: return kVisual;
    case Category::kOther: return kOther;
  }
  return kOther;
}

// Worked examples for the two templates whose output format is shown only by
// example.
constexpr std::string_view kEnrichmentExample =
    "Simple prompt: a cat sitting on a windowsill\n"
    "Preference keywords:\n"
    "Artistic Style: Watercolor, Impressionism\n"
    "Emotional/Atmospheric: Nostalgia, Warmth\n"
    "Thematic: Childhood\n"
    "Visual Elements: Golden Hour, Soft Light\n"
    "Others: None\n"
    "Output:\n"
    "Entities:\n"
    "- cat: a fluffy ginger cat curled up, loose watercolor washes, warm nostalgic glow on its fur\n"
    "- potted geranium: a red geranium in a chipped clay pot, soft impressionist dabs of color\n"
    "- lace curtain: a sheer lace curtain lifting in a breeze, catching golden-hour light\n"
    "- toy sailboat: a small wooden toy sailboat resting nearby, faded paint, childhood keepsake\n"
    "Complex prompt: a fluffy ginger cat curled on a sunlit windowsill beside a red geranium "
    "and a wooden toy sailboat, a lace curtain lifting in golden-hour light, nostalgic "
    "watercolor impressionism\n"
    "Background prompt: warm golden-hour interior glow, soft watercolor washes";

constexpr std::string_view kPlanningExample =
    "Preference keywords:\n"
    "Artistic Style: Watercolor, Impressionism\n"
    "Emotional/Atmospheric: Nostalgia, Warmth\n"
    "Thematic: Childhood\n"
    "Visual Elements: Golden Hour, Rule of Thirds\n"
    "Others: None\n"
    "Detailed object prompts:\n"
    "- cat: a fluffy ginger cat curled up, loose watercolor washes, warm nostalgic glow on its fur\n"
    "- potted geranium: a red geranium in a chipped clay pot, soft impressionist dabs of color\n"
    "- lace curtain: a sheer lace curtain lifting in a breeze, catching golden-hour light\n"
    "Output:\n"
    "Layout:\n"
    "- lace curtain: [0.0, 0.0, 1.0, 0.35]; a sheer lace curtain lifting in a breeze, catching "
    "golden-hour light, on the top\n"
    "- cat: [0.05, 0.4, 0.6, 0.95]; a fluffy ginger cat curled up, loose watercolor washes, "
    "warm nostalgic glow on its fur, in the lower left\n"
    "- potted geranium: [0.65, 0.45, 0.95, 0.9]; a red geranium in a chipped clay pot, soft "
    "impressionist dabs of color, on the right";

}  // namespace

std::string extraction_instruction(Category category) {
  const Rubric& r = rubric(category);
  std::ostringstream out;
  out << "Your role is to accurately identify and summarize the " << r.subject
      << " of images, focusing on " << r.focus << ". You are familiar with " << r.familiar
      << ". Your task is to carefully examine images, identify " << r.identify
      << ", and generate a list of keywords that succinctly capture the " << r.subject
      << ". You should rely on both your deep understanding of " << r.expertise
      << " and your ability to analyze the visual elements of the image to provide an informed "
         "and precise response as follows: 1."
      << r.step1 << " 2." << r.step2 << " 3.Based on the " << r.basis
      << " identified, provide 5 summary keywords. If the image corresponds to one of the listed "
      << r.listed << " (e.g., " << r.listed_eg
      << "), include those. If there are no direct matches, use your knowledge to suggest "
         "relevant keywords based on the visual characteristics you observed. If you are unable "
         "to identify enough matches to reach 5 keywords, provide as many relevant keywords as "
         "possible, even if the total is fewer than 5. The output should follow the format of "
         "the examples below:\n"
      << "Example 1 (" << r.example1_title << "):\nKeywords: " << r.example1 << "\n"
      << "Example 2 (" << r.example2_title << "):\nKeywords: " << r.example2;
  return out.str();
}

std::string enrichment_instruction() {
  std::string out =
      "You are a creative conceptual artist skilled in multimodal narrative design.\n"
      "You need to expand the simple prompt based on these preference categories of keywords: "
      "Artistic Style, Emotional/Atmospheric Preferences, Thematic Preferences, Visual Elements "
      "preferences, and other Preferences and the preference signals expressed in the provided "
      "image.\n"
      "Please rearrange the simple prompt as follows: 1.Identify the main objects or key "
      "elements and their attributes in the simple input prompt that you will focus on "
      "expanding. Note any specific objects, emotions, or concepts that are already part of the "
      "original prompt. 2.Based on the preferences given (Artistic Style, Emotional/Atmospheric, "
      "Thematic, Visual Elements, and Others), determine 2-4 objects or elements that should be "
      "added to the scene to better align the final image with the given preferences. You can "
      "add objects that reflect the theme, mood, and other preferences described. For Example: "
      "(1)Emotional/Atmospheric: Tension and Gloom suggest solitary figures, dark ocean, foggy "
      "landscapes, or dramatic weather conditions. (2)Thematic: Urbanization suggests "
      "incorporating elements like decaying buildings, roads, and vehicles.\n"
      "(3)Others: If there are any specific objects (like a special cat), integrate them into "
      "the scene description, ensuring they are contextually and visually aligned with the "
      "other preferences. 3. For each object, whether from the original prompt or newly added, "
      "provide a detailed objective description based on the preferences. Keep each "
      "description under 30 words. 4. Merge the original simple prompt with the objects and "
      "their descriptions to form a more complex, concise prompt that reflects all the "
      "preferences. Ensure that the added elements naturally flow and integrate with the "
      "original context and preferences (40 words at most). And create a simple background "
      "prompt (10 words) that encapsulates the preferences but does not include any specific "
      "objects mentioned previously.\n"
      "The output should follow the format of the examples below:\n";
  out += kEnrichmentExample;
  return out;
}

std::string planning_instruction() {
  std::string out =
      "You are an expert in image composition, skilled in interpreting complex scene "
      "descriptions and creating spatial arrangements based on detailed prompts and preference "
      "keywords. Your task is to:\n"
      "1.Identity the key objects from the detailed object prompt.\n"
      "2.Assign spatial positions for each object. This layout assignment should strictly "
      "follow the rules below. (1) Basic rules: (a). The image coordinates are based on a "
      "system where the top-left corner is [0, 0] and the bottom-right corner is [1, 1]. (b). "
      "Assign each object a rectangular space in the image, represented in the format: "
      "[top-left x, top-left y, bottom-right x, bottom-right y]. (c). Each object should be "
      "assigned a distinct space that doesn't overlap with other objects. (d). Use the visual "
      "elements preference keywords that relate to the layout (e.g., Asymmetry, Geometric "
      "shapes, High contrast, rule of thirds) to determine how to position the objects within "
      "the image. These keywords will guide your decision on object placement in terms of "
      "layout.\n"
      "(2) Layout rules for each object: (a). When assigning spaces to each object, place them "
      "in a logical, left-to-right, top-to-bottom manner. (b). No object should exceed the "
      "boundaries of the image (i.e., all coordinates should stay within [0, 0] to [1, 1]). "
      "(c). Each area should be dedicated to a single object.\n"
      "3. Finally, in each detailed object prompt, add the location description of that "
      "specific object into the original prompt(e.g., on the top, in the left, stay in the "
      "center). The output should follow the format of the examples below:\n";
  out += kPlanningExample;
  return out;
}

std::string keyword_listing(const KeywordSet& keywords) {
  std::string out;
  for (Category c : kAllCategories) {
    out += category_label(c);
    out += ": ";
    const auto& bucket = keywords[c];
    if (bucket.empty()) {
      out += "None";
    } else {
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        if (i) out += ", ";
        out += bucket[i];
      }
    }
    out += '\n';
  }
  return out;
}

std::string enrichment_inputs(std::string_view base_prompt, const KeywordSet& keywords) {
  std::string out = "Simple prompt: ";
  out += base_prompt;
  out += "\nPreference keywords:\n";
  out += keyword_listing(keywords);
  out += "Output:";
  return out;
}

std::string planning_inputs(const EnrichedPromptGroup& group, const KeywordSet& keywords) {
  std::string out = "Preference keywords:\n";
  out += keyword_listing(keywords);
  out += "Detailed object prompts:\n";
  for (const auto& e : group.entities) {
    out += "- " + e.name + ": " + e.sub_prompt + "\n";
  }
  out += "Output:";
  return out;
}

std::string corrective_line(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kExtract:
      return "Your previous reply could not be parsed. Reply again and end with a single line "
             "of the form \"Keywords: keyword1, keyword2, ...\".";
    case TemplateKind::kEnrich:
      return "Your previous reply could not be parsed. Reply again using exactly the example "
             "format: an \"Entities:\" line followed by \"- name: description\" lines, then a "
             "\"Complex prompt:\" line and a \"Background prompt:\" line.";
    case TemplateKind::kPlan:
      return "Your previous reply could not be parsed. Reply again using exactly the example "
             "format: a \"Layout:\" line followed by one \"- name: [x_left, y_top, x_right, "
             "y_bottom]; located prompt\" line for every object and no others.";
  }
  return {};
}

}  // namespace prefalign::mllm
