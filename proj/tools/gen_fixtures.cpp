// Regenerates the mock-MLLM transcript corpus and the reference images under
// tests/. Request digests are computed with the library's own digest rules,
// so rerun this after changing them.
//
//   prefalign_gen_fixtures <repo>/tests

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefalign/image.hpp"
#include "prefalign/mllm/operations.hpp"
#include "prefalign/mllm/parse.hpp"

namespace fs = std::filesystem;
using namespace prefalign;
using nlohmann::json;

namespace {

RgbImage lake_scene() {
  RgbImage img{64, 64, std::vector<std::uint8_t>(64 * 64 * 3)};
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      std::uint8_t r, g, b;
      if (y < 30) {  // fogged sky
        r = static_cast<std::uint8_t>(150 - y);
        g = static_cast<std::uint8_t>(160 - y);
        b = static_cast<std::uint8_t>(172 - y);
      } else {  // dark water with swell bands
        const int band = ((x + 2 * y) / 6) % 2;
        r = static_cast<std::uint8_t>(30 + 6 * band);
        g = static_cast<std::uint8_t>(42 + 6 * band);
        b = static_cast<std::uint8_t>(64 + 8 * band);
      }
      const bool hull = y >= 34 && y < 40 && x >= 10 + (y - 34) && x < 32 - (y - 34);
      const bool mast = x == 20 && y >= 18 && y < 34;
      if (hull || mast) {
        r = 92;
        g = 64;
        b = 40;
      }
      auto* px = &img.pixels[(static_cast<std::size_t>(y) * 64 + x) * 3];
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
  }
  return img;
}

RgbImage night_swirl() {
  RgbImage img{64, 64, std::vector<std::uint8_t>(64 * 64 * 3)};
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double dx = x - 40.0;
      const double dy = y - 20.0;
      const double swirl = std::sin(0.35 * std::sqrt(dx * dx + dy * dy) + std::atan2(dy, dx) * 2.0);
      auto* px = &img.pixels[(static_cast<std::size_t>(y) * 64 + x) * 3];
      px[0] = static_cast<std::uint8_t>(30 + 25 * (swirl + 1.0));
      px[1] = static_cast<std::uint8_t>(50 + 30 * (swirl + 1.0));
      px[2] = static_cast<std::uint8_t>(120 + 50 * (swirl + 1.0));
      if ((x * 7 + y * 13) % 97 == 0) px[0] = px[1] = 240;  // stars
      if (x >= 6 && x < 12 && y >= 20) px[0] = px[1] = px[2] = 20;  // cypress
    }
  }
  return img;
}

std::vector<std::uint8_t> write_png(const fs::path& path, const RgbImage& img) {
  auto bytes = encode_png(img);
  std::ofstream(path, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return bytes;
}

std::string extraction_reply(std::string_view reasoning, std::string_view keywords) {
  return std::string(reasoning) + "\nKeywords: " + std::string(keywords);
}

struct Corpus {
  json fixtures = json::array();

  void add(const std::string& key, const std::string& digest, const std::string& response) {
    fixtures.push_back({{"key", key}, {"request_digest", digest}, {"response", response}});
  }
};

mllm::KeywordSet extract(Corpus& corpus, std::span<const std::uint8_t> image,
                         const std::array<std::pair<std::string, std::string>, 5>& replies) {
  mllm::KeywordSet kw;
  for (auto c : mllm::kAllCategories) {
    const auto& [reasoning, list] = replies[static_cast<std::size_t>(c)];
    const std::string reply = extraction_reply(reasoning, list);
    corpus.add(mllm::extract_fixture_key(c), mllm::extract_digest(image), reply);
    for (const auto& k : mllm::parse_keyword_list(reply)) kw.add(mllm::classify_keyword(k).value_or(c), k);
  }
  return kw;
}

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: prefalign_gen_fixtures <tests-dir>\n";
    return 2;
  }
  const fs::path root = argv[1];
  fs::create_directories(root / "data");
  fs::create_directories(root / "fixtures" / "transcripts");

  const auto lake = write_png(root / "data" / "reference.png", lake_scene());
  const auto starry = write_png(root / "data" / "starry.png", night_swirl());

  // Boat-on-a-lake session.
  Corpus boat;
  const mllm::KeywordSet boat_kw = extract(
      boat, lake,
      {{{"Step 1: The thick, blended strokes and dim tonal range recall late tonalist painting.\n"
         "Step 2: Paint is laid on heavily along the hull, an oil technique.",
         "Oil Painting, Tonalism, Impasto"},
        {"Step 1: The low light and the small boat against heavy water read as uneasy.\n"
         "Step 2: The haze flattens everything into a gloomy, melancholy hush.",
         "Tension, Gloom, Melancholy"},
        {"Step 1: A single vessel alone on open water suggests solitude.\n"
         "Step 2: The swell hints at danger at sea.",
         "Solitude, Maritime Peril"},
        {"Step 1: The palette is muted blues and grays with very low contrast.\n"
         "Step 2: Fog softens every edge.",
         "Fog, Low Contrast, Muted Blue Palette"},
        {"Step 1: The boat itself is the recurring object.\n"
         "Step 2: Its planks look old and worn.",
         "Weathered Wood"}}});

  const std::string boat_enrich =
      "The keywords point to a tense, gloomy maritime scene, so I keep the boat and add fog and "
      "heavy water that carry that mood.\n"
      "Entities:\n"
      "- boat: a weathered wooden rowing boat with peeling paint, rocking uneasily on black water\n"
      "- fog bank: a dense low fog bank rolling across the water and swallowing the far shore\n"
      "- dark ocean swell: heavy dark swells rising around the hull under an oppressive gloom\n"
      "Complex prompt: an oil painting of a lone weathered boat on a dark lake, tense gloomy "
      "atmosphere, a fog bank rolling in and dark swells rising, muted blue palette\n"
      "Background prompt: foggy dark lakeside, oppressive sky";
  boat.add(std::string(mllm::kEnrichFixtureKey),
           mllm::enrich_digest("a boat on a lake", boat_kw, lake), boat_enrich);
  const mllm::EnrichedPromptGroup boat_group = mllm::parse_enrichment(boat_enrich, "a boat on a lake");

  boat.add(std::string(mllm::kPlanFixtureKey), mllm::plan_digest(boat_group, boat_kw),
           "The boat is the subject, so it sits left of center; fog fills the upper right and the "
           "swell spans the bottom.\n"
           "Layout:\n"
           "- boat: [0.1, 0.4, 0.5, 0.8]; " + boat_group.entities[0].sub_prompt +
               ", in the left center\n"
           "- fog bank: [0.5, 0.0, 1.0, 0.5]; " + boat_group.entities[1].sub_prompt +
               ", on the upper right\n"
           "- dark ocean swell: [0.0, 0.6, 1.0, 1.0]; " + boat_group.entities[2].sub_prompt +
               ", along the bottom");

  mllm::EnrichedPromptGroup two = boat_group;
  two.entities.pop_back();
  boat.add(std::string(mllm::kPlanFixtureKey), mllm::plan_digest(two, boat_kw),
           "Layout:\n"
           "- boat: [0.1, 0.4, 0.5, 0.8]; " + two.entities[0].sub_prompt + ", in the left center\n"
           "- fog bank: [0.5, 0.0, 1.0, 0.5]; " + two.entities[1].sub_prompt + ", on the upper right");

  mllm::EnrichedPromptGroup one = boat_group;
  one.entities.resize(1);
  boat.add(std::string(mllm::kPlanFixtureKey), mllm::plan_digest(one, boat_kw),
           "Layout:\n- boat: [0, 0, 1, 1]; " + one.entities[0].sub_prompt + ", filling the frame");

  mllm::EnrichedPromptGroup lighthouse = boat_group;
  lighthouse.entities = {{"lighthouse", "a distant lighthouse with a faint beam cutting the fog"}};
  boat.add(std::string(mllm::kPlanFixtureKey), mllm::plan_digest(lighthouse, boat_kw),
           "Layout:\n- lighthouse: [0.72, 0.1, 0.9, 0.5]; a distant lighthouse with a faint beam "
           "cutting the fog, on the far right horizon");

  // Degenerate compliance: no added entities, complex prompt left as the base.
  const std::string apple_enrich =
      "Entities:\n- apple: a red apple\nComplex prompt: a red apple\n"
      "Background prompt: plain studio backdrop";
  boat.add(std::string(mllm::kEnrichFixtureKey), mllm::enrich_digest("a red apple", boat_kw, lake),
           apple_enrich);
  const auto apple_group = mllm::parse_enrichment(apple_enrich, "a red apple");
  boat.add(std::string(mllm::kPlanFixtureKey), mllm::plan_digest(apple_group, boat_kw),
           "Layout:\n- apple: [0.25, 0.25, 0.75, 0.75]; a red apple in the center");
  write_json(root / "fixtures" / "transcripts" / "boat_session.json", boat.fixtures);

  // Starry Night extraction.
  Corpus night;
  extract(night, starry,
          {{{"Step 1: The emotional distortion of the sky and the vivid color contrast point to "
             "Expressionism and Post-Impressionism.\n"
             "Step 2: The thick, textured strokes indicate oil paint applied as impasto.",
             "Expressionism, Oil Painting, Impasto, Post-Impressionism"},
            {"Step 1: The sky churns with restless energy.\n"
             "Step 2: The quiet village below feels dreamy and small beneath it.",
             "Turbulent, Awe, Dreamy"},
            {"Step 1: The subject is the night sky over a village.\n"
             "Step 2: The scene contrasts nature with the cosmos.",
             "Nature, Night, Cosmos"},
            {"Step 1: Deep blues dominate, broken by bright yellow stars.\n"
             "Step 2: Strokes swirl across the whole sky.",
             "Swirling Brushstrokes, Deep Blue Palette, High Contrast"},
            {"Step 1: A tall dark cypress rises in the foreground.\n"
             "Step 2: A church steeple marks the village.",
             "Cypress Tree, Church Steeple"}}});
  write_json(root / "fixtures" / "transcripts" / "starry_night.json", night.fixtures);

  std::cout << "wrote " << boat.fixtures.size() + night.fixtures.size() << " fixtures under "
            << (root / "fixtures" / "transcripts").string() << '\n';
  return 0;
}
