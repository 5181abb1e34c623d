// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prefalign/backend.hpp"
#include "prefalign/compose.hpp"
#include "prefalign/digest.hpp"
#include "prefalign/encode.hpp"
#include "prefalign/error.hpp"
#include "prefalign/gateway/service.hpp"
#include "prefalign/gateway/store.hpp"
#include "prefalign/layout.hpp"
#include "prefalign/mllm/chat.hpp"
#include "prefalign/mllm/operations.hpp"
#include "prefalign/mllm/parse.hpp"
#include "prefalign/pipeline.hpp"
#include "support.hpp"

using namespace prefalign;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0 && secs >= budget_s) {
    out.ok = false;
    out.detail += " (over the " + std::to_string(budget_s) + " s budget)";
  }
  if (!out.ok) ++failures;
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.3f s", secs);
  std::cout << (out.ok ? "PASS " : "FAIL ") << name << ": " << out.detail << " [" << timing << "]\n";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

layout::Region random_region(SeededRng& rng) {
  for (;;) {
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
    if (std::abs(a - b) < 1e-6 || std::abs(c - d) < 1e-6) continue;
    return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
  }
}

mllm::KeywordSet seeded_keywords(SeededRng& rng) {
  static const char* pool[] = {"Oil Painting", "Gloom", "Solitude", "Fog", "Impasto", "Serenity",
                               "Neon", "Cyberpunk Aesthetic", "Golden Hour", "Weathered Wood"};
  mllm::KeywordSet k;
  for (int i = 0; i < 3; ++i) {
    k.add(mllm::Category::kOther, pool[static_cast<int>(rng.uniform() * 10)]);
  }
  return k;
}

std::string seeded_phrase(SeededRng& rng, int words) {
  static const char* pool[] = {"a", "boat", "lake", "dark", "fog", "lighthouse", "red", "misty",
                               "old", "swell", "shore", "sky", "beam", "rowing", "quiet"};
  std::string out;
  for (int i = 0; i < words; ++i) out += std::string(i ? " " : "") + pool[static_cast<int>(rng.uniform() * 15)];
  return out;
}

Outcome orthogonality() {
  SeededRng rng(2024);
  const auto v = testing::random_sequence(rng, 1000, 32);
  const auto u = testing::random_sequence(rng, 1000, 32);
  const auto r = encode::orthogonal_reject(v, u);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 1000; ++i) {
    worst = std::max(worst, std::abs(r.tokens.row(i).dot(u.tokens.row(i))) /
                                (v.tokens.row(i).norm() * u.tokens.row(i).norm()));
  }
  return {worst <= 1e-6, "1000 rows, max relative |<r,u>| = " + fmt(worst)};
}

Outcome alpha_zero_identity() {
  const encode::MockTextEncoder enc;
  SeededRng rng(7);
  int equal = 0;
  for (int g = 0; g < 50; ++g) {
    mllm::EnrichedPromptGroup group;
    group.base_prompt = seeded_phrase(rng, 3);
    group.complex_prompt = seeded_phrase(rng, 10);
    group.background_prompt = "backdrop " + seeded_phrase(rng, 2);
    const int n = static_cast<int>(rng.uniform() * 5);
    for (int e = 0; e < n; ++e) group.entities.push_back({"entity" + std::to_string(e), seeded_phrase(rng, 6)});
    const auto built = encode::build_embedding_group(group, seeded_keywords(rng), 0.0, enc);
    bool same = built.complex.tokens == enc.encode(group.complex_prompt).tokens &&
                built.background.tokens == enc.encode(group.background_prompt).tokens &&
                built.unconditional == enc.encode("") && built.per_entity.size() == group.entities.size();
    for (int e = 0; same && e < n; ++e) {
      same = built.per_entity[e].tokens == enc.encode(group.entities[e].sub_prompt).tokens;
    }
    equal += same ? 1 : 0;
  }
  return {equal == 50, std::to_string(equal) + "/50 groups bit-equal to plain encodings"};
}

Outcome partition_and_locality() {
  int partition_ok = 0, locality_ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SeededRng rng(seed + 1000);
    const int n = 1 + static_cast<int>(seed % 4);
    const auto z = testing::random_latent(rng, 8, 8, 4);
    const compose::AttentionWeights w{testing::random_matrix(rng, 4, 6), testing::random_matrix(rng, 8, 6),
                                      testing::random_matrix(rng, 8, 4)};
    encode::EmbeddingGroup group;
    group.complex = testing::random_sequence(rng, 5, 8);
    group.background = testing::random_sequence(rng, 5, 8);
    std::vector<layout::Region> regions;
    for (int e = 0; e < n; ++e) {
      group.per_entity.push_back(testing::random_sequence(rng, 5, 8));
      regions.push_back(random_region(rng));
    }
    const auto plan = layout::order_plan(regions, std::vector<std::string>(n, "p"));
    compose::ModulationTrace trace;
    const auto out = compose::modulated_attention(z, group, plan, w, 0.0, &trace);

    std::vector<int> owner(64, -1);
    for (std::size_t k = 0; k < plan.entries.size(); ++k) {
      for (int c = 0; c < 64; ++c) {
        if (trace.masks[k].grid.cells[c]) owner[c] = static_cast<int>(k);
      }
    }
    bool part = true;
    for (int c = 0; c < 64; ++c) {
      const auto& branch = owner[c] < 0 ? trace.background : trace.entities[owner[c]];
      int matches = out.cells.row(c) == trace.background.cells.row(c) ? 1 : 0;
      for (const auto& e : trace.entities) matches += out.cells.row(c) == e.cells.row(c) ? 1 : 0;
      part = part && matches == 1 && out.cells.row(c) == branch.cells.row(c);
    }
    partition_ok += part ? 1 : 0;

    const std::size_t target = seed % static_cast<std::size_t>(n);
    encode::EmbeddingGroup edited = group;
    edited.per_entity[target] = testing::random_sequence(rng, 5, 8);
    const auto after = compose::modulated_attention(z, edited, plan, w, 0.0);
    bool local = true;
    for (int c = 0; c < 64; ++c) {
      const bool mine = owner[c] >= 0 && plan.entries[owner[c]].entity_index == target;
      if (!mine && after.cells.row(c) != out.cells.row(c)) local = false;
    }
    locality_ok += local ? 1 : 0;
  }
  return {partition_ok == 200 && locality_ok == 200,
          "partition " + std::to_string(partition_ok) + "/200, locality " + std::to_string(locality_ok) + "/200"};
}

Outcome blend_endpoints() {
  SeededRng rng(31);
  const auto com = testing::random_latent(rng, 8, 8, 4);
  const auto zc = testing::random_latent(rng, 8, 8, 4);
  const bool zero = compose::blend(com, zc, 0.0) == zc;
  const bool one = compose::blend(com, zc, 1.0) == com;
  const auto mid = compose::blend(com, zc, 0.2);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < mid.cells.rows(); ++i) {
    for (Eigen::Index j = 0; j < mid.cells.cols(); ++j) {
      worst = std::max(worst, std::abs(mid.cells(i, j) - (0.2 * com.cells(i, j) + 0.8 * zc.cells(i, j))));
    }
  }
  return {zero && one && worst <= 1e-12, std::string("lambda=0 ") + (zero ? "exact" : "inexact") + ", lambda=1 " +
                                             (one ? "exact" : "inexact") + ", lambda=0.2 max err " + fmt(worst)};
}

Outcome layout_oracles() {
  SeededRng rng(55);
  int order_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    std::vector<layout::Region> regions;
    std::vector<oracle::Box> boxes;
    for (int i = 0; i < n; ++i) {
      // Coarse quarter grid so equal areas (ties) occur often.
      const double l = std::floor(rng.uniform() * 3) / 4, t = std::floor(rng.uniform() * 3) / 4;
      const layout::Region r{l, t, l + 0.25 * (1 + std::floor(rng.uniform() * 2)), t + 0.25};
      regions.push_back(r);
      boxes.push_back(r.as_array());
    }
    const auto plan = layout::order_plan(regions, std::vector<std::string>(n, "p"));
    const auto expected = oracle::plan_order(boxes);
    bool same = plan.entries.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) {
      same = plan.entries[i].entity_index == static_cast<std::size_t>(expected[i]);
    }
    order_ok += same ? 1 : 0;
  }
  int raster_ok = 0, snapped = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform() * 16), w = 1 + static_cast<int>(rng.uniform() * 16);
    layout::Region r = random_region(rng);
    if (trial % 3 == 0) {
      const double x = rng.uniform() * 0.97, y = rng.uniform() * 0.97;
      r = {x, y, x + 0.01 + 0.02 * rng.uniform(), y + 0.01 + 0.02 * rng.uniform()};
    }
    const auto mask = layout::rasterize_mask(r, h, w).grid;
    const auto expected = oracle::cells_in(r.as_array(), h, w);
    raster_ok += std::vector<int>(mask.cells.begin(), mask.cells.end()) == expected ? 1 : 0;
    bool any_center = false;
    for (int c = 0; c < h * w; ++c) {
      const double x = (c % w + 0.5) / w, y = (c / w + 0.5) / h;
      any_center = any_center || (x >= r.x_left && x < r.x_right && y >= r.y_top && y < r.y_bottom);
    }
    snapped += any_center ? 0 : 1;
  }
  return {order_ok == 500 && raster_ok == 200 && snapped > 0,
          "ordering " + std::to_string(order_ok) + "/500, rasterization " + std::to_string(raster_ok) +
              "/200 (" + std::to_string(snapped) + " snapped)"};
}

Outcome cfg_and_defaults() {
  SeededRng rng(77);
  const auto u = testing::random_latent(rng, 8, 8, 4);
  const auto c = testing::random_latent(rng, 8, 8, 4);
  const bool endpoints = backend::cfg_combine(u, c, 0.0) == u && backend::cfg_combine(u, c, 1.0) == c;
  const pipeline::GenerationConfig d;
  const bool defaults = d.alpha == 0.7 && d.lambda == 0.2 && d.sampler.guidance_omega == 5.0 && d.sampler.steps == 30;
  return {endpoints && defaults, std::string("omega endpoints ") + (endpoints ? "exact" : "inexact") +
                                     ", defaults (alpha, lambda, omega, steps) = (" + fmt(d.alpha) + ", " +
                                     fmt(d.lambda) + ", " + fmt(d.sampler.guidance_omega) + ", " +
                                     std::to_string(d.sampler.steps) + ")"};
}

Outcome cross_attention_oracle() {
  SeededRng rng(11);
  const auto z = testing::random_latent(rng, 2, 2, 4);
  const auto p = testing::random_sequence(rng, 3, 8);
  const compose::AttentionWeights w{testing::random_matrix(rng, 4, 5), testing::random_matrix(rng, 8, 5),
                                    testing::random_matrix(rng, 8, 4)};
  const auto out = compose::cross_attention(z, p, w);
  const double err = testing::max_abs_diff(
      out.cells, oracle::attention(testing::to_grid(z.cells), testing::to_grid(p.tokens), testing::to_grid(w.query),
                                   testing::to_grid(w.key), testing::to_grid(w.value)));
  return {err <= 1e-10, "2x2x4 latent, L=3, d=8, max abs err " + fmt(err)};
}

Outcome parser_corpus() {
  const auto corpus = json::parse(testing::read_text(PREFALIGN_CORPUS_PATH));
  const auto image = testing::reference_png();
  mllm::KeywordSet kw;
  kw.add(mllm::Category::kEmotionalAtmospheric, "Gloom");
  int compliant = 0, compliant_ok = 0, malformed = 0, malformed_ok = 0;
  for (const auto& c : corpus) {
    const std::string kind = c["kind"], text = c["response"];
    mllm::EnrichedPromptGroup group;
    group.base_prompt = c.value("base_prompt", std::string("a boat on a lake"));
    group.complex_prompt = "a boat";
    group.background_prompt = "water";
    for (const auto& e : c.value("entities", json::array())) {
      if (e.is_array()) group.entities.push_back({e[0], e[1]});
    }
    mllm::ScriptedChatClient chat({text});
    std::optional<ErrorCode> code;
    try {
      if (kind == "keywords") {
        mllm::extract_keywords(image, chat, 2);
      } else if (kind == "enrichment") {
        mllm::enrich_prompt(group.base_prompt, kw, chat, 2);
      } else {
        mllm::plan_regions(group, kw, chat, 2);
      }
    } catch (const Error& e) {
      code = e.code();
    }
    if (c["expect"] == "ok") {
      ++compliant;
      compliant_ok += !code ? 1 : 0;
    } else {
      ++malformed;
      malformed_ok += code && code_name(*code) == c["expect"].get<std::string>() && chat.request_count() == 3 ? 1 : 0;
    }
  }
  const int total = compliant + malformed;
  return {total >= 20 && compliant_ok == compliant && malformed_ok == malformed,
          std::to_string(total) + " transcripts; compliant " + std::to_string(compliant_ok) + "/" +
              std::to_string(compliant) + " parsed; malformed " + std::to_string(malformed_ok) + "/" +
              std::to_string(malformed) + " raised after 3 attempts (retries=2)"};
}

Outcome end_to_end() {
#ifndef PREFALIGN_CLI_PATH
  return {false, "CLI was not built"};
#else
  const fs::path root = fs::temp_directory_path() / "prefalign_acceptance";
  fs::remove_all(root);
  std::array<std::string, 2> image_sums, session_sums;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = root / ("run" + std::to_string(run));
    const std::string cmd = std::string("\"") + PREFALIGN_CLI_PATH + "\" generate --prompt \"a boat on a lake\" --reference \"" +
                            (testing::data_dir() / "reference.png").string() +
                            "\" --backend toy --mllm mock --seed 7 --out \"" + out.string() + "\" >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "cli generate exited nonzero"};
    image_sums[run] = sha256_hex(testing::read_bytes(out / "image.png"));
    session_sums[run] = sha256_hex(testing::read_text(out / "session.json"));
  }
  const auto state = pipeline::deserialize_session(testing::read_text(root / "run0" / "session.json"));
  const encode::MockTextEncoder enc;
  backend::ToyDenoiser toy;
  bool replay_ok = !state.rounds.empty();
  for (const auto& rec : state.rounds) {
    replay_ok = replay_ok && sha256_hex(pipeline::replay(rec, {enc, toy})) == rec.image_ref &&
                rec.image_ref == image_sums[0];
  }
  fs::remove_all(root);
  const bool same = image_sums[0] == image_sums[1] && session_sums[0] == session_sums[1];
  return {same && replay_ok, "image " + image_sums[0].substr(0, 12) + (same ? " twice" : " differs") +
                                 ", session " + session_sums[0].substr(0, 12) +
                                 (replay_ok ? ", replay reproduces the stored image" : ", replay mismatch")};
#endif
}

Outcome session_edits() {
  using namespace pipeline;
  const SessionState base = testing::boat_session("acceptance");
  const SessionState snapshot = base;
  const auto& swell = base.group.entities[2];
  mllm::KeywordSet warm;
  warm.add(mllm::Category::kEmotionalAtmospheric, "Romantic");
  auto chat = testing::mock_mllm();

  const std::vector<std::pair<SessionEdit, std::vector<SessionEdit>>> cases = {
      {edit::ReplaceKeywords{warm}, {edit::ReplaceKeywords{base.keywords}}},
      {edit::AddEntity{"lighthouse", "a distant lighthouse with a faint beam cutting the fog", std::nullopt},
       {edit::RemoveEntity{"lighthouse"}}},
      {edit::RemoveEntity{swell.name},
       {edit::AddEntity{swell.name, swell.sub_prompt, base.plan.find(2)->region}}},
      {edit::EditSubPrompt{"boat", "a red boat"}, {edit::EditSubPrompt{"boat", base.group.entities[0].sub_prompt}}},
      {edit::MoveRegion{"boat", {0.5, 0.5, 1, 1}}, {edit::MoveRegion{"boat", base.plan.find(0)->region}}},
      {edit::SetAlpha{0.0}, {edit::SetAlpha{base.config.alpha}}},
      {edit::SetLambda{0.9}, {edit::SetLambda{base.config.lambda}}},
      {edit::SetBasePrompt{"a ship on a lake"}, {edit::SetBasePrompt{base.base_prompt}}},
      {edit::SetSeed{42}, {edit::SetSeed{base.config.sampler.seed}}},
  };
  int pure = 0, reverted = 0;
  for (const auto& [forward, back] : cases) {
    const auto applied = apply_edit(base, forward, &chat);
    const auto applied_copy = applied;
    const auto undone = apply_edits(applied, back, &chat);
    pure += (base == snapshot && applied == applied_copy && !same_content(applied, base)) ? 1 : 0;
    bool regions = undone.plan.entries.size() == base.plan.entries.size();
    for (std::size_t i = 0; regions && i < base.plan.entries.size(); ++i) {
      regions = undone.plan.entries[i].entity_index == base.plan.entries[i].entity_index &&
                undone.plan.entries[i].region == base.plan.entries[i].region;
    }
    reverted += (regions && undone.keywords == base.keywords && undone.config == base.config &&
                 undone.group.entities == base.group.entities && undone.base_prompt == base.base_prompt)
                    ? 1
                    : 0;
  }

  gateway::Config config;
  const encode::MockTextEncoder enc;
  gateway::SessionStore sessions;
  gateway::ImageStore images;
  gateway::GatewayService service(config, {chat, enc, sessions, images});
  sessions.create(base);
  const std::string path = "/sessions/acceptance";
  const auto before = service.handle({"GET", path, {}, {}, {}}).body;
  const auto patch = service.handle(
      {"PATCH", path, {},
       R"([{"op":"MoveRegion","name":"boat","region":[0,0,0.3,0.3]},{"op":"EditSubPrompt","name":"ghost","text":"x"}])",
       {}});
  const auto after = service.handle({"GET", path, {}, {}, {}}).body;
  const bool atomic = patch.status == 422 && before == after;

  const int n = static_cast<int>(cases.size());
  return {pure == n && reverted == n && atomic,
          std::to_string(n) + " edit kinds: predecessor unmutated " + std::to_string(pure) + "/" + std::to_string(n) +
              ", reverted " + std::to_string(reverted) + "/" + std::to_string(n) + "; failing PATCH " +
              std::to_string(patch.status) + (atomic ? ", nothing persisted" : ", state changed")};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  criterion("projection orthogonality", 1.0, orthogonality);
  criterion("alpha=0 identity", 0, alpha_zero_identity);
  criterion("compositor partition and locality", 5.0, partition_and_locality);
  criterion("blend endpoints", 0, blend_endpoints);
  criterion("layout ordering and rasterization", 0, layout_oracles);
  criterion("cfg endpoints and defaults", 0, cfg_and_defaults);
  criterion("cross-attention oracle", 0, cross_attention_oracle);
  criterion("parser corpus", 0, parser_corpus);
  criterion("end-to-end determinism", 10.0, end_to_end);
  criterion("session edits", 0, session_edits);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
