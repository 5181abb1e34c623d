#include "prefalign/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prefalign/digest.hpp"
#include "prefalign/error.hpp"
#include "prefalign/image.hpp"

namespace prefalign::pipeline {
namespace {

using nlohmann::json;

std::string random_session_id() {
  std::random_device rd;
  std::mt19937_64 gen((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(32, '0');
  for (char& ch : id) ch = kHex[gen() & 0xF];
  return id;
}

std::size_t require_entity(const mllm::EnrichedPromptGroup& group, std::string_view name) {
  auto idx = group.find(name);
  if (!idx) fail(ErrorCode::kUnknownEntity, "no entity named '" + std::string(name) + "'");
  return *idx;
}

layout::Region require_region(const layout::Region& r) {
  const auto raw = r.as_array();
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorCode::kInvalidRegion, "region coordinates must lie in [0, 1]");
    }
  }
  if (!(r.x_left < r.x_right) || !(r.y_top < r.y_bottom)) {
    fail(ErrorCode::kInvalidRegion, "region is empty or inverted");
  }
  return r;
}

std::string require_text(std::string_view text, const char* what) {
  std::string t = mllm::trim(text);
  if (t.empty()) fail(ErrorCode::kInvalidArgument, std::string(what) + " must be nonempty");
  return t;
}

void validate_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    fail(ErrorCode::kInvalidArgument, "alpha must be finite and >= 0");
  }
}

void validate_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorCode::kLambdaOutOfRange, "lambda must lie in [0, 1]");
  }
}

// ---- JSON ----

json keywords_to_json(const mllm::KeywordSet& kw) {
  json out = json::object();
  for (auto c : mllm::kAllCategories) out[std::string(mllm::category_key(c))] = kw[c];
  return out;
}

json group_to_json(const mllm::EnrichedPromptGroup& g) {
  json entities = json::array();
  for (const auto& e : g.entities) entities.push_back({{"name", e.name}, {"sub_prompt", e.sub_prompt}});
  return {{"base_prompt", g.base_prompt},
          {"complex_prompt", g.complex_prompt},
          {"entities", std::move(entities)},
          {"background_prompt", g.background_prompt}};
}

json plan_to_json(const layout::LayoutPlan& plan, const mllm::EnrichedPromptGroup& g) {
  json out = json::array();
  for (const auto& e : plan.entries) {
    out.push_back({{"entity", g.entities.at(e.entity_index).name},
                   {"box", e.region.as_array()},
                   {"prompt", e.located_sub_prompt}});
  }
  return out;
}

json sampler_to_json(const backend::SamplerConfig& s) {
  return {{"steps", s.steps},       {"guidance", s.guidance_omega}, {"seed", s.seed},
          {"latent_h", s.latent_h}, {"latent_w", s.latent_w},       {"latent_c", s.latent_c},
          {"step_size", s.step_size}};
}

json config_to_json(const GenerationConfig& c) {
  return {{"alpha", c.alpha}, {"lambda", c.lambda}, {"sampler", sampler_to_json(c.sampler)}};
}

json inputs_to_json(const RoundInputs& in) {
  return {{"keywords", keywords_to_json(in.keywords)},
          {"group", group_to_json(in.group)},
          {"plan", plan_to_json(in.plan, in.group)},
          {"config", config_to_json(in.config)}};
}

mllm::KeywordSet keywords_from_json(const json& j) {
  mllm::KeywordSet kw;
  for (auto c : mllm::kAllCategories) {
    const std::string key(mllm::category_key(c));
    if (!j.contains(key)) continue;
    for (const auto& item : j.at(key)) {
      const auto text = item.get<std::string>();
      if (!kw.add(c, text)) fail(ErrorCode::kInvalidArgument, "rejected keyword '" + text + "'");
    }
  }
  for (const auto& [key, _] : j.items()) {
    if (!mllm::category_from_key(key)) fail(ErrorCode::kInvalidArgument, "unknown category '" + key + "'");
  }
  mllm::check_invariants(kw);
  return kw;
}

mllm::EnrichedPromptGroup group_from_json(const json& j) {
  mllm::EnrichedPromptGroup g;
  g.base_prompt = j.at("base_prompt").get<std::string>();
  g.complex_prompt = j.at("complex_prompt").get<std::string>();
  g.background_prompt = j.at("background_prompt").get<std::string>();
  for (const auto& e : j.at("entities")) {
    g.entities.push_back({e.at("name").get<std::string>(), e.at("sub_prompt").get<std::string>()});
  }
  return g;
}

layout::LayoutPlan plan_from_json(const json& j, const mllm::EnrichedPromptGroup& g) {
  layout::LayoutPlan plan;
  for (const auto& e : j) {
    const auto name = e.at("entity").get<std::string>();
    const auto box = e.at("box").get<std::array<double, 4>>();
    plan.entries.push_back({require_entity(g, name), layout::Region{box[0], box[1], box[2], box[3]},
                            e.at("prompt").get<std::string>()});
  }
  return plan;
}

backend::SamplerConfig sampler_from_json(const json& j) {
  backend::SamplerConfig s;
  s.steps = j.at("steps").get<int>();
  s.guidance_omega = j.at("guidance").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.latent_h = j.at("latent_h").get<int>();
  s.latent_w = j.at("latent_w").get<int>();
  s.latent_c = j.at("latent_c").get<int>();
  s.step_size = j.at("step_size").get<double>();
  return s;
}

GenerationConfig config_from_json(const json& j) {
  GenerationConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.sampler = sampler_from_json(j.at("sampler"));
  return c;
}

RoundInputs inputs_from_json(const json& j) {
  RoundInputs in;
  in.keywords = keywords_from_json(j.at("keywords"));
  in.group = group_from_json(j.at("group"));
  in.plan = plan_from_json(j.at("plan"), in.group);
  in.config = config_from_json(j.at("config"));
  return in;
}

void check_plan(const layout::LayoutPlan& plan, std::size_t entity_count) {
  if (plan.entries.size() != entity_count) {
    fail(ErrorCode::kInvalidArgument, "plan must hold exactly one entry per entity");
  }
  std::vector<bool> seen(entity_count, false);
  for (const auto& e : plan.entries) {
    if (e.entity_index >= entity_count || seen[e.entity_index]) {
      fail(ErrorCode::kInvalidArgument, "plan entity indices are not a permutation");
    }
    seen[e.entity_index] = true;
    if (layout::validate_and_normalize(e.region.as_array()) != e.region) {
      fail(ErrorCode::kInvalidArgument, "plan region outside [0, 1]");
    }
  }
  if (layout::reorder(plan.entries) != plan) {
    fail(ErrorCode::kInvalidArgument, "plan is not in descending-area order");
  }
}

void check_inputs(const RoundInputs& in) {
  mllm::check_invariants(in.keywords);
  mllm::check_invariants(in.group);
  check_plan(in.plan, in.group.entities.size());
  in.config.validate();
}

// ---- edits ----

struct EditApplier {
  SessionState& s;
  mllm::ChatClient* planner;
  int retries;

  void operator()(const edit::ReplaceKeywords& e) {
    mllm::check_invariants(e.keywords);
    s.keywords = e.keywords;
  }

  void operator()(const edit::AddEntity& e) {
    const std::string name = require_text(e.name, "entity name");
    const std::string sub = require_text(e.sub_prompt, "sub-prompt");
    if (s.group.find(name)) fail(ErrorCode::kDuplicateEntity, "entity '" + name + "' already exists");
    if (s.group.entities.size() >= mllm::kMaxEntities) {
      fail(ErrorCode::kInvalidArgument, "a prompt group holds at most 8 entities");
    }

    layout::Region region;
    std::string located = sub;
    if (e.region) {
      region = require_region(*e.region);
    } else {
      if (planner == nullptr) {
        fail(ErrorCode::kInvalidArgument, "AddEntity without a region needs a planner");
      }
      mllm::EnrichedPromptGroup single = s.group;
      single.entities = {{name, sub}};
      const auto proposals = mllm::plan_regions(single, s.keywords, *planner, retries);
      region = layout::validate_and_normalize(proposals.front().raw_box);
      located = proposals.front().located_sub_prompt;
    }

    s.group.entities.push_back({name, sub});
    mllm::check_invariants(s.group);
    auto entries = s.plan.entries;
    entries.push_back({s.group.entities.size() - 1, region, located});
    s.plan = layout::reorder(std::move(entries));
  }

  void operator()(const edit::RemoveEntity& e) {
    const std::size_t idx = require_entity(s.group, e.name);
    s.group.entities.erase(s.group.entities.begin() + static_cast<std::ptrdiff_t>(idx));
    std::vector<layout::LayoutEntry> entries;
    for (auto entry : s.plan.entries) {
      if (entry.entity_index == idx) continue;
      if (entry.entity_index > idx) --entry.entity_index;
      entries.push_back(std::move(entry));
    }
    s.plan = layout::reorder(std::move(entries));
  }

  void operator()(const edit::EditSubPrompt& e) {
    const std::size_t idx = require_entity(s.group, e.name);
    const std::string text = require_text(e.text, "sub-prompt");
    s.group.entities[idx].sub_prompt = text;
    for (auto& entry : s.plan.entries) {
      if (entry.entity_index == idx) entry.located_sub_prompt = text;
    }
  }

  void operator()(const edit::MoveRegion& e) {
    const std::size_t idx = require_entity(s.group, e.name);
    const layout::Region region = require_region(e.region);
    auto entries = s.plan.entries;
    for (auto& entry : entries) {
      if (entry.entity_index == idx) entry.region = region;
    }
    s.plan = layout::reorder(std::move(entries));
  }

  void operator()(const edit::SetAlpha& e) {
    validate_alpha(e.value);
    s.config.alpha = e.value;
  }

  void operator()(const edit::SetLambda& e) {
    validate_lambda(e.value);
    s.config.lambda = e.value;
  }

  void operator()(const edit::SetBasePrompt& e) {
    const std::string text = require_text(e.text, "base prompt");
    s.base_prompt = text;
    s.group.base_prompt = text;
    s.group.complex_prompt = text;
    mllm::check_invariants(s.group);
  }

  void operator()(const edit::SetSeed& e) { s.config.sampler.seed = e.value; }
};

SessionEdit edit_from_json(const json& j) {
  const auto op = j.at("op").get<std::string>();
  auto region = [](const json& r) {
    const auto box = r.get<std::array<double, 4>>();
    return layout::Region{box[0], box[1], box[2], box[3]};
  };
  if (op == "ReplaceKeywords") {
    mllm::KeywordSet kw;
    for (const auto& [key, items] : j.at("keywords").items()) {
      auto cat = mllm::category_from_key(key);
      if (!cat) fail(ErrorCode::kCorruptPayload, "unknown keyword category '" + key + "'");
      for (const auto& item : items) kw.add(*cat, item.get<std::string>());
    }
    return edit::ReplaceKeywords{std::move(kw)};
  }
  if (op == "AddEntity") {
    edit::AddEntity e{j.at("name").get<std::string>(), j.at("sub_prompt").get<std::string>(), {}};
    if (j.contains("region") && !j.at("region").is_null()) e.region = region(j.at("region"));
    return e;
  }
  if (op == "RemoveEntity") return edit::RemoveEntity{j.at("name").get<std::string>()};
  if (op == "EditSubPrompt") {
    return edit::EditSubPrompt{j.at("name").get<std::string>(), j.at("text").get<std::string>()};
  }
  if (op == "MoveRegion") {
    return edit::MoveRegion{j.at("name").get<std::string>(), region(j.at("region"))};
  }
  if (op == "SetAlpha") return edit::SetAlpha{j.at("value").get<double>()};
  if (op == "SetLambda") return edit::SetLambda{j.at("value").get<double>()};
  if (op == "SetBasePrompt") return edit::SetBasePrompt{j.at("text").get<std::string>()};
  if (op == "SetSeed") return edit::SetSeed{j.at("value").get<std::uint64_t>()};
  fail(ErrorCode::kCorruptPayload, "unknown edit op '" + op + "'");
}

json edit_to_json(const SessionEdit& e) {
  json j = {{"op", edit_name(e)}};
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, edit::ReplaceKeywords>) {
          j["keywords"] = keywords_to_json(v.keywords);
        } else if constexpr (std::is_same_v<T, edit::AddEntity>) {
          j["name"] = v.name;
          j["sub_prompt"] = v.sub_prompt;
          if (v.region) j["region"] = v.region->as_array();
        } else if constexpr (std::is_same_v<T, edit::RemoveEntity>) {
          j["name"] = v.name;
        } else if constexpr (std::is_same_v<T, edit::EditSubPrompt>) {
          j["name"] = v.name;
          j["text"] = v.text;
        } else if constexpr (std::is_same_v<T, edit::MoveRegion>) {
          j["name"] = v.name;
          j["region"] = v.region.as_array();
        } else if constexpr (std::is_same_v<T, edit::SetBasePrompt>) {
          j["text"] = v.text;
        } else {
          j["value"] = v.value;
        }
      },
      e);
  return j;
}

}  // namespace

void GenerationConfig::validate() const {
  validate_alpha(alpha);
  validate_lambda(lambda);
  sampler.validate();
}

bool same_content(const SessionState& a, const SessionState& b) {
  SessionState x = a;
  x.session_id = b.session_id;
  x.revision = b.revision;
  return x == b;
}

void check_invariants(const SessionState& state) {
  check_inputs(current_inputs(state));
  if (state.base_prompt != state.group.base_prompt) {
    fail(ErrorCode::kInvalidArgument, "base prompt differs from the prompt group's");
  }
}

std::string_view edit_name(const SessionEdit& e) {
  static constexpr std::array<std::string_view, std::variant_size_v<SessionEdit>> kNames = {
      "ReplaceKeywords", "AddEntity", "RemoveEntity", "EditSubPrompt", "MoveRegion",
      "SetAlpha",        "SetLambda", "SetBasePrompt", "SetSeed"};
  return kNames[e.index()];
}

SessionState create_session(std::span<const std::uint8_t> reference_image,
                            std::string_view base_prompt, mllm::ChatClient& chat,
                            const SessionOptions& options) {
  inspect_image(reference_image, options.max_image_bytes);
  const std::string prompt = require_text(base_prompt, "base prompt");
  options.config.validate();

  SessionState s;
  s.session_id = options.session_id.empty() ? random_session_id() : options.session_id;
  s.reference_image = sha256_hex(reference_image);
  s.base_prompt = prompt;
  s.config = options.config;
  s.keywords = mllm::extract_keywords(reference_image, chat, options.retries, options.max_image_bytes);
  s.group = mllm::enrich_prompt(prompt, s.keywords, chat, options.retries, reference_image);
  for (const auto& warning : mllm::check_invariants(s.group)) spdlog::warn("{}", warning);

  if (!s.group.entities.empty()) {
    const auto proposals = mllm::plan_regions(s.group, s.keywords, chat, options.retries);
    std::vector<layout::Region> regions;
    std::vector<std::string> prompts;
    for (const auto& p : proposals) {
      regions.push_back(layout::validate_and_normalize(p.raw_box));
      prompts.push_back(p.located_sub_prompt);
    }
    s.plan = layout::order_plan(regions, prompts);
  }
  return s;
}

SessionState apply_edit(const SessionState& state, const SessionEdit& edit,
                        mllm::ChatClient* planner, int retries) {
  SessionState next = state;
  std::visit(EditApplier{next, planner, retries}, edit);
  return next;
}

SessionState apply_edits(const SessionState& state, std::span<const SessionEdit> edits,
                         mllm::ChatClient* planner, int retries) {
  SessionState next = state;
  for (const auto& e : edits) std::visit(EditApplier{next, planner, retries}, e);
  return next;
}

mllm::EnrichedPromptGroup generation_group(const mllm::EnrichedPromptGroup& group,
                                           const layout::LayoutPlan& plan) {
  mllm::EnrichedPromptGroup out = group;
  for (const auto& entry : plan.entries) {
    if (entry.entity_index < out.entities.size() && !entry.located_sub_prompt.empty()) {
      out.entities[entry.entity_index].sub_prompt = entry.located_sub_prompt;
    }
  }
  return out;
}

RoundInputs current_inputs(const SessionState& state) {
  return {state.keywords, state.group, state.plan, state.config};
}

std::string input_digest(const RoundInputs& inputs) {
  return sha256_hex(inputs_to_json(inputs).dump());
}

std::vector<std::uint8_t> render(const RoundInputs& inputs, GenerationDeps deps) {
  check_inputs(inputs);
  const auto embeddings = encode::build_embedding_group(generation_group(inputs.group, inputs.plan),
                                                        inputs.keywords, inputs.config.alpha,
                                                        deps.encoder);
  const backend::Conditioning cond{embeddings, inputs.plan, inputs.config.lambda};
  const auto result = backend::sample(deps.backend, cond, inputs.config.sampler);
  return encode_png(deps.backend.decode_latent(result.final_latent));
}

RoundResult run_round(const SessionState& state, GenerationDeps deps) {
  RoundInputs inputs = current_inputs(state);
  std::vector<std::uint8_t> png = render(inputs, deps);
  RoundResult out{state, std::move(png)};
  RoundRecord record;
  record.round_index = state.rounds.size();
  record.input_digest = input_digest(inputs);
  record.seed = inputs.config.sampler.seed;
  record.image_ref = sha256_hex(out.png);
  record.inputs = std::move(inputs);
  out.state.rounds.push_back(std::move(record));
  return out;
}

std::vector<std::uint8_t> replay(const RoundRecord& record, GenerationDeps deps) {
  if (input_digest(record.inputs) != record.input_digest) {
    fail(ErrorCode::kCorruptPayload, "round inputs do not match their stored digest");
  }
  return render(record.inputs, deps);
}

std::string serialize_session(const SessionState& s) {
  json rounds = json::array();
  for (const auto& r : s.rounds) {
    rounds.push_back({{"round_index", r.round_index},
                      {"input_digest", r.input_digest},
                      {"seed", r.seed},
                      {"image_ref", r.image_ref},
                      {"inputs", inputs_to_json(r.inputs)}});
  }
  json j = {{"schema_version", kSchemaVersion},
            {"session_id", s.session_id},
            {"revision", s.revision},
            {"reference_image", s.reference_image},
            {"base_prompt", s.base_prompt},
            {"keywords", keywords_to_json(s.keywords)},
            {"group", group_to_json(s.group)},
            {"plan", plan_to_json(s.plan, s.group)},
            {"config", config_to_json(s.config)},
            {"rounds", std::move(rounds)}};
  return j.dump(2);
}

SessionState deserialize_session(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptPayload, std::string("session payload is not JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("schema_version")) {
      fail(ErrorCode::kCorruptPayload, "session payload lacks schema_version");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      fail(ErrorCode::kSchemaVersionMismatch,
           "session schema_version " + std::to_string(version) + " is not supported (expected " +
               std::to_string(kSchemaVersion) + ")");
    }
    SessionState s;
    s.session_id = j.at("session_id").get<std::string>();
    s.revision = j.at("revision").get<std::uint64_t>();
    s.reference_image = j.at("reference_image").get<std::string>();
    s.base_prompt = j.at("base_prompt").get<std::string>();
    s.keywords = keywords_from_json(j.at("keywords"));
    s.group = group_from_json(j.at("group"));
    s.plan = plan_from_json(j.at("plan"), s.group);
    s.config = config_from_json(j.at("config"));
    for (const auto& r : j.at("rounds")) {
      RoundRecord rec;
      rec.round_index = r.at("round_index").get<std::size_t>();
      rec.input_digest = r.at("input_digest").get<std::string>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.image_ref = r.at("image_ref").get<std::string>();
      rec.inputs = inputs_from_json(r.at("inputs"));
      if (rec.round_index != s.rounds.size()) {
        fail(ErrorCode::kCorruptPayload, "round indices are not contiguous");
      }
      s.rounds.push_back(std::move(rec));
    }
    check_invariants(s);
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptPayload, std::string("malformed session payload: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaVersionMismatch || e.code() == ErrorCode::kCorruptPayload) {
      throw;
    }
    fail(ErrorCode::kCorruptPayload, std::string("invalid session payload: ") + e.what());
  }
}

std::string provenance_json(const SessionState& s) {
  json j = inputs_to_json(current_inputs(s));
  j["session_id"] = s.session_id;
  j["reference_image"] = s.reference_image;
  j["preference_text"] = mllm::preference_text(s.keywords);
  if (!s.rounds.empty()) {
    j["input_digest"] = s.rounds.back().input_digest;
    j["image_ref"] = s.rounds.back().image_ref;
  }
  return j.dump(2);
}

std::vector<SessionEdit> parse_edits(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (!j.is_array()) fail(ErrorCode::kCorruptPayload, "edit list must be a JSON array");
    std::vector<SessionEdit> edits;
    for (const auto& item : j) edits.push_back(edit_from_json(item));
    return edits;
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptPayload, std::string("malformed edit list: ") + e.what());
  }
}

std::string edits_to_json(std::span<const SessionEdit> edits) {
  json j = json::array();
  for (const auto& e : edits) j.push_back(edit_to_json(e));
  return j.dump();
}

}  // namespace prefalign::pipeline
