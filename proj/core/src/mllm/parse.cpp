#include "prefalign/mllm/parse.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "prefalign/error.hpp"

namespace prefalign::mllm {
namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

// Drops markdown emphasis and heading marks so "**Keywords:**" reads as
// "Keywords:".
std::string strip_markup(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  for (char ch : line) {
    if (ch != '*' && ch != '`') out.push_back(ch);
  }
  std::string t = trim(out);
  while (!t.empty() && t.front() == '#') t = trim(std::string_view(t).substr(1));
  return t;
}

// If `line` starts with `label` followed by ':' (case-insensitive), returns
// the remainder after the colon.
std::optional<std::string> labeled_value(std::string_view line, std::string_view label) {
  const std::string clean = strip_markup(line);
  if (to_lower(std::string_view(clean).substr(0, label.size())) != to_lower(label)) {
    return std::nullopt;
  }
  std::string_view rest = std::string_view(clean).substr(label.size());
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  return trim(rest.substr(1));
}

std::optional<std::size_t> last_labeled_line(const std::vector<std::string>& lines,
                                             std::string_view label) {
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (labeled_value(lines[i], label)) return i;
  }
  return std::nullopt;
}

// "- x", "* x", "1. x", "2) x" -> "x"; nullopt when the line is not a list item.
std::optional<std::string> list_item(std::string_view line) {
  std::string t = trim(line);
  std::string_view v = t;
  if (v.empty()) return std::nullopt;
  if (v.front() == '-' || v.front() == '*' || v.front() == '\xE2') {
    if (v.front() == '\xE2') {
      // U+2022 bullet
      if (v.size() < 3 || v.substr(0, 3) != "\xE2\x80\xA2") return std::nullopt;
      v.remove_prefix(3);
    } else {
      v.remove_prefix(1);
    }
    // "**Complex prompt:**" is a bold label, not a bullet.
    if (v.empty() || (v.front() != ' ' && v.front() != '\t')) return std::nullopt;
    return strip_markup(v);
  }
  std::size_t digits = 0;
  while (digits < v.size() && std::isdigit(static_cast<unsigned char>(v[digits]))) ++digits;
  if (digits > 0 && digits < v.size() && (v[digits] == '.' || v[digits] == ')')) {
    return strip_markup(v.substr(digits + 1));
  }
  return std::nullopt;
}

std::string clean_keyword(std::string_view raw) {
  std::string kw = trim(raw);
  while (!kw.empty() && (kw.back() == '.' || kw.back() == ';')) kw.pop_back();
  auto is_quote = [](char ch) { return ch == '"' || ch == '\''; };
  if (kw.size() >= 2 && is_quote(kw.front()) && kw.back() == kw.front()) {
    kw = kw.substr(1, kw.size() - 2);
  }
  return trim(kw);
}

[[noreturn]] void parse_fail(const std::string& why, std::string_view text) {
  fail(ErrorCode::kParseError, why, std::string(text));
}

bool parse_number(std::string_view token, double& out) {
  std::string t = trim(token);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

std::vector<std::string> parse_keyword_list(std::string_view text) {
  const auto lines = split_lines(text);
  const auto idx = last_labeled_line(lines, "Keywords");
  if (!idx) parse_fail("no \"Keywords:\" line", text);
  const std::string value = *labeled_value(lines[*idx], "Keywords");
  if (value.empty()) parse_fail("\"Keywords:\" line is empty", text);

  std::vector<std::string> out;
  std::stringstream in(value);
  for (std::string part; std::getline(in, part, ',');) {
    std::string kw = clean_keyword(part);
    if (!kw.empty()) out.push_back(std::move(kw));
  }
  if (out.size() == 1) {
    const std::string lowered = to_lower(out.front());
    if (lowered == "none" || lowered == "n/a") return {};
  }
  if (out.empty()) parse_fail("\"Keywords:\" line has no entries", text);
  return out;
}

KeywordSet parse_keyword_response(std::string_view text) {
  KeywordSet set;
  for (const auto& kw : parse_keyword_list(text)) {
    const Category c = classify_keyword(kw).value_or(Category::kOther);
    if (!set.add(c, kw)) spdlog::warn("dropping keyword \"{}\"", kw);
  }
  if (set.empty()) parse_fail("no usable keywords", text);
  return set;
}

EnrichedPromptGroup parse_enrichment(std::string_view text, std::string_view base_prompt) {
  const auto lines = split_lines(text);
  const auto header = last_labeled_line(lines, "Entities");
  if (!header) parse_fail("no \"Entities:\" section", text);
  const auto complex_idx = last_labeled_line(lines, "Complex prompt");
  if (!complex_idx) parse_fail("no \"Complex prompt:\" line", text);
  const auto background_idx = last_labeled_line(lines, "Background prompt");
  if (!background_idx) parse_fail("no \"Background prompt:\" line", text);

  EnrichedPromptGroup group;
  group.base_prompt = std::string(base_prompt);
  group.complex_prompt = *labeled_value(lines[*complex_idx], "Complex prompt");
  group.background_prompt = *labeled_value(lines[*background_idx], "Background prompt");
  if (group.complex_prompt.empty()) parse_fail("complex prompt is empty", text);
  if (group.background_prompt.empty()) parse_fail("background prompt is empty", text);

  for (std::size_t i = *header + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto item = list_item(lines[i]);
    if (!item) break;
    const auto colon = item->find(':');
    if (colon == std::string::npos) parse_fail("entity line without ':'", text);
    Entity e{trim(std::string_view(*item).substr(0, colon)),
             trim(std::string_view(*item).substr(colon + 1))};
    if (e.name.empty() || e.sub_prompt.empty()) parse_fail("empty entity name or description", text);
    group.entities.push_back(std::move(e));
  }

  try {
    for (const auto& w : check_invariants(group)) spdlog::warn("enrichment: {}", w);
  } catch (const Error& e) {
    parse_fail(e.what(), text);
  }
  return group;
}

std::vector<RegionProposal> parse_layout(std::string_view text) {
  const auto lines = split_lines(text);
  const auto header = last_labeled_line(lines, "Layout");
  if (!header) parse_fail("no \"Layout:\" section", text);

  std::vector<RegionProposal> out;
  for (std::size_t i = *header + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto item = list_item(lines[i]);
    if (!item) break;
    const std::string_view v = *item;
    const auto colon = v.find(':');
    const auto open = v.find('[');
    if (colon == std::string_view::npos || open == std::string_view::npos || open < colon) {
      parse_fail("layout line is not \"name: [l, t, r, b]; prompt\"", text);
    }
    const auto close = v.find(']', open);
    if (close == std::string_view::npos) parse_fail("unterminated box", text);

    RegionProposal p;
    p.entity = trim(v.substr(0, colon));
    if (p.entity.empty()) parse_fail("layout line has empty entity name", text);
    if (!trim(v.substr(colon + 1, open - colon - 1)).empty()) {
      parse_fail("unexpected text before box", text);
    }
    std::stringstream coords{std::string(v.substr(open + 1, close - open - 1))};
    std::size_t n = 0;
    for (std::string tok; std::getline(coords, tok, ',');) {
      if (n >= 4 || !parse_number(tok, p.raw_box[n])) parse_fail("box needs 4 numbers", text);
      ++n;
    }
    if (n != 4) parse_fail("box needs 4 numbers", text);

    std::string_view rest = v.substr(close + 1);
    while (!rest.empty() && (rest.front() == ';' || rest.front() == '|' || rest.front() == ',' ||
                             rest.front() == '-' || rest.front() == ' ' || rest.front() == '\t')) {
      rest.remove_prefix(1);
    }
    p.located_sub_prompt = trim(rest);
    if (p.located_sub_prompt.empty()) parse_fail("layout line has no located prompt", text);
    out.push_back(std::move(p));
  }
  if (out.empty()) parse_fail("\"Layout:\" section is empty", text);
  return out;
}

std::string render_keyword_line(const KeywordSet& keywords) {
  return "Keywords: " + preference_text(keywords);
}

std::string render_enrichment(const EnrichedPromptGroup& group) {
  std::string out = "Entities:\n";
  for (const auto& e : group.entities) out += "- " + e.name + ": " + e.sub_prompt + "\n";
  out += "Complex prompt: " + group.complex_prompt + "\n";
  out += "Background prompt: " + group.background_prompt;
  return out;
}

std::string render_layout(const std::vector<RegionProposal>& proposals) {
  std::ostringstream out;
  out.precision(17);
  out << "Layout:";
  for (const auto& p : proposals) {
    out << "\n- " << p.entity << ": [" << p.raw_box[0] << ", " << p.raw_box[1] << ", "
        << p.raw_box[2] << ", " << p.raw_box[3] << "]; " << p.located_sub_prompt;
  }
  return out.str();
}

}  // namespace prefalign::mllm
