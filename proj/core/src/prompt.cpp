#include "superb/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace detail {
extern const std::string kSuperlativeGenTemplate;
extern const std::string kPointwiseTemplate;
extern const std::string kPairwiseTemplate;
extern const std::string kListwiseAnnotateTemplate;
extern const std::string kDeliberateAttrsTemplate;
extern const std::string kDeliberatedPointwiseTemplate;
extern const std::string kPointwiseConfidenceTemplate;
extern const std::string kListwiseRankTemplate;
}  // namespace detail

namespace {

struct Token {
  std::string_view text;
  std::size_t end = 0;  // offset just past the token
};

// Next whitespace-delimited token at or after pos; empty text when exhausted.
Token next_token(std::string_view s, std::size_t pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return {s.substr(start, pos - start), pos};
}

bool parse_int(std::string_view tok, int& out) {
  if (!is_integer_token(tok)) return false;
  out = std::stoi(std::string(tok));
  return true;
}

bool is_multi_item(TemplateId id) {
  return id == TemplateId::pairwise || id == TemplateId::listwise_annotate ||
         id == TemplateId::listwise_rank;
}

bool has_item_block(TemplateId id) {
  return is_multi_item(id) || id == TemplateId::pointwise ||
         id == TemplateId::deliberated_pointwise || id == TemplateId::pointwise_confidence;
}

bool needs_attributes(TemplateId id) {
  return id == TemplateId::deliberated_pointwise || id == TemplateId::pointwise_confidence;
}

std::string format_items(const std::vector<ItemText>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += '\n';
    out += "Item " + std::to_string(i + 1) + " Description: Title: " + items[i].title +
           " Description: " + items[i].description;
  }
  return out;
}

// Balanced-brace extraction of the first top-level JSON object, string-aware.
std::string_view outermost_object(std::string_view text) {
  auto open = text.find('{');
  if (open == std::string_view::npos) return {};
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(open, i - open + 1);
    }
  }
  return {};
}

}  // namespace

std::string to_string(TemplateId id) {
  switch (id) {
    case TemplateId::superlative_gen: return "superlative-gen";
    case TemplateId::pointwise: return "pointwise";
    case TemplateId::pairwise: return "pairwise";
    case TemplateId::listwise_annotate: return "listwise-annotate";
    case TemplateId::deliberate_attrs: return "deliberate-attrs";
    case TemplateId::deliberated_pointwise: return "deliberated-pointwise";
    case TemplateId::pointwise_confidence: return "pointwise-confidence";
    case TemplateId::listwise_rank: return "listwise-rank";
  }
  return {};
}

TemplateId template_id_from_string(const std::string& name) {
  for (auto id : kAllTemplateIds) {
    if (to_string(id) == name) return id;
  }
  throw ValidationError("unknown template id '" + name + "'");
}

const TemplateSet& TemplateSet::defaults() {
  static const TemplateSet instance = [] {
    TemplateSet t;
    t.set_body(TemplateId::superlative_gen, detail::kSuperlativeGenTemplate);
    t.set_body(TemplateId::pointwise, detail::kPointwiseTemplate);
    t.set_body(TemplateId::pairwise, detail::kPairwiseTemplate);
    t.set_body(TemplateId::listwise_annotate, detail::kListwiseAnnotateTemplate);
    t.set_body(TemplateId::deliberate_attrs, detail::kDeliberateAttrsTemplate);
    t.set_body(TemplateId::deliberated_pointwise, detail::kDeliberatedPointwiseTemplate);
    t.set_body(TemplateId::pointwise_confidence, detail::kPointwiseConfidenceTemplate);
    t.set_body(TemplateId::listwise_rank, detail::kListwiseRankTemplate);
    return t;
  }();
  return instance;
}

const std::string& TemplateSet::body(TemplateId id) const {
  auto it = bodies_.find(id);
  if (it == bodies_.end()) throw ValidationError("no body for template " + to_string(id));
  return it->second;
}

void TemplateSet::set_body(TemplateId id, std::string body) {
  bodies_[id] = std::move(body);
}

void TemplateSet::load_overrides(const std::filesystem::path& dir) {
  for (auto id : kAllTemplateIds) {
    auto path = dir / (to_string(id) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open template override " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto body = buf.str();
    // Files usually end with a trailing newline the prompt should not carry.
    if (!body.empty() && body.back() == '\n') body.pop_back();
    set_body(id, std::move(body));
  }
}

std::string render(const TemplateSet& templates, TemplateId id, const PromptBindings& bindings) {
  const std::string& body = templates.body(id);
  const std::string tid = to_string(id);

  if (trim(bindings.query).empty()) {
    throw ParseError("unbound_placeholder", tid + ": query binding is empty");
  }
  if (is_multi_item(id) && bindings.items.empty()) {
    throw ParseError("empty_items", tid + ": item templates need at least one item");
  }
  if (id == TemplateId::pairwise && bindings.items.size() != 2) {
    throw ParseError("empty_items", tid + ": exactly two items required");
  }
  if (has_item_block(id) && !is_multi_item(id) && bindings.items.size() != 1) {
    throw ParseError("empty_items", tid + ": exactly one item required");
  }
  if (needs_attributes(id) && bindings.attributes.empty()) {
    throw ParseError("unbound_placeholder", tid + ": attributes binding is empty");
  }
  if (has_item_block(id)) {
    // The query must bracket the item block, as in the source layouts.
    auto first = body.find("{query}");
    auto last = body.rfind("{query}");
    if (first == std::string::npos || first == last) {
      throw ParseError("bad_template", tid + ": query placeholder must appear before and after "
                                             "the item block");
    }
  }

  std::string attributes_joined;
  for (std::size_t i = 0; i < bindings.attributes.size(); ++i) {
    if (i > 0) attributes_joined += ", ";
    attributes_joined += bindings.attributes[i];
  }

  std::string out;
  out.reserve(body.size() + 256);
  for (std::size_t i = 0; i < body.size();) {
    char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      out += '{';
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      out += '}';
      i += 2;
      continue;
    }
    if (c != '{') {
      out += c;
      ++i;
      continue;
    }
    auto close = body.find('}', i);
    if (close == std::string::npos) {
      throw ParseError("bad_template", tid + ": unterminated placeholder");
    }
    std::string name = body.substr(i + 1, close - i - 1);
    if (name == "query") {
      out += bindings.query;
    } else if (name == "items") {
      out += format_items(bindings.items);
    } else if (name == "title") {
      out += bindings.items.at(0).title;
    } else if (name == "description") {
      out += bindings.items.at(0).description;
    } else if (name == "attributes") {
      out += attributes_joined;
    } else if (name == "K") {
      out += std::to_string(bindings.items.size());
    } else {
      throw ParseError("unbound_placeholder", tid + ": unknown placeholder {" + name + "}");
    }
    i = close + 1;
  }
  return out;
}

PointLabel parse_point_label(std::string_view text) {
  auto tok = next_token(text, 0);
  int label = 0;
  if (tok.text.empty() || !parse_int(tok.text, label)) {
    throw ParseError("missing_label", "expected a leading 0..3 label", std::string(text));
  }
  if (label < 0 || label > 3) {
    throw ParseError("label_out_of_range", "label " + std::to_string(label) + " outside 0..3",
                     std::string(text));
  }
  PointLabel out;
  out.label = label;
  auto newline = text.find('\n');
  if (newline != std::string_view::npos) out.explanation = trim(text.substr(newline + 1));
  return out;
}

PointLabelConfidence parse_point_label_confidence(std::string_view text) {
  auto first = next_token(text, 0);
  int label = 0;
  if (first.text.empty() || !parse_int(first.text, label)) {
    throw ParseError("missing_label", "expected a leading 0..3 label", std::string(text));
  }
  if (label < 0 || label > 3) {
    throw ParseError("label_out_of_range", "label " + std::to_string(label) + " outside 0..3",
                     std::string(text));
  }
  auto second = next_token(text, first.end);
  int confidence = 0;
  if (second.text.empty() || !parse_int(second.text, confidence)) {
    throw ParseError("missing_confidence", "expected a confidence after the label",
                     std::string(text));
  }
  if (confidence < 1 || confidence > 9) {
    throw ParseError("confidence_out_of_range",
                     "confidence " + std::to_string(confidence) + " outside 1..9",
                     std::string(text));
  }
  PointLabelConfidence out;
  out.label = label;
  out.confidence = confidence;
  out.explanation = trim(text.substr(second.end));
  return out;
}

std::vector<int> parse_label_sequence(std::string_view text, std::size_t n) {
  if (n == 0) throw ValidationError("parse_label_sequence: n must be >= 1");
  std::vector<int> labels;
  labels.reserve(n);
  std::size_t pos = 0;
  while (labels.size() < n) {
    auto tok = next_token(text, pos);
    int value = 0;
    if (tok.text.empty() || !parse_int(tok.text, value)) {
      throw ParseError("count_mismatch",
                       "expected " + std::to_string(n) + " labels, got " +
                           std::to_string(labels.size()),
                       std::string(text));
    }
    if (value < 0 || value > 3) {
      throw ParseError("label_out_of_range", "label " + std::to_string(value) + " outside 0..3",
                       std::string(text));
    }
    labels.push_back(value);
    pos = tok.end;
  }
  return labels;
}

std::string text_after_tokens(std::string_view text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto tok = next_token(text, pos);
    if (tok.text.empty()) return {};
    pos = tok.end;
  }
  return trim(text.substr(pos));
}

RankPermutation parse_rank_permutation(std::string_view text, std::size_t n) {
  if (n == 0) throw ValidationError("parse_rank_permutation: n must be >= 1");
  RankPermutation out;
  std::vector<bool> seen(n + 1, false);
  std::size_t pos = 0;
  while (out.order.size() < n) {
    auto tok = next_token(text, pos);
    if (tok.text.empty()) break;
    pos = tok.end;
    // Tokens like "2," or "(3)" still carry an id; words do not.
    auto body = tok.text;
    while (!body.empty() && !std::isalnum(static_cast<unsigned char>(body.front()))) {
      body.remove_prefix(1);
    }
    while (!body.empty() && !std::isalnum(static_cast<unsigned char>(body.back()))) {
      body.remove_suffix(1);
    }
    int value = 0;
    if (!parse_int(body, value)) {
      out.repaired = true;
      continue;
    }
    if (value < 1 || static_cast<std::size_t>(value) > n) {
      out.repaired = true;
      continue;
    }
    if (seen[static_cast<std::size_t>(value)]) {
      out.repaired = true;
      continue;
    }
    seen[static_cast<std::size_t>(value)] = true;
    out.order.push_back(value);
  }
  if (out.order.empty()) {
    throw ParseError("empty_permutation", "no valid item ids in response", std::string(text));
  }
  if (out.order.size() < n) {
    out.repaired = true;
    for (std::size_t id = 1; id <= n; ++id) {
      if (!seen[id]) out.order.push_back(static_cast<int>(id));
    }
  }
  return out;
}

std::vector<std::string> parse_string_array(std::string_view text, std::string_view key) {
  auto object_text = outermost_object(text);
  if (object_text.empty()) {
    throw ParseError("no_json", "no braced object in response", std::string(text));
  }
  auto j = nlohmann::json::parse(object_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("no_json", "braced text is not a JSON object", std::string(text));
  }

  const nlohmann::json* array = nullptr;
  if (auto it = j.find(std::string(key)); it != j.end() && it->is_array()) {
    array = &*it;
  } else if (key == "attributes") {
    // The deliberation prompt fixes no schema; accept the first string array.
    for (const auto& [name, value] : j.items()) {
      if (value.is_array()) {
        array = &value;
        break;
      }
    }
  }
  if (array == nullptr) {
    throw ParseError("missing_key", "no '" + std::string(key) + "' array in response",
                     std::string(text));
  }

  std::vector<std::string> out;
  for (const auto& entry : *array) {
    if (!entry.is_string()) continue;
    auto value = trim(entry.get<std::string>());
    if (!value.empty()) out.push_back(std::move(value));
  }
  if (out.empty()) {
    throw ParseError("empty_list", "'" + std::string(key) + "' array is empty",
                     std::string(text));
  }
  return out;
}

std::vector<std::string> parse_attributes(std::string_view text) {
  return parse_string_array(text, "attributes");
}

std::vector<std::string> parse_superlatives(std::string_view text) {
  return parse_string_array(text, "superlatives");
}

std::string prompt_hash(std::string_view prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace superb
