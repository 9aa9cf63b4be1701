#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace superb {

enum class TemplateId {
  superlative_gen,
  pointwise,
  pairwise,
  listwise_annotate,
  deliberate_attrs,
  deliberated_pointwise,
  pointwise_confidence,
  listwise_rank,
};

inline constexpr TemplateId kAllTemplateIds[] = {
    TemplateId::superlative_gen,      TemplateId::pointwise,
    TemplateId::pairwise,             TemplateId::listwise_annotate,
    TemplateId::deliberate_attrs,     TemplateId::deliberated_pointwise,
    TemplateId::pointwise_confidence, TemplateId::listwise_rank,
};

std::string to_string(TemplateId id);
TemplateId template_id_from_string(const std::string& name);

// Prompt bodies with {query}, {title}, {description}, {attributes}, {K} and,
// for multi-item templates, an {items} block. "{{" and "}}" escape literal
// braces. Override files are plain text named "<template-id>.txt".
class TemplateSet {
public:
  static const TemplateSet& defaults();

  const std::string& body(TemplateId id) const;
  void set_body(TemplateId id, std::string body);
  void load_overrides(const std::filesystem::path& dir);

private:
  std::map<TemplateId, std::string> bodies_;
};

struct ItemText {
  std::string title;
  std::string description;
};

struct PromptBindings {
  std::string query;
  std::vector<ItemText> items;
  std::vector<std::string> attributes;
};

// Byte-deterministic rendering. Throws ParseError on unbound placeholders,
// on a missing item block, or when an item-bearing template does not place
// the query both before and after the items.
std::string render(const TemplateSet& templates, TemplateId id, const PromptBindings& bindings);

inline std::string render(TemplateId id, const PromptBindings& bindings) {
  return render(TemplateSet::defaults(), id, bindings);
}

// --- response grammars ------------------------------------------------------

struct PointLabel {
  int label = 0;
  std::string explanation;
};

// First token must be an integer 0..3; explanation is everything after the
// first newline. No prose-prefix salvage.
PointLabel parse_point_label(std::string_view text);

struct PointLabelConfidence {
  int label = 0;
  int confidence = 1;
  std::string explanation;
};

// "<label> <confidence 1..9> <explanation>".
PointLabelConfidence parse_point_label_confidence(std::string_view text);

// Exactly n leading integers in 0..3; trailing prose ignored. Count mismatch
// and out-of-range values are fatal: silent misalignment would corrupt
// label/item pairing.
std::vector<int> parse_label_sequence(std::string_view text, std::size_t n);

// Free text after the first n whitespace-delimited tokens; the shared
// explanation of a label-sequence response.
std::string text_after_tokens(std::string_view text, std::size_t n);

struct RankPermutation {
  std::vector<int> order;  // 1-based input indices, best first
  bool repaired = false;
};

// Lenient: drops non-numeric tokens and out-of-range ids, keeps the first
// occurrence of duplicates, appends missing ids in input order. Fatal only
// when no valid id parses at all.
RankPermutation parse_rank_permutation(std::string_view text, std::size_t n);

struct AttributeSet {
  std::string qid;
  std::vector<std::string> attributes;
};

// Extracts a JSON string array under `key` from the outermost braced object,
// tolerating surrounding prose. Entries are trimmed; empty ones dropped.
std::vector<std::string> parse_string_array(std::string_view text, std::string_view key);

std::vector<std::string> parse_attributes(std::string_view text);
std::vector<std::string> parse_superlatives(std::string_view text);

// sha256 hex of the exact prompt text; fixture key and diagnostic handle.
std::string prompt_hash(std::string_view prompt);

}  // namespace superb
