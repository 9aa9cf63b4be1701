#include "superb/reformulate.hpp"

#include <algorithm>
#include <set>

#include "superb/errors.hpp"
#include "superb/retrieval.hpp"
#include "superb/util.hpp"

namespace superb {

ReformulationKind reformulation_kind_from_string(const std::string& name) {
  if (name == "superlative") return ReformulationKind::superlative;
  if (name == "keyword") return ReformulationKind::keyword;
  if (name == "attribute") return ReformulationKind::attribute;
  throw ValidationError("unknown reformulation kind '" + name + "'");
}

std::string to_string(ReformulationKind kind) {
  switch (kind) {
    case ReformulationKind::superlative: return "superlative";
    case ReformulationKind::keyword: return "keyword";
    case ReformulationKind::attribute: return "attribute";
  }
  return {};
}

std::string keyword_expansion_prompt(const std::string& query) {
  return "Generate generic query expansion keywords which are related to the following shopping "
         "query. The keywords should broaden lexical coverage without changing the intent. "
         "Return your output as a json with a single key \"keywords\" holding a list of strings. "
         "Do not generate anything else.\n\nUser Query: " +
         query;
}

std::vector<std::string> generate_superlatives(const std::string& seed_query, Provider& provider,
                                               const TemplateSet& templates) {
  if (trim(seed_query).empty()) throw ValidationError("generate_superlatives: empty seed query");
  PromptBindings bindings;
  bindings.query = seed_query;
  const auto prompt = render(templates, TemplateId::superlative_gen, bindings);
  const auto response = provider.complete({.prompt = prompt});
  auto raw = parse_superlatives(response);

  const auto seed_lower = to_lower(trim(seed_query));
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& entry : raw) {
    auto lower = to_lower(entry);
    if (lower == seed_lower) continue;
    if (!seen.insert(lower).second) continue;
    out.push_back(std::move(entry));
  }
  if (out.empty()) {
    throw ParseError("empty_list", "no usable superlative reformulations for prompt " +
                                       prompt_hash(prompt));
  }
  return out;
}

ReformulatedQuery keyword_expand(const Query& query, Provider& provider) {
  const auto prompt = keyword_expansion_prompt(query.text);
  const auto response = provider.complete({.prompt = prompt});

  ReformulatedQuery out;
  out.qid = query.qid;
  out.original = query.text;
  out.kind = ReformulationKind::keyword;

  std::vector<std::string> keywords;
  try {
    keywords = parse_string_array(response, "keywords");
  } catch (const ParseError&) {
    // fall through to the flagged no-op below
  }

  std::set<std::string> query_tokens;
  for (auto& tok : tokenize(query.text)) query_tokens.insert(tok);
  std::set<std::string> added;
  std::string suffix;
  for (const auto& keyword : keywords) {
    auto tokens = tokenize(keyword);
    const bool covered = !tokens.empty() &&
                         std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
                           return query_tokens.contains(t);
                         });
    if (covered) continue;
    if (!added.insert(to_lower(keyword)).second) continue;
    suffix += ' ';
    suffix += keyword;
    out.provenance.push_back(keyword);
  }
  if (out.provenance.empty()) {
    out.expanded = query.text;
    out.flagged = true;
    return out;
  }
  out.expanded = query.text + suffix;
  return out;
}

ReformulatedQuery attribute_expand(const Query& query, const AttributeSet& attrs) {
  if (attrs.attributes.empty()) throw ValidationError("attribute_expand: empty attribute set");

  ReformulatedQuery out;
  out.qid = query.qid;
  out.original = query.text;
  out.kind = ReformulationKind::attribute;
  out.provenance = attrs.attributes;

  std::set<std::string> have;
  for (auto& tok : tokenize(query.text)) have.insert(tok);
  std::string suffix;
  for (const auto& phrase : attrs.attributes) {
    for (auto& tok : tokenize(phrase)) {
      if (is_stopword(tok)) continue;
      if (!have.insert(tok).second) continue;
      suffix += ' ';
      suffix += tok;
    }
  }
  out.expanded = suffix.empty() ? query.text : query.text + suffix;
  return out;
}

}  // namespace superb
