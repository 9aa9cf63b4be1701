#pragma once

#include <string>
#include <vector>

#include "superb/corpus.hpp"
#include "superb/gateway.hpp"
#include "superb/prompt.hpp"
#include "superb/rerank.hpp"

namespace superb {

enum class ReformulationKind { superlative, keyword, attribute };

ReformulationKind reformulation_kind_from_string(const std::string& name);
std::string to_string(ReformulationKind kind);

struct ReformulatedQuery {
  std::string qid;
  std::string original;
  ReformulationKind kind = ReformulationKind::keyword;
  std::string expanded;  // original is a prefix for keyword/attribute kinds
  std::vector<std::string> provenance;  // keywords or attribute phrases used
  bool flagged = false;  // expansion produced nothing; original returned
};

// The described-but-not-published keyword prompt; artifact-authored.
std::string keyword_expansion_prompt(const std::string& query);

// Distinct superlative reformulations of the seed, deduplicated
// case-insensitively, never echoing the seed itself.
std::vector<std::string> generate_superlatives(const std::string& seed_query, Provider& provider,
                                               const TemplateSet& templates = TemplateSet::defaults());

// original + " " + keywords (keywords already covered by the query dropped).
ReformulatedQuery keyword_expand(const Query& query, Provider& provider);

// original + " " + tokenized attribute phrases, stopword-filtered and
// deduplicated against the query's own tokens.
ReformulatedQuery attribute_expand(const Query& query, const AttributeSet& attrs);

}  // namespace superb
