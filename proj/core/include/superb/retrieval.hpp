#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "superb/corpus.hpp"

namespace superb {

// Lowercased, punctuation-stripped, whitespace-split. Any non-alphanumeric
// byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view token);

struct Posting {
  std::uint32_t doc = 0;  // ordinal into the index doc table
  std::uint32_t tf = 0;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct TermWeight {
  std::string term;
  double weight = 0.0;
};

// Terms are unique; weights are non-negative and sum to 1 when produced by
// rm3_expand or normalized().
struct WeightedQuery {
  std::vector<TermWeight> terms;

  static WeightedQuery from_text(std::string_view text);  // weight = term count
  WeightedQuery normalized() const;
};

struct SearchHit {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

class InvertedIndex {
public:
  // Indexes title and description concatenated. Throws on empty collection.
  static InvertedIndex build(const ProductCollection& products);

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::int64_t total_tokens() const { return total_tokens_; }
  double avg_doc_len() const;
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::uint32_t doc_len(std::uint32_t doc) const { return doc_lens_[doc]; }
  const std::vector<Posting>* postings(const std::string& term) const;
  const std::map<std::string, std::vector<Posting>>& terms() const { return postings_; }

  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);

private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lens_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::int64_t total_tokens_ = 0;
};

// Okapi BM25 with the +1-smoothed idf:
//   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
//   score(d) = sum_t w_t * idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))
// Only documents sharing at least one query term are returned, ordered by
// score descending, ties by doc_id ascending.
std::vector<SearchHit> bm25_search(const InvertedIndex& index, const WeightedQuery& query,
                                   std::size_t k, const Bm25Params& params = {});

struct Rm3Params {
  std::size_t fb_docs = 3;
  std::size_t fb_terms = 10;
  double orig_weight = 0.5;  // lambda
};

struct Rm3Result {
  WeightedQuery query;
  bool expanded = false;  // false when first pass was empty
};

// Relevance-model expansion: P(d) from normalized first-pass scores,
// P(t|d) maximum likelihood, top fb_terms by sum_d P(t|d) P(d) renormalized,
// then lambda * P(t|q) + (1 - lambda) * P_rm(t).
Rm3Result rm3_expand(const InvertedIndex& index, const WeightedQuery& query,
                     const std::vector<SearchHit>& first_pass, const Rm3Params& params = {});

}  // namespace superb
