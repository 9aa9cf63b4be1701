// Independent reference implementations used as oracles. These deliberately
// avoid the library's index/accumulator code paths: scoring walks every
// document directly and metrics are computed from first principles.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "superb/corpus.hpp"
#include "superb/retrieval.hpp"

namespace superb::test {

// Scores every document of the collection against the weighted query with
// the BM25 formula, full sort, no inverted index.
inline std::vector<SearchHit> brute_force_bm25(const ProductCollection& products,
                                               const WeightedQuery& query, std::size_t k,
                                               const Bm25Params& params = {}) {
  std::vector<std::vector<std::string>> doc_tokens;
  doc_tokens.reserve(products.size());
  double total_tokens = 0.0;
  for (const auto& p : products) {
    doc_tokens.push_back(tokenize(p.title + " " + p.description));
    total_tokens += static_cast<double>(doc_tokens.back().size());
  }
  const double n_docs = static_cast<double>(products.size());
  const double avgdl = total_tokens / n_docs;

  std::vector<SearchHit> hits;
  for (std::size_t d = 0; d < products.size(); ++d) {
    double score = 0.0;
    bool matched = false;
    for (const auto& [term, weight] : query.terms) {
      if (weight <= 0.0) continue;
      double df = 0.0;
      for (const auto& tokens : doc_tokens) {
        if (std::find(tokens.begin(), tokens.end(), term) != tokens.end()) df += 1.0;
      }
      if (df == 0.0) continue;
      const double tf = static_cast<double>(
          std::count(doc_tokens[d].begin(), doc_tokens[d].end(), term));
      if (tf == 0.0) continue;
      matched = true;
      const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(doc_tokens[d].size());
      const double denom = tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl);
      score += weight * idf * tf * (params.k1 + 1.0) / denom;
    }
    if (matched) hits.push_back({products.at(d).doc_id, score});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

inline double ref_precision(const std::vector<std::string>& ranked,
                            const std::map<std::string, int>& grades, int k, int min_rel) {
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
    auto it = grades.find(ranked[static_cast<std::size_t>(i)]);
    if (it != grades.end() && it->second >= min_rel) ++hits;
  }
  return static_cast<double>(hits) / k;
}

inline double ref_ndcg(const std::vector<std::string>& ranked,
                       const std::map<std::string, int>& grades, int k, bool exponential) {
  auto gain = [&](int g) {
    return exponential ? std::pow(2.0, g) - 1.0 : static_cast<double>(g);
  };
  double dcg = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
    auto it = grades.find(ranked[static_cast<std::size_t>(i)]);
    if (it != grades.end()) dcg += gain(it->second) / (std::log(i + 2.0) / std::log(2.0));
  }
  std::vector<int> all;
  for (const auto& [doc, g] : grades) all.push_back(g);
  std::sort(all.rbegin(), all.rend());
  double idcg = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(all.size()); ++i) {
    idcg += gain(all[static_cast<std::size_t>(i)]) / (std::log(i + 2.0) / std::log(2.0));
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline double ref_average_precision(const std::vector<std::string>& ranked,
                                    const std::map<std::string, int>& grades, int min_rel) {
  int total_rel = 0;
  for (const auto& [doc, g] : grades) {
    if (g >= min_rel) ++total_rel;
  }
  if (total_rel == 0) return 0.0;
  double sum = 0.0;
  int seen = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto it = grades.find(ranked[i]);
    if (it != grades.end() && it->second >= min_rel) {
      ++seen;
      sum += static_cast<double>(seen) / static_cast<double>(i + 1);
    }
  }
  return sum / total_rel;
}

inline double ref_recall(const std::vector<std::string>& ranked,
                         const std::map<std::string, int>& grades, int k, int min_rel) {
  int total_rel = 0;
  for (const auto& [doc, g] : grades) {
    if (g >= min_rel) ++total_rel;
  }
  if (total_rel == 0) return 0.0;
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
    auto it = grades.find(ranked[static_cast<std::size_t>(i)]);
    if (it != grades.end() && it->second >= min_rel) ++hits;
  }
  return static_cast<double>(hits) / total_rel;
}

}  // namespace superb::test
