#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "superb/corpus.hpp"
#include "superb/gateway.hpp"
#include "superb/rerank.hpp"

namespace superb {

enum class AnnotationStrategy { pointwise, pointwise_deliberated, pairwise, listwise };

AnnotationStrategy annotation_strategy_from_string(const std::string& name);
std::string to_string(AnnotationStrategy strategy);

// Queries with at least min_exact products carrying the top source grade
// (ESCI Exact = 3), in input order.
std::vector<Query> select_annotation_queries(std::span<const Query> queries,
                                             const Qrels& esci_qrels, int min_exact = 5);

struct AnnotateSummary {
  std::size_t queries = 0;
  std::size_t products = 0;
  std::size_t triplets = 0;
  std::size_t failed_items = 0;
  std::size_t failed_batches = 0;
  std::int64_t provider_calls = 0;
};

struct AnnotateResult {
  std::vector<AnnotationTriplet> triplets;
  AnnotateSummary summary;
  std::vector<Diagnostic> diagnostics;
};

// Runs the strategy over every judged product of every query, emitting one
// triplet per (query, product). Failures are logged and skipped, with counts
// in the summary. Each query's products are taken from the judgments in
// doc_id order.
AnnotateResult build_triplets(std::span<const Query> queries, const ProductCollection& products,
                              const Qrels& judged, AnnotationStrategy strategy,
                              RerankContext& ctx);

struct AgreementReport {
  std::size_t overlap = 0;
  std::size_t matches = 0;
  double rate = 0.0;
  // confusion[a][b]: pairs labeled a in the first input and b in the second.
  std::array<std::array<std::size_t, 4>, 4> confusion{};
};

// Exact-match fraction over the (qid, doc_id) keys present in both inputs.
AgreementReport agreement_rate(std::span<const AnnotationTriplet> llm,
                               std::span<const AnnotationTriplet> human);

}  // namespace superb
