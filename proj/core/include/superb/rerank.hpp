#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "superb/corpus.hpp"
#include "superb/gateway.hpp"
#include "superb/prompt.hpp"

namespace superb {

struct ScoredItem {
  std::string doc_id;
  double first_stage_score = 0.0;
  std::optional<int> label;
  std::optional<int> confidence;  // 1..9
  bool flagged = false;           // parse degraded or window left unranked
};

// Overlapping windows (step < size) let items ascend across a pass.
struct WindowSpec {
  int size = 20;
  int step = 10;
};

void validate(const WindowSpec& window);

// One structured line per parse anomaly, for the sidecar file.
struct Diagnostic {
  std::string qid;
  std::string template_id;
  std::string kind;
  std::string prompt_hash;
};

class AttributeCache {
public:
  const AttributeSet* find(const std::string& qid) const;
  void put(AttributeSet attrs);
  std::size_t size() const { return cache_.size(); }

private:
  std::map<std::string, AttributeSet> cache_;
};

struct RerankContext {
  const ProductCollection& products;
  Provider& provider;
  const TemplateSet& templates = TemplateSet::defaults();
  int max_parallel = 1;       // pointwise fan-out bound
  std::size_t batch_cap = 25;   // listwise annotation batch limit
  std::size_t window_cap = 100; // listwise ranking window limit
};

struct RerankResult {
  std::vector<ScoredItem> items;
  std::vector<Diagnostic> diagnostics;
  bool aborted = false;  // sliding-window provider failure; items are the input
};

// The deliberated-pointwise ordering key: label desc, confidence desc,
// first-stage score desc, doc_id asc. A total order, so reranked output is
// unique and deterministic.
bool rerank_key_less(const ScoredItem& a, const ScoredItem& b);

// Sorts items[0, head) by the key above, leaving the tail untouched.
void sort_reranked_head(std::vector<ScoredItem>& items, std::size_t head);

// One deliberation call per query; later calls for the same qid hit the cache.
AttributeSet generate_attributes(const Query& query, RerankContext& ctx, AttributeCache& cache);

// Labels (and, with attributes, confidences) for the top `depth` items, then
// re-sorts that head by (label desc, confidence desc, first-stage score desc,
// doc_id asc). depth 0 means the whole list. Parse failures degrade to
// (label 0, confidence 1) and are flagged, never dropped.
RerankResult pointwise_rerank(const Query& query, std::vector<ScoredItem> ranked,
                              const std::optional<AttributeSet>& attrs, RerankContext& ctx,
                              std::size_t depth = 0);

struct PairLabels {
  int first = 0;
  int second = 0;
  std::string explanation;
};

// Two labels in presentation order.
PairLabels pairwise_annotate(const Query& query, const Product& p1, const Product& p2,
                             RerankContext& ctx);

struct BatchLabels {
  std::vector<int> labels;  // aligned with the input doc ids
  std::string explanation;  // shared across the batch
};

// One label per doc id, aligned by position. A malformed batch is retried
// once, then the ParseError propagates.
BatchLabels listwise_annotate(const Query& query, std::span<const std::string> doc_ids,
                              RerankContext& ctx);

// RankGPT-style permutation of the window. A response with no usable ids
// leaves the window in input order, flagged.
RerankResult listwise_rerank(const Query& query, std::vector<ScoredItem> window,
                             RerankContext& ctx);

// Single back-to-front pass; start positions n-w+1, n-w+1-s, ... clamped at 1.
// Provider call count: 1 if n <= w, else ceil((n-w)/s) + 1. On a provider
// failure mid-pass the input order is returned with aborted set.
RerankResult sliding_window_rerank(const Query& query, std::vector<ScoredItem> ranked,
                                   const WindowSpec& window, RerankContext& ctx);

std::size_t sliding_window_call_count(std::size_t n, const WindowSpec& window);

}  // namespace superb
