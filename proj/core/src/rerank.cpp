#include "superb/rerank.hpp"

#include <algorithm>
#include <future>

#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

const Product& product_or_throw(const ProductCollection& products, const std::string& doc_id) {
  const Product* p = products.find(doc_id);
  if (p == nullptr) throw DataError("doc_id '" + doc_id + "' not in the product collection");
  return *p;
}

ItemText item_text(const ProductCollection& products, const std::string& doc_id) {
  const Product& p = product_or_throw(products, doc_id);
  return {p.title, p.description};
}

// Bounded fan-out keeping result order; fn must be exception-safe per item.
template <typename Fn>
void for_each_indexed(std::size_t n, int max_parallel, Fn&& fn) {
  if (max_parallel <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t next = 0;
  while (next < n) {
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(max_parallel), n - next);
    std::vector<std::future<void>> futures;
    futures.reserve(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      futures.push_back(std::async(std::launch::async, [&, i = next + j] { fn(i); }));
    }
    for (auto& f : futures) f.get();
    next += batch;
  }
}

}  // namespace

bool rerank_key_less(const ScoredItem& a, const ScoredItem& b) {
  const int la = a.label.value_or(0);
  const int lb = b.label.value_or(0);
  if (la != lb) return la > lb;
  const int ca = a.confidence.value_or(0);
  const int cb = b.confidence.value_or(0);
  if (ca != cb) return ca > cb;
  if (a.first_stage_score != b.first_stage_score) {
    return a.first_stage_score > b.first_stage_score;
  }
  return a.doc_id < b.doc_id;
}

void sort_reranked_head(std::vector<ScoredItem>& items, std::size_t head) {
  head = std::min(head, items.size());
  std::sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(head), rerank_key_less);
}

void validate(const WindowSpec& window) {
  if (window.size < 2) throw ValidationError("window size must be >= 2");
  if (window.step < 1 || window.step >= window.size) {
    throw ValidationError("window step must satisfy 1 <= step < size");
  }
}

const AttributeSet* AttributeCache::find(const std::string& qid) const {
  auto it = cache_.find(qid);
  return it == cache_.end() ? nullptr : &it->second;
}

void AttributeCache::put(AttributeSet attrs) { cache_[attrs.qid] = std::move(attrs); }

AttributeSet generate_attributes(const Query& query, RerankContext& ctx, AttributeCache& cache) {
  if (const AttributeSet* cached = cache.find(query.qid)) return *cached;
  PromptBindings bindings;
  bindings.query = query.text;
  const auto prompt = render(ctx.templates, TemplateId::deliberate_attrs, bindings);
  const auto response = ctx.provider.complete({.prompt = prompt});
  try {
    AttributeSet attrs{query.qid, parse_attributes(response)};
    cache.put(attrs);
    return attrs;
  } catch (const ParseError& e) {
    throw ParseError(e.kind(),
                     "attribute generation failed for prompt " + prompt_hash(prompt) + ": " +
                         e.what(),
                     e.raw());
  }
}

RerankResult pointwise_rerank(const Query& query, std::vector<ScoredItem> ranked,
                              const std::optional<AttributeSet>& attrs, RerankContext& ctx,
                              std::size_t depth) {
  if (ranked.empty()) throw ValidationError("pointwise_rerank: empty input");
  const bool deliberated = attrs.has_value();
  if (deliberated && attrs->attributes.empty()) {
    throw ValidationError("pointwise_rerank: empty attribute set");
  }
  const std::size_t head = depth == 0 ? ranked.size() : std::min(depth, ranked.size());
  const auto template_id =
      deliberated ? TemplateId::pointwise_confidence : TemplateId::pointwise;

  std::vector<Diagnostic> diagnostics(head);
  std::vector<bool> has_diagnostic(head, false);
  for_each_indexed(head, ctx.max_parallel, [&](std::size_t i) {
    ScoredItem& item = ranked[i];
    PromptBindings bindings;
    bindings.query = query.text;
    bindings.items.push_back(item_text(ctx.products, item.doc_id));
    if (deliberated) bindings.attributes = attrs->attributes;
    const auto prompt = render(ctx.templates, template_id, bindings);
    const auto response = ctx.provider.complete({.prompt = prompt});
    try {
      if (deliberated) {
        auto parsed = parse_point_label_confidence(response);
        item.label = parsed.label;
        item.confidence = parsed.confidence;
      } else {
        auto parsed = parse_point_label(response);
        item.label = parsed.label;
      }
    } catch (const ParseError& e) {
      item.label = 0;
      item.confidence = 1;
      item.flagged = true;
      diagnostics[i] = {query.qid, to_string(template_id), e.kind(), prompt_hash(prompt)};
      has_diagnostic[i] = true;
    }
  });

  RerankResult out;
  for (std::size_t i = 0; i < head; ++i) {
    if (has_diagnostic[i]) out.diagnostics.push_back(std::move(diagnostics[i]));
  }
  sort_reranked_head(ranked, head);
  out.items = std::move(ranked);
  return out;
}

PairLabels pairwise_annotate(const Query& query, const Product& p1, const Product& p2,
                             RerankContext& ctx) {
  if (p1.doc_id == p2.doc_id) {
    throw ValidationError("pairwise_annotate: self-pair '" + p1.doc_id + "'");
  }
  PromptBindings bindings;
  bindings.query = query.text;
  bindings.items = {{p1.title, p1.description}, {p2.title, p2.description}};
  const auto prompt = render(ctx.templates, TemplateId::pairwise, bindings);
  const auto response = ctx.provider.complete({.prompt = prompt});
  auto labels = parse_label_sequence(response, 2);
  return {labels[0], labels[1], text_after_tokens(response, 2)};
}

BatchLabels listwise_annotate(const Query& query, std::span<const std::string> doc_ids,
                              RerankContext& ctx) {
  if (doc_ids.empty()) throw ValidationError("listwise_annotate: empty batch");
  if (doc_ids.size() > ctx.batch_cap) {
    throw ValidationError("listwise_annotate: batch of " + std::to_string(doc_ids.size()) +
                          " exceeds cap " + std::to_string(ctx.batch_cap));
  }
  PromptBindings bindings;
  bindings.query = query.text;
  for (const auto& doc_id : doc_ids) bindings.items.push_back(item_text(ctx.products, doc_id));
  const auto prompt = render(ctx.templates, TemplateId::listwise_annotate, bindings);
  for (int attempt = 0;; ++attempt) {
    const auto response = ctx.provider.complete({.prompt = prompt});
    try {
      auto labels = parse_label_sequence(response, doc_ids.size());
      return {std::move(labels), text_after_tokens(response, doc_ids.size())};
    } catch (const ParseError&) {
      if (attempt == 1) throw;
    }
  }
}

RerankResult listwise_rerank(const Query& query, std::vector<ScoredItem> window,
                             RerankContext& ctx) {
  if (window.empty()) throw ValidationError("listwise_rerank: empty window");
  if (window.size() > ctx.window_cap) {
    throw ValidationError("listwise_rerank: window of " + std::to_string(window.size()) +
                          " exceeds cap " + std::to_string(ctx.window_cap));
  }
  PromptBindings bindings;
  bindings.query = query.text;
  for (const auto& item : window) bindings.items.push_back(item_text(ctx.products, item.doc_id));
  const auto prompt = render(ctx.templates, TemplateId::listwise_rank, bindings);
  const auto response = ctx.provider.complete({.prompt = prompt});

  RerankResult out;
  try {
    auto permutation = parse_rank_permutation(response, window.size());
    out.items.reserve(window.size());
    for (int id : permutation.order) {
      out.items.push_back(std::move(window[static_cast<std::size_t>(id - 1)]));
    }
    if (permutation.repaired) {
      out.diagnostics.push_back({query.qid, to_string(TemplateId::listwise_rank), "repaired",
                                 prompt_hash(prompt)});
    }
  } catch (const ParseError& e) {
    for (auto& item : window) item.flagged = true;
    out.items = std::move(window);
    out.diagnostics.push_back(
        {query.qid, to_string(TemplateId::listwise_rank), e.kind(), prompt_hash(prompt)});
  }
  return out;
}

std::size_t sliding_window_call_count(std::size_t n, const WindowSpec& window) {
  validate(window);
  const auto w = static_cast<std::size_t>(window.size);
  const auto s = static_cast<std::size_t>(window.step);
  if (n <= w) return 1;
  return (n - w + s - 1) / s + 1;
}

RerankResult sliding_window_rerank(const Query& query, std::vector<ScoredItem> ranked,
                                   const WindowSpec& window, RerankContext& ctx) {
  validate(window);
  if (ranked.empty()) throw ValidationError("sliding_window_rerank: empty input");
  const std::size_t n = ranked.size();
  const auto w = static_cast<std::size_t>(window.size);
  const auto s = static_cast<std::size_t>(window.step);

  // 1-based window starts, back to front.
  std::vector<std::size_t> starts;
  if (n <= w) {
    starts.push_back(1);
  } else {
    std::size_t b = n - w + 1;
    for (;;) {
      starts.push_back(b);
      if (b == 1) break;
      b = b > s ? b - s : 1;
    }
  }

  const std::vector<ScoredItem> original = ranked;
  RerankResult out;
  for (std::size_t start : starts) {
    const std::size_t begin = start - 1;
    const std::size_t end = std::min(begin + w, n);
    std::vector<ScoredItem> slice(ranked.begin() + static_cast<std::ptrdiff_t>(begin),
                                  ranked.begin() + static_cast<std::ptrdiff_t>(end));
    RerankResult step_result;
    try {
      step_result = listwise_rerank(query, std::move(slice), ctx);
    } catch (const ProviderError&) {
      out.items = original;
      out.aborted = true;
      out.diagnostics.push_back({query.qid, to_string(TemplateId::listwise_rank),
                                 "provider_failure", ""});
      return out;
    }
    std::move(step_result.items.begin(), step_result.items.end(),
              ranked.begin() + static_cast<std::ptrdiff_t>(begin));
    for (auto& d : step_result.diagnostics) out.diagnostics.push_back(std::move(d));
  }
  out.items = std::move(ranked);
  return out;
}

}  // namespace superb
