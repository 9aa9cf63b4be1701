#include "superb/annotate.hpp"

#include <algorithm>

#include "superb/errors.hpp"
#include "superb/prompt.hpp"

namespace superb {

namespace {

std::vector<std::string> judged_docs(const Qrels& judged, const std::string& qid) {
  std::vector<std::string> docs;
  const auto* grades = judged.for_query(qid);
  if (grades == nullptr) return docs;
  docs.reserve(grades->size());
  for (const auto& [doc_id, grade] : *grades) docs.push_back(doc_id);
  return docs;
}

}  // namespace

AnnotationStrategy annotation_strategy_from_string(const std::string& name) {
  if (name == "pointwise") return AnnotationStrategy::pointwise;
  if (name == "pointwise-deliberated") return AnnotationStrategy::pointwise_deliberated;
  if (name == "pairwise") return AnnotationStrategy::pairwise;
  if (name == "listwise") return AnnotationStrategy::listwise;
  throw ValidationError(
      "unknown annotation strategy '" + name +
      "' (expected pointwise, pointwise-deliberated, pairwise, or listwise)");
}

std::string to_string(AnnotationStrategy strategy) {
  switch (strategy) {
    case AnnotationStrategy::pointwise: return "pointwise";
    case AnnotationStrategy::pointwise_deliberated: return "pointwise-deliberated";
    case AnnotationStrategy::pairwise: return "pairwise";
    case AnnotationStrategy::listwise: return "listwise";
  }
  return {};
}

std::vector<Query> select_annotation_queries(std::span<const Query> queries,
                                             const Qrels& esci_qrels, int min_exact) {
  if (min_exact < 1) throw ValidationError("min_exact must be >= 1");
  std::vector<Query> out;
  for (const auto& q : queries) {
    const auto* grades = esci_qrels.for_query(q.qid);
    if (grades == nullptr) continue;
    int exact = 0;
    for (const auto& [doc_id, grade] : *grades) {
      if (grade == kMaxGrade) ++exact;
    }
    if (exact >= min_exact) out.push_back(q);
  }
  return out;
}

AnnotateResult build_triplets(std::span<const Query> queries, const ProductCollection& products,
                              const Qrels& judged, AnnotationStrategy strategy,
                              RerankContext& ctx) {
  AnnotateResult out;
  AttributeCache attr_cache;
  const std::int64_t calls_before = ctx.provider.calls();

  for (const auto& query : queries) {
    auto docs = judged_docs(judged, query.qid);
    ++out.summary.queries;
    out.summary.products += docs.size();

    // Judged docs missing from the collection cannot be prompted.
    std::vector<std::string> present;
    for (auto& doc_id : docs) {
      if (products.find(doc_id) != nullptr) {
        present.push_back(std::move(doc_id));
      } else {
        ++out.summary.failed_items;
        out.diagnostics.push_back({query.qid, "", "missing_product", doc_id});
      }
    }
    if (present.empty()) continue;

    switch (strategy) {
      case AnnotationStrategy::pointwise:
      case AnnotationStrategy::pointwise_deliberated: {
        const bool deliberated = strategy == AnnotationStrategy::pointwise_deliberated;
        std::optional<AttributeSet> attrs;
        if (deliberated) {
          try {
            attrs = generate_attributes(query, ctx, attr_cache);
          } catch (const ParseError& e) {
            out.summary.failed_items += present.size();
            out.diagnostics.push_back(
                {query.qid, to_string(TemplateId::deliberate_attrs), e.kind(), ""});
            continue;
          }
        }
        const auto template_id =
            deliberated ? TemplateId::deliberated_pointwise : TemplateId::pointwise;
        for (const auto& doc_id : present) {
          const Product& p = *products.find(doc_id);
          PromptBindings bindings;
          bindings.query = query.text;
          bindings.items.push_back({p.title, p.description});
          if (deliberated) bindings.attributes = attrs->attributes;
          const auto prompt = render(ctx.templates, template_id, bindings);
          const auto response = ctx.provider.complete({.prompt = prompt});
          try {
            auto parsed = parse_point_label(response);
            AnnotationTriplet t;
            t.qid = query.qid;
            t.doc_id = doc_id;
            t.label = parsed.label;
            t.explanation = parsed.explanation;
            if (deliberated) t.attributes = attrs->attributes;
            out.triplets.push_back(std::move(t));
          } catch (const ParseError& e) {
            ++out.summary.failed_items;
            out.diagnostics.push_back(
                {query.qid, to_string(template_id), e.kind(), prompt_hash(prompt)});
          }
        }
        break;
      }
      case AnnotationStrategy::pairwise: {
        // Disjoint consecutive pairs; an odd trailing product is presented
        // with its predecessor and only its own label is kept.
        for (std::size_t i = 0; i + 1 < present.size(); i += 2) {
          const Product& p1 = *products.find(present[i]);
          const Product& p2 = *products.find(present[i + 1]);
          try {
            auto pair = pairwise_annotate(query, p1, p2, ctx);
            AnnotationTriplet t1{query.qid, present[i], pair.first};
            AnnotationTriplet t2{query.qid, present[i + 1], pair.second};
            t1.explanation = pair.explanation;
            t2.explanation = pair.explanation;
            t1.partner = present[i + 1];
            t2.partner = present[i];
            out.triplets.push_back(std::move(t1));
            out.triplets.push_back(std::move(t2));
          } catch (const ParseError& e) {
            out.summary.failed_items += 2;
            out.diagnostics.push_back({query.qid, to_string(TemplateId::pairwise), e.kind(), ""});
          }
        }
        if (present.size() % 2 == 1 && present.size() > 1) {
          const Product& prev = *products.find(present[present.size() - 2]);
          const Product& last = *products.find(present.back());
          try {
            auto pair = pairwise_annotate(query, prev, last, ctx);
            AnnotationTriplet t{query.qid, present.back(), pair.second};
            t.explanation = pair.explanation;
            t.partner = prev.doc_id;
            out.triplets.push_back(std::move(t));
          } catch (const ParseError& e) {
            ++out.summary.failed_items;
            out.diagnostics.push_back({query.qid, to_string(TemplateId::pairwise), e.kind(), ""});
          }
        } else if (present.size() == 1) {
          ++out.summary.failed_items;
          out.diagnostics.push_back({query.qid, to_string(TemplateId::pairwise),
                                     "single_product_query", ""});
        }
        break;
      }
      case AnnotationStrategy::listwise: {
        for (std::size_t begin = 0; begin < present.size(); begin += ctx.batch_cap) {
          const std::size_t end = std::min(begin + ctx.batch_cap, present.size());
          std::span<const std::string> batch(present.data() + begin, end - begin);
          try {
            auto batch_labels = listwise_annotate(query, batch, ctx);
            for (std::size_t i = 0; i < batch.size(); ++i) {
              AnnotationTriplet t{query.qid, batch[i], batch_labels.labels[i]};
              t.explanation = batch_labels.explanation;
              out.triplets.push_back(std::move(t));
            }
          } catch (const ParseError& e) {
            ++out.summary.failed_batches;
            out.summary.failed_items += batch.size();
            out.diagnostics.push_back(
                {query.qid, to_string(TemplateId::listwise_annotate), e.kind(), ""});
          }
        }
        break;
      }
    }
  }
  out.summary.triplets = out.triplets.size();
  out.summary.provider_calls = ctx.provider.calls() - calls_before;
  return out;
}

AgreementReport agreement_rate(std::span<const AnnotationTriplet> llm,
                               std::span<const AnnotationTriplet> human) {
  std::map<std::pair<std::string, std::string>, int> human_labels;
  for (const auto& t : human) human_labels.insert_or_assign({t.qid, t.doc_id}, t.label);

  AgreementReport report;
  std::map<std::pair<std::string, std::string>, int> llm_labels;
  for (const auto& t : llm) llm_labels.insert_or_assign({t.qid, t.doc_id}, t.label);
  for (const auto& [key, llm_label] : llm_labels) {
    auto it = human_labels.find(key);
    if (it == human_labels.end()) continue;
    ++report.overlap;
    if (llm_label == it->second) ++report.matches;
    report.confusion[static_cast<std::size_t>(llm_label)][static_cast<std::size_t>(it->second)]++;
  }
  if (report.overlap == 0) throw DataError("agreement_rate: no overlapping (qid, doc_id) keys");
  report.rate = static_cast<double>(report.matches) / static_cast<double>(report.overlap);
  return report;
}

}  // namespace superb
