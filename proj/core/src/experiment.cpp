#include "superb/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      std::string valid;
      for (const auto& k : allowed) {
        if (!valid.empty()) valid += ", ";
        valid += k;
      }
      throw ValidationError("unknown key '" + key + "' in " + where + " (valid: " + valid + ")");
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

RerankSpec parse_rerank_spec(const json& j) {
  check_keys(j, {"strategy", "depth", "window_size", "window_step", "batch_cap"},
             "pipelines[].rerank");
  RerankSpec out;
  out.strategy = j.at("strategy").get<std::string>();
  const auto& valid = rerank_strategies();
  if (std::find(valid.begin(), valid.end(), out.strategy) == valid.end()) {
    std::string names;
    for (const auto& s : valid) {
      if (!names.empty()) names += ", ";
      names += s;
    }
    throw ValidationError("unknown rerank strategy '" + out.strategy + "' (valid: " + names +
                          ")");
  }
  out.depth = get_or<std::size_t>(j, "depth", 0);
  out.window.size = get_or<int>(j, "window_size", out.window.size);
  out.window.step = get_or<int>(j, "window_step", out.window.step);
  out.batch_cap = get_or<std::size_t>(j, "batch_cap", 25);
  if (out.strategy == "sliding-window") validate(out.window);
  return out;
}

PipelineSpec parse_pipeline_spec(const json& j) {
  check_keys(j,
             {"tag", "retriever", "topk", "k1", "b", "fb_docs", "fb_terms", "fb_orig_weight",
              "reformulate", "rerank", "shuffle_seed", "shuffle_top"},
             "pipelines[]");
  PipelineSpec out;
  out.tag = j.at("tag").get<std::string>();
  if (out.tag.empty()) throw ValidationError("pipeline tag must be non-empty");
  out.retriever = get_or<std::string>(j, "retriever", "bm25");
  if (out.retriever != "bm25" && out.retriever != "rm3") {
    throw ValidationError("unknown retriever '" + out.retriever + "' (valid: bm25, rm3)");
  }
  out.topk = get_or<std::size_t>(j, "topk", 50);
  if (out.topk == 0) throw ValidationError("topk must be >= 1");
  out.bm25.k1 = get_or<double>(j, "k1", out.bm25.k1);
  out.bm25.b = get_or<double>(j, "b", out.bm25.b);
  out.rm3.fb_docs = get_or<std::size_t>(j, "fb_docs", out.rm3.fb_docs);
  out.rm3.fb_terms = get_or<std::size_t>(j, "fb_terms", out.rm3.fb_terms);
  out.rm3.orig_weight = get_or<double>(j, "fb_orig_weight", out.rm3.orig_weight);
  if (j.contains("reformulate")) {
    auto kind = reformulation_kind_from_string(j["reformulate"].get<std::string>());
    if (kind == ReformulationKind::superlative) {
      throw ValidationError(
          "pipeline reformulation must be keyword or attribute; superlative generation changes "
          "the query set");
    }
    out.reformulate = kind;
  }
  if (j.contains("rerank")) out.rerank = parse_rerank_spec(j["rerank"]);
  if (j.contains("shuffle_seed")) out.shuffle_seed = j["shuffle_seed"].get<std::uint64_t>();
  out.shuffle_top = get_or<std::size_t>(j, "shuffle_top", 20);
  return out;
}

ProviderSpec parse_provider_spec(const json& j) {
  check_keys(j,
             {"kind", "endpoint", "model", "credential_env", "retries", "backoff_ms",
              "max_inflight", "oracle"},
             "provider");
  ProviderSpec out;
  out.config.kind = provider_kind_from_string(j.at("kind").get<std::string>());
  out.config.endpoint = get_or<std::string>(j, "endpoint", "");
  out.config.model = get_or<std::string>(j, "model", "");
  out.config.credential_env = get_or<std::string>(j, "credential_env", "");
  out.config.retries = get_or<int>(j, "retries", out.config.retries);
  out.config.backoff_base = std::chrono::milliseconds(
      get_or<std::int64_t>(j, "backoff_ms", out.config.backoff_base.count()));
  out.config.max_inflight = get_or<int>(j, "max_inflight", out.config.max_inflight);
  if (j.contains("oracle")) {
    const auto& o = j["oracle"];
    check_keys(o, {"truth_qrels", "seed", "corruption_rate", "position_bias"},
               "provider.oracle");
    out.oracle.truth_qrels = get_or<std::string>(o, "truth_qrels", "");
    out.oracle.seed = get_or<std::uint64_t>(o, "seed", 0);
    out.oracle.corruption_rate = get_or<double>(o, "corruption_rate", 0.0);
    out.oracle.position_bias = get_or<double>(o, "position_bias", 0.0);
  }
  validate(out.config);
  return out;
}

}  // namespace

const std::vector<std::string>& rerank_strategies() {
  static const std::vector<std::string> strategies = {
      "pointwise",     "pointwise-deliberated", "pairwise",
      "listwise-annotate", "listwise-rank",     "sliding-window"};
  return strategies;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError(path.string() + ": config is not a JSON object");
  }
  check_keys(j,
             {"products", "queries", "qrels", "max_description_tokens", "metrics", "min_rel",
              "gain", "baseline", "alpha", "provider", "record_fixtures", "pipelines"},
             "config");

  ExperimentConfig out;
  out.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  out.products = resolve(out.base_dir, j.at("products").get<std::string>());
  out.queries = resolve(out.base_dir, j.at("queries").get<std::string>());
  out.qrels = resolve(out.base_dir, j.at("qrels").get<std::string>());
  out.max_description_tokens = get_or<std::size_t>(j, "max_description_tokens", 0);

  if (!j.contains("metrics") || !j["metrics"].is_array() || j["metrics"].empty()) {
    throw ValidationError("config needs a non-empty metrics array");
  }
  for (const auto& m : j["metrics"]) out.metrics.push_back(parse_metric_spec(m.get<std::string>()));
  out.eval_options.min_rel = get_or<int>(j, "min_rel", 1);
  out.eval_options.gain = gain_from_string(get_or<std::string>(j, "gain", "linear"));
  out.baseline = get_or<std::string>(j, "baseline", "");
  out.alpha = get_or<double>(j, "alpha", 0.05);
  if (j.contains("provider")) out.provider = parse_provider_spec(j["provider"]);
  if (j.contains("record_fixtures")) {
    out.record_fixtures = resolve(out.base_dir, j["record_fixtures"].get<std::string>());
  }

  if (!j.contains("pipelines") || !j["pipelines"].is_array() || j["pipelines"].empty()) {
    throw ValidationError("config needs a non-empty pipelines array");
  }
  std::set<std::string> tags;
  for (const auto& p : j["pipelines"]) {
    auto spec = parse_pipeline_spec(p);
    if (!tags.insert(spec.tag).second) {
      throw ValidationError("duplicate pipeline tag '" + spec.tag + "'");
    }
    out.pipelines.push_back(std::move(spec));
  }

  // Fail on missing inputs before any provider call.
  for (const auto& file : {out.products, out.queries, out.qrels}) {
    if (!std::filesystem::exists(file)) {
      throw ValidationError("missing input file " + file.string());
    }
  }
  if (out.provider && out.provider->config.kind == ProviderKind::replay &&
      !std::filesystem::exists(resolve(out.base_dir, out.provider->config.endpoint))) {
    throw ValidationError("missing fixtures file " + out.provider->config.endpoint);
  }

  const bool needs_provider = std::any_of(
      out.pipelines.begin(), out.pipelines.end(),
      [](const PipelineSpec& p) { return p.rerank.has_value() || p.reformulate.has_value(); });
  if (needs_provider && !out.provider) {
    throw ValidationError("pipelines use reranking or reformulation but no provider is set");
  }
  return out;
}

std::unique_ptr<Provider> make_provider(const ProviderSpec& spec, std::span<const Query> queries,
                                        const ProductCollection& products, const Qrels& qrels) {
  switch (spec.config.kind) {
    case ProviderKind::network:
      return std::make_unique<NetworkProvider>(spec.config);
    case ProviderKind::replay:
      return std::make_unique<ReplayProvider>(spec.config.endpoint);
    case ProviderKind::oracle: {
      Qrels truth = qrels;
      if (!spec.oracle.truth_qrels.empty()) truth = load_qrels(spec.oracle.truth_qrels);
      OracleOptions options;
      options.seed = spec.oracle.seed;
      options.corruption_rate = spec.oracle.corruption_rate;
      options.position_bias = spec.oracle.position_bias;
      return std::make_unique<OracleProvider>(OracleWorld::from(queries, products, truth),
                                              options);
    }
  }
  throw ValidationError("unreachable provider kind");
}

Run shuffle_top(const Run& run, std::uint64_t seed, std::size_t top_n) {
  std::map<std::string, std::vector<RunEntry>> per_query;
  std::vector<std::string> qid_order;
  for (const auto& e : run) {
    if (!per_query.contains(e.qid)) qid_order.push_back(e.qid);
    per_query[e.qid].push_back(e);
  }
  Run out;
  out.reserve(run.size());
  for (const auto& qid : qid_order) {
    auto entries = per_query[qid];
    std::sort(entries.begin(), entries.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    std::vector<std::string> docs;
    docs.reserve(entries.size());
    for (const auto& e : entries) docs.push_back(e.doc_id);
    const std::size_t head = std::min(top_n, docs.size());
    SplitMix64 rng(seed ^ fnv1a64(qid));
    seeded_shuffle(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(head), rng);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      RunEntry e = entries[i];
      e.doc_id = docs[i];
      e.tag = entries[i].tag + "-shuffle" + std::to_string(seed);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<Run> shuffle_harness(const Run& run, std::span<const std::uint64_t> seeds,
                                 std::size_t top_n) {
  std::vector<Run> out;
  out.reserve(seeds.size());
  for (auto seed : seeds) out.push_back(shuffle_top(run, seed, top_n));
  return out;
}

namespace {

std::vector<ScoredItem> to_items(const std::vector<SearchHit>& hits) {
  std::vector<ScoredItem> items;
  items.reserve(hits.size());
  for (const auto& h : hits) items.push_back({h.doc_id, h.score});
  return items;
}

// Disjoint adjacent pairs over the head, then the rerank sort key.
RerankResult pairwise_rerank_items(const Query& query, std::vector<ScoredItem> items,
                                   RerankContext& ctx, std::size_t depth) {
  const std::size_t head = depth == 0 ? items.size() : std::min(depth, items.size());
  RerankResult out;
  auto label_pair = [&](std::size_t a, std::size_t b, bool keep_first) {
    const Product& p1 = *ctx.products.find(items[a].doc_id);
    const Product& p2 = *ctx.products.find(items[b].doc_id);
    try {
      auto pair = pairwise_annotate(query, p1, p2, ctx);
      if (keep_first) items[a].label = pair.first;
      items[b].label = pair.second;
    } catch (const ParseError& e) {
      if (keep_first) {
        items[a].label = 0;
        items[a].flagged = true;
      }
      items[b].label = 0;
      items[b].flagged = true;
      out.diagnostics.push_back({query.qid, to_string(TemplateId::pairwise), e.kind(), ""});
    }
  };
  for (std::size_t i = 0; i + 1 < head; i += 2) label_pair(i, i + 1, true);
  if (head % 2 == 1 && head > 1) label_pair(head - 2, head - 1, false);
  sort_reranked_head(items, head);
  out.items = std::move(items);
  return out;
}

RerankResult listwise_annotate_rerank_items(const Query& query, std::vector<ScoredItem> items,
                                            RerankContext& ctx, std::size_t depth) {
  const std::size_t head = depth == 0 ? items.size() : std::min(depth, items.size());
  RerankResult out;
  for (std::size_t begin = 0; begin < head; begin += ctx.batch_cap) {
    const std::size_t end = std::min(begin + ctx.batch_cap, head);
    std::vector<std::string> docs;
    docs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) docs.push_back(items[i].doc_id);
    try {
      auto batch = listwise_annotate(query, docs, ctx);
      for (std::size_t i = begin; i < end; ++i) items[i].label = batch.labels[i - begin];
    } catch (const ParseError& e) {
      for (std::size_t i = begin; i < end; ++i) {
        items[i].label = 0;
        items[i].flagged = true;
      }
      out.diagnostics.push_back(
          {query.qid, to_string(TemplateId::listwise_annotate), e.kind(), ""});
    }
  }
  sort_reranked_head(items, head);
  out.items = std::move(items);
  return out;
}

RerankResult listwise_rank_items(const Query& query, std::vector<ScoredItem> items,
                                 RerankContext& ctx, std::size_t depth) {
  const std::size_t head = depth == 0 ? items.size() : std::min(depth, items.size());
  std::vector<ScoredItem> slice(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(head));
  auto result = listwise_rerank(query, std::move(slice), ctx);
  std::move(result.items.begin(), result.items.end(), items.begin());
  result.items = std::move(items);
  return result;
}

struct PipelineRun {
  Run run;
  std::vector<Diagnostic> diagnostics;
};

PipelineRun execute_pipeline(const PipelineSpec& spec, const InvertedIndex& index,
                             const ProductCollection& products, std::span<const Query> queries,
                             Provider* provider, AttributeCache& attr_cache) {
  PipelineRun out;
  for (const auto& query : queries) {
    std::string retrieval_text = query.text;
    if (spec.reformulate) {
      RerankContext ctx{products, *provider};
      if (*spec.reformulate == ReformulationKind::keyword) {
        retrieval_text = keyword_expand(query, *provider).expanded;
      } else {
        auto attrs = generate_attributes(query, ctx, attr_cache);
        retrieval_text = attribute_expand(query, attrs).expanded;
      }
    }

    auto weighted = WeightedQuery::from_text(retrieval_text);
    if (weighted.terms.empty()) {
      out.diagnostics.push_back({query.qid, "", "empty_query", ""});
      continue;
    }
    auto hits = bm25_search(index, weighted, spec.topk, spec.bm25);
    if (spec.retriever == "rm3") {
      auto expanded = rm3_expand(index, weighted, hits, spec.rm3);
      if (expanded.expanded) hits = bm25_search(index, expanded.query, spec.topk, spec.bm25);
    }
    if (hits.empty()) continue;

    auto items = to_items(hits);
    bool reordered = false;
    if (spec.shuffle_seed) {
      const std::size_t head = std::min(spec.shuffle_top, items.size());
      SplitMix64 rng(*spec.shuffle_seed ^ fnv1a64(query.qid));
      seeded_shuffle(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(head), rng);
      reordered = true;
    }

    if (spec.rerank) {
      // Prompts rank for the user's query; retrieval expansion stays
      // retrieval-side.
      RerankContext ctx{products, *provider};
      ctx.batch_cap = spec.rerank->batch_cap;
      RerankResult reranked;
      const auto& strategy = spec.rerank->strategy;
      if (strategy == "pointwise") {
        reranked = pointwise_rerank(query, std::move(items), std::nullopt, ctx,
                                    spec.rerank->depth);
      } else if (strategy == "pointwise-deliberated") {
        auto attrs = generate_attributes(query, ctx, attr_cache);
        reranked = pointwise_rerank(query, std::move(items), attrs, ctx, spec.rerank->depth);
      } else if (strategy == "pairwise") {
        reranked = pairwise_rerank_items(query, std::move(items), ctx, spec.rerank->depth);
      } else if (strategy == "listwise-annotate") {
        reranked = listwise_annotate_rerank_items(query, std::move(items), ctx,
                                                  spec.rerank->depth);
      } else if (strategy == "listwise-rank") {
        reranked = listwise_rank_items(query, std::move(items), ctx, spec.rerank->depth);
      } else {  // sliding-window
        reranked = sliding_window_rerank(query, std::move(items), spec.rerank->window, ctx);
        if (reranked.aborted) {
          throw ProviderError(ProviderError::Kind::retries_exhausted,
                              "sliding window aborted for qid " + query.qid);
        }
      }
      items = std::move(reranked.items);
      for (auto& d : reranked.diagnostics) out.diagnostics.push_back(std::move(d));
      reordered = true;
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
      RunEntry e;
      e.qid = query.qid;
      e.doc_id = items[i].doc_id;
      e.rank = static_cast<int>(i) + 1;
      // Reordered lists get a rank ladder; plain retrieval keeps real scores.
      e.score = reordered ? static_cast<double>(items.size() - i) : items[i].first_stage_score;
      e.tag = spec.tag;
      out.run.push_back(std::move(e));
    }
  }
  return out;
}

void write_flags_file(const std::filesystem::path& path, std::span<const Diagnostic> diagnostics) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& d : diagnostics) {
    json j;
    j["qid"] = d.qid;
    j["template"] = d.template_id;
    j["kind"] = d.kind;
    j["prompt_hash"] = d.prompt_hash;
    out << j.dump() << '\n';
  }
}

std::string format_summary_table(const std::vector<PipelineSpec>& pipelines,
                                 const std::vector<std::pair<std::string, EvalRunResult>>& results) {
  std::size_t tag_width = 8;
  for (const auto& p : pipelines) tag_width = std::max(tag_width, p.tag.size());
  std::ostringstream table;
  table << std::left;
  table.width(static_cast<std::streamsize>(tag_width + 2));
  table << "pipeline";
  if (!results.empty()) {
    for (const auto& report : results.front().second.reports) {
      table << ' ';
      table.width(9);
      table << report.metric;
    }
  }
  table << '\n';
  for (const auto& [tag, result] : results) {
    table.width(static_cast<std::streamsize>(tag_width + 2));
    table << tag;
    for (const auto& report : result.reports) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.4f", report.mean);
      table << ' ';
      table.width(9);
      table << buf;
    }
    table << '\n';
  }
  return table.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  auto products = load_products(config.products);
  if (config.max_description_tokens > 0) {
    ProductCollection truncated;
    for (const auto& p : products) {
      truncated.add(truncate_description(p, config.max_description_tokens));
    }
    products = std::move(truncated);
  }
  auto queries = load_queries(config.queries);
  auto qrels = load_qrels(config.qrels);
  auto index = InvertedIndex::build(products);

  std::unique_ptr<Provider> inner_provider;
  std::shared_ptr<ReplayProvider> recording_store;
  std::unique_ptr<Provider> recorder;
  Provider* provider = nullptr;
  if (config.provider) {
    inner_provider = make_provider(*config.provider, queries, products, qrels);
    provider = inner_provider.get();
    if (!config.record_fixtures.empty()) {
      recording_store = std::make_shared<ReplayProvider>(config.record_fixtures);
      recorder = std::make_unique<RecordingProvider>(*inner_provider, recording_store);
      provider = recorder.get();
    }
  }

  ExperimentResult result;
  std::vector<std::pair<std::string, EvalRunResult>> tagged_results;
  AttributeCache attr_cache;
  for (const auto& spec : config.pipelines) {
    const std::int64_t calls_before = provider == nullptr ? 0 : provider->calls();
    auto pipeline = execute_pipeline(spec, index, products, queries,
                                     provider, attr_cache);
    PipelineOutcome outcome;
    outcome.tag = spec.tag;
    outcome.run_file = out_dir / (spec.tag + ".run");
    outcome.metrics_file = out_dir / (spec.tag + ".metrics.csv");
    outcome.flags_file = out_dir / (spec.tag + ".flags.jsonl");
    outcome.provider_calls = provider == nullptr ? 0 : provider->calls() - calls_before;
    outcome.diagnostics = pipeline.diagnostics.size();
    write_run(outcome.run_file, pipeline.run);
    write_flags_file(outcome.flags_file, pipeline.diagnostics);

    auto eval = evaluate_run(pipeline.run, qrels, config.metrics, config.eval_options);
    write_metrics_csv(outcome.metrics_file, eval);
    tagged_results.emplace_back(spec.tag, std::move(eval));
    result.pipelines.push_back(std::move(outcome));
  }

  if (!config.baseline.empty() && config.pipelines.size() >= 2) {
    auto rows = significance_against_baseline(tagged_results, config.baseline, config.alpha);
    result.significance_file = out_dir / "significance.csv";
    write_significance_csv(result.significance_file, rows);
  }

  json summary;
  summary["baseline"] = config.baseline;
  summary["pipelines"] = json::array();
  for (const auto& outcome : result.pipelines) {
    json p;
    p["tag"] = outcome.tag;
    p["run"] = outcome.run_file.filename().string();
    p["provider_calls"] = outcome.provider_calls;
    p["diagnostics"] = outcome.diagnostics;
    summary["pipelines"].push_back(std::move(p));
  }
  result.summary_file = out_dir / "summary.json";
  {
    std::ofstream out(result.summary_file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + result.summary_file.string());
    out << summary.dump(2) << '\n';
  }
  result.summary_table = format_summary_table(config.pipelines, tagged_results);
  return result;
}

}  // namespace superb
