// superb: retrieval, LLM reranking, annotation, and evaluation pipelines for
// implicit superlative product queries.
//
// Exit codes: 0 success, 1 validation error, 2 provider failure, 3 data error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "superb/annotate.hpp"
#include "superb/corpus.hpp"
#include "superb/errors.hpp"
#include "superb/eval.hpp"
#include "superb/experiment.hpp"
#include "superb/gateway.hpp"
#include "superb/prompt.hpp"
#include "superb/reformulate.hpp"
#include "superb/rerank.hpp"
#include "superb/retrieval.hpp"
#include "superb/util.hpp"

namespace {

using namespace superb;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;
constexpr int kExitData = 3;

struct ProviderCli {
  std::string kind = "replay";
  std::string endpoint;
  std::string model;
  std::string credential_env;
  int retries = 2;
  std::int64_t backoff_ms = 200;
  int max_inflight = 4;
  std::string oracle_truth;
  std::uint64_t oracle_seed = 0;
  double corruption_rate = 0.0;
  double position_bias = 0.0;
  std::string record_fixtures;
  std::string templates_dir;

  void attach(CLI::App* app) {
    app->add_option("--provider", kind, "Provider kind: network, replay, or oracle")
        ->check(CLI::IsMember({"network", "replay", "oracle"}));
    app->add_option("--endpoint", endpoint,
                    "Chat-completions URL (network) or fixtures file (replay)");
    app->add_option("--model", model, "Model name sent to the endpoint");
    app->add_option("--credential-env", credential_env,
                    "Environment variable holding the API key");
    app->add_option("--retries", retries, "Transient-failure retries")->check(CLI::NonNegativeNumber);
    app->add_option("--backoff-ms", backoff_ms, "Exponential backoff base in ms");
    app->add_option("--max-inflight", max_inflight, "Concurrent request bound")
        ->check(CLI::PositiveNumber);
    app->add_option("--oracle-truth", oracle_truth, "Qrels file the oracle answers from");
    app->add_option("--oracle-seed", oracle_seed, "Oracle determinism seed");
    app->add_option("--corruption-rate", corruption_rate, "Oracle corruption rate in [0,1]");
    app->add_option("--position-bias", position_bias, "Oracle listwise position bias");
    app->add_option("--record-fixtures", record_fixtures,
                    "Record every response into this fixtures file");
    app->add_option("--templates", templates_dir, "Directory of prompt template overrides");
  }

  ProviderSpec spec() const {
    ProviderSpec out;
    out.config.kind = provider_kind_from_string(kind);
    out.config.endpoint = endpoint;
    out.config.model = model;
    out.config.credential_env = credential_env;
    out.config.retries = retries;
    out.config.backoff_base = std::chrono::milliseconds(backoff_ms);
    out.config.max_inflight = max_inflight;
    out.oracle.truth_qrels = oracle_truth;
    out.oracle.seed = oracle_seed;
    out.oracle.corruption_rate = corruption_rate;
    out.oracle.position_bias = position_bias;
    return out;
  }
};

struct ProviderBundle {
  std::unique_ptr<Provider> inner;
  std::shared_ptr<ReplayProvider> store;
  std::unique_ptr<Provider> recorder;
  TemplateSet templates = TemplateSet::defaults();

  Provider& active() { return recorder ? *recorder : *inner; }
};

ProviderBundle build_provider(const ProviderCli& cli, std::span<const Query> queries,
                              const ProductCollection& products, const Qrels& qrels) {
  ProviderBundle bundle;
  bundle.inner = make_provider(cli.spec(), queries, products, qrels);
  if (!cli.record_fixtures.empty()) {
    bundle.store = std::make_shared<ReplayProvider>(cli.record_fixtures);
    bundle.recorder = std::make_unique<RecordingProvider>(*bundle.inner, bundle.store);
  }
  if (!cli.templates_dir.empty()) bundle.templates.load_overrides(cli.templates_dir);
  return bundle;
}

std::vector<MetricSpec> parse_metric_list(const std::string& csv) {
  std::vector<MetricSpec> out;
  std::size_t begin = 0;
  while (begin <= csv.size()) {
    auto comma = csv.find(',', begin);
    auto token = trim(csv.substr(begin, comma == std::string::npos ? std::string::npos
                                                                   : comma - begin));
    if (!token.empty()) out.push_back(parse_metric_spec(token));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  if (out.empty()) throw ValidationError("no metrics given");
  return out;
}

Run hits_to_run(const std::string& qid, const std::vector<SearchHit>& hits,
                const std::string& tag) {
  Run run;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    run.push_back({qid, hits[i].doc_id, static_cast<int>(i) + 1, hits[i].score, tag});
  }
  return run;
}

// --- subcommand bodies ----------------------------------------------------

int cmd_index(const std::string& products_path, std::size_t max_tokens,
              const std::string& output) {
  auto products = load_products(products_path);
  if (max_tokens > 0) {
    ProductCollection truncated;
    for (const auto& p : products) truncated.add(truncate_description(p, max_tokens));
    products = std::move(truncated);
  }
  auto index = InvertedIndex::build(products);
  index.save(output);
  std::cout << "indexed " << index.doc_count() << " products, " << index.total_tokens()
            << " tokens -> " << output << "\n";
  return kExitOk;
}

int cmd_search(const std::string& index_path, const std::string& queries_path, std::size_t topk,
               const Bm25Params& bm25, bool use_rm3, const Rm3Params& rm3,
               const std::string& tag, const std::string& output) {
  auto index = InvertedIndex::load(index_path);
  auto queries = load_queries(queries_path);
  Run run;
  for (const auto& q : queries) {
    auto weighted = WeightedQuery::from_text(q.text);
    if (weighted.terms.empty()) {
      std::cerr << "warning: query " << q.qid << " is empty after tokenization\n";
      continue;
    }
    auto hits = bm25_search(index, weighted, topk, bm25);
    if (use_rm3) {
      auto expanded = rm3_expand(index, weighted, hits, rm3);
      if (expanded.expanded) hits = bm25_search(index, expanded.query, topk, bm25);
    }
    auto part = hits_to_run(q.qid, hits, tag);
    run.insert(run.end(), part.begin(), part.end());
  }
  write_run(output, run);
  std::cout << "wrote " << run.size() << " entries -> " << output << "\n";
  return kExitOk;
}

int cmd_reformulate(const std::string& kind_name, const std::string& queries_path,
                    const ProviderCli& provider_cli, const std::string& output,
                    const std::string& sidecar) {
  auto kind = reformulation_kind_from_string(kind_name);
  auto queries = load_queries(queries_path);
  ProductCollection no_products;
  Qrels no_qrels;
  auto bundle = build_provider(provider_cli, queries, no_products, no_qrels);

  std::vector<Query> out_queries;
  std::ofstream side;
  if (!sidecar.empty()) {
    side.open(sidecar, std::ios::trunc);
    if (!side) throw DataError("cannot write " + sidecar);
  }
  auto emit_sidecar = [&](const nlohmann::json& j) {
    if (side.is_open()) side << j.dump() << '\n';
  };

  AttributeCache attr_cache;
  for (const auto& q : queries) {
    switch (kind) {
      case ReformulationKind::superlative: {
        auto generated = generate_superlatives(q.text, bundle.active(), bundle.templates);
        for (std::size_t i = 0; i < generated.size(); ++i) {
          out_queries.push_back({q.qid + "-s" + std::to_string(i + 1), generated[i]});
        }
        nlohmann::json j;
        j["qid"] = q.qid;
        j["kind"] = "superlative";
        j["original"] = q.text;
        j["generated"] = generated;
        emit_sidecar(j);
        break;
      }
      case ReformulationKind::keyword: {
        auto r = keyword_expand(q, bundle.active());
        out_queries.push_back({q.qid, r.expanded});
        nlohmann::json j;
        j["qid"] = q.qid;
        j["kind"] = "keyword";
        j["original"] = r.original;
        j["expanded"] = r.expanded;
        j["keywords"] = r.provenance;
        j["flagged"] = r.flagged;
        emit_sidecar(j);
        break;
      }
      case ReformulationKind::attribute: {
        RerankContext ctx{no_products, bundle.active(), bundle.templates};
        auto attrs = generate_attributes(q, ctx, attr_cache);
        auto r = attribute_expand(q, attrs);
        out_queries.push_back({q.qid, r.expanded});
        nlohmann::json j;
        j["qid"] = q.qid;
        j["kind"] = "attribute";
        j["original"] = r.original;
        j["expanded"] = r.expanded;
        j["attributes"] = r.provenance;
        emit_sidecar(j);
        break;
      }
    }
  }
  write_queries(output, out_queries);
  std::cout << "wrote " << out_queries.size() << " queries -> " << output << "\n";
  return kExitOk;
}

int cmd_rerank(const std::string& run_path, const std::string& products_path,
               const std::string& queries_path, const std::string& strategy, std::size_t depth,
               int window_size, int window_step, std::size_t batch_cap,
               const ProviderCli& provider_cli, const std::string& tag_override,
               const std::string& output, const std::string& sidecar) {
  auto run = load_run(run_path);
  auto products = load_products(products_path);
  auto queries = load_queries(queries_path);
  Qrels truth;
  if (!provider_cli.oracle_truth.empty()) truth = load_qrels(provider_cli.oracle_truth);
  auto bundle = build_provider(provider_cli, queries, products, truth);

  std::map<std::string, const Query*> query_by_qid;
  for (const auto& q : queries) query_by_qid[q.qid] = &q;

  std::map<std::string, std::vector<RunEntry>> grouped;
  std::vector<std::string> qid_order;
  for (const auto& e : run) {
    if (!grouped.contains(e.qid)) qid_order.push_back(e.qid);
    grouped[e.qid].push_back(e);
  }

  RerankContext ctx{products, bundle.active(), bundle.templates};
  ctx.batch_cap = batch_cap;
  Run out_run;
  std::vector<Diagnostic> diagnostics;
  AttributeCache attr_cache;
  for (const auto& qid : qid_order) {
    auto it = query_by_qid.find(qid);
    if (it == query_by_qid.end()) {
      throw DataError("run qid '" + qid + "' missing from " + queries_path);
    }
    const Query& query = *it->second;
    auto& entries = grouped[qid];
    std::sort(entries.begin(), entries.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    std::vector<ScoredItem> items;
    items.reserve(entries.size());
    for (const auto& e : entries) items.push_back({e.doc_id, e.score});

    RerankResult reranked;
    if (strategy == "pointwise") {
      reranked = pointwise_rerank(query, std::move(items), std::nullopt, ctx, depth);
    } else if (strategy == "pointwise-deliberated") {
      auto attrs = generate_attributes(query, ctx, attr_cache);
      reranked = pointwise_rerank(query, std::move(items), attrs, ctx, depth);
    } else if (strategy == "listwise-rank") {
      const std::size_t head = depth == 0 ? items.size() : std::min(depth, items.size());
      std::vector<ScoredItem> slice(items.begin(),
                                    items.begin() + static_cast<std::ptrdiff_t>(head));
      auto result = listwise_rerank(query, std::move(slice), ctx);
      std::move(result.items.begin(), result.items.end(), items.begin());
      reranked.items = std::move(items);
      reranked.diagnostics = std::move(result.diagnostics);
    } else if (strategy == "sliding-window") {
      reranked = sliding_window_rerank(query, std::move(items), {window_size, window_step}, ctx);
      if (reranked.aborted) {
        throw ProviderError(ProviderError::Kind::retries_exhausted,
                            "sliding window aborted for qid " + qid);
      }
    } else {
      throw ValidationError("rerank subcommand supports pointwise, pointwise-deliberated, "
                            "listwise-rank, and sliding-window strategies");
    }
    for (auto& d : reranked.diagnostics) diagnostics.push_back(std::move(d));

    const std::string tag = tag_override.empty() ? entries.front().tag + "-" + strategy
                                                 : tag_override;
    for (std::size_t i = 0; i < reranked.items.size(); ++i) {
      out_run.push_back({qid, reranked.items[i].doc_id, static_cast<int>(i) + 1,
                         static_cast<double>(reranked.items.size() - i), tag});
    }
  }
  write_run(output, out_run);
  if (!sidecar.empty()) {
    std::ofstream side(sidecar, std::ios::trunc);
    if (!side) throw DataError("cannot write " + sidecar);
    for (const auto& d : diagnostics) {
      nlohmann::json j;
      j["qid"] = d.qid;
      j["template"] = d.template_id;
      j["kind"] = d.kind;
      j["prompt_hash"] = d.prompt_hash;
      side << j.dump() << '\n';
    }
  }
  std::cout << "reranked " << qid_order.size() << " queries -> " << output << " ("
            << diagnostics.size() << " flags)\n";
  return kExitOk;
}

int cmd_annotate(const std::string& queries_path, const std::string& products_path,
                 const std::string& qrels_path, const std::string& strategy_name, int min_exact,
                 std::size_t batch_cap, const ProviderCli& provider_cli,
                 const std::string& output, const std::string& summary_path,
                 const std::string& human_path, const std::string& triplets_in) {
  nlohmann::json summary;

  if (!triplets_in.empty()) {
    if (human_path.empty()) {
      throw ValidationError("--triplets-in needs --human to compute agreement");
    }
    auto llm = load_triplets(triplets_in);
    auto human = load_triplets(human_path);
    auto report = agreement_rate(llm, human);
    summary["agreement"] = {{"overlap", report.overlap},
                            {"matches", report.matches},
                            {"rate", report.rate}};
    std::cout << "agreement " << report.matches << "/" << report.overlap << " = "
              << format_double(report.rate) << "\n";
  } else {
    auto queries = load_queries(queries_path);
    auto products = load_products(products_path);
    auto qrels = load_qrels(qrels_path);
    auto strategy = annotation_strategy_from_string(strategy_name);
    auto eligible = select_annotation_queries(queries, qrels, min_exact);
    Qrels truth = qrels;
    if (!provider_cli.oracle_truth.empty()) truth = load_qrels(provider_cli.oracle_truth);
    auto bundle = build_provider(provider_cli, queries, products, truth);
    RerankContext ctx{products, bundle.active(), bundle.templates};
    ctx.batch_cap = batch_cap;

    auto result = build_triplets(eligible, products, qrels, strategy, ctx);
    write_triplets(output, result.triplets);
    summary["strategy"] = strategy_name;
    summary["queries"] = result.summary.queries;
    summary["products"] = result.summary.products;
    summary["triplets"] = result.summary.triplets;
    summary["failed_items"] = result.summary.failed_items;
    summary["failed_batches"] = result.summary.failed_batches;
    summary["provider_calls"] = result.summary.provider_calls;
    if (!human_path.empty()) {
      auto human = load_triplets(human_path);
      auto report = agreement_rate(result.triplets, human);
      summary["agreement"] = {{"overlap", report.overlap},
                              {"matches", report.matches},
                              {"rate", report.rate}};
    }
    auto dist = label_distribution(result.triplets);
    summary["label_distribution"] = {{"0", dist[0]}, {"1", dist[1]}, {"2", dist[2]},
                                     {"3", dist[3]}};
    std::cout << "wrote " << result.triplets.size() << " triplets -> " << output << "\n";
  }

  if (!summary_path.empty()) {
    std::ofstream out(summary_path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + summary_path);
    out << summary.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_eval(const std::string& run_path, const std::string& qrels_path,
             const std::string& metrics_csv, int min_rel, const std::string& gain_name,
             const std::string& output) {
  auto run = load_run(run_path);
  auto qrels = load_qrels(qrels_path);
  auto metrics = parse_metric_list(metrics_csv);
  EvalOptions options;
  options.min_rel = min_rel;
  options.gain = gain_from_string(gain_name);
  auto result = evaluate_run(run, qrels, metrics, options);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
  if (!output.empty()) write_metrics_csv(output, result);
  for (const auto& report : result.reports) {
    std::cout << report.metric << " " << format_double(report.mean) << "\n";
  }
  return kExitOk;
}

int cmd_significance(const std::vector<std::string>& run_paths, const std::string& qrels_path,
                     const std::string& baseline, const std::string& metrics_csv, int min_rel,
                     const std::string& gain_name, double alpha, const std::string& output) {
  auto qrels = load_qrels(qrels_path);
  auto metrics = parse_metric_list(metrics_csv);
  EvalOptions options;
  options.min_rel = min_rel;
  options.gain = gain_from_string(gain_name);

  std::vector<std::pair<std::string, EvalRunResult>> tagged;
  for (const auto& path : run_paths) {
    auto run = load_run(path);
    if (run.empty()) throw DataError("empty run file " + path);
    tagged.emplace_back(run.front().tag, evaluate_run(run, qrels, metrics, options));
  }
  auto rows = significance_against_baseline(tagged, baseline, alpha);
  write_significance_csv(output, rows);
  for (const auto& row : rows) {
    std::cout << row.metric << " " << row.contender << " vs " << row.baseline << ": t="
              << format_double(row.t) << " p=" << format_double(row.p_raw) << " holm="
              << format_double(row.p_adjusted) << (row.significant ? " α" : "") << "\n";
  }
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  auto config = load_experiment_config(config_path);
  auto result = run_experiment(config, out_dir);
  std::cout << result.summary_table;
  if (!result.significance_file.empty()) {
    std::cout << "significance -> " << result.significance_file.string() << "\n";
  }
  return kExitOk;
}

int cmd_shuffle(const std::string& run_path, const std::string& seeds_csv, std::size_t top,
                const std::string& out_dir) {
  auto run = load_run(run_path);
  if (run.empty()) throw DataError("empty run file " + run_path);
  std::vector<std::uint64_t> seeds;
  std::size_t begin = 0;
  while (begin <= seeds_csv.size()) {
    auto comma = seeds_csv.find(',', begin);
    auto token = trim(seeds_csv.substr(begin, comma == std::string::npos ? std::string::npos
                                                                         : comma - begin));
    if (!token.empty()) seeds.push_back(std::stoull(token));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  if (seeds.empty()) throw ValidationError("no seeds given");

  std::filesystem::create_directories(out_dir);
  auto shuffled = shuffle_harness(run, seeds, top);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    auto path = std::filesystem::path(out_dir) /
                (shuffled[i].front().tag + ".run");
    write_run(path, shuffled[i]);
    std::cout << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranking and annotation pipelines for implicit superlative product queries"};
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build and save an inverted index");
  std::string products_path, output, queries_path, index_path, qrels_path;
  std::size_t max_desc_tokens = 0;
  index_cmd->add_option("--products", products_path, "products.jsonl")->required();
  index_cmd->add_option("--max-desc-tokens", max_desc_tokens,
                        "Truncate descriptions to this many tokens (0 = off)");
  index_cmd->add_option("--output,-o", output, "Index file")->required();

  // search
  auto* search_cmd = app.add_subcommand("search", "BM25 (optionally RM3) retrieval");
  std::size_t topk = 50;
  Bm25Params bm25;
  Rm3Params rm3;
  bool use_rm3 = false;
  std::string tag = "bm25";
  search_cmd->add_option("--index", index_path, "Index file")->required();
  search_cmd->add_option("--queries", queries_path, "queries.tsv")->required();
  search_cmd->add_option("--topk", topk, "Results per query");
  search_cmd->add_option("--k1", bm25.k1, "BM25 k1");
  search_cmd->add_option("--b", bm25.b, "BM25 b");
  search_cmd->add_flag("--rm3", use_rm3, "Apply RM3 expansion");
  search_cmd->add_option("--fb-docs", rm3.fb_docs, "RM3 feedback docs");
  search_cmd->add_option("--fb-terms", rm3.fb_terms, "RM3 feedback terms");
  search_cmd->add_option("--fb-orig-weight", rm3.orig_weight, "RM3 original-query weight");
  search_cmd->add_option("--tag", tag, "Run tag");
  search_cmd->add_option("--output,-o", output, "Run file")->required();

  // reformulate
  auto* reformulate_cmd = app.add_subcommand("reformulate", "LLM query reformulation");
  std::string kind = "keyword";
  std::string sidecar;
  ProviderCli reformulate_provider;
  reformulate_cmd->add_option("--kind", kind, "superlative, keyword, or attribute")
      ->check(CLI::IsMember({"superlative", "keyword", "attribute"}));
  reformulate_cmd->add_option("--queries", queries_path, "queries.tsv")->required();
  reformulate_cmd->add_option("--output,-o", output, "Reformulated queries.tsv")->required();
  reformulate_cmd->add_option("--sidecar", sidecar, "Provenance jsonl");
  reformulate_provider.attach(reformulate_cmd);

  // rerank
  auto* rerank_cmd = app.add_subcommand("rerank", "LLM reranking of a run file");
  std::string run_path, strategy = "listwise-rank", tag_override;
  std::size_t depth = 0, batch_cap = 25;
  int window_size = 20, window_step = 10;
  ProviderCli rerank_provider;
  rerank_cmd->add_option("--run", run_path, "First-stage run file")->required();
  rerank_cmd->add_option("--products", products_path, "products.jsonl")->required();
  rerank_cmd->add_option("--queries", queries_path, "queries.tsv")->required();
  rerank_cmd->add_option("--strategy", strategy, "Rerank strategy")
      ->check(CLI::IsMember({"pointwise", "pointwise-deliberated", "listwise-rank",
                             "sliding-window"}));
  rerank_cmd->add_option("--depth", depth, "Rerank the top this many (0 = all)");
  rerank_cmd->add_option("--window-size", window_size, "Sliding window size");
  rerank_cmd->add_option("--window-step", window_step, "Sliding window step");
  rerank_cmd->add_option("--batch-cap", batch_cap, "Listwise annotation batch cap");
  rerank_cmd->add_option("--tag", tag_override, "Output run tag");
  rerank_cmd->add_option("--output,-o", output, "Reranked run file")->required();
  rerank_cmd->add_option("--sidecar", sidecar, "Flags/repairs jsonl");
  rerank_provider.attach(rerank_cmd);

  // annotate
  auto* annotate_cmd = app.add_subcommand("annotate", "Build (query, product, label) triplets");
  std::string annotate_strategy = "pointwise-deliberated", summary_path, human_path, triplets_in;
  int min_exact = 5;
  ProviderCli annotate_provider;
  annotate_cmd->add_option("--queries", queries_path, "queries.tsv");
  annotate_cmd->add_option("--products", products_path, "products.jsonl");
  annotate_cmd->add_option("--qrels", qrels_path, "Source (ESCI) qrels");
  annotate_cmd->add_option("--strategy", annotate_strategy, "Annotation strategy")
      ->check(CLI::IsMember({"pointwise", "pointwise-deliberated", "pairwise", "listwise"}));
  annotate_cmd->add_option("--min-exact", min_exact, "Minimum Exact-labeled products");
  annotate_cmd->add_option("--batch-cap", batch_cap, "Listwise batch cap");
  annotate_cmd->add_option("--output,-o", output, "triplets.jsonl");
  annotate_cmd->add_option("--summary", summary_path, "summary.json");
  annotate_cmd->add_option("--human", human_path, "Human triplets for agreement");
  annotate_cmd->add_option("--triplets-in", triplets_in,
                           "Existing triplets; skip building, only compute agreement");
  annotate_provider.attach(annotate_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Graded-relevance metrics for a run");
  std::string metrics_csv = "P@5,P@10,P@20,nDCG@5,nDCG@10,nDCG@20";
  std::string gain_name = "linear";
  int min_rel = 1;
  eval_cmd->add_option("--run", run_path, "Run file")->required();
  eval_cmd->add_option("--qrels", qrels_path, "Qrels file")->required();
  eval_cmd->add_option("--metrics", metrics_csv, "Comma-separated metric list");
  eval_cmd->add_option("--min-rel", min_rel, "Binarization threshold");
  eval_cmd->add_option("--gain", gain_name, "nDCG gain: linear or exponential");
  eval_cmd->add_option("--output,-o", output, "Metrics CSV");

  // significance
  auto* sig_cmd = app.add_subcommand("significance", "Paired t-tests with Holm correction");
  std::vector<std::string> run_paths;
  std::string baseline;
  double alpha = 0.05;
  sig_cmd->add_option("--runs", run_paths, "Run files (baseline included)")->required();
  sig_cmd->add_option("--qrels", qrels_path, "Qrels file")->required();
  sig_cmd->add_option("--baseline", baseline, "Baseline run tag")->required();
  sig_cmd->add_option("--metrics", metrics_csv, "Comma-separated metric list");
  sig_cmd->add_option("--min-rel", min_rel, "Binarization threshold");
  sig_cmd->add_option("--gain", gain_name, "nDCG gain: linear or exponential");
  sig_cmd->add_option("--alpha", alpha, "Family-wise error level");
  sig_cmd->add_option("--output,-o", output, "Significance CSV")->required();

  // experiment
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a pipeline-ladder config");
  std::string config_path, out_dir = "out";
  experiment_cmd->add_option("--config,-c", config_path, "Experiment JSON config")->required();
  experiment_cmd->add_option("--out-dir,-o", out_dir, "Output directory");

  // shuffle
  auto* shuffle_cmd = app.add_subcommand("shuffle", "Seeded top-k shuffles of a run");
  std::string seeds_csv = "1,2,3";
  std::size_t shuffle_top_n = 20;
  shuffle_cmd->add_option("--run", run_path, "Run file")->required();
  shuffle_cmd->add_option("--seeds", seeds_csv, "Comma-separated seeds");
  shuffle_cmd->add_option("--top", shuffle_top_n, "Shuffle the top this many");
  shuffle_cmd->add_option("--out-dir,-o", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (index_cmd->parsed()) return cmd_index(products_path, max_desc_tokens, output);
    if (search_cmd->parsed()) {
      return cmd_search(index_path, queries_path, topk, bm25, use_rm3, rm3, tag, output);
    }
    if (reformulate_cmd->parsed()) {
      return cmd_reformulate(kind, queries_path, reformulate_provider, output, sidecar);
    }
    if (rerank_cmd->parsed()) {
      return cmd_rerank(run_path, products_path, queries_path, strategy, depth, window_size,
                        window_step, batch_cap, rerank_provider, tag_override, output, sidecar);
    }
    if (annotate_cmd->parsed()) {
      return cmd_annotate(queries_path, products_path, qrels_path, annotate_strategy, min_exact,
                          batch_cap, annotate_provider, output, summary_path, human_path,
                          triplets_in);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(run_path, qrels_path, metrics_csv, min_rel, gain_name, output);
    }
    if (sig_cmd->parsed()) {
      return cmd_significance(run_paths, qrels_path, baseline, metrics_csv, min_rel, gain_name,
                              alpha, output);
    }
    if (experiment_cmd->parsed()) return cmd_experiment(config_path, out_dir);
    if (shuffle_cmd->parsed()) return cmd_shuffle(run_path, seeds_csv, shuffle_top_n, out_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
