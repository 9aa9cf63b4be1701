#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "superb/corpus.hpp"
#include "superb/eval.hpp"
#include "superb/gateway.hpp"
#include "superb/reformulate.hpp"
#include "superb/rerank.hpp"
#include "superb/retrieval.hpp"

namespace superb {

// Experiment configs are JSON: top-level corpus paths, metrics, provider and
// a "pipelines" array of tagged retrieve/reformulate/rerank blocks. Unknown
// keys anywhere are rejected before anything runs.

struct OracleSpec {
  std::string truth_qrels;  // empty: reuse the evaluation qrels
  std::uint64_t seed = 0;
  double corruption_rate = 0.0;
  double position_bias = 0.0;
};

struct ProviderSpec {
  ProviderConfig config;
  OracleSpec oracle;
};

struct RerankSpec {
  std::string strategy;  // pointwise | pointwise-deliberated | pairwise |
                         // listwise-annotate | listwise-rank | sliding-window
  std::size_t depth = 0;  // 0: whole list
  WindowSpec window{};
  std::size_t batch_cap = 25;
};

const std::vector<std::string>& rerank_strategies();

struct PipelineSpec {
  std::string tag;
  std::string retriever = "bm25";  // bm25 | rm3
  std::size_t topk = 50;
  Bm25Params bm25{};
  Rm3Params rm3{};
  std::optional<ReformulationKind> reformulate;
  std::optional<RerankSpec> rerank;
  std::optional<std::uint64_t> shuffle_seed;  // shuffles the reranker input
  std::size_t shuffle_top = 20;
};

struct ExperimentConfig {
  std::filesystem::path products;
  std::filesystem::path queries;
  std::filesystem::path qrels;
  std::size_t max_description_tokens = 0;  // 0: no truncation
  std::vector<MetricSpec> metrics;
  EvalOptions eval_options{};
  std::string baseline;
  double alpha = 0.05;
  std::optional<ProviderSpec> provider;
  std::filesystem::path record_fixtures;  // non-empty: tee provider responses
  std::vector<PipelineSpec> pipelines;

  // Directory the config was loaded from; relative paths resolve against it.
  std::filesystem::path base_dir;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PipelineOutcome {
  std::string tag;
  std::filesystem::path run_file;
  std::filesystem::path metrics_file;
  std::filesystem::path flags_file;
  std::int64_t provider_calls = 0;
  std::size_t diagnostics = 0;
};

struct ExperimentResult {
  std::vector<PipelineOutcome> pipelines;
  std::filesystem::path significance_file;  // empty when < 2 pipelines
  std::filesystem::path summary_file;
  std::string summary_table;  // printable per-pipeline metric means
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

// Builds the provider named by the spec. Oracle providers answer from the
// given corpus; replay/network ignore those arguments.
std::unique_ptr<Provider> make_provider(const ProviderSpec& spec,
                                        std::span<const Query> queries,
                                        const ProductCollection& products, const Qrels& qrels);

// Seeded permutation of each query's top `top_n` entries; ranks and the
// score ladder stay put, doc assignment moves. The tag gets "-shuffle<seed>".
Run shuffle_top(const Run& run, std::uint64_t seed, std::size_t top_n = 20);

std::vector<Run> shuffle_harness(const Run& run, std::span<const std::uint64_t> seeds,
                                 std::size_t top_n = 20);

}  // namespace superb
