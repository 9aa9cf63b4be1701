#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "superb/corpus.hpp"

namespace superb {

enum class Gain { linear, exponential };

Gain gain_from_string(const std::string& name);
std::string to_string(Gain gain);

struct MetricSpec {
  enum class Kind { precision, ndcg, map, recall };
  Kind kind = Kind::precision;
  int k = 0;  // 0 for MAP (no cutoff)

  std::string name() const;  // "P@5", "nDCG@10", "MAP", "R@50"
  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

// Accepts "P@5", "nDCG@10", "MAP", "R@50" (metric names case-insensitive).
MetricSpec parse_metric_spec(const std::string& spec);

struct EvalOptions {
  int min_rel = 1;  // binarization threshold for P / MAP / R
  Gain gain = Gain::linear;
};

// Per-query metrics over a ranked doc-id list and that query's judgments.
// Docs missing from the judgments count as non-relevant.
double precision_at_k(std::span<const std::string> ranked,
                      const std::map<std::string, int>& grades, int k, int min_rel = 1);
double ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& grades,
                 int k, Gain gain = Gain::linear);
double average_precision(std::span<const std::string> ranked,
                         const std::map<std::string, int>& grades, int min_rel = 1);
double recall_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& grades,
                   int k, int min_rel = 1);

struct MetricReport {
  std::string metric;
  std::vector<std::pair<std::string, double>> per_qid;  // sorted by qid
  double mean = 0.0;
  // qids scored 0 by convention: absent from the run, or without relevant docs.
  std::vector<std::string> flagged_qids;
};

// One report per spec, over every qid in the qrels. Throws ValidationError
// when the run and qrels share no qids. Run qids without judgments are
// skipped with a note in `warnings`.
struct EvalRunResult {
  std::vector<MetricReport> reports;
  std::vector<std::string> warnings;
};
EvalRunResult evaluate_run(const Run& run, const Qrels& qrels,
                           std::span<const MetricSpec> specs, const EvalOptions& options = {});

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p = 1.0;  // two-sided
  bool degenerate = false;  // sd of differences was zero
};

// Paired two-sided t-test; sd uses the n-1 denominator. n must be >= 2.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct HolmRow {
  std::size_t index = 0;  // position in the input vector
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool rejected = false;
};

// Holm step-down correction at level alpha; rows returned in input order.
std::vector<HolmRow> holm_bonferroni(std::span<const double> p_values, double alpha);

struct SignificanceRow {
  std::string metric;
  std::string baseline;
  std::string contender;
  double t = 0.0;
  int df = 0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
  bool degenerate = false;
};

// Paired t-tests of every contender against the baseline with Holm correction
// applied per metric family.
std::vector<SignificanceRow> significance_against_baseline(
    const std::vector<std::pair<std::string, EvalRunResult>>& tagged_results,
    const std::string& baseline_tag, double alpha);

// metric,qid,value rows; per-metric mean rows use qid "all".
void write_metrics_csv(const std::filesystem::path& path, const EvalRunResult& result);

// One row per (metric, contender); the marker column carries the paper-style
// alpha mark when the Holm-corrected test rejects.
void write_significance_csv(const std::filesystem::path& path,
                            std::span<const SignificanceRow> rows);

}  // namespace superb
