#include "superb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

double gain_value(int grade, Gain gain) {
  if (gain == Gain::linear) return static_cast<double>(grade);
  return std::exp2(static_cast<double>(grade)) - 1.0;
}

std::size_t count_relevant(const std::map<std::string, int>& grades, int min_rel) {
  std::size_t n = 0;
  for (const auto& [doc, grade] : grades) {
    if (grade >= min_rel) ++n;
  }
  return n;
}

}  // namespace

Gain gain_from_string(const std::string& name) {
  auto lower = to_lower(name);
  if (lower == "linear") return Gain::linear;
  if (lower == "exponential" || lower == "exp") return Gain::exponential;
  throw ValidationError("unknown gain '" + name + "' (expected linear or exponential)");
}

std::string to_string(Gain gain) { return gain == Gain::linear ? "linear" : "exponential"; }

std::string MetricSpec::name() const {
  switch (kind) {
    case Kind::precision: return "P@" + std::to_string(k);
    case Kind::ndcg: return "nDCG@" + std::to_string(k);
    case Kind::map: return "MAP";
    case Kind::recall: return "R@" + std::to_string(k);
  }
  return {};
}

MetricSpec parse_metric_spec(const std::string& spec) {
  auto at = spec.find('@');
  std::string head = to_lower(at == std::string::npos ? spec : spec.substr(0, at));
  MetricSpec out;
  if (head == "p") {
    out.kind = MetricSpec::Kind::precision;
  } else if (head == "ndcg") {
    out.kind = MetricSpec::Kind::ndcg;
  } else if (head == "map" || head == "ap") {
    out.kind = MetricSpec::Kind::map;
  } else if (head == "r" || head == "recall") {
    out.kind = MetricSpec::Kind::recall;
  } else {
    throw ValidationError("unknown metric '" + spec + "'");
  }
  if (out.kind == MetricSpec::Kind::map) {
    if (at != std::string::npos) throw ValidationError("MAP takes no cutoff: '" + spec + "'");
    return out;
  }
  if (at == std::string::npos || at + 1 >= spec.size()) {
    throw ValidationError("metric '" + spec + "' needs a cutoff, e.g. P@10");
  }
  auto tail = spec.substr(at + 1);
  if (!is_integer_token(tail)) throw ValidationError("bad cutoff in '" + spec + "'");
  out.k = std::stoi(tail);
  if (out.k < 1) throw ValidationError("cutoff must be >= 1 in '" + spec + "'");
  return out;
}

double precision_at_k(std::span<const std::string> ranked,
                      const std::map<std::string, int>& grades, int k, int min_rel) {
  if (k < 1) throw ValidationError("precision_at_k: k must be >= 1");
  std::size_t hits = 0;
  const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = grades.find(ranked[i]);
    if (it != grades.end() && it->second >= min_rel) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& grades,
                 int k, Gain gain) {
  if (k < 1) throw ValidationError("ndcg_at_k: k must be >= 1");
  double dcg = 0.0;
  const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = grades.find(ranked[i]);
    const int grade = it == grades.end() ? 0 : it->second;
    dcg += gain_value(grade, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  ideal.reserve(grades.size());
  for (const auto& [doc, grade] : grades) ideal.push_back(grade);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  const std::size_t ideal_depth = std::min<std::size_t>(ideal.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ideal_depth; ++i) {
    idcg += gain_value(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg <= 0.0 ? 0.0 : dcg / idcg;
}

double average_precision(std::span<const std::string> ranked,
                         const std::map<std::string, int>& grades, int min_rel) {
  const std::size_t total_relevant = count_relevant(grades, min_rel);
  if (total_relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto it = grades.find(ranked[i]);
    if (it != grades.end() && it->second >= min_rel) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

double recall_at_k(std::span<const std::string> ranked, const std::map<std::string, int>& grades,
                   int k, int min_rel) {
  if (k < 1) throw ValidationError("recall_at_k: k must be >= 1");
  const std::size_t total_relevant = count_relevant(grades, min_rel);
  if (total_relevant == 0) return 0.0;
  std::size_t hits = 0;
  const std::size_t depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = grades.find(ranked[i]);
    if (it != grades.end() && it->second >= min_rel) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

EvalRunResult evaluate_run(const Run& run, const Qrels& qrels,
                           std::span<const MetricSpec> specs, const EvalOptions& options) {
  auto ranked_by_qid = run_doc_ids_by_query(run);
  EvalRunResult out;

  bool any_shared = false;
  for (const auto& [qid, docs] : ranked_by_qid) {
    if (qrels.for_query(qid) != nullptr) {
      any_shared = true;
    } else {
      out.warnings.push_back("run qid '" + qid + "' has no judgments; ignored");
    }
  }
  if (!any_shared) throw ValidationError("run and qrels share no qids");

  static const std::vector<std::string> kNoDocs;
  for (const auto& spec : specs) {
    MetricReport report;
    report.metric = spec.name();
    double total = 0.0;
    for (const auto& [qid, grades] : qrels.by_query()) {
      auto it = ranked_by_qid.find(qid);
      const bool in_run = it != ranked_by_qid.end();
      const auto& docs = in_run ? it->second : kNoDocs;
      double value = 0.0;
      bool flagged = !in_run;
      switch (spec.kind) {
        case MetricSpec::Kind::precision:
          value = precision_at_k(docs, grades, spec.k, options.min_rel);
          break;
        case MetricSpec::Kind::ndcg:
          value = ndcg_at_k(docs, grades, spec.k, options.gain);
          break;
        case MetricSpec::Kind::map:
          value = average_precision(docs, grades, options.min_rel);
          if (count_relevant(grades, options.min_rel) == 0) flagged = true;
          break;
        case MetricSpec::Kind::recall:
          value = recall_at_k(docs, grades, spec.k, options.min_rel);
          if (count_relevant(grades, options.min_rel) == 0) flagged = true;
          break;
      }
      report.per_qid.emplace_back(qid, value);
      if (flagged) report.flagged_qids.push_back(qid);
      total += value;
    }
    report.mean = report.per_qid.empty()
                      ? 0.0
                      : total / static_cast<double>(report.per_qid.size());
    out.reports.push_back(std::move(report));
  }
  return out;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired_t_test: size mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired_t_test: need n >= 2");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult out;
  out.df = static_cast<int>(n) - 1;
  if (sd == 0.0) {
    out.degenerate = true;
    out.t = 0.0;
    out.p = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(out.df));
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

std::vector<HolmRow> holm_bonferroni(std::span<const double> p_values, double alpha) {
  if (p_values.empty()) throw ValidationError("holm_bonferroni: empty input");
  if (alpha <= 0.0 || alpha >= 1.0) throw ValidationError("holm_bonferroni: alpha out of (0,1)");
  const std::size_t m = p_values.size();

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });

  std::vector<HolmRow> rows(m);
  bool rejecting = true;
  double running_adj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = order[i];
    const double p = p_values[idx];
    const double scale = static_cast<double>(m - i);
    running_adj = std::max(running_adj, scale * p);
    HolmRow& row = rows[idx];
    row.index = idx;
    row.p_raw = p;
    row.p_adjusted = std::min(1.0, running_adj);
    if (rejecting && p <= alpha / scale) {
      row.rejected = true;
    } else {
      rejecting = false;
    }
  }
  return rows;
}

std::vector<SignificanceRow> significance_against_baseline(
    const std::vector<std::pair<std::string, EvalRunResult>>& tagged_results,
    const std::string& baseline_tag, double alpha) {
  const EvalRunResult* baseline = nullptr;
  for (const auto& [tag, result] : tagged_results) {
    if (tag == baseline_tag) baseline = &result;
  }
  if (baseline == nullptr) {
    throw ValidationError("baseline tag '" + baseline_tag + "' not among results");
  }

  std::vector<SignificanceRow> out;
  for (std::size_t metric_idx = 0; metric_idx < baseline->reports.size(); ++metric_idx) {
    const auto& base_report = baseline->reports[metric_idx];
    std::vector<double> base_values;
    base_values.reserve(base_report.per_qid.size());
    for (const auto& [qid, value] : base_report.per_qid) base_values.push_back(value);

    std::vector<SignificanceRow> family;
    std::vector<double> family_p;
    for (const auto& [tag, result] : tagged_results) {
      if (tag == baseline_tag) continue;
      if (metric_idx >= result.reports.size() ||
          result.reports[metric_idx].metric != base_report.metric) {
        throw ValidationError("metric reports misaligned for run '" + tag + "'");
      }
      const auto& report = result.reports[metric_idx];
      std::vector<double> values;
      values.reserve(report.per_qid.size());
      for (std::size_t i = 0; i < report.per_qid.size(); ++i) {
        if (report.per_qid[i].first != base_report.per_qid[i].first) {
          throw ValidationError("qid sets differ between runs");
        }
        values.push_back(report.per_qid[i].second);
      }
      auto test = paired_t_test(values, base_values);
      SignificanceRow row;
      row.metric = base_report.metric;
      row.baseline = baseline_tag;
      row.contender = tag;
      row.t = test.t;
      row.df = test.df;
      row.p_raw = test.p;
      row.degenerate = test.degenerate;
      family.push_back(row);
      family_p.push_back(test.p);
    }
    if (family.empty()) continue;
    auto holm = holm_bonferroni(family_p, alpha);
    for (std::size_t i = 0; i < family.size(); ++i) {
      family[i].p_adjusted = holm[i].p_adjusted;
      family[i].significant = holm[i].rejected;
      out.push_back(family[i]);
    }
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const EvalRunResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "metric,qid,value\n";
  for (const auto& report : result.reports) {
    for (const auto& [qid, value] : report.per_qid) {
      out << report.metric << ',' << qid << ',' << format_double(value) << '\n';
    }
    out << report.metric << ",all," << format_double(report.mean) << '\n';
  }
}

void write_significance_csv(const std::filesystem::path& path,
                            std::span<const SignificanceRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "metric,baseline,run,t,df,p,p_holm,significant,marker\n";
  for (const auto& row : rows) {
    out << row.metric << ',' << row.baseline << ',' << row.contender << ','
        << format_double(row.t) << ',' << row.df << ',' << format_double(row.p_raw) << ','
        << format_double(row.p_adjusted) << ',' << (row.significant ? "true" : "false") << ','
        << (row.significant ? "α" : "") << '\n';
  }
}

}  // namespace superb
