#include <cmath>

#include "doctest.h"
#include "superb/errors.hpp"
#include "superb/eval.hpp"
#include "superb/util.hpp"
#include "support/reference.hpp"

using namespace superb;

namespace {

std::map<std::string, int> grades(std::initializer_list<std::pair<std::string, int>> init) {
  return {init.begin(), init.end()};
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("metric specs parse and print") {
  CHECK(parse_metric_spec("P@5").name() == "P@5");
  CHECK(parse_metric_spec("nDCG@10").kind == MetricSpec::Kind::ndcg);
  CHECK(parse_metric_spec("ndcg@10").name() == "nDCG@10");
  CHECK(parse_metric_spec("MAP").name() == "MAP");
  CHECK(parse_metric_spec("R@50").k == 50);
  CHECK_THROWS_AS(parse_metric_spec("F1@3"), ValidationError);
  CHECK_THROWS_AS(parse_metric_spec("P"), ValidationError);
  CHECK_THROWS_AS(parse_metric_spec("MAP@5"), ValidationError);
}

TEST_CASE("precision at k") {
  auto g = grades({{"a", 3}, {"b", 0}, {"c", 2}, {"d", 0}, {"e", 0}});
  std::vector<std::string> run = {"a", "b", "c", "d", "e"};
  CHECK(precision_at_k(run, g, 5) == doctest::Approx(0.4));
  auto all_rel = grades({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 1}, {"e", 1}});
  CHECK(precision_at_k(run, all_rel, 5) == 1.0);
  std::vector<std::string> short_run = {"a"};
  CHECK(precision_at_k(short_run, g, 5) == doctest::Approx(0.2));  // denominator stays k
  CHECK(precision_at_k(run, g, 5, 3) == doctest::Approx(0.2));
}

TEST_CASE("ndcg reproduces the hand case") {
  auto g = grades({{"a", 3}, {"b", 2}, {"c", 0}});
  std::vector<std::string> run = {"a", "c", "b"};
  const double idcg = 3.0 + 2.0 / std::log2(3.0);
  CHECK(ndcg_at_k(run, g, 3, Gain::linear) == doctest::Approx(4.0 / idcg).epsilon(1e-9));
  CHECK(ndcg_at_k(run, g, 3, Gain::linear) == doctest::Approx(0.93855).epsilon(1e-5));

  std::vector<std::string> ideal = {"a", "b", "c"};
  CHECK(ndcg_at_k(ideal, g, 3, Gain::linear) == 1.0);

  auto zeros = grades({{"a", 0}, {"b", 0}});
  CHECK(ndcg_at_k(run, zeros, 3, Gain::linear) == 0.0);
}

TEST_CASE("ndcg exponential gain") {
  auto g = grades({{"a", 3}, {"b", 2}, {"c", 0}});
  std::vector<std::string> run = {"a", "c", "b"};
  const double dcg = 7.0 + 3.0 / std::log2(4.0);
  const double idcg = 7.0 + 3.0 / std::log2(3.0);
  CHECK(ndcg_at_k(run, g, 3, Gain::exponential) == doctest::Approx(dcg / idcg).epsilon(1e-9));
}

TEST_CASE("average precision and recall") {
  auto g = grades({{"a", 1}, {"b", 2}, {"c", 0}});
  std::vector<std::string> run = {"a", "c", "b"};
  CHECK(average_precision(run, g) == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
  CHECK(recall_at_k(run, g, 3) == 1.0);
  CHECK(recall_at_k(run, g, 1) == doctest::Approx(0.5));

  auto three = grades({{"a", 1}, {"b", 1}, {"c", 1}});
  std::vector<std::string> only_a = {"a"};
  CHECK(recall_at_k(only_a, three, 50) == doctest::Approx(1.0 / 3.0));

  auto none = grades({{"a", 0}});
  CHECK(average_precision(run, none) == 0.0);
  CHECK(recall_at_k(run, none, 5) == 0.0);
}

TEST_CASE("metrics match the reference implementations on random fixtures") {
  SplitMix64 rng(404);
  for (int round = 0; round < 40; ++round) {
    std::map<std::string, int> g;
    std::vector<std::string> pool;
    const std::size_t docs = 3 + rng.below(15);
    for (std::size_t d = 0; d < docs; ++d) {
      auto id = "d" + std::to_string(d);
      pool.push_back(id);
      g[id] = static_cast<int>(rng.below(4));
    }
    auto run = pool;
    seeded_shuffle(run.begin(), run.end(), rng);
    run.resize(1 + rng.below(run.size()));
    const int k = 1 + static_cast<int>(rng.below(12));
    const int min_rel = 1 + static_cast<int>(rng.below(3));
    CHECK(precision_at_k(run, g, k, min_rel) ==
          doctest::Approx(superb::test::ref_precision(run, g, k, min_rel)).epsilon(1e-12));
    CHECK(ndcg_at_k(run, g, k, Gain::linear) ==
          doctest::Approx(superb::test::ref_ndcg(run, g, k, false)).epsilon(1e-12));
    CHECK(ndcg_at_k(run, g, k, Gain::exponential) ==
          doctest::Approx(superb::test::ref_ndcg(run, g, k, true)).epsilon(1e-12));
    CHECK(average_precision(run, g, min_rel) ==
          doctest::Approx(superb::test::ref_average_precision(run, g, min_rel)).epsilon(1e-12));
    CHECK(recall_at_k(run, g, k, min_rel) ==
          doctest::Approx(superb::test::ref_recall(run, g, k, min_rel)).epsilon(1e-12));
  }
}

TEST_CASE("recall is non-decreasing in k") {
  auto g = grades({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 1}});
  std::vector<std::string> run = {"x", "a", "y", "b", "c", "d"};
  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    double r = recall_at_k(run, g, k);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("evaluate_run aggregates per-qid values") {
  Qrels qrels;
  qrels.set("q1", "a", 3);
  qrels.set("q1", "b", 0);
  qrels.set("q2", "c", 1);
  qrels.set("q2", "d", 1);

  Run run;
  run.push_back({"q1", "a", 1, 2.0, "t"});
  run.push_back({"q1", "b", 2, 1.0, "t"});
  run.push_back({"q2", "d", 1, 2.0, "t"});
  run.push_back({"q2", "x", 2, 1.0, "t"});

  std::vector<MetricSpec> specs = {parse_metric_spec("P@2")};
  auto result = evaluate_run(run, qrels, specs);
  REQUIRE(result.reports.size() == 1);
  const auto& report = result.reports[0];
  REQUIRE(report.per_qid.size() == 2);
  CHECK(report.per_qid[0].second == doctest::Approx(0.5));  // q1: one of two relevant
  CHECK(report.per_qid[1].second == doctest::Approx(0.5));  // q2: d yes, x unjudged
  CHECK(report.mean == doctest::Approx(0.5));
}

TEST_CASE("evaluate_run flags qids missing from the run and warns on unknown qids") {
  Qrels qrels;
  qrels.set("q1", "a", 1);
  qrels.set("q2", "b", 1);
  Run run;
  run.push_back({"q1", "a", 1, 1.0, "t"});
  run.push_back({"q9", "a", 1, 1.0, "t"});

  std::vector<MetricSpec> specs = {parse_metric_spec("P@1")};
  auto result = evaluate_run(run, qrels, specs);
  const auto& report = result.reports[0];
  REQUIRE(report.per_qid.size() == 2);
  CHECK(report.per_qid[1].first == "q2");
  CHECK(report.per_qid[1].second == 0.0);
  CHECK(report.flagged_qids == std::vector<std::string>{"q2"});
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("q9") != std::string::npos);
  CHECK(report.mean == doctest::Approx(0.5));
}

TEST_CASE("evaluate_run needs a shared qid") {
  Qrels qrels;
  qrels.set("q1", "a", 1);
  Run run;
  run.push_back({"q9", "a", 1, 1.0, "t"});
  std::vector<MetricSpec> specs = {parse_metric_spec("P@1")};
  CHECK_THROWS_AS(evaluate_run(run, qrels, specs), ValidationError);
}

TEST_CASE("paired t-test reproduces the hand case") {
  std::vector<double> a = {0.2, 0.5, 0.9};
  std::vector<double> b = {0.1, 0.4, 0.6};
  auto r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(r.df == 2);
  CHECK(r.p == doctest::Approx(0.130).epsilon(1e-2));
  CHECK(std::abs(r.p - 0.130) < 1e-3);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("paired t-test degenerate and error cases") {
  std::vector<double> a = {0.3, 0.3};
  auto same = paired_t_test(a, a);
  CHECK(same.degenerate);
  CHECK(same.p == 1.0);

  std::vector<double> b = {0.4, 0.4};
  auto shifted = paired_t_test(b, a);
  CHECK(shifted.degenerate);
  CHECK(shifted.p == 0.0);

  std::vector<double> one = {0.5};
  CHECK_THROWS_AS(paired_t_test(one, one), ValidationError);
  std::vector<double> two = {0.5, 0.6};
  CHECK_THROWS_AS(paired_t_test(one, two), ValidationError);
}

TEST_CASE("paired t-test is antisymmetric") {
  SplitMix64 rng(808);
  for (int round = 0; round < 25; ++round) {
    const std::size_t n = 2 + rng.below(10);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(rng.unit());
      b.push_back(rng.unit());
    }
    auto ab = paired_t_test(a, b);
    auto ba = paired_t_test(b, a);
    if (ab.degenerate) continue;
    CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
  }
}

TEST_CASE("holm reproduces the hand step-down case") {
  std::vector<double> p = {0.01, 0.03, 0.04};
  auto rows = holm_bonferroni(p, 0.05);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rejected);
  CHECK_FALSE(rows[1].rejected);
  CHECK_FALSE(rows[2].rejected);
  CHECK(rows[0].p_adjusted == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(rows[1].p_adjusted == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(rows[2].p_adjusted == doctest::Approx(0.06).epsilon(1e-12));
}

TEST_CASE("holm boundary cases") {
  std::vector<double> single = {0.04};
  auto rows = holm_bonferroni(single, 0.05);
  CHECK(rows[0].rejected);
  CHECK(rows[0].p_adjusted == doctest::Approx(0.04));

  std::vector<double> ones = {1.0, 1.0, 1.0};
  for (const auto& row : holm_bonferroni(ones, 0.05)) CHECK_FALSE(row.rejected);

  std::vector<double> empty;
  CHECK_THROWS_AS(holm_bonferroni(empty, 0.05), ValidationError);
  CHECK_THROWS_AS(holm_bonferroni(single, 1.5), ValidationError);
}

TEST_CASE("holm rejections contain bonferroni rejections") {
  SplitMix64 rng(99);
  for (int round = 0; round < 200; ++round) {
    const std::size_t m = 1 + rng.below(12);
    std::vector<double> p;
    for (std::size_t i = 0; i < m; ++i) p.push_back(rng.unit());
    const double alpha = 0.05;
    auto rows = holm_bonferroni(p, alpha);
    double prev_adj = 0.0;
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    for (auto idx : order) {
      CHECK(rows[idx].p_adjusted >= rows[idx].p_raw);
      CHECK(rows[idx].p_adjusted >= prev_adj);
      prev_adj = rows[idx].p_adjusted;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const bool bonferroni = p[i] <= alpha / static_cast<double>(m);
      if (bonferroni) CHECK(rows[i].rejected);
    }
  }
}

TEST_CASE("significance rows align metrics and apply holm per family") {
  Qrels qrels;
  for (int q = 1; q <= 4; ++q) {
    qrels.set("q" + std::to_string(q), "a", 3);
    qrels.set("q" + std::to_string(q), "b", 0);
  }
  auto make_run = [&](const std::string& tag, bool good) {
    Run run;
    for (int q = 1; q <= 4; ++q) {
      auto qid = "q" + std::to_string(q);
      // The good system puts the relevant doc first except on q4.
      const bool relevant_first = good ? q != 4 : q == 1;
      run.push_back({qid, relevant_first ? "a" : "b", 1, 2.0, tag});
      run.push_back({qid, relevant_first ? "b" : "a", 2, 1.0, tag});
    }
    return run;
  };
  std::vector<MetricSpec> specs = {parse_metric_spec("P@1"), parse_metric_spec("nDCG@2")};
  std::vector<std::pair<std::string, EvalRunResult>> tagged;
  tagged.emplace_back("base", evaluate_run(make_run("base", false), qrels, specs));
  tagged.emplace_back("better", evaluate_run(make_run("better", true), qrels, specs));
  auto rows = significance_against_baseline(tagged, "base", 0.05);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].metric == "P@1");
  CHECK(rows[0].contender == "better");
  CHECK(rows[0].t > 0.0);
  CHECK(rows[1].metric == "nDCG@2");

  CHECK_THROWS_AS(significance_against_baseline(tagged, "missing", 0.05), ValidationError);
}

TEST_SUITE_END();
