#include <fstream>

#include "doctest.h"
#include "superb/corpus.hpp"
#include "superb/errors.hpp"
#include "superb/util.hpp"
#include "support/tmpdir.hpp"

using namespace superb;
using superb::test::TmpDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

AnnotationTriplet triplet(const std::string& qid, const std::string& doc, int label) {
  AnnotationTriplet t;
  t.qid = qid;
  t.doc_id = doc;
  t.label = label;
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("corpus");

TEST_CASE("load_products reads one record per line") {
  TmpDir dir("corpus");
  write_file(dir.file("p.jsonl"),
             R"({"doc_id":"a","title":"alpha","description":"first item"})"
             "\n"
             R"({"doc_id":"b","title":"beta","description":"second item"})"
             "\n"
             R"({"doc_id":"c","title":"gamma","description":"third item"})"
             "\n");
  auto products = load_products(dir.file("p.jsonl"));
  CHECK(products.size() == 3);
  CHECK(products.at(0).doc_id == "a");
  CHECK(products.find("c")->title == "gamma");
}

TEST_CASE("load_products rejects duplicate doc ids by name") {
  TmpDir dir("corpus");
  write_file(dir.file("p.jsonl"),
             R"({"doc_id":"B01","title":"x","description":""})"
             "\n"
             R"({"doc_id":"B01","title":"y","description":""})"
             "\n");
  CHECK_THROWS_WITH_AS(load_products(dir.file("p.jsonl")),
                       doctest::Contains("B01"), DataError);
}

TEST_CASE("load_products on an empty file yields an empty collection") {
  TmpDir dir("corpus");
  write_file(dir.file("p.jsonl"), "");
  CHECK(load_products(dir.file("p.jsonl")).empty());
}

TEST_CASE("load_products reports the offending line number") {
  TmpDir dir("corpus");
  write_file(dir.file("p.jsonl"),
             R"({"doc_id":"a","title":"x","description":""})"
             "\n"
             "not json\n");
  CHECK_THROWS_WITH_AS(load_products(dir.file("p.jsonl")), doctest::Contains(":2"), DataError);
}

TEST_CASE("product extra fields survive a rewrite") {
  TmpDir dir("corpus");
  write_file(dir.file("p.jsonl"),
             R"({"doc_id":"a","title":"x","description":"d","brand":"acme","stars":4.5})"
             "\n");
  auto products = load_products(dir.file("p.jsonl"));
  write_products(dir.file("out.jsonl"), products);
  auto reread = load_products(dir.file("out.jsonl"));
  CHECK(reread.at(0).extra.at("brand") == "\"acme\"");
  CHECK(reread.at(0).extra.at("stars") == "4.5");
}

TEST_CASE("qrels parse grades and reject out-of-range values") {
  TmpDir dir("corpus");
  write_file(dir.file("q.qrels"), "q1 0 d7 3\nq1 0 d8 0\n");
  auto qrels = load_qrels(dir.file("q.qrels"));
  CHECK(qrels.grade("q1", "d7") == 3);
  CHECK(qrels.grade("q1", "d8") == 0);
  CHECK(qrels.grade("q1", "dX") == std::nullopt);
  CHECK(qrels.grade_or_zero("q1", "dX") == 0);

  write_file(dir.file("bad.qrels"), "q1 0 d7 5\n");
  CHECK_THROWS_AS(load_qrels(dir.file("bad.qrels")), DataError);

  write_file(dir.file("dup.qrels"), "q1 0 d7 3\nq1 0 d7 2\n");
  CHECK_THROWS_AS(load_qrels(dir.file("dup.qrels")), DataError);
}

TEST_CASE("runs round-trip exactly") {
  TmpDir dir("corpus");
  Run run;
  run.push_back({"q1", "d3", 1, 0.5665797174469143, "bm25"});
  run.push_back({"q1", "d1", 2, 0.4900511774126154, "bm25"});
  run.push_back({"q2", "d2", 1, 12.0, "bm25"});
  write_run(dir.file("r.run"), run);
  CHECK(load_run(dir.file("r.run")) == run);
}

TEST_CASE("random runs round-trip exactly") {
  TmpDir dir("corpus");
  SplitMix64 rng(77);
  for (int round = 0; round < 20; ++round) {
    Run run;
    const int queries = 1 + static_cast<int>(rng.below(4));
    for (int q = 0; q < queries; ++q) {
      const int n = 1 + static_cast<int>(rng.below(12));
      double score = 100.0;
      for (int r = 1; r <= n; ++r) {
        score -= rng.unit();
        run.push_back({"q" + std::to_string(q), "d" + std::to_string(r), r, score, "tag"});
      }
    }
    write_run(dir.file("r.run"), run);
    CHECK(load_run(dir.file("r.run")) == run);
  }
}

TEST_CASE("run validation catches rank gaps and rising scores") {
  TmpDir dir("corpus");
  write_file(dir.file("gap.run"), "q1 Q0 d1 1 2.0 t\nq1 Q0 d2 3 1.0 t\n");
  CHECK_THROWS_WITH_AS(load_run(dir.file("gap.run")), doctest::Contains("gap"), DataError);

  write_file(dir.file("dup.run"), "q1 Q0 d1 1 2.0 t\nq1 Q0 d2 1 1.0 t\n");
  CHECK_THROWS_AS(load_run(dir.file("dup.run")), DataError);

  write_file(dir.file("rise.run"), "q1 Q0 d1 1 1.0 t\nq1 Q0 d2 2 2.0 t\n");
  CHECK_THROWS_AS(load_run(dir.file("rise.run")), DataError);
}

TEST_CASE("queries load from tsv with unique qids") {
  TmpDir dir("corpus");
  write_file(dir.file("q.tsv"), "q1\tbest shoes\nq2\tbest backpack for hiking\n");
  auto queries = load_queries(dir.file("q.tsv"));
  REQUIRE(queries.size() == 2);
  CHECK(queries[1].text == "best backpack for hiking");

  write_file(dir.file("dup.tsv"), "q1\ta\nq1\tb\n");
  CHECK_THROWS_AS(load_queries(dir.file("dup.tsv")), DataError);
}

TEST_CASE("triplets round-trip with optional fields and extras") {
  TmpDir dir("corpus");
  std::vector<AnnotationTriplet> triplets;
  auto t1 = triplet("q1", "d1", 3);
  t1.confidence = 8;
  t1.explanation = "excels on every axis";
  t1.attributes = std::vector<std::string>{"large RAM", "good speakers"};
  auto t2 = triplet("q1", "d2", 0);
  t2.partner = "d1";
  t2.extra.emplace("source", "\"phase2\"");
  triplets.push_back(t1);
  triplets.push_back(t2);
  write_triplets(dir.file("t.jsonl"), triplets);
  auto reread = load_triplets(dir.file("t.jsonl"));
  CHECK(reread == triplets);
}

TEST_CASE("triplet confidence outside 1..9 is rejected") {
  TmpDir dir("corpus");
  write_file(dir.file("t.jsonl"),
             R"({"qid":"q1","doc_id":"d1","label":2,"confidence":12,"explanation":""})"
             "\n");
  CHECK_THROWS_AS(load_triplets(dir.file("t.jsonl")), DataError);
}

TEST_CASE("truncate_description keeps a prefix of at most max_tokens tokens") {
  Product p;
  p.doc_id = "d";
  p.title = "t";
  std::string desc;
  for (int i = 0; i < 600; ++i) desc += "tok" + std::to_string(i) + " ";
  p.description = desc;

  auto cut = truncate_description(p, 512);
  CHECK(split_ws(cut.description).size() == 512);
  CHECK(p.description.starts_with(cut.description));
  CHECK(cut.title == p.title);

  Product small = p;
  small.description = "one two three";
  CHECK(truncate_description(small, 512).description == "one two three");
  CHECK(truncate_description(small, 1).description == "one");
}

TEST_CASE("truncate_description is idempotent") {
  SplitMix64 rng(5);
  for (int round = 0; round < 50; ++round) {
    Product p;
    p.doc_id = "d";
    p.title = "t";
    std::string desc;
    const auto tokens = rng.below(40);
    for (std::uint64_t i = 0; i < tokens; ++i) {
      desc += std::string(1 + rng.below(3), 'a' + static_cast<char>(rng.below(26)));
      desc += rng.below(4) == 0 ? "  " : " ";
    }
    p.description = desc;
    const auto max_tokens = 1 + rng.below(20);
    auto once = truncate_description(p, max_tokens);
    auto twice = truncate_description(once, max_tokens);
    CHECK(once.description == twice.description);
  }
}

TEST_CASE("label_distribution counts all four labels") {
  std::vector<AnnotationTriplet> triplets = {triplet("q", "a", 3), triplet("q", "b", 3),
                                             triplet("q", "c", 0)};
  auto dist = label_distribution(triplets);
  CHECK(dist[3] == 2);
  CHECK(dist[0] == 1);
  CHECK(dist[1] == 0);
  CHECK(dist[2] == 0);

  auto empty = label_distribution(std::vector<AnnotationTriplet>{});
  CHECK(empty.size() == 4);
  for (const auto& [label, count] : empty) CHECK(count == 0);
}

TEST_CASE("label_distribution matches the published aggregate") {
  // Overall Best 8,564 / Almost Best 10,100 / Relevant 8,342 / Not 2,212.
  std::vector<AnnotationTriplet> triplets;
  const std::size_t counts[4] = {2212, 8342, 10100, 8564};
  std::size_t id = 0;
  for (int label = 0; label <= 3; ++label) {
    for (std::size_t i = 0; i < counts[label]; ++i) {
      triplets.push_back(triplet("q", "d" + std::to_string(id++), label));
    }
  }
  auto dist = label_distribution(triplets);
  CHECK(dist[3] == 8564);
  CHECK(dist[2] == 10100);
  CHECK(dist[1] == 8342);
  CHECK(dist[0] == 2212);
  CHECK(dist[0] + dist[1] + dist[2] + dist[3] == 29218);
}

TEST_CASE("label_distribution is permutation-invariant and sum-preserving") {
  SplitMix64 rng(11);
  std::vector<AnnotationTriplet> triplets;
  for (int i = 0; i < 200; ++i) {
    triplets.push_back(triplet("q", "d" + std::to_string(i), static_cast<int>(rng.below(4))));
  }
  auto before = label_distribution(triplets);
  auto shuffled = triplets;
  superb::seeded_shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(label_distribution(shuffled) == before);
  std::size_t total = 0;
  for (const auto& [label, count] : before) total += count;
  CHECK(total == triplets.size());
}

TEST_SUITE_END();
