#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace superb {

// Graded relevance per the four-point scheme:
//   3 Overall Best, 2 Almost Best, 1 Relevant But Not the Best, 0 Not Relevant.
// The same 0..3 range carries ESCI source judgments (Exact=3 .. Irrelevant=0).
inline constexpr int kMinGrade = 0;
inline constexpr int kMaxGrade = 3;

bool is_valid_grade(int grade);

struct Product {
  std::string doc_id;
  std::string title;
  std::string description;
  // Unknown record fields, key -> serialized JSON value; preserved on rewrite.
  std::map<std::string, std::string> extra;
};

struct Query {
  std::string qid;
  std::string text;
};

struct RunEntry {
  std::string qid;
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
  std::string tag;

  friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

using Run = std::vector<RunEntry>;

struct AnnotationTriplet {
  std::string qid;
  std::string doc_id;
  int label = 0;
  std::optional<int> confidence;  // 1..9 when present
  std::string explanation;
  std::optional<std::vector<std::string>> attributes;
  std::optional<std::string> partner;  // pairwise presentation partner
  std::map<std::string, std::string> extra;

  friend bool operator==(const AnnotationTriplet&, const AnnotationTriplet&) = default;
};

class ProductCollection {
public:
  void add(Product p);  // throws DataError on duplicate or invalid doc_id

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Product& at(std::size_t i) const { return items_[i]; }
  const Product* find(const std::string& doc_id) const;
  const std::vector<Product>& items() const { return items_; }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

private:
  std::vector<Product> items_;
  std::map<std::string, std::size_t> by_id_;
};

// (qid, doc_id) -> grade. At most one grade per pair, every grade in 0..3.
class Qrels {
public:
  void set(const std::string& qid, const std::string& doc_id, int grade);
  std::optional<int> grade(const std::string& qid, const std::string& doc_id) const;

  // Missing docs count as grade 0.
  int grade_or_zero(const std::string& qid, const std::string& doc_id) const;

  const std::map<std::string, int>* for_query(const std::string& qid) const;
  const std::map<std::string, std::map<std::string, int>>& by_query() const { return grades_; }
  std::size_t size() const;
  bool empty() const { return grades_.empty(); }

private:
  std::map<std::string, std::map<std::string, int>> grades_;
};

// --- file I/O -------------------------------------------------------------
//
// products.jsonl : one object per line; fields doc_id, title, description.
// queries.tsv    : qid<TAB>text.
// qrels          : TREC `qid 0 doc_id grade`, space-separated.
// run            : TREC `qid Q0 doc_id rank score tag`.
// triplets.jsonl : one object per line; qid, doc_id, label, confidence?,
//                  explanation, attributes?.

ProductCollection load_products(const std::filesystem::path& path);
void write_products(const std::filesystem::path& path, const ProductCollection& products);

std::vector<Query> load_queries(const std::filesystem::path& path);
void write_queries(const std::filesystem::path& path, std::span<const Query> queries);

Qrels load_qrels(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

Run load_run(const std::filesystem::path& path);
void write_run(const std::filesystem::path& path, const Run& run);

std::vector<AnnotationTriplet> load_triplets(const std::filesystem::path& path);
void write_triplets(const std::filesystem::path& path,
                    std::span<const AnnotationTriplet> triplets);

// Validates per-query rank contiguity (1..n, no gaps or duplicates) and
// non-increasing scores. Called by load_run/write_run; public for callers
// that assemble runs by hand.
void validate_run(const Run& run);

// Ranked doc ids for one query, ordered by rank.
std::map<std::string, std::vector<std::string>> run_doc_ids_by_query(const Run& run);

// --- operations -----------------------------------------------------------

// Keeps at most max_tokens whitespace-delimited description tokens; the kept
// text is a prefix of the original. Title is untouched.
Product truncate_description(const Product& product, std::size_t max_tokens);

// Counts per label 0..3; absent labels are reported as zero.
std::map<int, std::size_t> label_distribution(std::span<const AnnotationTriplet> triplets);

}  // namespace superb
