#include "superb/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

constexpr std::string_view kIndexMagic = "SUPERBIDX";
constexpr int kIndexVersion = 1;

const std::set<std::string_view>& stopword_set() {
  static const std::set<std::string_view> words = {
      "a",    "an",   "and",  "are", "as",   "at",   "be",   "but", "by",   "for",
      "from", "has",  "have", "he",  "her",  "his",  "i",    "in",  "is",   "it",
      "its",  "my",   "of",   "on",  "or",   "our",  "s",    "she", "that", "the",
      "their", "this", "to",  "was", "were", "will", "with", "you", "your"};
  return words;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_stopword(std::string_view token) { return stopword_set().contains(token); }

WeightedQuery WeightedQuery::from_text(std::string_view text) {
  std::map<std::string, double> counts;
  for (auto& tok : tokenize(text)) counts[tok] += 1.0;
  WeightedQuery q;
  q.terms.reserve(counts.size());
  for (auto& [term, count] : counts) q.terms.push_back({term, count});
  return q;
}

WeightedQuery WeightedQuery::normalized() const {
  double total = 0.0;
  for (const auto& t : terms) total += t.weight;
  WeightedQuery out = *this;
  if (total > 0.0) {
    for (auto& t : out.terms) t.weight /= total;
  }
  return out;
}

InvertedIndex InvertedIndex::build(const ProductCollection& products) {
  if (products.empty()) throw DataError("cannot index an empty collection");
  InvertedIndex idx;
  idx.doc_ids_.reserve(products.size());
  idx.doc_lens_.reserve(products.size());
  for (const auto& p : products) {
    auto tokens = tokenize(p.title + " " + p.description);
    auto doc = static_cast<std::uint32_t>(idx.doc_ids_.size());
    idx.doc_ids_.push_back(p.doc_id);
    idx.doc_lens_.push_back(static_cast<std::uint32_t>(tokens.size()));
    idx.total_tokens_ += static_cast<std::int64_t>(tokens.size());
    std::map<std::string, std::uint32_t> tf;
    for (auto& tok : tokens) ++tf[tok];
    for (auto& [term, count] : tf) idx.postings_[term].push_back({doc, count});
  }
  return idx;
}

double InvertedIndex::avg_doc_len() const {
  return doc_count() == 0 ? 0.0
                          : static_cast<double>(total_tokens_) / static_cast<double>(doc_count());
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kIndexMagic << ' ' << kIndexVersion << '\n';
  out << doc_count() << ' ' << total_tokens_ << '\n';
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    out << doc_ids_[i] << ' ' << doc_lens_[i] << '\n';
  }
  for (const auto& [term, postings] : postings_) {
    out << term << ' ' << postings.size();
    for (const auto& p : postings) out << ' ' << p.doc << ':' << p.tf;
    out << '\n';
  }
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kIndexMagic || version != kIndexVersion) {
    throw DataError(path.string() + ": not a version-" + std::to_string(kIndexVersion) +
                    " index file");
  }
  std::size_t n = 0;
  InvertedIndex idx;
  in >> n >> idx.total_tokens_;
  if (!in) throw DataError(path.string() + ": truncated header");
  idx.doc_ids_.resize(n);
  idx.doc_lens_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    in >> idx.doc_ids_[i] >> idx.doc_lens_[i];
    if (!in) throw DataError(path.string() + ": truncated doc table");
  }
  std::string term;
  while (in >> term) {
    std::size_t len = 0;
    in >> len;
    auto& postings = idx.postings_[term];
    postings.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      char sep = 0;
      in >> postings[i].doc >> sep >> postings[i].tf;
      if (!in || sep != ':') throw DataError(path.string() + ": bad postings for '" + term + "'");
    }
  }
  return idx;
}

std::vector<SearchHit> bm25_search(const InvertedIndex& index, const WeightedQuery& query,
                                   std::size_t k, const Bm25Params& params) {
  if (k == 0) throw ValidationError("bm25_search: k must be >= 1");
  if (query.terms.empty()) throw ValidationError("bm25_search: empty query");

  const double n_docs = static_cast<double>(index.doc_count());
  const double avgdl = index.avg_doc_len();
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& [term, weight] : query.terms) {
    const auto* postings = index.postings(term);
    if (postings == nullptr || weight <= 0.0) continue;
    const double df = static_cast<double>(postings->size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& p : *postings) {
      const double tf = static_cast<double>(p.tf);
      const double dl = static_cast<double>(index.doc_len(p.doc));
      const double denom = tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl);
      acc[p.doc] += weight * idf * tf * (params.k1 + 1.0) / denom;
    }
  }

  std::vector<SearchHit> hits;
  hits.reserve(acc.size());
  for (const auto& [doc, score] : acc) hits.push_back({index.doc_ids()[doc], score});
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

Rm3Result rm3_expand(const InvertedIndex& index, const WeightedQuery& query,
                     const std::vector<SearchHit>& first_pass, const Rm3Params& params) {
  if (params.fb_docs == 0 || params.fb_terms == 0) {
    throw ValidationError("rm3_expand: fb_docs and fb_terms must be >= 1");
  }
  if (params.orig_weight < 0.0 || params.orig_weight > 1.0) {
    throw ValidationError("rm3_expand: orig_weight must be in [0,1]");
  }
  const WeightedQuery original = query.normalized();
  if (first_pass.empty()) return {original, false};

  // P(d): first-pass scores of the top fb_docs, normalized.
  std::unordered_map<std::string, std::uint32_t> ordinal;
  for (std::uint32_t i = 0; i < index.doc_ids().size(); ++i) ordinal[index.doc_ids()[i]] = i;
  std::unordered_map<std::uint32_t, double> fb_score;
  double score_total = 0.0;
  for (const auto& hit : first_pass) {
    if (fb_score.size() == params.fb_docs) break;
    auto it = ordinal.find(hit.doc_id);
    if (it == ordinal.end()) throw DataError("rm3_expand: doc '" + hit.doc_id + "' not in index");
    fb_score[it->second] = hit.score;
    score_total += hit.score;
  }
  if (score_total <= 0.0) return {original, false};

  // RM term weights: sum over feedback docs of P(t|d) P(d).
  std::map<std::string, double> rm;
  for (const auto& [term, postings] : index.terms()) {
    double w = 0.0;
    for (const auto& p : postings) {
      auto it = fb_score.find(p.doc);
      if (it == fb_score.end()) continue;
      const double p_t_d = static_cast<double>(p.tf) / static_cast<double>(index.doc_len(p.doc));
      w += p_t_d * (it->second / score_total);
    }
    if (w > 0.0) rm[term] = w;
  }

  std::vector<std::pair<std::string, double>> ranked(rm.begin(), rm.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > params.fb_terms) ranked.resize(params.fb_terms);
  double rm_total = 0.0;
  for (const auto& [term, w] : ranked) rm_total += w;

  std::map<std::string, double> mixed;
  for (const auto& t : original.terms) {
    if (params.orig_weight > 0.0) mixed[t.term] += params.orig_weight * t.weight;
  }
  if (rm_total > 0.0 && params.orig_weight < 1.0) {
    for (const auto& [term, w] : ranked) {
      mixed[term] += (1.0 - params.orig_weight) * (w / rm_total);
    }
  }

  double total = 0.0;
  for (const auto& [term, w] : mixed) total += w;
  if (total <= 0.0) return {original, false};
  WeightedQuery out;
  out.terms.reserve(mixed.size());
  for (const auto& [term, w] : mixed) out.terms.push_back({term, w / total});
  return {out, true};
}

}  // namespace superb
