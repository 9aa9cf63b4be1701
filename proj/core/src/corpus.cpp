#include "superb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "superb/errors.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

using nlohmann::json;

bool has_ws(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_id(const std::string& id, const char* what, const std::string& where) {
  if (id.empty()) throw DataError(std::string(what) + " empty (" + where + ")");
  if (has_ws(id))
    throw DataError(std::string(what) + " '" + id + "' contains whitespace (" + where + ")");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

json parse_json_line(const std::string& line, const std::filesystem::path& path,
                     std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record");
  }
  return j;
}

std::string require_string(const json& j, const char* key,
                           const std::filesystem::path& path, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": missing string field '" +
                    key + "'");
  }
  return it->get<std::string>();
}

int parse_grade(const std::string& tok, const std::filesystem::path& path, std::size_t lineno) {
  if (!is_integer_token(tok)) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": grade '" + tok +
                    "' is not an integer");
  }
  int g = std::stoi(tok);
  if (!is_valid_grade(g)) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": grade " + tok +
                    " outside 0..3");
  }
  return g;
}

}  // namespace

bool is_valid_grade(int grade) { return grade >= kMinGrade && grade <= kMaxGrade; }

void ProductCollection::add(Product p) {
  check_id(p.doc_id, "doc_id", "product");
  if (p.title.empty()) throw DataError("product '" + p.doc_id + "' has empty title");
  if (by_id_.contains(p.doc_id)) throw DataError("duplicate doc_id '" + p.doc_id + "'");
  by_id_.emplace(p.doc_id, items_.size());
  items_.push_back(std::move(p));
}

const Product* ProductCollection::find(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

void Qrels::set(const std::string& qid, const std::string& doc_id, int grade) {
  check_id(qid, "qid", "qrels");
  check_id(doc_id, "doc_id", "qrels");
  if (!is_valid_grade(grade)) {
    throw DataError("grade " + std::to_string(grade) + " outside 0..3 for (" + qid + ", " +
                    doc_id + ")");
  }
  auto& per_query = grades_[qid];
  if (per_query.contains(doc_id)) {
    throw DataError("duplicate judgment for (" + qid + ", " + doc_id + ")");
  }
  per_query.emplace(doc_id, grade);
}

std::optional<int> Qrels::grade(const std::string& qid, const std::string& doc_id) const {
  auto q = grades_.find(qid);
  if (q == grades_.end()) return std::nullopt;
  auto d = q->second.find(doc_id);
  if (d == q->second.end()) return std::nullopt;
  return d->second;
}

int Qrels::grade_or_zero(const std::string& qid, const std::string& doc_id) const {
  return grade(qid, doc_id).value_or(0);
}

const std::map<std::string, int>* Qrels::for_query(const std::string& qid) const {
  auto q = grades_.find(qid);
  return q == grades_.end() ? nullptr : &q->second;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [qid, docs] : grades_) n += docs.size();
  return n;
}

ProductCollection load_products(const std::filesystem::path& path) {
  auto in = open_in(path);
  ProductCollection out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = parse_json_line(line, path, lineno);
    Product p;
    p.doc_id = require_string(j, "doc_id", path, lineno);
    p.title = require_string(j, "title", path, lineno);
    p.description = require_string(j, "description", path, lineno);
    for (const auto& [key, value] : j.items()) {
      if (key == "doc_id" || key == "title" || key == "description") continue;
      p.extra.emplace(key, value.dump());
    }
    try {
      out.add(std::move(p));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_products(const std::filesystem::path& path, const ProductCollection& products) {
  auto out = open_out(path);
  for (const auto& p : products) {
    json j;
    j["doc_id"] = p.doc_id;
    j["title"] = p.title;
    j["description"] = p.description;
    for (const auto& [key, value] : p.extra) j[key] = json::parse(value);
    out << j.dump() << '\n';
  }
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Query> out;
  std::map<std::string, bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected qid<TAB>text");
    }
    Query q{line.substr(0, tab), line.substr(tab + 1)};
    check_id(q.qid, "qid", path.string() + ":" + std::to_string(lineno));
    if (trim(q.text).empty()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty query text");
    }
    if (seen[q.qid]) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate qid '" +
                      q.qid + "'");
    }
    seen[q.qid] = true;
    out.push_back(std::move(q));
  }
  return out;
}

void write_queries(const std::filesystem::path& path, std::span<const Query> queries) {
  auto out = open_out(path);
  for (const auto& q : queries) out << q.qid << '\t' << q.text << '\n';
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = open_in(path);
  Qrels out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto tok = split_ws(line);
    if (tok.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected 'qid 0 doc_id grade'");
    }
    int grade = parse_grade(tok[3], path, lineno);
    try {
      out.set(tok[0], tok[2], grade);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
  auto out = open_out(path);
  for (const auto& [qid, docs] : qrels.by_query()) {
    for (const auto& [doc_id, grade] : docs) {
      out << qid << " 0 " << doc_id << ' ' << grade << '\n';
    }
  }
}

void validate_run(const Run& run) {
  std::map<std::string, std::vector<const RunEntry*>> per_query;
  for (const auto& e : run) {
    check_id(e.qid, "qid", "run");
    check_id(e.doc_id, "doc_id", "run");
    check_id(e.tag, "tag", "run");
    if (e.rank < 1) throw DataError("run rank " + std::to_string(e.rank) + " for qid " + e.qid);
    per_query[e.qid].push_back(&e);
  }
  for (auto& [qid, entries] : per_query) {
    std::vector<const RunEntry*> by_rank(entries.size(), nullptr);
    for (const auto* e : entries) {
      if (static_cast<std::size_t>(e->rank) > entries.size()) {
        throw DataError("run qid " + qid + ": rank sequence has gaps (rank " +
                        std::to_string(e->rank) + " of " + std::to_string(entries.size()) + ")");
      }
      auto& slot = by_rank[static_cast<std::size_t>(e->rank) - 1];
      if (slot != nullptr) throw DataError("run qid " + qid + ": duplicate rank " +
                                           std::to_string(e->rank));
      slot = e;
    }
    for (std::size_t i = 1; i < by_rank.size(); ++i) {
      if (by_rank[i]->score > by_rank[i - 1]->score) {
        throw DataError("run qid " + qid + ": scores increase at rank " + std::to_string(i + 1));
      }
    }
  }
}

Run load_run(const std::filesystem::path& path) {
  auto in = open_in(path);
  Run out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto tok = split_ws(line);
    if (tok.size() != 6 || tok[1] != "Q0") {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected 'qid Q0 doc_id rank score tag'");
    }
    RunEntry e;
    e.qid = tok[0];
    e.doc_id = tok[2];
    if (!is_integer_token(tok[3])) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad rank '" + tok[3] +
                      "'");
    }
    e.rank = std::stoi(tok[3]);
    try {
      e.score = std::stod(tok[4]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + tok[4] +
                      "'");
    }
    e.tag = tok[5];
    out.push_back(std::move(e));
  }
  try {
    validate_run(out);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

void write_run(const std::filesystem::path& path, const Run& run) {
  validate_run(run);
  auto out = open_out(path);
  for (const auto& e : run) {
    out << e.qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_double(e.score) << ' '
        << e.tag << '\n';
  }
}

std::vector<AnnotationTriplet> load_triplets(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<AnnotationTriplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = parse_json_line(line, path, lineno);
    AnnotationTriplet t;
    t.qid = require_string(j, "qid", path, lineno);
    t.doc_id = require_string(j, "doc_id", path, lineno);
    if (!j.contains("label") || !j["label"].is_number_integer()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": missing integer label");
    }
    t.label = j["label"].get<int>();
    if (!is_valid_grade(t.label)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": label outside 0..3");
    }
    if (j.contains("confidence") && !j["confidence"].is_null()) {
      int c = j["confidence"].get<int>();
      if (c < 1 || c > 9) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": confidence outside 1..9");
      }
      t.confidence = c;
    }
    t.explanation = j.value("explanation", std::string{});
    if (j.contains("attributes") && !j["attributes"].is_null()) {
      t.attributes = j["attributes"].get<std::vector<std::string>>();
    }
    if (j.contains("partner") && !j["partner"].is_null()) {
      t.partner = j["partner"].get<std::string>();
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "qid" || key == "doc_id" || key == "label" || key == "confidence" ||
          key == "explanation" || key == "attributes" || key == "partner") {
        continue;
      }
      t.extra.emplace(key, value.dump());
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_triplets(const std::filesystem::path& path,
                    std::span<const AnnotationTriplet> triplets) {
  auto out = open_out(path);
  for (const auto& t : triplets) {
    json j;
    j["qid"] = t.qid;
    j["doc_id"] = t.doc_id;
    j["label"] = t.label;
    if (t.confidence) j["confidence"] = *t.confidence;
    j["explanation"] = t.explanation;
    if (t.attributes) j["attributes"] = *t.attributes;
    if (t.partner) j["partner"] = *t.partner;
    for (const auto& [key, value] : t.extra) j[key] = json::parse(value);
    out << j.dump() << '\n';
  }
}

std::map<std::string, std::vector<std::string>> run_doc_ids_by_query(const Run& run) {
  std::map<std::string, std::vector<std::pair<int, std::string>>> ranked;
  for (const auto& e : run) ranked[e.qid].emplace_back(e.rank, e.doc_id);
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [qid, entries] : ranked) {
    std::sort(entries.begin(), entries.end());
    auto& docs = out[qid];
    docs.reserve(entries.size());
    for (auto& [rank, doc] : entries) docs.push_back(std::move(doc));
  }
  return out;
}

Product truncate_description(const Product& product, std::size_t max_tokens) {
  if (max_tokens == 0) throw ValidationError("max_tokens must be >= 1");
  const std::string& d = product.description;
  std::size_t count = 0;
  std::size_t i = 0;
  std::size_t end = 0;
  while (i < d.size()) {
    while (i < d.size() && std::isspace(static_cast<unsigned char>(d[i]))) ++i;
    if (i == d.size()) break;
    while (i < d.size() && !std::isspace(static_cast<unsigned char>(d[i]))) ++i;
    ++count;
    end = i;
    if (count == max_tokens) break;
  }
  if (count < max_tokens || end == d.size()) return product;
  Product out = product;
  out.description = d.substr(0, end);
  return out;
}

std::map<int, std::size_t> label_distribution(std::span<const AnnotationTriplet> triplets) {
  std::map<int, std::size_t> counts;
  for (int g = kMinGrade; g <= kMaxGrade; ++g) counts[g] = 0;
  for (const auto& t : triplets) ++counts[t.label];
  return counts;
}

}  // namespace superb
