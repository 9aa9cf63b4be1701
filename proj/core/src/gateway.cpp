#include "superb/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "superb/errors.hpp"
#include "superb/prompt.hpp"
#include "superb/retrieval.hpp"
#include "superb/util.hpp"

namespace superb {

namespace {

std::string escape_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default: out += s[i];
    }
  }
  return out;
}

void check_request(const CompletionRequest& request) {
  if (request.prompt.empty()) throw ValidationError("completion request has an empty prompt");
  if (request.temperature < 0.0) throw ValidationError("temperature must be >= 0");
}

}  // namespace

ProviderKind provider_kind_from_string(const std::string& name) {
  if (name == "network") return ProviderKind::network;
  if (name == "replay") return ProviderKind::replay;
  if (name == "oracle") return ProviderKind::oracle;
  throw ValidationError("unknown provider kind '" + name + "'");
}

std::string to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::network: return "network";
    case ProviderKind::replay: return "replay";
    case ProviderKind::oracle: return "oracle";
  }
  return {};
}

void validate(const ProviderConfig& config) {
  if (config.retries < 0) throw ValidationError("retries must be >= 0");
  if (config.max_inflight < 1) throw ValidationError("max_inflight must be >= 1");
  if (config.kind != ProviderKind::oracle && config.endpoint.empty()) {
    throw ValidationError("provider endpoint is required");
  }
}

std::string Provider::complete(const CompletionRequest& request) {
  check_request(request);
  auto text = do_complete(request);
  calls_.fetch_add(1);
  return text;
}

// --- replay -------------------------------------------------------------

ReplayProvider::ReplayProvider(std::filesystem::path store, bool writable)
    : store_(std::move(store)), writable_(writable) {
  std::ifstream in(store_);
  if (!in) return;  // a missing store is just empty
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto space = line.find(' ');
    if (space == std::string::npos) throw DataError(store_.string() + ": bad fixture line");
    fixtures_[line.substr(0, space)] = unescape_line(std::string_view(line).substr(space + 1));
  }
}

std::size_t ReplayProvider::fixture_count() const {
  std::shared_lock lock(mutex_);
  return fixtures_.size();
}

std::string ReplayProvider::do_complete(const CompletionRequest& request) {
  auto key = prompt_hash(request.prompt);
  std::shared_lock lock(mutex_);
  auto it = fixtures_.find(key);
  if (it == fixtures_.end()) {
    throw ProviderError(ProviderError::Kind::fixture_miss,
                        "no fixture for prompt " + key + " in " + store_.string());
  }
  return it->second;
}

void ReplayProvider::record(const std::string& prompt, const std::string& response) {
  if (!writable_) {
    throw ProviderError(ProviderError::Kind::store_unwritable,
                        store_.string() + " is opened read-only");
  }
  auto key = prompt_hash(prompt);
  std::unique_lock lock(mutex_);
  std::ofstream out(store_, std::ios::app);
  if (!out) {
    throw ProviderError(ProviderError::Kind::store_unwritable,
                        "cannot append to " + store_.string());
  }
  out << key << ' ' << escape_line(response) << '\n';
  if (!out.flush()) {
    throw ProviderError(ProviderError::Kind::store_unwritable,
                        "write failed for " + store_.string());
  }
  fixtures_[key] = response;
}

void record_fixture(const ProviderConfig& config, const CompletionRequest& request,
                    const std::string& response) {
  if (config.kind != ProviderKind::replay) {
    throw ValidationError("record_fixture needs a replay provider config");
  }
  check_request(request);
  ReplayProvider store(config.endpoint);
  store.record(request.prompt, response);
}

std::string RecordingProvider::do_complete(const CompletionRequest& request) {
  auto response = inner_.complete(request);
  store_->record(request.prompt, response);
  return response;
}

// --- oracle -------------------------------------------------------------

namespace {

enum class PromptShape {
  superlative_gen,
  deliberate_attrs,
  keyword_expand,
  pointwise,
  deliberated_pointwise,
  pointwise_confidence,
  pairwise,
  listwise_annotate,
  listwise_rank,
};

PromptShape classify_prompt(const std::string& prompt) {
  if (prompt.find("superlative versions") != std::string::npos) {
    return PromptShape::superlative_gen;
  }
  if (prompt.find("define the ideal requirements") != std::string::npos) {
    return PromptShape::deliberate_attrs;
  }
  if (prompt.find("query expansion keywords") != std::string::npos) {
    return PromptShape::keyword_expand;
  }
  if (prompt.find("confidence score for your prediction") != std::string::npos) {
    return PromptShape::pointwise_confidence;
  }
  if (prompt.find("rank the items using the below taxonomy") != std::string::npos) {
    return PromptShape::listwise_rank;
  }
  if (prompt.find("classify each item into one of the taxonomy categories") != std::string::npos) {
    return PromptShape::listwise_annotate;
  }
  if (prompt.find("descriptions of two items") != std::string::npos) {
    return PromptShape::pairwise;
  }
  if (prompt.find("rank the item into one of the taxonomy categories") != std::string::npos) {
    return PromptShape::deliberated_pointwise;
  }
  if (prompt.find("classify the item into one of the taxonomy categories") != std::string::npos) {
    return PromptShape::pointwise;
  }
  throw ProviderError(ProviderError::Kind::bad_response,
                      "oracle cannot classify prompt " + prompt_hash(prompt));
}

std::vector<std::string> prompt_lines(const std::string& prompt) {
  std::vector<std::string> lines;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string find_query_line(const std::vector<std::string>& lines) {
  for (const auto& line : lines) {
    if (line.starts_with("User Query: ")) return line.substr(12);
  }
  return {};
}

// Title text of each "Item [k] Description: Title: ..." line, in order.
std::vector<std::string> find_item_titles(const std::vector<std::string>& lines) {
  std::vector<std::string> titles;
  for (const auto& line : lines) {
    if (!line.starts_with("Item ")) continue;
    auto marker = line.find("Description: Title: ");
    if (marker == std::string::npos) continue;
    auto rest = line.substr(marker + 20);
    auto end = rest.find(" Description: ");
    titles.push_back(end == std::string::npos ? rest : rest.substr(0, end));
  }
  return titles;
}

}  // namespace

OracleWorld OracleWorld::from(std::span<const Query> queries, const ProductCollection& products,
                              const Qrels& grades) {
  OracleWorld world;
  world.grades = grades;
  for (const auto& q : queries) {
    if (!world.qid_by_text.emplace(q.text, q.qid).second) {
      throw ValidationError("oracle world needs unique query texts: '" + q.text + "'");
    }
  }
  for (const auto& p : products) {
    if (!world.doc_by_title.emplace(p.title, p.doc_id).second) {
      throw ValidationError("oracle world needs unique product titles: '" + p.title + "'");
    }
  }
  return world;
}

OracleProvider::OracleProvider(OracleWorld world, OracleOptions options)
    : world_(std::move(world)), options_(options) {
  if (options_.corruption_rate < 0.0 || options_.corruption_rate > 1.0) {
    throw ValidationError("corruption_rate must be in [0,1]");
  }
}

std::vector<std::string> OracleProvider::expected_attributes(const std::string& query) {
  std::vector<std::string> attrs;
  for (const auto& tok : tokenize(query)) {
    if (is_stopword(tok)) continue;
    attrs.push_back("premium " + tok);
    if (attrs.size() == 4) break;
  }
  if (attrs.empty()) attrs.push_back("high overall quality");
  return attrs;
}

std::vector<std::string> OracleProvider::expected_superlatives(const std::string& query) {
  return {"best " + query + " for everyday use", "most durable " + query + " for travel",
          "best " + query + " for beginners"};
}

std::vector<std::string> OracleProvider::expected_keywords(const std::string& query) {
  std::vector<std::string> keywords = {"premium", "quality", "durable"};
  auto tokens = tokenize(query);
  if (!tokens.empty()) keywords.push_back(tokens.back() + "s");
  return keywords;
}

int OracleProvider::expected_confidence(const std::string& qid, const std::string& doc_id) const {
  auto h = fnv1a64(qid + "\x1f" + doc_id) ^ options_.seed;
  return 1 + static_cast<int>(h % 9);
}

std::string OracleProvider::do_complete(const CompletionRequest& request) {
  const auto shape = classify_prompt(request.prompt);
  const auto lines = prompt_lines(request.prompt);
  SplitMix64 rng(options_.seed ^ fnv1a64(request.prompt));

  auto lookup_qid = [&](const std::string& text) {
    auto it = world_.qid_by_text.find(text);
    if (it == world_.qid_by_text.end()) {
      throw ProviderError(ProviderError::Kind::bad_response,
                          "oracle has no query '" + text + "'");
    }
    return it->second;
  };
  auto lookup_doc = [&](const std::string& title) {
    auto it = world_.doc_by_title.find(title);
    if (it == world_.doc_by_title.end()) {
      throw ProviderError(ProviderError::Kind::bad_response,
                          "oracle has no product titled '" + title + "'");
    }
    return it->second;
  };

  // At most one corruption per response, chosen among the applicable modes.
  const bool corrupt = options_.corruption_rate > 0.0 && rng.unit() < options_.corruption_rate;
  auto pick_mode = [&](std::initializer_list<CorruptionMode> applicable) -> unsigned {
    if (!corrupt) return 0;
    std::vector<unsigned> enabled;
    for (auto mode : applicable) {
      if (options_.corruption_modes & static_cast<unsigned>(mode)) {
        enabled.push_back(static_cast<unsigned>(mode));
      }
    }
    if (enabled.empty()) return 0;
    return enabled[static_cast<std::size_t>(rng.below(enabled.size()))];
  };
  constexpr const char* kProse = "Sure, here is my assessment of the listed products.";
  auto with_prose = [&](std::string text) { return std::string(kProse) + "\n" + text; };

  switch (shape) {
    case PromptShape::superlative_gen: {
      // Query follows the final "Input Query: " line.
      std::string query;
      for (const auto& line : lines) {
        if (line.starts_with("Input Query: ")) query = line.substr(13);
      }
      nlohmann::json j;
      j["superlatives"] = expected_superlatives(query);
      std::string out = j.dump();
      if (pick_mode({CorruptionMode::leading_prose}) != 0) out = with_prose(out);
      return out;
    }
    case PromptShape::deliberate_attrs: {
      // The deliberation template ends with the bare query line.
      std::string query;
      for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (!trim(*it).empty()) {
          query = *it;
          break;
        }
      }
      nlohmann::json j;
      j["attributes"] = expected_attributes(query);
      std::string out = j.dump();
      if (pick_mode({CorruptionMode::leading_prose}) != 0) out = with_prose(out);
      return out;
    }
    case PromptShape::keyword_expand: {
      std::string query = find_query_line(lines);
      nlohmann::json j;
      j["keywords"] = expected_keywords(query);
      return j.dump();
    }
    case PromptShape::pointwise:
    case PromptShape::deliberated_pointwise: {
      auto qid = lookup_qid(find_query_line(lines));
      auto titles = find_item_titles(lines);
      if (titles.size() != 1) {
        throw ProviderError(ProviderError::Kind::bad_response, "expected one item line");
      }
      int grade = world_.grades.grade_or_zero(qid, lookup_doc(titles[0]));
      std::string out =
          std::to_string(grade) + "\nthe item matches the query requirements to this degree.";
      if (pick_mode({CorruptionMode::leading_prose}) != 0) out = with_prose(out);
      return out;
    }
    case PromptShape::pointwise_confidence: {
      auto qid = lookup_qid(find_query_line(lines));
      auto titles = find_item_titles(lines);
      if (titles.size() != 1) {
        throw ProviderError(ProviderError::Kind::bad_response, "expected one item line");
      }
      auto doc = lookup_doc(titles[0]);
      int grade = world_.grades.grade_or_zero(qid, doc);
      std::string out = std::to_string(grade) + " " + std::to_string(expected_confidence(qid, doc)) +
                        " judged against the ideal attributes.";
      if (pick_mode({CorruptionMode::leading_prose}) != 0) out = with_prose(out);
      return out;
    }
    case PromptShape::pairwise:
    case PromptShape::listwise_annotate: {
      auto qid = lookup_qid(find_query_line(lines));
      auto titles = find_item_titles(lines);
      if (titles.empty()) {
        throw ProviderError(ProviderError::Kind::bad_response, "no item lines found");
      }
      std::vector<int> grades;
      grades.reserve(titles.size());
      for (const auto& title : titles) {
        grades.push_back(world_.grades.grade_or_zero(qid, lookup_doc(title)));
      }
      const auto mode = pick_mode({CorruptionMode::wrong_count, CorruptionMode::leading_prose});
      if (mode == static_cast<unsigned>(CorruptionMode::wrong_count)) grades.pop_back();
      std::string out;
      for (std::size_t i = 0; i < grades.size(); ++i) {
        if (i > 0) out += ' ';
        out += std::to_string(grades[i]);
      }
      out += "\ngrades reflect overall suitability for the query.";
      if (mode == static_cast<unsigned>(CorruptionMode::leading_prose)) out = with_prose(out);
      return out;
    }
    case PromptShape::listwise_rank: {
      auto qid = lookup_qid(find_query_line(lines));
      auto titles = find_item_titles(lines);
      if (titles.empty()) {
        throw ProviderError(ProviderError::Kind::bad_response, "no item lines found");
      }
      const std::size_t n = titles.size();
      std::vector<double> score(n);
      for (std::size_t i = 0; i < n; ++i) {
        double grade = world_.grades.grade_or_zero(qid, lookup_doc(titles[i]));
        double boost = 0.0;
        if (n > 1) {
          boost = options_.position_bias * static_cast<double>(n - 1 - i) /
                  static_cast<double>(n - 1);
        }
        score[i] = grade + boost;
      }
      std::vector<int> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i + 1);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return score[static_cast<std::size_t>(a - 1)] > score[static_cast<std::size_t>(b - 1)];
      });
      const auto mode = pick_mode(n >= 2 ? std::initializer_list<CorruptionMode>{
                                               CorruptionMode::dropped_id,
                                               CorruptionMode::duplicated_id,
                                               CorruptionMode::wrong_count,
                                               CorruptionMode::leading_prose}
                                         : std::initializer_list<CorruptionMode>{
                                               CorruptionMode::dropped_id,
                                               CorruptionMode::leading_prose});
      if (mode == static_cast<unsigned>(CorruptionMode::dropped_id) ||
          mode == static_cast<unsigned>(CorruptionMode::wrong_count)) {
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(rng.below(order.size())));
      } else if (mode == static_cast<unsigned>(CorruptionMode::duplicated_id)) {
        auto from = rng.below(order.size());
        auto to = rng.below(order.size());
        order[static_cast<std::size_t>(to)] = order[static_cast<std::size_t>(from)];
      }
      std::string out;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) out += ' ';
        out += std::to_string(order[i]);
      }
      out += "\nranked by overall suitability.";
      if (mode == static_cast<unsigned>(CorruptionMode::leading_prose)) out = with_prose(out);
      return out;
    }
  }
  throw ProviderError(ProviderError::Kind::bad_response, "unreachable prompt shape");
}

// --- network ------------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string scheme;
  std::string host_port;  // host[:port], as httplib expects
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("bad endpoint URL '" + url + "'");
  ParsedUrl out;
  out.scheme = url.substr(0, scheme_end);
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  out.host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (out.scheme != "http" && out.scheme != "https") {
    throw ValidationError("unsupported scheme '" + out.scheme + "'");
  }
  if (out.host_port.empty()) throw ValidationError("bad endpoint URL '" + url + "'");
  return out;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

void NetworkProvider::Gate::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void NetworkProvider::Gate::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

NetworkProvider::NetworkProvider(ProviderConfig config)
    : config_(std::move(config)), gate_(config_.max_inflight) {
  validate(config_);
  parse_url(config_.endpoint);  // fail fast on malformed endpoints
}

std::string NetworkProvider::do_complete(const CompletionRequest& request) {
  std::string credential;
  if (!config_.credential_env.empty()) {
    const char* value = std::getenv(config_.credential_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw ProviderError(ProviderError::Kind::credential_missing,
                          "environment variable " + config_.credential_env + " is not set");
    }
    credential = value;
  }

  const auto url = parse_url(config_.endpoint);
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!credential.empty()) headers.emplace("Authorization", "Bearer " + credential);
  if (!request.request_id.empty()) headers.emplace("X-Request-Id", request.request_id);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      auto delay = config_.backoff_base * (1LL << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }

    gate_.acquire();
    httplib::Result result;
    if (url.scheme == "https") {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
      httplib::SSLClient client(url.host_port);
      result = client.Post(url.path, headers, payload, "application/json");
#else
      gate_.release();
      throw ValidationError("https endpoints need TLS support compiled in");
#endif
    } else {
      httplib::Client client(url.host_port);
      result = client.Post(url.path, headers, payload, "application/json");
    }
    gate_.release();

    if (!result) {
      last_error = "connection error: " + httplib::to_string(result.error());
      continue;
    }
    if (retryable_status(result->status)) {
      last_error = "transient HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw ProviderError(ProviderError::Kind::bad_response,
                          "HTTP " + std::to_string(result->status) + ": " + result->body);
    }
    auto j = nlohmann::json::parse(result->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      throw ProviderError(ProviderError::Kind::bad_response,
                          "malformed completion response: " + result->body);
    }
    const auto& first = j["choices"][0];
    if (first.contains("message") && first["message"].contains("content")) {
      return first["message"]["content"].get<std::string>();
    }
    if (first.contains("text")) return first["text"].get<std::string>();
    throw ProviderError(ProviderError::Kind::bad_response,
                        "completion response has no candidate text");
  }
  throw ProviderError(ProviderError::Kind::retries_exhausted,
                      "gave up after " + std::to_string(config_.retries + 1) + " attempts (" +
                          last_error + ")");
}

}  // namespace superb
