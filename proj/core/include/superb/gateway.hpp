#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "superb/corpus.hpp"

namespace superb {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 1024;
  double temperature = 0.0;  // all annotation/ranking calls default to 0
  std::string request_id;
};

enum class ProviderKind { network, replay, oracle };

ProviderKind provider_kind_from_string(const std::string& name);
std::string to_string(ProviderKind kind);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::replay;
  // network: chat-completions URL; replay: fixtures file path.
  std::string endpoint;
  std::string model;
  std::string credential_env;  // name of the env var holding the API key
  int retries = 2;
  std::chrono::milliseconds backoff_base{200};
  int max_inflight = 4;
};

void validate(const ProviderConfig& config);

class Provider {
public:
  virtual ~Provider() = default;

  std::string complete(const CompletionRequest& request);

  // Completed complete() invocations; drives per-pipeline call accounting.
  std::int64_t calls() const { return calls_.load(); }

protected:
  virtual std::string do_complete(const CompletionRequest& request) = 0;

private:
  std::atomic<std::int64_t> calls_{0};
};

// --- replay -----------------------------------------------------------------

// Fixture store: one record per line, `<sha256-of-prompt> <escaped response>`.
// Later records for the same prompt win.
class ReplayProvider : public Provider {
public:
  explicit ReplayProvider(std::filesystem::path store, bool writable = true);

  void record(const std::string& prompt, const std::string& response);
  std::size_t fixture_count() const;

protected:
  std::string do_complete(const CompletionRequest& request) override;

private:
  std::filesystem::path store_;
  bool writable_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::string> fixtures_;
};

void record_fixture(const ProviderConfig& config, const CompletionRequest& request,
                    const std::string& response);

// Passes calls through and records every (prompt, response) pair; used to
// capture fixtures from a live or oracle backend.
class RecordingProvider : public Provider {
public:
  RecordingProvider(Provider& inner, std::shared_ptr<ReplayProvider> store)
      : inner_(inner), store_(std::move(store)) {}

protected:
  std::string do_complete(const CompletionRequest& request) override;

private:
  Provider& inner_;
  std::shared_ptr<ReplayProvider> store_;
};

// --- oracle -----------------------------------------------------------------

// Ground truth the oracle answers from: hidden grades plus the lookups needed
// to recognize queries and items inside rendered default-template prompts.
struct OracleWorld {
  Qrels grades;
  std::map<std::string, std::string> qid_by_text;
  std::map<std::string, std::string> doc_by_title;

  static OracleWorld from(std::span<const Query> queries, const ProductCollection& products,
                          const Qrels& grades);
};

enum class CorruptionMode : unsigned {
  dropped_id = 1u << 0,
  duplicated_id = 1u << 1,
  wrong_count = 1u << 2,
  leading_prose = 1u << 3,
};

inline constexpr unsigned kAllCorruptionModes = 0xfu;

struct OracleOptions {
  std::uint64_t seed = 0;
  double corruption_rate = 0.0;
  unsigned corruption_modes = kAllCorruptionModes;
  // Blends input position into listwise-rank scores; 0 ranks purely by grade.
  double position_bias = 0.0;
};

// Deterministic test double: synthesizes well-formed responses for every
// default prompt template from the injected ground truth, with optional
// seeded corruption for parser testing.
class OracleProvider : public Provider {
public:
  OracleProvider(OracleWorld world, OracleOptions options = {});

  // The fabricated ground truths, exposed so tests can assert round trips.
  static std::vector<std::string> expected_attributes(const std::string& query);
  static std::vector<std::string> expected_superlatives(const std::string& query);
  static std::vector<std::string> expected_keywords(const std::string& query);
  int expected_confidence(const std::string& qid, const std::string& doc_id) const;

protected:
  std::string do_complete(const CompletionRequest& request) override;

private:
  OracleWorld world_;
  OracleOptions options_;
};

// --- network ----------------------------------------------------------------

// Chat-completions client: POSTs {model, messages, max_tokens, temperature}
// and returns the first candidate's text. Transient failures (connect errors,
// 429, 5xx) are retried with exponential backoff; concurrent calls are capped
// by config.max_inflight.
class NetworkProvider : public Provider {
public:
  explicit NetworkProvider(ProviderConfig config);

protected:
  std::string do_complete(const CompletionRequest& request) override;

private:
  ProviderConfig config_;

  class Gate {
  public:
    explicit Gate(int limit) : limit_(limit) {}
    void acquire();
    void release();

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
  };
  Gate gate_;
};

}  // namespace superb
