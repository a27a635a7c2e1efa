#pragma once

// Clients for text generation and web search, plus the content-addressed
// response store used for caching and record/replay.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace factloop {

struct GenerationRequest {
  std::string model_name;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;

  /// Throws ContractViolation for an empty prompt, negative temperature or
  /// non-positive max_tokens.
  void validate() const;
};

/// One organic search hit. fetched_body holds at most kMaxContextBody
/// characters of the linked page.
struct SearchResult {
  std::string title;
  std::string link;
  std::string snippet;
  std::string fetched_body;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

struct CacheEntry {
  std::string key;         // hex SHA-256 of the canonical request
  std::string value;       // serialized response
  std::string created_at;  // ISO-8601 UTC
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  /// Raw provider results for `query`; may return more or fewer than k.
  virtual std::vector<SearchResult> search(const std::string& query, std::size_t k) = 0;
};

/// Default number of search results kept per query.
inline constexpr std::size_t kDefaultSearchResults = 3;

/// Provider call followed by link de-duplication, body capping and
/// truncation to the first k results. An empty result list is not an error.
std::vector<SearchResult> search(SearchProvider& provider, std::string_view query, std::size_t k);

std::string sha256_hex(std::string_view data);

/// Canonical JSON of a request; every field participates.
nlohmann::json canonical_request(const GenerationRequest& request);
nlohmann::json canonical_search(std::string_view query, std::size_t k);
std::string request_key(const GenerationRequest& request);
std::string search_key(std::string_view query, std::size_t k);

enum class StoreMode {
  Live,    // no store
  Record,  // always call the service, write every response
  Replay,  // only read; a missing entry is a ReplayMissError
  Cache    // read when present, otherwise call and write
};

StoreMode parse_store_mode(std::string_view name);
std::string_view store_mode_name(StoreMode mode) noexcept;

/// Directory of <key>.json files. Safe for concurrent readers and writers;
/// writes go through a temporary file and an atomic rename.
class ResponseStore {
 public:
  explicit ResponseStore(std::filesystem::path dir);

  const std::filesystem::path& directory() const noexcept { return dir_; }
  std::optional<CacheEntry> load(const std::string& key) const;
  void save(const CacheEntry& entry, const nlohmann::json& request, std::string_view kind);
  std::size_t size() const;

 private:
  std::filesystem::path dir_;
  mutable std::atomic<std::uint64_t> tmp_counter_{0};
};

std::string utc_timestamp();

struct StoreStats {
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> live_calls{0};
  std::atomic<std::size_t> writes{0};
};

/// Generator routed through a ResponseStore according to `mode`. `live` may
/// be null in Replay mode.
class StoredGenerator : public TextGenerator {
 public:
  StoredGenerator(std::shared_ptr<TextGenerator> live, std::shared_ptr<ResponseStore> store,
                  StoreMode mode);
  std::string generate(const GenerationRequest& request) override;
  const StoreStats& stats() const noexcept { return stats_; }

 private:
  std::shared_ptr<TextGenerator> live_;
  std::shared_ptr<ResponseStore> store_;
  StoreMode mode_;
  StoreStats stats_;
};

class StoredSearch : public SearchProvider {
 public:
  StoredSearch(std::shared_ptr<SearchProvider> live, std::shared_ptr<ResponseStore> store,
               StoreMode mode);
  std::vector<SearchResult> search(const std::string& query, std::size_t k) override;
  const StoreStats& stats() const noexcept { return stats_; }

 private:
  std::shared_ptr<SearchProvider> live_;
  std::shared_ptr<ResponseStore> store_;
  StoreMode mode_;
  StoreStats stats_;
};

nlohmann::json to_json(const SearchResult& r);
SearchResult search_result_from_json(const nlohmann::json& j);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

/// Runs `call`, repeating it after exponential backoff while it throws a
/// retryable TransportError. The last error propagates once attempts run out.
std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& call);

struct EndpointConfig {
  std::string base_url;  // e.g. https://api.openai.com/v1 or https://google.serper.dev
  std::string api_key;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
  std::size_t max_in_flight = 8;  // concurrent requests per client
};

/// Reads FACTLOOP_LLM_BASE_URL / FACTLOOP_LLM_API_KEY.
EndpointConfig generation_endpoint_from_env();
/// Reads FACTLOOP_SEARCH_BASE_URL (default https://google.serper.dev) and SERPER_API_KEY.
EndpointConfig search_endpoint_from_env();

/// OpenAI-compatible chat-completion client (POST <base>/chat/completions).
class OpenAiChatGenerator : public TextGenerator {
 public:
  explicit OpenAiChatGenerator(EndpointConfig config);
  ~OpenAiChatGenerator() override;
  std::string generate(const GenerationRequest& request) override;

  static nlohmann::json request_body(const GenerationRequest& request);
  /// Extracts choices[0].message.content; FormatError otherwise.
  static std::string parse_response(const std::string& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serper-compatible search client (POST <base>/search, X-API-KEY header).
/// When fetch_pages is set, each hit's page is downloaded and reduced to at
/// most kMaxContextBody characters of text.
class SerperSearch : public SearchProvider {
 public:
  SerperSearch(EndpointConfig config, bool fetch_pages);
  ~SerperSearch() override;
  std::vector<SearchResult> search(const std::string& query, std::size_t k) override;

  static nlohmann::json request_body(std::string_view query, std::size_t k);
  static std::vector<SearchResult> parse_response(const std::string& body);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Visible text of an HTML page: scripts/styles and tags dropped, common
/// entities decoded, whitespace squashed.
std::string html_to_text(std::string_view html);

}  // namespace factloop
