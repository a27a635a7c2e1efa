#include "factloop/llm_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <thread>

#include "factloop/errors.hpp"
#include "factloop/model_builder.hpp"
#include "text.hpp"

namespace factloop {

void GenerationRequest::validate() const {
  if (prompt.empty()) throw ContractViolation("generation prompt is empty");
  if (!(temperature >= 0.0)) throw ContractViolation("temperature must be >= 0");
  if (max_tokens <= 0) throw ContractViolation("max_tokens must be positive");
}

std::vector<SearchResult> search(SearchProvider& provider, std::string_view query, std::size_t k) {
  if (detail::trim(query).empty()) throw ContractViolation("search query is empty");
  if (k == 0) throw ContractViolation("k must be positive");
  std::vector<SearchResult> raw = provider.search(std::string(query), k);
  std::vector<SearchResult> out;
  std::set<std::string> links;
  for (SearchResult& r : raw) {
    if (out.size() == k) break;
    if (!links.insert(r.link).second) continue;
    if (detail::utf8_length(r.fetched_body) > kMaxContextBody)
      r.fetched_body = detail::utf8_truncate(r.fetched_body, kMaxContextBody);
    out.push_back(std::move(r));
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

nlohmann::json canonical_request(const GenerationRequest& request) {
  nlohmann::json j;
  j["kind"] = "generate";
  j["model"] = request.model_name;
  j["prompt"] = request.prompt;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  j["seed"] = request.seed ? nlohmann::json(*request.seed) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json canonical_search(std::string_view query, std::size_t k) {
  return nlohmann::json{{"kind", "search"}, {"query", std::string(query)}, {"k", k}};
}

// nlohmann::json objects are key-sorted, so dump() is canonical.
std::string request_key(const GenerationRequest& request) {
  return sha256_hex(canonical_request(request).dump());
}

std::string search_key(std::string_view query, std::size_t k) {
  return sha256_hex(canonical_search(query, k).dump());
}

StoreMode parse_store_mode(std::string_view name) {
  if (name == "live") return StoreMode::Live;
  if (name == "record") return StoreMode::Record;
  if (name == "replay") return StoreMode::Replay;
  if (name == "cache") return StoreMode::Cache;
  throw ContractViolation("unknown store mode: " + std::string(name));
}

std::string_view store_mode_name(StoreMode mode) noexcept {
  switch (mode) {
    case StoreMode::Live: return "live";
    case StoreMode::Record: return "record";
    case StoreMode::Replay: return "replay";
    case StoreMode::Cache: return "cache";
  }
  return "";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ResponseStore::ResponseStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<CacheEntry> ResponseStore::load(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt store entry " + key + ": " + e.what(), "");
  }
  CacheEntry entry;
  entry.key = key;
  entry.value = j.at("response").get<std::string>();
  entry.created_at = j.value("created_at", "");
  return entry;
}

void ResponseStore::save(const CacheEntry& entry, const nlohmann::json& request,
                         std::string_view kind) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  nlohmann::json j;
  j["key"] = entry.key;
  j["kind"] = std::string(kind);
  j["request"] = request;
  j["response"] = entry.value;
  j["created_at"] = entry.created_at;

  std::ostringstream tag;
  tag << std::this_thread::get_id() << '.' << tmp_counter_.fetch_add(1);
  const auto tmp = dir_ / ("." + entry.key + "." + tag.str() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TransportError("cannot write store entry " + tmp.string(), false);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir_ / (entry.key + ".json"), ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw TransportError("cannot commit store entry " + entry.key, false);
  }
}

std::size_t ResponseStore::size() const {
  std::error_code ec;
  std::size_t n = 0;
  for (std::filesystem::directory_iterator it(dir_, ec), end; !ec && it != end; it.increment(ec))
    if (it->path().extension() == ".json") ++n;
  return n;
}

namespace {

template <class Live, class Call>
std::string through_store(StoreMode mode, const std::shared_ptr<Live>& live,
                          const std::shared_ptr<ResponseStore>& store, StoreStats& stats,
                          const std::string& key, const nlohmann::json& request,
                          std::string_view kind, Call call) {
  if (mode != StoreMode::Live && !store) throw ContractViolation("store mode requires a store");
  if (mode == StoreMode::Replay || mode == StoreMode::Cache) {
    if (auto hit = store->load(key)) {
      ++stats.hits;
      return hit->value;
    }
    if (mode == StoreMode::Replay)
      throw ReplayMissError(key, "no recorded " + std::string(kind) + " response for key " + key);
  }
  if (!live) throw ContractViolation("no live client configured");
  ++stats.live_calls;
  std::string value = call();
  if (mode == StoreMode::Record || mode == StoreMode::Cache) {
    store->save(CacheEntry{key, value, utc_timestamp()}, request, kind);
    ++stats.writes;
  }
  return value;
}

}  // namespace

StoredGenerator::StoredGenerator(std::shared_ptr<TextGenerator> live,
                                 std::shared_ptr<ResponseStore> store, StoreMode mode)
    : live_(std::move(live)), store_(std::move(store)), mode_(mode) {}

std::string StoredGenerator::generate(const GenerationRequest& request) {
  request.validate();
  return through_store(mode_, live_, store_, stats_, request_key(request),
                       canonical_request(request), "generate",
                       [&] { return live_->generate(request); });
}

nlohmann::json to_json(const SearchResult& r) {
  return nlohmann::json{{"title", r.title},
                        {"link", r.link},
                        {"snippet", r.snippet},
                        {"fetched_body", r.fetched_body}};
}

SearchResult search_result_from_json(const nlohmann::json& j) {
  return SearchResult{j.value("title", ""), j.value("link", ""), j.value("snippet", ""),
                      j.value("fetched_body", "")};
}

StoredSearch::StoredSearch(std::shared_ptr<SearchProvider> live,
                           std::shared_ptr<ResponseStore> store, StoreMode mode)
    : live_(std::move(live)), store_(std::move(store)), mode_(mode) {}

std::vector<SearchResult> StoredSearch::search(const std::string& query, std::size_t k) {
  const std::string value =
      through_store(mode_, live_, store_, stats_, search_key(query, k), canonical_search(query, k),
                    "search", [&] {
                      nlohmann::json arr = nlohmann::json::array();
                      for (const SearchResult& r : live_->search(query, k)) arr.push_back(to_json(r));
                      return arr.dump();
                    });
  std::vector<SearchResult> out;
  for (const auto& j : nlohmann::json::parse(value)) out.push_back(search_result_from_json(j));
  return out;
}

std::string with_retries(const RetryPolicy& policy, const std::function<std::string()>& call) {
  const int attempts = std::max(1, policy.attempts);
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<std::chrono::milliseconds::rep>(backoff.count() * policy.multiplier));
  }
}

std::string html_to_text(std::string_view html) {
  std::string text;
  text.reserve(html.size());
  const std::string lower = detail::to_lower(html);
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      text.push_back(html[i++]);
      continue;
    }
    for (const char* block : {"script", "style"}) {
      const std::string open = std::string("<") + block;
      if (lower.compare(i, open.size(), open) == 0) {
        const std::size_t end = lower.find(std::string("</") + block, i);
        i = end == std::string::npos ? html.size() : end;
        break;
      }
    }
    const std::size_t close = html.find('>', i);
    if (close == std::string_view::npos) break;
    i = close + 1;
    text.push_back(' ');
  }
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"},
      {"&apos;", "'"}, {"&nbsp;", " "}};
  std::string decoded;
  decoded.reserve(text.size());
  for (std::size_t p = 0; p < text.size();) {
    bool hit = false;
    if (text[p] == '&') {
      for (const auto& [entity, value] : kEntities) {
        if (text.compare(p, entity.size(), entity) == 0) {
          decoded += value;
          p += entity.size();
          hit = true;
          break;
        }
      }
    }
    if (!hit) decoded.push_back(text[p++]);
  }
  return detail::squash_whitespace(decoded);
}

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

EndpointConfig generation_endpoint_from_env() {
  EndpointConfig c;
  c.base_url = env_or("FACTLOOP_LLM_BASE_URL", "https://api.openai.com/v1");
  c.api_key = env_or("FACTLOOP_LLM_API_KEY", env_or("OPENAI_API_KEY", ""));
  return c;
}

EndpointConfig search_endpoint_from_env() {
  EndpointConfig c;
  c.base_url = env_or("FACTLOOP_SEARCH_BASE_URL", "https://google.serper.dev");
  c.api_key = env_or("SERPER_API_KEY", "");
  return c;
}

}  // namespace factloop
