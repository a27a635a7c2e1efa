#include <httplib.h>

#include <semaphore>

#include "factloop/errors.hpp"
#include "factloop/llm_io.hpp"
#include "factloop/model_builder.hpp"
#include "text.hpp"

namespace factloop {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ContractViolation("endpoint URL needs a scheme: " + url);
  const std::size_t path = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, path);
  out.prefix = path == std::string::npos ? "" : url.substr(path);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::unique_ptr<httplib::Client> make_client(const std::string& origin,
                                             std::chrono::seconds timeout) {
  auto client = std::make_unique<httplib::Client>(origin);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  client->set_follow_location(true);
  return client;
}

std::string post_json(const EndpointConfig& config, const SplitUrl& url, const std::string& path,
                      const httplib::Headers& headers, const std::string& body) {
  auto client = make_client(url.origin, config.timeout);
  auto res = client->Post(url.prefix + path, headers, body, "application/json");
  if (!res)
    throw TransportError("request to " + url.origin + " failed: " + httplib::to_string(res.error()),
                         true);
  if (res->status != 200)
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + url.origin + url.prefix +
                             path,
                         retryable_status(res->status));
  return res->body;
}

class InFlightGuard {
 public:
  explicit InFlightGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~InFlightGuard() { sem_.release(); }
  InFlightGuard(const InFlightGuard&) = delete;
  InFlightGuard& operator=(const InFlightGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::ptrdiff_t slots(std::size_t cap) {
  if (cap == 0) throw ContractViolation("max_in_flight must be positive");
  return static_cast<std::ptrdiff_t>(cap);
}

}  // namespace

struct OpenAiChatGenerator::Impl {
  EndpointConfig config;
  SplitUrl url;
  std::counting_semaphore<> in_flight;

  explicit Impl(EndpointConfig c)
      : config(std::move(c)), url(split_url(config.base_url)), in_flight(slots(config.max_in_flight)) {}
};

OpenAiChatGenerator::OpenAiChatGenerator(EndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

OpenAiChatGenerator::~OpenAiChatGenerator() = default;

nlohmann::json OpenAiChatGenerator::request_body(const GenerationRequest& request) {
  nlohmann::json body{{"model", request.model_name},
                      {"messages", nlohmann::json::array(
                                       {{{"role", "user"}, {"content", request.prompt}}})},
                      {"temperature", request.temperature},
                      {"max_tokens", request.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::string OpenAiChatGenerator::parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw FormatError("completion content is not a string", body);
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed chat completion: ") + e.what(), body);
  }
}

std::string OpenAiChatGenerator::generate(const GenerationRequest& request) {
  request.validate();
  const std::string payload = request_body(request).dump();
  httplib::Headers headers;
  if (!impl_->config.api_key.empty())
    headers.emplace("Authorization", "Bearer " + impl_->config.api_key);
  InFlightGuard guard(impl_->in_flight);
  const std::string body = with_retries(impl_->config.retry, [&] {
    return post_json(impl_->config, impl_->url, "/chat/completions", headers, payload);
  });
  return parse_response(body);
}

struct SerperSearch::Impl {
  EndpointConfig config;
  SplitUrl url;
  bool fetch_pages;
  std::counting_semaphore<> in_flight;

  Impl(EndpointConfig c, bool fetch)
      : config(std::move(c)),
        url(split_url(config.base_url)),
        fetch_pages(fetch),
        in_flight(slots(config.max_in_flight)) {}

  // Page download failures leave the body empty; the snippet still stands.
  std::string fetch_body(const std::string& link) const {
    try {
      const SplitUrl page = split_url(link);
      auto client = make_client(page.origin, config.timeout);
      auto res = client->Get(page.prefix.empty() ? "/" : page.prefix);
      if (!res || res->status != 200) return {};
      return detail::utf8_truncate(html_to_text(res->body), kMaxContextBody);
    } catch (const std::exception&) {
      return {};
    }
  }
};

SerperSearch::SerperSearch(EndpointConfig config, bool fetch_pages)
    : impl_(std::make_unique<Impl>(std::move(config), fetch_pages)) {}

SerperSearch::~SerperSearch() = default;

nlohmann::json SerperSearch::request_body(std::string_view query, std::size_t k) {
  return nlohmann::json{{"q", std::string(query)}, {"num", k}};
}

std::vector<SearchResult> SerperSearch::parse_response(const std::string& body) {
  std::vector<SearchResult> out;
  try {
    const auto j = nlohmann::json::parse(body);
    if (!j.contains("organic")) return out;
    for (const auto& hit : j.at("organic")) {
      SearchResult r;
      r.title = hit.value("title", "");
      r.link = hit.value("link", "");
      r.snippet = hit.value("snippet", "");
      if (!r.link.empty()) out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed search response: ") + e.what(), body);
  }
  return out;
}

std::vector<SearchResult> SerperSearch::search(const std::string& query, std::size_t k) {
  const std::string payload = request_body(query, k).dump();
  httplib::Headers headers;
  if (!impl_->config.api_key.empty()) headers.emplace("X-API-KEY", impl_->config.api_key);
  std::vector<SearchResult> results;
  {
    InFlightGuard guard(impl_->in_flight);
    results = parse_response(with_retries(impl_->config.retry, [&] {
      return post_json(impl_->config, impl_->url, "/search", headers, payload);
    }));
  }
  if (impl_->fetch_pages) {
    for (std::size_t i = 0; i < results.size() && i < k; ++i) {
      InFlightGuard guard(impl_->in_flight);
      results[i].fetched_body = impl_->fetch_body(results[i].link);
    }
  }
  return results;
}

}  // namespace factloop
