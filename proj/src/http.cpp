#include "hstream/http.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "hstream/errors.hpp"

namespace hstream {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            double timeout_seconds) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  if (!client.is_valid()) throw TransportError("unsupported endpoint: " + parts.origin);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(parts.path, h, body, "application/json");
  if (!res) {
    throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

std::vector<std::pair<std::string, std::string>> auth_headers(const std::string& api_key) {
  if (api_key.empty()) return {};
  return {{"Authorization", "Bearer " + api_key}};
}

std::string base64_encode(const std::string& bytes) { return httplib::detail::base64_encode(bytes); }

RetryOutcome run_with_retries(const RetryPolicy& policy, const std::function<bool()>& attempt) {
  double backoff = policy.initial_backoff_seconds;
  for (std::size_t retries = 0;; ++retries) {
    if (attempt()) return {true, retries};
    if (retries >= policy.max_retries) return {false, retries};
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= 2.0;
  }
}

}  // namespace hstream
