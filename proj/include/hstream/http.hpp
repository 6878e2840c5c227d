#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hstream {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct RetryPolicy {
  std::size_t max_retries = 3;
  double initial_backoff_seconds = 0.5;  // doubled after every failed attempt
  double timeout_seconds = 60.0;
};

// POST `body` as JSON to an absolute http(s) URL. Throws TransportError when
// no response is received; any HTTP status is returned to the caller.
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            double timeout_seconds);

// Authorization header for a bearer key; empty key gives no headers.
std::vector<std::pair<std::string, std::string>> auth_headers(const std::string& api_key);

std::string base64_encode(const std::string& bytes);

struct RetryOutcome {
  bool succeeded = false;
  std::size_t retries = 0;
};

// Calls `attempt` until it returns true or the retry budget is spent, sleeping
// with exponential backoff in between.
RetryOutcome run_with_retries(const RetryPolicy& policy, const std::function<bool()>& attempt);

}  // namespace hstream
