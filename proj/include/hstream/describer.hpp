#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <string>
#include <string_view>
#include <vector>

#include "hstream/context_memory.hpp"
#include "hstream/core_model.hpp"
#include "hstream/http.hpp"

namespace hstream {

struct DescriberRequest {
  HierarchyLevel level = HierarchyLevel::Substep;
  std::string prompt;
  std::vector<std::string> frame_handles;  // timestamp order
  // Goal request built without any step predictions.
  bool empty_goal_history = false;
};

struct DescriberResponse {
  std::string short_form;
  std::string long_form_before;
  std::string long_form_after;

  bool operator==(const DescriberResponse&) const = default;
};

std::string_view prompt_template(HierarchyLevel level);

// Oldest-first list rendered as a JSON array of strings ("[]" when empty).
std::string serialize_prediction_list(const std::vector<std::string>& items);

DescriberRequest build_request(const RetrievalBundle& bundle);

// Extracts the labelled answer lines (case-insensitive). A lone
// "Answer: <text>" line is read as a goal answer. Throws ParseError otherwise.
DescriberResponse parse_response(std::string_view text);

// Renders a response in the labelled output shape expected by parse_response.
std::string format_response(const DescriberResponse& r, HierarchyLevel level);

// Deterministic text derived from the bundle's level, interval and frame count.
DescriberResponse mock_describe(const RetrievalBundle& bundle);

class Describer {
 public:
  virtual ~Describer() = default;
  virtual DescriberResponse describe(const RetrievalBundle& bundle,
                                     const DescriberRequest& request) = 0;
};

class MockDescriber final : public Describer {
 public:
  DescriberResponse describe(const RetrievalBundle& bundle, const DescriberRequest&) override {
    ++calls_;
    return mock_describe(bundle);
  }
  std::size_t calls() const { return calls_; }

 private:
  std::atomic<std::size_t> calls_{0};
};

enum class FrameEncoding { Base64, Url };

struct HttpDescriberConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "HSTREAM_API_KEY";
  FrameEncoding frame_encoding = FrameEncoding::Base64;
  std::string image_mime = "image/jpeg";
  std::size_t in_flight_cap = 4;
  RetryPolicy retry;
};

struct HttpCallStats {
  std::size_t retries = 0;
};

// One chat-completions exchange with retries on transport errors, 5xx replies
// and unparseable answers.
DescriberResponse http_describe(const HttpDescriberConfig& cfg, const std::string& api_key,
                                const DescriberRequest& request, HttpCallStats* stats = nullptr);

// Text of the first choice of a chat-completions reply. Throws ParseError.
std::string chat_reply_text(const std::string& body);

// Chat-completions request body for a describer request.
std::string chat_request_body(const HttpDescriberConfig& cfg, const DescriberRequest& request);

// Thread-safe; at most cfg.in_flight_cap requests run at once.
class HttpDescriber final : public Describer {
 public:
  explicit HttpDescriber(HttpDescriberConfig cfg);
  DescriberResponse describe(const RetrievalBundle& bundle,
                             const DescriberRequest& request) override;

 private:
  HttpDescriberConfig cfg_;
  std::string api_key_;
  std::mutex mutex_;
  std::condition_variable slot_freed_;
  std::size_t in_flight_ = 0;
};

}  // namespace hstream
