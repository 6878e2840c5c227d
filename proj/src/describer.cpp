#include "hstream/describer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/format.hpp"
#include "hstream/prompts.hpp"

namespace hstream {

namespace {

constexpr std::string_view kShortLabel = "short form response:";
constexpr std::string_view kBeforeLabel = "long form response (before revision):";
constexpr std::string_view kAfterLabel = "long form response (after revision):";
constexpr std::string_view kAnswerLabel = "answer:";

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with_label(const std::string& line_lower, std::string_view label) {
  return line_lower.rfind(label, 0) == 0;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string level_word(HierarchyLevel level) { return lower(level_name(level)); }

}  // namespace

std::string_view prompt_template(HierarchyLevel level) {
  switch (level) {
    case HierarchyLevel::Substep:
      return prompts::kSubstepTemplate;
    case HierarchyLevel::Step:
      return prompts::kStepTemplate;
    case HierarchyLevel::Goal:
      return prompts::kGoalTemplate;
  }
  return {};
}

std::string serialize_prediction_list(const std::vector<std::string>& items) {
  return nlohmann::json(items).dump();
}

DescriberRequest build_request(const RetrievalBundle& bundle) {
  DescriberRequest req;
  req.level = bundle.level;
  req.prompt = std::string(prompt_template(bundle.level));
  const auto list = serialize_prediction_list(bundle.prior_predictions);
  if (bundle.level == HierarchyLevel::Goal) {
    replace_all(req.prompt, "{short_form_step}", list);
    req.empty_goal_history = bundle.prior_predictions.empty();
  } else {
    replace_all(req.prompt, "{prediction_list}", list);
  }
  for (const auto& f : bundle.frames) req.frame_handles.push_back(f.handle);
  return req;
}

DescriberResponse parse_response(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) lines.push_back(trim(line));
  }

  auto is_label = [](const std::string& l) {
    return starts_with_label(l, kShortLabel) || starts_with_label(l, kBeforeLabel) ||
           starts_with_label(l, kAfterLabel) || starts_with_label(l, kAnswerLabel);
  };
  // Value after the label, or the next non-label line when the label stands alone.
  auto value_of = [&](std::string_view label) -> std::optional<std::string> {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!starts_with_label(lower(lines[i]), label)) continue;
      auto v = trim(std::string_view(lines[i]).substr(label.size()));
      if (!v.empty()) return v;
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        if (lines[j].empty()) continue;
        if (is_label(lower(lines[j]))) break;
        return lines[j];
      }
      return std::string{};
    }
    return std::nullopt;
  };

  const auto short_form = value_of(kShortLabel);
  const auto before = value_of(kBeforeLabel);
  const auto after = value_of(kAfterLabel);
  if (short_form || before || after) {
    if (!short_form || short_form->empty() || !before || before->empty() || !after ||
        after->empty()) {
      throw ParseError("describer reply lacks one of the labelled answer lines", std::string(text));
    }
    return {*short_form, *before, *after};
  }

  for (const auto& line : lines) {
    if (!starts_with_label(lower(line), kAnswerLabel)) continue;
    auto v = trim(std::string_view(line).substr(kAnswerLabel.size()));
    if (!v.empty()) return {v, {}, {}};
  }
  throw ParseError("describer reply has no recognisable answer", std::string(text));
}

std::string format_response(const DescriberResponse& r, HierarchyLevel level) {
  if (level == HierarchyLevel::Goal) return "Answer: " + r.short_form;
  return "Answer:\nshort form response: " + r.short_form +
         "\nlong form response (before revision): " + r.long_form_before +
         "\nlong form response (after revision): " + r.long_form_after;
}

DescriberResponse mock_describe(const RetrievalBundle& bundle) {
  const auto word = level_word(bundle.level);
  const auto start = format_number(bundle.interval.start);
  const auto end = format_number(bundle.interval.end);
  const auto n = std::to_string(bundle.frames.size());
  DescriberResponse r;
  r.short_form = word + "[" + start + "-" + end + "]x" + n;
  if (bundle.level == HierarchyLevel::Goal) return r;
  r.long_form_before = word + " from " + start + " to " + end + " s seen in " + n + " frames";
  r.long_form_after = r.long_form_before + " after " +
                      std::to_string(bundle.prior_predictions.size()) + " prior predictions";
  return r;
}

std::string chat_request_body(const HttpDescriberConfig& cfg, const DescriberRequest& request) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& handle : request.frame_handles) {
    std::string url;
    if (cfg.frame_encoding == FrameEncoding::Url) {
      url = handle;
    } else {
      std::ifstream in(handle, std::ios::binary);
      if (!in) throw DataError("cannot read frame payload: " + handle);
      std::ostringstream bytes;
      bytes << in.rdbuf();
      url = "data:" + cfg.image_mime + ";base64," + base64_encode(bytes.str());
    }
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  nlohmann::json body{{"model", cfg.model},
                      {"temperature", 0},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

std::string chat_reply_text(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    throw ParseError("chat reply has no choices", body);
  }
  const auto& content = j["choices"][0]["message"]["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw ParseError("chat reply content is not text", body);
}

DescriberResponse http_describe(const HttpDescriberConfig& cfg, const std::string& api_key,
                                const DescriberRequest& request, HttpCallStats* stats) {
  const auto body = chat_request_body(cfg, request);
  auto headers = auth_headers(api_key);

  std::optional<DescriberResponse> result;
  std::optional<ParseError> last_parse;
  std::string last_transport;
  const auto outcome = run_with_retries(cfg.retry, [&] {
    HttpResponse res;
    try {
      res = http_post_json(cfg.endpoint, body, headers, cfg.retry.timeout_seconds);
    } catch (const TransportError& e) {
      last_transport = e.what();
      last_parse.reset();
      return false;
    }
    if (res.status >= 500) {
      last_transport = "server returned HTTP " + std::to_string(res.status);
      last_parse.reset();
      return false;
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError("describer endpoint returned HTTP " + std::to_string(res.status) +
                           ": " + res.body);
    }
    try {
      result = parse_response(chat_reply_text(res.body));
      return true;
    } catch (const ParseError& e) {
      last_parse = e;
      return false;
    }
  });
  if (stats) stats->retries = outcome.retries;
  if (outcome.succeeded) return *result;
  if (last_parse) throw *last_parse;
  throw TransportError("describer retries exhausted: " + last_transport);
}

HttpDescriber::HttpDescriber(HttpDescriberConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.in_flight_cap == 0) cfg_.in_flight_cap = 1;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

DescriberResponse HttpDescriber::describe(const RetrievalBundle&, const DescriberRequest& request) {
  {
    std::unique_lock lock(mutex_);
    slot_freed_.wait(lock, [&] { return in_flight_ < cfg_.in_flight_cap; });
    ++in_flight_;
  }
  struct Release {
    HttpDescriber* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->slot_freed_.notify_one();
    }
  } release{this};
  return http_describe(cfg_, api_key_, request);
}

}  // namespace hstream
