#include "hstream/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/format.hpp"

namespace hstream {

namespace {

using nlohmann::json;

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no + 1) + ": "; }

double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw DataError(where(line_no) + "not a number: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(parse_double(std::string_view(line).substr(pos, comma - pos), line_no));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::size_t header_columns(const std::string& header) {
  std::size_t n = 1;
  for (char c : header) n += c == ',';
  return n;
}

template <class T>
T field(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(where(line_no) + "missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(where(line_no) + "field '" + key + "' has the wrong type");
  }
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError(where(line_no) + "not a JSON object");
  return j;
}

}  // namespace

std::vector<AnnotationSet> parse_annotations_jsonl(const std::string& text) {
  std::vector<AnnotationSet> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto j = parse_json_line(lines[i], i);
    AnnotationSet a;
    a.video_id = field<std::string>(j, "video_id", i);
    a.duration = field<double>(j, "duration", i);
    a.fps = field<double>(j, "fps", i);
    a.goal = j.contains("goal") ? field<std::string>(j, "goal", i) : std::string{};
    const auto instances = field<json>(j, "instances", i);
    if (!instances.is_array()) throw DataError(where(i) + "instances must be an array");
    for (const auto& inst : instances) {
      if (!inst.is_object()) throw DataError(where(i) + "instance must be an object");
      const int level = field<int>(inst, "level", i);
      if (level != 1 && level != 2) throw DataError(where(i) + "instance level must be 1 or 2");
      a.instances.push_back({{field<double>(inst, "start", i), field<double>(inst, "end", i)},
                             inst.contains("description") ? field<std::string>(inst, "description", i)
                                                          : std::string{},
                             level_from_int(level)});
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string annotation_line(const AnnotationSet& a) {
  json inst = json::array();
  for (const auto& x : a.instances) {
    inst.push_back({{"start", x.interval.start},
                    {"end", x.interval.end},
                    {"level", static_cast<int>(x.level)},
                    {"description", x.description}});
  }
  return json{{"video_id", a.video_id},
              {"duration", a.duration},
              {"fps", a.fps},
              {"goal", a.goal},
              {"instances", inst}}
      .dump();
}

std::string annotations_jsonl(const std::vector<AnnotationSet>& sets) {
  std::string out;
  for (const auto& a : sets) out += annotation_line(a) + "\n";
  return out;
}

FeatureSequence parse_features_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || blank(lines[0])) throw DataError("feature file has no header");
  const std::size_t cols = header_columns(lines[0]);
  if (cols < 2) throw DataError("feature file needs a timestamp and at least one feature");
  FeatureSequence seq;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    auto row = parse_row(lines[i], i);
    if (row.size() != cols) throw DataError(where(i) + "column count differs from the header");
    seq.timestamps.push_back(row.front());
    row.erase(row.begin());
    seq.rows.push_back(std::move(row));
  }
  return seq;
}

std::string features_csv(const FeatureSequence& seq) {
  std::string out = "timestamp";
  const std::size_t d = seq.rows.empty() ? 0 : seq.rows.front().size();
  for (std::size_t k = 0; k < d; ++k) out += ",f" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < seq.rows.size(); ++i) {
    out += format_number(seq.timestamps[i]);
    for (double v : seq.rows[i]) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

std::vector<FrameScores> parse_scores_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || blank(lines[0])) throw DataError("score file has no header");
  const std::size_t cols = header_columns(lines[0]);
  if (cols < 6 || (cols - 4) % 2 != 0) {
    throw DataError("score file header must be timestamp,bg,step,stepsub then two bin groups");
  }
  const std::size_t bins = (cols - 4) / 2;
  std::vector<FrameScores> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto row = parse_row(lines[i], i);
    if (row.size() != cols) throw DataError(where(i) + "column count differs from the header");
    FrameScores fs;
    fs.timestamp = row[0];
    for (std::size_t s = 0; s < kStateCount; ++s) fs.state_probs[s] = row[1 + s];
    fs.step_progress.assign(row.begin() + 4, row.begin() + 4 + static_cast<long>(bins));
    fs.substep_progress.assign(row.begin() + 4 + static_cast<long>(bins), row.end());
    out.push_back(std::move(fs));
  }
  return out;
}

std::string scores_csv(const std::vector<FrameScores>& scores) {
  const std::size_t bins = scores.empty() ? 0 : scores.front().step_progress.size();
  std::string out = "timestamp,bg,step,stepsub";
  for (std::size_t b = 0; b < bins; ++b) out += ",sp" + std::to_string(b);
  for (std::size_t b = 0; b < bins; ++b) out += ",ssp" + std::to_string(b);
  out += "\n";
  for (const auto& fs : scores) {
    out += format_number(fs.timestamp);
    for (double p : fs.state_probs) out += "," + format_number(p);
    for (double p : fs.step_progress) out += "," + format_number(p);
    for (double p : fs.substep_progress) out += "," + format_number(p);
    out += "\n";
  }
  return out;
}

std::vector<EmissionRecord> parse_emissions_jsonl(const std::string& text) {
  std::vector<EmissionRecord> out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    const auto j = parse_json_line(lines[i], i);
    EmissionRecord r;
    if (j.contains("video_id")) r.video_id = field<std::string>(j, "video_id", i);
    r.instance.interval = {field<double>(j, "start", i), field<double>(j, "end", i)};
    r.instance.level = level_from_int(field<int>(j, "level", i));
    if (j.contains("description")) r.instance.description = field<std::string>(j, "description", i);
    if (j.contains("emit_time") && !j["emit_time"].is_null()) {
      r.emit_time = field<double>(j, "emit_time", i);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string emission_line(const EmissionRecord& r) {
  json j{{"start", r.instance.interval.start},
         {"end", r.instance.interval.end},
         {"level", static_cast<int>(r.instance.level)}};
  if (r.emit_time) j["emit_time"] = *r.emit_time;
  if (!r.video_id.empty()) j["video_id"] = r.video_id;
  if (!r.instance.description.empty()) j["description"] = r.instance.description;
  return j.dump();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace hstream
