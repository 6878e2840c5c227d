#include "hstream/hstream.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/workflows.hpp"

struct hs_detector {
  hstream::DetectorConfig cfg;
  hstream::DetectorState state;
};

struct hs_model {
  hstream::ScorerModel model;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

hs_status fail(hs_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <class F>
hs_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return HS_OK;
  } catch (const hstream::TransportError& e) {
    return fail(HS_ERR_TRANSPORT, e.what());
  } catch (const hstream::ParseError& e) {
    return fail(HS_ERR_PARSE, (std::string(e.what()) + "\nraw reply: " + e.raw()).c_str());
  } catch (const hstream::StateError& e) {
    return fail(HS_ERR_STATE, e.what());
  } catch (const hstream::DataError& e) {
    return fail(HS_ERR_DATA, e.what());
  } catch (const hstream::DomainError& e) {
    return fail(HS_ERR_DATA, e.what());
  } catch (const json::exception& e) {
    return fail(HS_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HS_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

hstream::RunConfig config_of(const char* config_json) {
  if (!config_json || !*config_json) return {};
  return hstream::merge_run_config({}, config_json);
}

json events_json(const std::vector<hstream::DetectionEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) {
    const char* kind = e.kind == hstream::EventKind::InstanceStarted ? "started"
                       : e.kind == hstream::EventKind::InstanceEnded ? "ended"
                                                                     : "goal_due";
    arr.push_back({{"kind", kind},
                   {"level", static_cast<int>(e.level)},
                   {"start", e.interval.start},
                   {"end", e.interval.end},
                   {"timestamp", e.timestamp}});
  }
  return arr;
}

hstream::StreamSource source_of(const char* scores, const char* model, const char* features,
                                const char* video_id) {
  return {str(scores), str(model), str(features), str(video_id)};
}

}  // namespace

extern "C" {

const char* hs_last_error(void) { return g_last_error.c_str(); }

void hs_string_free(char* s) { std::free(s); }

const char* hs_version(void) { return "0.1.0"; }

hs_status hs_config_default(char** out_json) {
  if (!out_json) return fail(HS_ERR_USAGE, "out_json is NULL");
  return guarded([&] { *out_json = dup(hstream::run_config_json({})); });
}

hs_status hs_config_merge(const char* base_json, const char* overlay_json, char** out_json) {
  if (!out_json) return fail(HS_ERR_USAGE, "out_json is NULL");
  return guarded([&] {
    auto cfg = config_of(base_json);
    if (overlay_json && *overlay_json) cfg = hstream::merge_run_config(cfg, overlay_json);
    *out_json = dup(hstream::run_config_json(cfg));
  });
}

hs_status hs_detector_create(const char* config_json, hs_detector** out) {
  if (!out) return fail(HS_ERR_USAGE, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = config_of(config_json);
    cfg.detector.validate();
    *out = new hs_detector{cfg.detector, {}};
  });
}

void hs_detector_destroy(hs_detector* d) { delete d; }

hs_status hs_detector_push(hs_detector* d, double timestamp, const double state_probs[3],
                           const double* step_progress, const double* substep_progress, size_t bins,
                           char** events_out) {
  if (!d || !state_probs || !step_progress || !substep_progress) {
    return fail(HS_ERR_USAGE, "NULL argument");
  }
  return guarded([&] {
    hstream::FrameScores fs;
    fs.timestamp = timestamp;
    for (std::size_t i = 0; i < hstream::kStateCount; ++i) fs.state_probs[i] = state_probs[i];
    fs.step_progress.assign(step_progress, step_progress + bins);
    fs.substep_progress.assign(substep_progress, substep_progress + bins);
    const auto events = hstream::step(d->state, fs, d->cfg);
    if (events_out) *events_out = dup(events_json(events).dump());
  });
}

hs_status hs_detector_finish(hs_detector* d, double final_timestamp, char** events_out) {
  if (!d) return fail(HS_ERR_USAGE, "NULL detector");
  return guarded([&] {
    const auto events = hstream::finish(d->state, final_timestamp, d->cfg);
    if (events_out) *events_out = dup(events_json(events).dump());
  });
}

hs_status hs_detector_emissions(const hs_detector* d, char** out_jsonl) {
  if (!d || !out_jsonl) return fail(HS_ERR_USAGE, "NULL argument");
  return guarded([&] {
    std::string text;
    for (const auto& e : d->state.log) {
      text += hstream::emission_line({"", e.instance, e.emit_time}) + "\n";
    }
    *out_jsonl = dup(text);
  });
}

hs_status hs_model_load(const char* path, hs_model** out) {
  if (!path || !out) return fail(HS_ERR_USAGE, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new hs_model{hstream::ScorerModel::from_json(hstream::read_file(path))};
  });
}

void hs_model_destroy(hs_model* m) { delete m; }

hs_status hs_model_infer_csv(const hs_model* m, const char* features_csv, char** out_scores_csv) {
  if (!m || !features_csv || !out_scores_csv) return fail(HS_ERR_USAGE, "NULL argument");
  return guarded([&] {
    const auto scores = hstream::infer_scores(m->model, hstream::parse_features_csv(features_csv));
    *out_scores_csv = dup(hstream::scores_csv(scores));
  });
}

hs_status hs_simulate(const char* config_json, const char* out_dir) {
  if (!out_dir) return fail(HS_ERR_USAGE, "out_dir is NULL");
  return guarded([&] { hstream::simulate_workflow(config_of(config_json), out_dir); });
}

hs_status hs_train(const char* config_json, const char* annotations_path, const char* features_dir,
                   const char* model_out, char** out_report) {
  if (!annotations_path || !features_dir || !model_out) return fail(HS_ERR_USAGE, "NULL argument");
  return guarded([&] {
    const auto report =
        hstream::train_workflow(config_of(config_json), annotations_path, features_dir, model_out);
    if (out_report) *out_report = dup(report);
  });
}

hs_status hs_detect(const char* config_json, const char* scores_path, const char* model_path,
                    const char* features_path, const char* video_id, const char* out_path) {
  if (!out_path) return fail(HS_ERR_USAGE, "out_path is NULL");
  return guarded([&] {
    hstream::detect_workflow(config_of(config_json),
                             source_of(scores_path, model_path, features_path, video_id), out_path);
  });
}

hs_status hs_describe(const char* config_json, const char* scores_path, const char* model_path,
                      const char* features_path, const char* video_id, const char* out_path) {
  if (!out_path) return fail(HS_ERR_USAGE, "out_path is NULL");
  return guarded([&] {
    hstream::describe_workflow(config_of(config_json),
                               source_of(scores_path, model_path, features_path, video_id), out_path);
  });
}

hs_status hs_evaluate(const char* config_json, const char* annotations_path,
                      const char* predictions_path, int table, char** out_report) {
  if (!annotations_path || !predictions_path || !out_report) return fail(HS_ERR_USAGE, "NULL argument");
  return guarded([&] {
    *out_report = dup(hstream::evaluate_workflow(config_of(config_json), annotations_path,
                                                 predictions_path, table != 0));
  });
}

hs_status hs_pipeline(const char* config_json, const char* input_path, const char* output_path,
                      char** out_report) {
  if (!input_path || !output_path) return fail(HS_ERR_USAGE, "NULL argument");
  return guarded([&] {
    const auto report = hstream::pipeline_workflow(config_of(config_json), input_path, output_path);
    if (out_report) *out_report = dup(report);
  });
}

hs_status hs_e2e(const char* config_json, const char* out_dir, char** out_report) {
  if (!out_dir) return fail(HS_ERR_USAGE, "out_dir is NULL");
  return guarded([&] {
    const auto report = hstream::e2e_workflow(config_of(config_json), out_dir);
    if (out_report) *out_report = dup(report);
  });
}

}  // extern "C"
