/* C interface of the hstream library. Strings returned through `char**`
 * out-parameters are owned by the caller and released with hs_string_free.
 * Config arguments are JSON documents overlaid on the defaults; NULL or ""
 * means defaults. */
#ifndef HSTREAM_H
#define HSTREAM_H

#include <stddef.h>

#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
  HS_OK = 0,
  HS_ERR_USAGE = 1,     /* bad arguments */
  HS_ERR_DATA = 2,      /* malformed input or invalid configuration */
  HS_ERR_TRANSPORT = 3, /* remote endpoint unreachable or failing */
  HS_ERR_PARSE = 4,     /* remote reply could not be parsed */
  HS_ERR_STATE = 5,     /* call not allowed in the handle's state */
  HS_ERR_INTERNAL = 6
} hs_status;

typedef struct hs_detector hs_detector;
typedef struct hs_model hs_model;

/* Message of the last failure on the calling thread ("" if none). */
HS_API const char* hs_last_error(void);
HS_API void hs_string_free(char* s);
HS_API const char* hs_version(void);

HS_API hs_status hs_config_default(char** out_json);
/* Overlay `overlay_json` onto `base_json`; unknown keys are rejected. */
HS_API hs_status hs_config_merge(const char* base_json, const char* overlay_json, char** out_json);

/* Streaming detector. `config_json` is a full run config; only its detector
 * section is used. */
HS_API hs_status hs_detector_create(const char* config_json, hs_detector** out);
HS_API void hs_detector_destroy(hs_detector* d);
/* Push one frame. `events_json` (optional) receives the events raised. */
HS_API hs_status hs_detector_push(hs_detector* d, double timestamp, const double state_probs[3],
                                  const double* step_progress, const double* substep_progress,
                                  size_t bins, char** events_json);
HS_API hs_status hs_detector_finish(hs_detector* d, double final_timestamp, char** events_json);
/* Emission log so far as JSON Lines. */
HS_API hs_status hs_detector_emissions(const hs_detector* d, char** out_jsonl);

HS_API hs_status hs_model_load(const char* path, hs_model** out);
HS_API void hs_model_destroy(hs_model* m);
/* Feature CSV text in, score CSV text out. */
HS_API hs_status hs_model_infer_csv(const hs_model* m, const char* features_csv, char** out_scores_csv);

HS_API hs_status hs_simulate(const char* config_json, const char* out_dir);
HS_API hs_status hs_train(const char* config_json, const char* annotations_path,
                          const char* features_dir, const char* model_out, char** out_report);
/* Input is `scores_path`, or `model_path` with `features_path`; unused
 * arguments may be NULL. */
HS_API hs_status hs_detect(const char* config_json, const char* scores_path, const char* model_path,
                           const char* features_path, const char* video_id, const char* out_path);
HS_API hs_status hs_describe(const char* config_json, const char* scores_path,
                             const char* model_path, const char* features_path,
                             const char* video_id, const char* out_path);
/* `table` != 0 returns a text table instead of JSON. */
HS_API hs_status hs_evaluate(const char* config_json, const char* annotations_path,
                             const char* predictions_path, int table, char** out_report);
HS_API hs_status hs_pipeline(const char* config_json, const char* input_path,
                             const char* output_path, char** out_report);
HS_API hs_status hs_e2e(const char* config_json, const char* out_dir, char** out_report);

#ifdef __cplusplus
}
#endif

#endif
