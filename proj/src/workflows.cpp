#include "hstream/workflows.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <thread>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/format.hpp"
#include "hstream/rng.hpp"

namespace hstream {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::unique_ptr<Describer> make_describer(const DescribeConfig& cfg) {
  if (cfg.client == "mock") return std::make_unique<MockDescriber>();
  if (cfg.client == "http") return std::make_unique<HttpDescriber>(cfg.http);
  throw DataError("describer client must be mock or http");
}

std::unique_ptr<Embedder> make_embedder(const MetricsConfig& cfg) {
  if (cfg.embedder == "mock") return std::make_unique<MockEmbedder>(cfg.mock_dim);
  if (cfg.embedder == "http") return std::make_unique<HttpEmbedder>(cfg.http);
  throw DataError("embedder must be mock or http");
}

std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg) {
  if (cfg.client == "mock") return std::make_unique<MockLlmClient>(cfg.window);
  if (cfg.client == "http") return std::make_unique<HttpLlmClient>(cfg.http);
  throw DataError("pipeline client must be mock or http");
}

std::uint64_t score_seed(std::uint64_t sim_seed, std::size_t index) {
  return derive_seed(derive_seed(sim_seed, 0x73636f7265ULL), index);
}

std::uint64_t feature_seed(std::uint64_t sim_seed, std::size_t index) {
  return derive_seed(derive_seed(sim_seed, 0x6665617475ULL), index);
}

void write_effective_config(const RunConfig& cfg, const std::string& dir) {
  write_file((fs::path(dir.empty() ? "." : dir) / "effective_config.json").string(),
             run_config_json(cfg) + "\n");
}

namespace {

std::string parent_dir(const std::string& path) { return fs::path(path).parent_path().string(); }

void check_file_safe(const std::string& video_id) {
  if (video_id.empty() || video_id.find_first_of("/\\") != std::string::npos || video_id == "." ||
      video_id == "..") {
    throw DataError("video_id '" + video_id + "' cannot be used as a file name");
  }
}

std::string csv_path(const std::string& dir, const std::string& video_id) {
  check_file_safe(video_id);
  return (fs::path(dir) / (video_id + ".csv")).string();
}

std::string jsonl(const std::vector<EmissionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += emission_line(r) + "\n";
  return out;
}

FrameHandleFn handle_fn(const DescribeConfig& cfg, const std::string& video_id) {
  return [dir = cfg.frames_dir, video_id](std::size_t index, double) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.jpg", index);
    return (fs::path(dir) / video_id / name).string();
  };
}

SessionOptions session_options(const RunConfig& cfg) {
  return {cfg.detector, cfg.describer.memory, cfg.describer.partial};
}

}  // namespace

void simulate_workflow(const RunConfig& cfg, const std::string& out_dir) {
  const auto anns = gen_annotations(cfg.sim);
  const fs::path root(out_dir);
  parallel_for(anns.size(), cfg.jobs, [&](std::size_t i) {
    const auto& a = anns[i];
    write_file(csv_path((root / "scores").string(), a.video_id),
               scores_csv(gen_scores(a, cfg.sim.noise_sigma, cfg.sim.histogram,
                                     score_seed(cfg.sim.seed, i))));
    write_file(csv_path((root / "features").string(), a.video_id),
               features_csv(gen_features(a, cfg.sim.feature_dim, cfg.sim.noise_sigma,
                                         feature_seed(cfg.sim.seed, i))));
  });
  write_file((root / "annotations.jsonl").string(), annotations_jsonl(anns));
  write_effective_config(cfg, out_dir);
}

std::string train_workflow(const RunConfig& cfg, const std::string& annotations_path,
                           const std::string& features_dir, const std::string& model_out) {
  const auto anns = parse_annotations_jsonl(read_file(annotations_path));
  std::vector<TrainingVideo> data(anns.size());
  parallel_for(anns.size(), cfg.jobs, [&](std::size_t i) {
    data[i].annotations = anns[i];
    data[i].features = parse_features_csv(read_file(csv_path(features_dir, anns[i].video_id)));
  });
  const auto result = train_scorer(data, cfg.scorer, cfg.sim.seed);
  write_file(model_out, result.model.to_json());
  write_effective_config(cfg, parent_dir(model_out));
  return json{{"videos", anns.size()}, {"loss_trace", result.loss_trace}}.dump(2);
}

std::vector<FrameScores> load_stream(const StreamSource& source) {
  if (!source.scores_path.empty()) return parse_scores_csv(read_file(source.scores_path));
  if (source.model_path.empty() || source.features_path.empty()) {
    throw DataError("a score CSV, or a model together with a feature CSV, is required");
  }
  const auto model = ScorerModel::from_json(read_file(source.model_path));
  return infer_scores(model, parse_features_csv(read_file(source.features_path)));
}

void detect_workflow(const RunConfig& cfg, const StreamSource& source, const std::string& out_path) {
  const auto scores = load_stream(source);
  std::vector<EmissionRecord> records;
  for (const auto& e : run_stream(scores, cfg.detector)) {
    records.push_back({source.video_id, e.instance, e.emit_time});
  }
  write_file(out_path, jsonl(records));
  write_effective_config(cfg, parent_dir(out_path));
}

std::vector<EmissionRecord> session_records(const std::string& video_id, const SessionResult& r,
                                            double duration) {
  std::vector<EmissionRecord> out;
  for (const auto& d : r.instances) out.push_back({video_id, d.instance, d.emit_time});
  out.push_back({video_id, {{0.0, duration}, r.goal, HierarchyLevel::Goal}, r.goal_time});
  return out;
}

void describe_workflow(const RunConfig& cfg, const StreamSource& source,
                       const std::string& out_path) {
  const auto scores = load_stream(source);
  const auto describer = make_describer(cfg.describer);
  const auto video = source.video_id.empty() ? std::string("video") : source.video_id;
  const auto result = run_session(scores, session_options(cfg), *describer, handle_fn(cfg.describer, video));
  write_file(out_path, jsonl(session_records(source.video_id, result, scores.back().timestamp)));
  if (!result.partials.empty()) {
    std::string text;
    for (const auto& p : result.partials) {
      text += json{{"level", static_cast<int>(p.level)},
                   {"start", p.full.start},
                   {"end", p.full.end},
                   {"fraction", p.fraction},
                   {"description", p.short_form}}
                  .dump() +
              "\n";
    }
    write_file((fs::path(parent_dir(out_path).empty() ? "." : parent_dir(out_path)) / "partial.jsonl")
                   .string(),
               text);
  }
  write_effective_config(cfg, parent_dir(out_path));
}

std::vector<EmissionRecord> parse_predictions(const std::string& text) {
  std::vector<EmissionRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    ++line_no;
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("instances")) {
        for (const auto& a : parse_annotations_jsonl(line)) {
          for (const auto& inst : a.instances) out.push_back({a.video_id, inst, std::nullopt});
          if (!a.goal.empty()) {
            out.push_back({a.video_id, {{0.0, a.duration}, a.goal, HierarchyLevel::Goal}, std::nullopt});
          }
        }
      } else {
        for (auto& r : parse_emissions_jsonl(line)) out.push_back(std::move(r));
      }
    } catch (const DataError& e) {
      throw DataError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::vector<Interval> intervals_of(const std::vector<ActionInstance>& xs) {
  std::vector<Interval> out;
  for (const auto& x : xs) out.push_back(x.interval);
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string evaluate_records(const RunConfig& cfg, const std::vector<AnnotationSet>& truth,
                             const std::vector<EmissionRecord>& predictions, bool table) {
  if (truth.empty()) throw DataError("no ground-truth videos");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!index.emplace(truth[i].video_id, i).second) {
      throw DataError("duplicate video_id in annotations: " + truth[i].video_id);
    }
  }

  struct PerVideo {
    std::vector<ActionInstance> preds[2];
    std::vector<TimedPrediction> timed[2];
    std::optional<std::string> goal;
  };
  std::vector<PerVideo> per(truth.size());
  bool any_goal = false;
  bool timed_ok[2] = {true, true};
  for (const auto& r : predictions) {
    std::size_t v = 0;
    if (r.video_id.empty()) {
      if (truth.size() != 1) throw DataError("prediction without video_id in a multi-video evaluation");
    } else {
      const auto it = index.find(r.video_id);
      if (it == index.end()) throw DataError("prediction for unknown video " + r.video_id);
      v = it->second;
    }
    if (r.instance.level == HierarchyLevel::Goal) {
      per[v].goal = r.instance.description;
      any_goal = true;
      continue;
    }
    const int slot = r.instance.level == HierarchyLevel::Substep ? 0 : 1;
    per[v].preds[slot].push_back(r.instance);
    per[v].timed[slot].push_back({r.instance.interval, r.emit_time});
    if (!r.emit_time) timed_ok[slot] = false;
  }

  const auto embedder = make_embedder(cfg.metrics);
  const double n = static_cast<double>(truth.size());
  json levels = json::object();
  std::string text = "level    tIoU   F1(loc.)  F1(loc.+desc.)\n";
  std::string aedt_text;
  for (const auto level : {HierarchyLevel::Substep, HierarchyLevel::Step}) {
    const int slot = level == HierarchyLevel::Substep ? 0 : 1;
    const auto name = level == HierarchyLevel::Substep ? std::string("substep") : std::string("step");
    std::vector<std::vector<ActionInstance>> gt(truth.size());
    std::vector<std::string> corpus;
    for (std::size_t v = 0; v < truth.size(); ++v) {
      gt[v] = truth[v].at_level(level);
      for (const auto& g : gt[v]) corpus.push_back(g.description);
    }
    const CorpusIndex index_l(corpus, *embedder);

    json f1_loc = json::object();
    json f1_desc = json::object();
    for (double tau : cfg.metrics.tiou) {
      double loc = 0.0;
      double desc = 0.0;
      for (std::size_t v = 0; v < truth.size(); ++v) {
        loc += hungarian_f1(intervals_of(gt[v]), intervals_of(per[v].preds[slot]), tau).f1;
        desc += topk_f1(gt[v], per[v].preds[slot], tau, cfg.metrics.topk, index_l, *embedder);
      }
      f1_loc[format_number(tau)] = loc / n;
      f1_desc[format_number(tau)] = desc / n;
      text += name + std::string(9 - name.size(), ' ') + fixed4(tau).substr(0, 4) + "   " +
              fixed4(loc / n) + "    " + fixed4(desc / n) + "\n";
    }

    json aedt_json = nullptr;
    if (timed_ok[slot]) {
      double abs_sum = 0.0;
      double signed_sum = 0.0;
      std::size_t count = 0;
      for (std::size_t v = 0; v < truth.size(); ++v) {
        const auto r = aedt(intervals_of(gt[v]), per[v].timed[slot], cfg.metrics.aedt_threshold);
        if (!r) continue;
        abs_sum += r->mean_abs * static_cast<double>(r->count);
        signed_sum += r->mean_signed * static_cast<double>(r->count);
        count += r->count;
      }
      if (count > 0) {
        const double c = static_cast<double>(count);
        aedt_json = {{"mean_abs", abs_sum / c}, {"mean_signed", signed_sum / c}, {"count", count}};
        aedt_text += "AEDT " + name + ": " + fixed4(abs_sum / c) + " s over " +
                     std::to_string(count) + " matches\n";
      }
    }
    levels[name] = {{"f1_loc", f1_loc}, {"f1_loc_desc", f1_desc}, {"aedt", aedt_json}};
  }

  json goal_json = nullptr;
  if (any_goal) {
    std::vector<std::string> predicted;
    std::vector<std::string> goals;
    for (std::size_t v = 0; v < truth.size(); ++v) {
      predicted.push_back(per[v].goal.value_or(""));
      goals.push_back(truth[v].goal);
    }
    const double acc = goal_accuracy(predicted, goals, *embedder);
    goal_json = acc;
    text += aedt_text + "goal accuracy: " + fixed4(acc) + "\n";
  } else {
    text += aedt_text;
  }

  if (table) return text;
  return json{{"videos", truth.size()},
              {"topk", cfg.metrics.topk},
              {"aedt_threshold", cfg.metrics.aedt_threshold},
              {"embedder", cfg.metrics.embedder},
              {"levels", levels},
              {"goal_accuracy", goal_json}}
      .dump(2);
}

std::string evaluate_workflow(const RunConfig& cfg, const std::string& annotations_path,
                              const std::string& predictions_path, bool table) {
  const auto truth = parse_annotations_jsonl(read_file(annotations_path));
  const auto preds = parse_predictions(read_file(predictions_path));
  return evaluate_records(cfg, truth, preds, table);
}

std::string pipeline_workflow(const RunConfig& cfg, const std::string& input_path,
                              const std::string& output_path) {
  auto videos = parse_annotations_jsonl(read_file(input_path));
  const auto client = make_llm_client(cfg.pipeline);
  std::vector<AnnotationSet> out(videos.size());
  std::vector<ConsistencyReport> reports(videos.size());

  parallel_for(videos.size(), cfg.jobs, [&](std::size_t i) {
    auto& a = videos[i];
    for (const auto& inst : a.instances) {
      if (inst.level != HierarchyLevel::Substep) {
        throw DataError(a.video_id + ": pipeline input must hold substeps only");
      }
    }
    std::stable_sort(a.instances.begin(), a.instances.end(),
                     [](const ActionInstance& x, const ActionInstance& y) {
                       return x.interval.start < y.interval.start;
                     });
    const auto& substeps = a.instances;
    const auto proposal = postprocess(propose_grouping(substeps, *client, cfg.pipeline.max_attempts),
                                      substeps);
    reports[i] = check_consistency(proposal, substeps,
                                   cfg.pipeline.bounds.value_or(default_bounds(a.duration)));
    out[i] = to_annotations(a, proposal);
  });

  json report{{"videos", json::array()}, {"k", cfg.pipeline.k}};
  if (cfg.pipeline.k > 0) {
    std::vector<std::string> descriptions;
    for (const auto& a : out) {
      for (const auto& inst : a.instances) {
        if (inst.level == HierarchyLevel::Step) descriptions.push_back(inst.description);
      }
    }
    const auto embedder = make_embedder(cfg.metrics);
    const auto canon = kmeans_canonicalize(descriptions, cfg.pipeline.k, *embedder, *client, cfg.sim.seed);
    std::size_t next = 0;
    for (auto& a : out) {
      for (auto& inst : a.instances) {
        if (inst.level == HierarchyLevel::Step) inst.description = canon.captions[canon.assignment[next++]];
      }
    }
    report["objective_trace"] = canon.objective_trace;
    report["captions"] = canon.captions;
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    json abnormal = json::array();
    for (const auto& ab : reports[i].abnormal) {
      abnormal.push_back({{"group", ab.group},
                          {"duration", ab.duration},
                          {"bound", ab.bound == BoundKind::TooShort ? "too_short" : "too_long"}});
    }
    report["videos"].push_back({{"video_id", out[i].video_id},
                                {"steps", out[i].at_level(HierarchyLevel::Step).size()},
                                {"missing", reports[i].missing},
                                {"abnormal", abnormal}});
  }
  write_file(output_path, annotations_jsonl(out));
  write_effective_config(cfg, parent_dir(output_path));
  return report.dump(2);
}

std::string e2e_workflow(const RunConfig& cfg, const std::string& out_dir) {
  const auto anns = gen_annotations(cfg.sim);

  std::optional<ScorerModel> model;
  if (cfg.train) {
    if (cfg.scorer.feature_dim != cfg.sim.feature_dim) {
      throw DomainError("scorer.feature_dim must equal sim.feature_dim");
    }
    SimConfig train_sim = cfg.sim;
    train_sim.seed = derive_seed(cfg.sim.seed, 0x747261696eULL);
    train_sim.videos = cfg.train_videos;
    const auto train_anns = gen_annotations(train_sim);
    std::vector<TrainingVideo> data(train_anns.size());
    parallel_for(train_anns.size(), cfg.jobs, [&](std::size_t i) {
      data[i] = {gen_features(train_anns[i], train_sim.feature_dim, train_sim.noise_sigma,
                              feature_seed(train_sim.seed, i)),
                 train_anns[i]};
    });
    model = train_scorer(data, cfg.scorer, cfg.sim.seed).model;
  }

  std::vector<std::vector<EmissionRecord>> per_video(anns.size());
  const auto describer = make_describer(cfg.describer);
  parallel_for(anns.size(), cfg.jobs, [&](std::size_t i) {
    const auto& a = anns[i];
    const auto scores =
        model ? infer_scores(*model, gen_features(a, cfg.sim.feature_dim, cfg.sim.noise_sigma,
                                                  feature_seed(cfg.sim.seed, i)))
              : gen_scores(a, cfg.sim.noise_sigma, cfg.sim.histogram, score_seed(cfg.sim.seed, i));
    const auto result =
        run_session(scores, session_options(cfg), *describer, handle_fn(cfg.describer, a.video_id));
    per_video[i] = session_records(a.video_id, result, scores.back().timestamp);
  });

  std::vector<EmissionRecord> records;
  for (auto& v : per_video) records.insert(records.end(), v.begin(), v.end());
  const auto report = evaluate_records(cfg, anns, records, false);

  const fs::path root(out_dir);
  write_file((root / "annotations.jsonl").string(), annotations_jsonl(anns));
  write_file((root / "predictions.jsonl").string(), jsonl(records));
  write_file((root / "report.json").string(), report + "\n");
  write_effective_config(cfg, out_dir);
  return report;
}

}  // namespace hstream
