#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hstream/hstream.h"

namespace {

using nlohmann::json;

int exit_code(hs_status s) {
  switch (s) {
    case HS_OK:
      return 0;
    case HS_ERR_USAGE:
      return 1;
    case HS_ERR_TRANSPORT:
    case HS_ERR_PARSE:
      return 3;
    default:
      return 2;
  }
}

struct Owned {
  char* p = nullptr;
  ~Owned() { hs_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T>
void put(json& overlay, const json::json_pointer& ptr, const std::optional<T>& v) {
  if (v) overlay[ptr] = *v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming hierarchical action localization and description"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::size_t> jobs;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "JSON run config; flags override its values")
      ->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "Videos processed in parallel");
  app.add_option("--set", sets, "Override as path=json, e.g. detector.drop_delta=0.3");

  // Shared optional overrides.
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> videos;
  std::optional<double> noise;
  std::optional<double> zero_gap;
  std::optional<double> fps;
  std::optional<double> drop_delta;
  std::optional<double> start_threshold;
  bool actionness_only = false;
  std::optional<std::string> describer;
  std::optional<std::string> embedder;
  std::string partial;
  std::string tiou;
  std::optional<std::size_t> topk;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> k;
  std::string bounds;
  std::optional<std::string> client;
  std::optional<std::size_t> window;
  bool train = false;

  std::string out, scores, model, features, video_id, annotations, predictions, features_dir,
      model_out, input, report_format = "json";

  auto add_sim = [&](CLI::App* c) {
    c->add_option("--seed", seed, "Simulation seed");
    c->add_option("--videos", videos, "Number of simulated videos");
    c->add_option("--noise", noise, "Logit-space noise sigma");
    c->add_option("--zero-gap-prob", zero_gap, "Probability that neighbouring instances touch");
    c->add_option("--fps", fps, "Frame rate");
  };
  auto add_detector = [&](CLI::App* c) {
    c->add_option("--drop-delta", drop_delta, "Progress drop that ends an instance");
    c->add_option("--start-threshold", start_threshold, "Actionness threshold");
    c->add_flag("--actionness-only", actionness_only, "Disable progress-drop ends");
  };
  auto add_stream = [&](CLI::App* c) {
    c->add_option("--scores", scores, "Score CSV");
    c->add_option("--model", model, "Model JSON (with --features)");
    c->add_option("--features", features, "Feature CSV (with --model)");
    c->add_option("--video-id", video_id, "video_id written to each record");
    c->add_option("--out", out, "Output JSONL")->required();
  };
  auto add_metrics = [&](CLI::App* c) {
    c->add_option("--tiou", tiou, "Comma-separated tIoU thresholds");
    c->add_option("--topk", topk, "k of the description ranking");
    c->add_option("--embedder", embedder, "mock | http")->check(CLI::IsMember({"mock", "http"}));
  };

  auto* sim_cmd = app.add_subcommand("simulate", "Write synthetic annotations, scores and features");
  sim_cmd->add_option("--out", out, "Output directory")->required();
  add_sim(sim_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train the frame scorer");
  train_cmd->add_option("--annotations", annotations, "Annotations JSONL")->required();
  train_cmd->add_option("--features-dir", features_dir, "Directory of <video_id>.csv")->required();
  train_cmd->add_option("--model-out", model_out, "Model JSON to write")->required();
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--seed", seed, "Initialisation and shuffling seed");

  auto* detect_cmd = app.add_subcommand("detect", "Run the online detector over one stream");
  add_stream(detect_cmd);
  add_detector(detect_cmd);

  auto* describe_cmd = app.add_subcommand("describe", "Detect and describe one stream");
  add_stream(describe_cmd);
  add_detector(describe_cmd);
  describe_cmd->add_option("--describer", describer, "mock | http")
      ->check(CLI::IsMember({"mock", "http"}));
  describe_cmd->add_option("--partial", partial, "Comma-separated partial fractions, e.g. 0.25,0.5");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against annotations");
  eval_cmd->add_option("--annotations", annotations, "Ground-truth JSONL")->required();
  eval_cmd->add_option("--predictions", predictions, "Emissions or annotations JSONL")->required();
  eval_cmd->add_option("--report", report_format, "json | table")
      ->check(CLI::IsMember({"json", "table"}));
  eval_cmd->add_option("--out", out, "Also write the report here");
  add_metrics(eval_cmd);

  auto* pipe_cmd = app.add_subcommand("pipeline", "Group substeps into steps and a goal");
  pipe_cmd->add_option("--input", input, "Substep-only annotations JSONL")->required();
  pipe_cmd->add_option("--out", out, "Hierarchical annotations JSONL")->required();
  pipe_cmd->add_option("--k", k, "Step clusters for canonical captions (0 = off)");
  pipe_cmd->add_option("--bounds", bounds, "min,max step duration in seconds");
  pipe_cmd->add_option("--client", client, "mock | http")->check(CLI::IsMember({"mock", "http"}));
  pipe_cmd->add_option("--window", window, "Mock client group size");

  auto* e2e_cmd = app.add_subcommand("e2e", "simulate, detect, describe and evaluate");
  e2e_cmd->add_option("--out", out, "Output directory")->required();
  add_sim(e2e_cmd);
  add_detector(e2e_cmd);
  add_metrics(e2e_cmd);
  e2e_cmd->add_option("--describer", describer, "mock | http")->check(CLI::IsMember({"mock", "http"}));
  e2e_cmd->add_flag("--train", train, "Train a scorer instead of using oracle scores");
  e2e_cmd->add_option("--epochs", epochs, "Training epochs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  json overlay = json::object();
  try {
    put(overlay, "/jobs"_json_pointer, jobs);
    put(overlay, "/sim/videos"_json_pointer, videos);
    put(overlay, "/sim/noise_sigma"_json_pointer, noise);
    put(overlay, "/sim/zero_gap_prob"_json_pointer, zero_gap);
    put(overlay, "/sim/fps"_json_pointer, fps);
    put(overlay, "/detector/drop_delta"_json_pointer, drop_delta);
    put(overlay, "/detector/start_threshold"_json_pointer, start_threshold);
    if (actionness_only) overlay["detector"]["drop_delta"] = 2.0;
    put(overlay, "/describer/client"_json_pointer, describer);
    if (!partial.empty()) overlay["describer"]["partial"] = parse_list(partial);
    if (!tiou.empty()) overlay["metrics"]["tiou"] = parse_list(tiou);
    put(overlay, "/metrics/topk"_json_pointer, topk);
    put(overlay, "/metrics/embedder"_json_pointer, embedder);
    put(overlay, "/scorer/epochs"_json_pointer, epochs);
    put(overlay, "/pipeline/k"_json_pointer, k);
    put(overlay, "/pipeline/client"_json_pointer, client);
    put(overlay, "/pipeline/window"_json_pointer, window);
    if (!bounds.empty()) {
      const auto b = parse_list(bounds);
      if (b.size() != 2) throw std::invalid_argument("--bounds needs min,max");
      overlay["pipeline"]["bounds"] = b;
    }
    put(overlay, "/sim/seed"_json_pointer, seed);
    if (train) overlay["train"] = true;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects path=value");
      std::string path = "/" + s.substr(0, eq);
      for (auto& c : path) c = c == '.' ? '/' : c;
      const auto raw = s.substr(eq + 1);
      auto value = json::parse(raw, nullptr, false);
      overlay[json::json_pointer(path)] = value.is_discarded() ? json(raw) : value;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::string base;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    base = buf.str();
  }
  Owned cfg;
  hs_status st = hs_config_merge(base.c_str(), overlay.dump().c_str(), &cfg.p);
  if (st != HS_OK) {
    std::cerr << "error: " << hs_last_error() << "\n";
    return exit_code(st);
  }
  const char* c = cfg.p;
  auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };

  Owned report;
  if (*sim_cmd) {
    st = hs_simulate(c, out.c_str());
  } else if (*train_cmd) {
    st = hs_train(c, annotations.c_str(), features_dir.c_str(), model_out.c_str(), &report.p);
  } else if (*detect_cmd) {
    st = hs_detect(c, opt(scores), opt(model), opt(features), opt(video_id), out.c_str());
  } else if (*describe_cmd) {
    st = hs_describe(c, opt(scores), opt(model), opt(features), opt(video_id), out.c_str());
  } else if (*eval_cmd) {
    st = hs_evaluate(c, annotations.c_str(), predictions.c_str(), report_format == "table",
                     &report.p);
    if (st == HS_OK && !out.empty()) {
      std::ofstream f(out, std::ios::binary);
      f << report.str();
      if (!f) {
        std::cerr << "error: cannot write " << out << "\n";
        return 2;
      }
    }
  } else if (*pipe_cmd) {
    st = hs_pipeline(c, input.c_str(), out.c_str(), &report.p);
  } else if (*e2e_cmd) {
    st = hs_e2e(c, out.c_str(), &report.p);
  }

  if (st != HS_OK) {
    std::cerr << "error: " << hs_last_error() << "\n";
    return exit_code(st);
  }
  if (report.p) std::cout << report.str() << (report.str().empty() || report.str().back() == '\n' ? "" : "\n");
  return 0;
}
