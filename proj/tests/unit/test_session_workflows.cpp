#include <doctest.h>

#include <atomic>
#include <filesystem>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/io.hpp"
#include "hstream/session.hpp"
#include "hstream/simulator.hpp"
#include "hstream/workflows.hpp"
#include "support/streams.hpp"

using namespace hstream;
using nlohmann::json;

namespace {

std::string frame_name(std::size_t i, double) { return "frame" + std::to_string(i); }

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hstream_wf_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("the describer is called once per emitted instance plus the goal") {
  SimConfig sim;
  sim.videos = 4;
  sim.seed = 12;
  for (const auto& a : gen_annotations(sim)) {
    const auto scores = gen_scores(a, 0.0, sim.histogram, 3);
    MockDescriber d;
    SessionOptions opt;
    const auto r = run_session(scores, opt, d, frame_name);
    CHECK(d.calls() == r.instances.size() + 1);
    CHECK(r.instances.size() == run_stream(scores, opt.detector).size());
    CHECK(r.goal_time == scores.back().timestamp);
    CHECK(r.goal.rfind("goal[0-", 0) == 0);
  }
}

TEST_CASE("session hand trace: substeps are described with step-scoped history") {
  using teststream::frame;
  std::vector<FrameScores> s;
  for (int t = 0; t < 10; ++t) s.push_back(frame(t, FrameState::StepAndSubstep, t / 10.0, (t % 5) / 5.0));
  s.push_back(teststream::background(10));
  MockDescriber d;
  const auto r = run_session(s, {}, d, frame_name);
  REQUIRE(r.instances.size() == 3);
  CHECK(r.instances[0].instance.interval == Interval{0, 4});
  CHECK(r.instances[0].emit_time == 5.0);
  CHECK(r.instances[0].long_form.find("after 0 prior") != std::string::npos);
  // The one-hot background frame decodes to progress 0.05, so both levels end
  // on a progress drop at the last in-instance frame.
  CHECK(r.instances[1].instance.interval == Interval{6, 9});
  CHECK(r.instances[1].long_form.find("after 1 prior") != std::string::npos);
  CHECK(r.instances[2].instance.level == HierarchyLevel::Step);
  CHECK(r.instances[2].instance.interval == Interval{0, 9});
  // The goal sees one representative frame of the single step.
  CHECK(r.goal == "goal[0-10]x1");
}

TEST_CASE("partial observations describe a prefix of each instance") {
  SimConfig sim;
  sim.videos = 1;
  const auto a = gen_annotations(sim).front();
  const auto scores = gen_scores(a, 0.0, sim.histogram, 3);
  MockDescriber d;
  SessionOptions opt;
  opt.partial = {0.25, 0.5};
  const auto r = run_session(scores, opt, d, frame_name);
  CHECK(r.partials.size() == 2 * r.instances.size());
  CHECK(d.calls() == 3 * r.instances.size() + 1);
  opt.partial = {1.0};
  CHECK_THROWS_AS(run_session(scores, opt, d, frame_name), DomainError);
  CHECK_THROWS_AS(run_session({}, {}, d, frame_name), DataError);
}

TEST_CASE("parallel_for runs every index and rethrows the first failure") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] = 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 100);
  std::atomic<int> ran{0};
  try {
    parallel_for(50, 3, [&](std::size_t i) {
      ++ran;
      if (i == 7 || i == 30) throw DataError("bad " + std::to_string(i));
    });
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()) == "bad 7");
  }
  CHECK(ran == 50);
}

TEST_CASE("factories reject unknown kinds") {
  DescribeConfig d;
  d.client = "other";
  CHECK_THROWS_AS(make_describer(d), DataError);
  MetricsConfig m;
  m.embedder = "other";
  CHECK_THROWS_AS(make_embedder(m), DataError);
  PipelineConfig p;
  p.client = "other";
  CHECK_THROWS_AS(make_llm_client(p), DataError);
}

TEST_CASE("evaluation of ground truth against itself") {
  RunConfig cfg;
  cfg.sim.videos = 3;
  const auto anns = gen_annotations(cfg.sim);
  const auto preds = parse_predictions(annotations_jsonl(anns));
  const auto report = json::parse(evaluate_records(cfg, anns, preds, false));
  for (const char* level : {"substep", "step"}) {
    for (const auto& [k, v] : report["levels"][level]["f1_loc"].items()) CHECK(v == 1.0);
    for (const auto& [k, v] : report["levels"][level]["f1_loc_desc"].items()) CHECK(v == 1.0);
    CHECK(report["levels"][level]["aedt"].is_null());
  }
  CHECK(report["goal_accuracy"] == 1.0);
  const auto table = evaluate_records(cfg, anns, preds, true);
  CHECK(table.find("substep  0.50   1.0000    1.0000") != std::string::npos);
}

TEST_CASE("evaluation input errors") {
  RunConfig cfg;
  cfg.sim.videos = 2;
  const auto anns = gen_annotations(cfg.sim);
  std::vector<EmissionRecord> stray{{"nope", {{0, 1}, "", HierarchyLevel::Substep}, 1.0}};
  CHECK_THROWS_AS(evaluate_records(cfg, anns, stray, false), DataError);
  std::vector<EmissionRecord> anonymous{{"", {{0, 1}, "", HierarchyLevel::Substep}, 1.0}};
  CHECK_THROWS_AS(evaluate_records(cfg, anns, anonymous, false), DataError);
  CHECK_THROWS_AS(parse_predictions("{\"start\":0}\n"), DataError);
}

TEST_CASE("simulate, detect and describe workflows write their files") {
  const auto dir = scratch("files");
  RunConfig cfg;
  cfg.sim.videos = 2;
  cfg.describer.partial = {0.5};
  simulate_workflow(cfg, dir.string());
  const auto anns = parse_annotations_jsonl(read_file((dir / "annotations.jsonl").string()));
  REQUIRE(anns.size() == 2);
  const auto id = anns[0].video_id;
  const StreamSource src{(dir / "scores" / (id + ".csv")).string(), "", "", id};
  detect_workflow(cfg, src, (dir / "det" / "out.jsonl").string());
  const auto det = parse_emissions_jsonl(read_file((dir / "det" / "out.jsonl").string()));
  CHECK_FALSE(det.empty());
  CHECK(std::filesystem::exists(dir / "det" / "effective_config.json"));

  describe_workflow(cfg, src, (dir / "desc" / "out.jsonl").string());
  const auto desc = parse_emissions_jsonl(read_file((dir / "desc" / "out.jsonl").string()));
  REQUIRE(desc.size() == det.size() + 1);
  CHECK(desc.back().instance.level == HierarchyLevel::Goal);
  CHECK(std::filesystem::exists(dir / "desc" / "partial.jsonl"));

  CHECK_THROWS_AS(load_stream({}), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train workflow and model-backed streams") {
  const auto dir = scratch("train");
  RunConfig cfg;
  cfg.sim.videos = 2;
  cfg.sim.duration = {40, 50};
  cfg.sim.steps_per_video = {2, 2};
  cfg.scorer.epochs = 2;
  cfg.scorer.hidden_dim = 8;
  cfg.scorer.recurrent_layers = 1;
  simulate_workflow(cfg, dir.string());
  const auto report = json::parse(train_workflow(cfg, (dir / "annotations.jsonl").string(),
                                                 (dir / "features").string(),
                                                 (dir / "model.json").string()));
  CHECK(report["loss_trace"].size() == 2);
  const auto id = parse_annotations_jsonl(read_file((dir / "annotations.jsonl").string()))[0].video_id;
  const StreamSource src{"", (dir / "model.json").string(), (dir / "features" / (id + ".csv")).string(), id};
  CHECK_FALSE(load_stream(src).empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline workflow builds hierarchical annotations from substeps") {
  const auto dir = scratch("pipeline");
  RunConfig cfg;
  cfg.sim.videos = 2;
  auto anns = gen_annotations(cfg.sim);
  for (auto& a : anns) {
    std::erase_if(a.instances, [](const ActionInstance& x) { return x.level != HierarchyLevel::Substep; });
    a.goal.clear();
  }
  write_file((dir / "in.jsonl").string(), annotations_jsonl(anns));
  cfg.pipeline.k = 2;
  const auto report = json::parse(
      pipeline_workflow(cfg, (dir / "in.jsonl").string(), (dir / "out.jsonl").string()));
  CHECK(report["videos"].size() == 2);
  CHECK(report["captions"].size() == 2);
  const auto out = parse_annotations_jsonl(read_file((dir / "out.jsonl").string()));
  for (const auto& a : out) {
    CHECK(validate_annotations(a, {true}).empty());
    CHECK_FALSE(a.at_level(HierarchyLevel::Step).empty());
    CHECK_FALSE(a.goal.empty());
  }

  RunConfig hier;
  hier.sim.videos = 1;
  write_file((dir / "hier.jsonl").string(), annotations_jsonl(gen_annotations(hier.sim)));
  CHECK_THROWS_AS(pipeline_workflow(cfg, (dir / "hier.jsonl").string(), (dir / "x.jsonl").string()),
                  DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("e2e is deterministic and independent of the job count") {
  const auto dir = scratch("e2e");
  RunConfig cfg;
  cfg.sim.videos = 4;
  cfg.sim.seed = 7;
  const auto a = e2e_workflow(cfg, (dir / "a").string());
  cfg.jobs = 3;
  const auto b = e2e_workflow(cfg, (dir / "b").string());
  CHECK(a == b);
  CHECK(read_file((dir / "a" / "predictions.jsonl").string()) ==
        read_file((dir / "b" / "predictions.jsonl").string()));
  const auto report = json::parse(a);
  CHECK(report["levels"]["substep"]["f1_loc"]["0.7"].get<double>() >= 0.99);
  std::filesystem::remove_all(dir);
}
