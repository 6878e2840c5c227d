// Links against the shared library and uses the C header only.
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hstream/hstream.h"

using nlohmann::json;

namespace {

struct Str {
  char* p = nullptr;
  ~Str() { hs_string_free(p); }
  std::string s() const { return p ? p : ""; }
};

void push_one_hot(hs_detector* d, double t, int state, int step_bin, int sub_bin, char** events) {
  double probs[3] = {0, 0, 0};
  probs[state] = 1;
  double sp[10] = {0};
  double ssp[10] = {0};
  sp[step_bin] = 1;
  ssp[sub_bin] = 1;
  REQUIRE(hs_detector_push(d, t, probs, sp, ssp, 10, events) == HS_OK);
}

}  // namespace

TEST_CASE("version and default config") {
  CHECK(std::strlen(hs_version()) > 0);
  Str cfg;
  REQUIRE(hs_config_default(&cfg.p) == HS_OK);
  const auto j = json::parse(cfg.s());
  CHECK(j["detector"]["drop_delta"] == 0.4);
  CHECK(j["sim"]["fps"] == 10.0);
}

TEST_CASE("config merge errors are data errors with a message") {
  Str out;
  CHECK(hs_config_merge(nullptr, R"({"sim":{"videos":2}})", &out.p) == HS_OK);
  CHECK(json::parse(out.s())["sim"]["videos"] == 2);
  Str bad;
  CHECK(hs_config_merge(nullptr, R"({"bogus":1})", &bad.p) == HS_ERR_DATA);
  CHECK(bad.p == nullptr);
  CHECK(std::string(hs_last_error()).find("bogus") != std::string::npos);
  CHECK(hs_config_merge(nullptr, nullptr, nullptr) == HS_ERR_USAGE);
}

TEST_CASE("detector handle lifecycle") {
  hs_detector* d = nullptr;
  REQUIRE(hs_detector_create(nullptr, &d) == HS_OK);
  REQUIRE(d != nullptr);
  for (int t = 0; t < 5; ++t) push_one_hot(d, t, 2, t, t * 2, nullptr);
  Str ev;
  push_one_hot(d, 5, 2, 5, 0, &ev.p);
  const auto events = json::parse(ev.s());
  REQUIRE(events.size() == 1);
  CHECK(events[0]["kind"] == "ended");
  CHECK(events[0]["level"] == 1);
  CHECK(events[0]["start"] == 0.0);
  CHECK(events[0]["end"] == 4.0);

  double probs[3] = {1, 0, 0};
  double sp[10] = {1};
  CHECK(hs_detector_push(d, 4, probs, sp, sp, 10, nullptr) == HS_ERR_DATA);
  CHECK(hs_detector_push(d, 6, probs, sp, sp, 0, nullptr) == HS_ERR_DATA);
  CHECK(hs_detector_push(nullptr, 6, probs, sp, sp, 10, nullptr) == HS_ERR_USAGE);

  Str fin;
  REQUIRE(hs_detector_finish(d, 5, &fin.p) == HS_OK);
  CHECK(json::parse(fin.s()).back()["kind"] == "goal_due");
  CHECK(hs_detector_finish(d, 5, nullptr) == HS_ERR_STATE);
  CHECK(hs_detector_push(d, 9, probs, sp, sp, 10, nullptr) == HS_ERR_STATE);

  Str log;
  REQUIRE(hs_detector_emissions(d, &log.p) == HS_OK);
  const std::string lines = log.s();
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
  hs_detector_destroy(d);
  hs_detector_destroy(nullptr);
}

TEST_CASE("invalid detector config") {
  hs_detector* d = nullptr;
  CHECK(hs_detector_create(R"({"detector":{"start_threshold":2}})", &d) == HS_ERR_DATA);
  CHECK(d == nullptr);
}

TEST_CASE("workflows through the C interface") {
  const auto dir = std::filesystem::temp_directory_path() / "hstream_capi_test";
  std::filesystem::remove_all(dir);
  const std::string cfg = R"({"sim":{"videos":2,"seed":4}})";
  REQUIRE(hs_simulate(cfg.c_str(), dir.string().c_str()) == HS_OK);
  const auto ann = (dir / "annotations.jsonl").string();
  CHECK(std::filesystem::exists(ann));

  Str report;
  REQUIRE(hs_evaluate(cfg.c_str(), ann.c_str(), ann.c_str(), 0, &report.p) == HS_OK);
  CHECK(json::parse(report.s())["levels"]["step"]["f1_loc"]["0.5"] == 1.0);

  Str missing;
  CHECK(hs_evaluate(cfg.c_str(), (dir / "none.jsonl").string().c_str(), ann.c_str(), 0, &missing.p) ==
        HS_ERR_DATA);
  CHECK(hs_evaluate(cfg.c_str(), nullptr, ann.c_str(), 0, &missing.p) == HS_ERR_USAGE);
  CHECK(hs_detect(cfg.c_str(), nullptr, nullptr, nullptr, nullptr, "x") == HS_ERR_DATA);

  Str e2e;
  REQUIRE(hs_e2e(cfg.c_str(), (dir / "e2e").string().c_str(), &e2e.p) == HS_OK);
  CHECK(json::parse(e2e.s())["videos"] == 2);

  hs_model* m = nullptr;
  CHECK(hs_model_load((dir / "no_model.json").string().c_str(), &m) == HS_ERR_DATA);
  std::filesystem::remove_all(dir);
}

TEST_CASE("transport and parse failures map to their codes") {
  const auto dir = std::filesystem::temp_directory_path() / "hstream_capi_remote";
  std::filesystem::remove_all(dir);
  REQUIRE(hs_simulate(R"({"sim":{"videos":1}})", dir.string().c_str()) == HS_OK);
  const auto ann = (dir / "annotations.jsonl").string();
  const std::string unreachable =
      R"({"metrics":{"embedder":"http","http":{"endpoint":"http://127.0.0.1:1/v1/embeddings",)"
      R"("retry":{"max_retries":0,"timeout_seconds":1}}}})";
  Str r;
  CHECK(hs_evaluate(unreachable.c_str(), ann.c_str(), ann.c_str(), 0, &r.p) == HS_ERR_TRANSPORT);
  std::filesystem::remove_all(dir);
}
