#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pufsim/experiment.hpp"

using namespace pufsim;

namespace {

ExperimentConfig small_config(const std::string& strategy) {
  std::string text = R"({
    "dataset": {"kind": "synthetic", "num_classes": 2, "feature_dim": 3,
                "samples_per_class": 40, "class_separation": 5.0},
    "clients": 4,
    "rounds": 3,
    "hyper": {"epochs": 1, "lr": 0.2, "batch_size": 16},
    "unlearn": {"strategy": ")" + strategy + R"(", "targets": [1]},
    "recovery": {"max_rounds": 4},
    "seeds": [5]
  })";
  return parse_config_text(text);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path tmp_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("retrain strategy lands exactly on the retrained model") {
  SeedResult r = run_seed(small_config("retrain"), 5);
  CHECK_FALSE(r.failed);
  CHECK(r.unlearned == r.retrained);
  CHECK(r.deltas == EfficacyDeltas{});
  CHECK(r.recovery_rounds == 0);  // already at the target accuracy
}

TEST_CASE("natural strategy leaves the original model to recover") {
  SeedResult r = run_seed(small_config("natural"), 5);
  CHECK_FALSE(r.failed);
  // Train rows for every round plus at least the round-0 recovery row.
  std::size_t train_rows = 0, recovery_rows = 0;
  for (const auto& row : r.rows) {
    if (row.phase == "train") {
      ++train_rows;
      CHECK_FALSE(row.forget_acc.has_value());
      CHECK_FALSE(row.mia_song.has_value());
      CHECK_FALSE(row.mia_yeom.has_value());
    } else {
      REQUIRE(row.phase == "recovery");
      ++recovery_rows;
      CHECK(row.forget_acc.has_value());
      CHECK(row.mia_song.has_value());
      CHECK(row.mia_yeom.has_value());
    }
  }
  CHECK(train_rows == 3);
  CHECK(recovery_rows >= 1);
  CHECK(recovery_rows == r.recovery_rounds + 1);
}

TEST_CASE("run_seed is deterministic and thread-count independent") {
  ExperimentConfig cfg = small_config("puf_special");
  SeedResult a = run_seed(cfg, 5);
  SeedResult b = run_seed(cfg, 5);
  CHECK(a == b);
  cfg.num_threads = 4;
  SeedResult c = run_seed(cfg, 5);
  CHECK(a == c);
}

TEST_CASE("every strategy runs end to end") {
  for (const char* s : {"natural", "retrain", "puf_special", "puf_regular", "not", "pga"}) {
    CAPTURE(s);
    SeedResult r = run_seed(small_config(s), 5);
    CHECK_FALSE(r.failed);
    CHECK(r.unlearned.test_acc >= 0.0);
    CHECK(r.unlearned.test_acc <= 1.0);
  }
}

TEST_CASE("sample scope runs end to end") {
  ExperimentConfig cfg = small_config("puf_special");
  cfg.unlearn.scope = UnlearnScope::sample;
  cfg.unlearn.sample_fraction = 0.5;
  SeedResult r = run_seed(cfg, 5);
  CHECK_FALSE(r.failed);
}

TEST_CASE("cost_inputs_for derives defaults and applies overrides") {
  ExperimentConfig cfg = small_config("puf_special");
  CostInputs in = cost_inputs_for(cfg);
  // logistic over 3 features, 2 classes: 2*3 weights + 2 biases
  CHECK(in.model_params == doctest::Approx(8.0));
  CHECK(in.total_clients == doctest::Approx(4.0));
  CHECK(in.unlearning_clients == doctest::Approx(1.0));
  CHECK(in.remaining_clients == doctest::Approx(3.0));
  CHECK(in.training_rounds == doctest::Approx(3.0));
  CHECK(in.recovery_rounds == doctest::Approx(4.0));
  // 80% of 2*40 samples over 4 clients
  CHECK(in.samples_per_client == doctest::Approx(16.0));

  cfg.cost_inputs["model_params"] = 1.1225e7;
  cfg.cost_inputs["flops_per_image"] = 0.15e9;
  CostInputs over = cost_inputs_for(cfg);
  CHECK(over.model_params == doctest::Approx(1.1225e7));
  CHECK(over.flops_per_image == doctest::Approx(0.15e9));
}

TEST_CASE("report serialization round-trips to an equal report") {
  ExperimentConfig cfg = small_config("puf_special");
  ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.seeds.size() == 1);
  CHECK(report.costs.size() == all_cost_methods().size());
  ExperimentReport reloaded = parse_report(serialize_report(report));
  CHECK(report == reloaded);
  CHECK(serialize_report(report) == serialize_report(reloaded));
}

TEST_CASE("emit_reports writes stable files with the exact headers") {
  ExperimentConfig cfg = small_config("puf_special");
  ExperimentReport report = run_experiment(cfg);

  auto dir1 = tmp_dir("pufsim_emit1");
  auto dir2 = tmp_dir("pufsim_emit2");
  emit_reports(report, dir1.string());
  emit_reports(report, dir2.string());
  for (const char* f : {"summary.json", "rounds.csv", "costs.csv"}) {
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));
  }

  std::string rounds = slurp(dir1 / "rounds.csv");
  CHECK(rounds.rfind("seed,phase,round,test_acc,forget_acc,mia_song,mia_yeom\n", 0) == 0);
  std::string costs = slurp(dir1 / "costs.csv");
  CHECK(costs.rfind("method,phase,comm_bytes,comp_flops,storage_bytes,ratio_vs_retrain\n", 0) ==
        0);

  // Constant column count across rows.
  auto comma_count = [](const std::string& content, std::size_t expected) {
    std::istringstream ss(content);
    std::string line;
    while (std::getline(ss, line)) {
      std::size_t n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      CHECK(n == expected);
    }
  };
  comma_count(rounds, 6);  // 7 columns
  comma_count(costs, 5);   // 6 columns

  // summary.json reloads into an equal report.
  CHECK(parse_report(slurp(dir1 / "summary.json")) == report);

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("a failing seed is reported, not fatal") {
  ExperimentConfig cfg = small_config("pga");
  cfg.unlearn.targets = {0, 1};  // pga supports a single target only
  ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.seeds.size() == 1);
  CHECK(report.seeds[0].failed);
  CHECK_FALSE(report.seeds[0].error.empty());
}
