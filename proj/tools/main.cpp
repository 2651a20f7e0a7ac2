// Command-line front end: run experiments, print cost tables, generate
// datasets, and validate configs. Exit 0 on success; nonzero with a one-line
// reason on stderr otherwise.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pufsim/data.hpp"
#include "pufsim/experiment.hpp"

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_run(const std::string& config_path) {
  pufsim::ExperimentConfig cfg = pufsim::parse_config_file(config_path);
  cfg.validate();
  pufsim::ExperimentReport report = pufsim::run_experiment(cfg);
  pufsim::emit_reports(report, cfg.output_dir);
  bool any_failed = false;
  for (const auto& s : report.seeds) {
    if (s.failed) {
      std::cerr << "seed " << s.seed << " failed: " << s.error << "\n";
      any_failed = true;
    }
  }
  std::cout << "wrote " << cfg.output_dir << "/summary.json, rounds.csv, costs.csv\n";
  return any_failed ? 1 : 0;
}

int cmd_costs(const std::string& config_path) {
  pufsim::ExperimentConfig cfg = pufsim::parse_config_file(config_path);
  cfg.validate();
  pufsim::CostInputs inputs = pufsim::cost_inputs_for(cfg);
  auto report = pufsim::build_cost_report(inputs);
  std::cout << "method,phase,comm_bytes,comp_flops,storage_bytes,ratio_vs_retrain\n";
  for (const auto& e : report) {
    std::string ratio = e.ratios.comm_infinite ? "inf" : fmt(e.ratios.comm);
    auto row = [&](const char* phase, const pufsim::PhaseCost& c) {
      std::cout << pufsim::to_string(e.cost.method) << ',' << phase << ',' << fmt(c.comm_bytes)
                << ',' << fmt(c.comp_flops) << ',' << fmt(e.cost.storage_bytes) << ',' << ratio
                << '\n';
    };
    row("unlearn", e.cost.unlearn);
    row("recovery", e.cost.recovery);
    row("total", e.cost.total());
  }
  return 0;
}

int cmd_gen_data(const std::string& config_path, std::string out_path) {
  pufsim::ExperimentConfig cfg = pufsim::parse_config_file(config_path);
  cfg.validate();
  if (cfg.dataset.kind != pufsim::DatasetSpec::Kind::synthetic) {
    std::cerr << "gen-data: config key 'dataset.kind' must be \"synthetic\"\n";
    return 1;
  }
  std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
  auto [train, test] = pufsim::generate_synthetic(
      cfg.dataset.synthetic.num_classes, cfg.dataset.synthetic.feature_dim,
      cfg.dataset.synthetic.samples_per_class, cfg.dataset.synthetic.class_separation, seed);
  pufsim::FederatedDataset fd;
  if (cfg.partition.kind == pufsim::PartitionSpec::Kind::iid) {
    fd = pufsim::partition_iid(train, cfg.dataset.synthetic.num_classes, cfg.clients, seed);
  } else {
    fd = pufsim::partition_lda(train, cfg.dataset.synthetic.num_classes, cfg.clients,
                               cfg.partition.alpha, cfg.partition.min_per_client, seed);
  }
  fd.test = std::move(test);
  if (out_path.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    out_path = (std::filesystem::path(cfg.output_dir) / "dataset.pfds").string();
  }
  pufsim::save_dataset(fd, out_path);
  std::cout << "wrote " << out_path << " (" << fd.num_clients() << " clients, "
            << fd.total_samples() << " train samples, " << fd.test.size() << " test samples)\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  pufsim::ExperimentConfig cfg = pufsim::parse_config_file(config_path);
  cfg.validate();
  std::cout << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pufsim: deterministic federated unlearning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;

  auto* run = app.add_subcommand("run", "Run the configured experiment and emit reports");
  run->add_option("config", config_path, "Path to JSON config")->required();

  auto* costs = app.add_subcommand("costs", "Print the closed-form cost table (no training)");
  costs->add_option("config", config_path, "Path to JSON config")->required();

  auto* gen = app.add_subcommand("gen-data", "Generate and save the configured dataset");
  gen->add_option("config", config_path, "Path to JSON config")->required();
  gen->add_option("--out", out_path, "Output dataset path (default: <output_dir>/dataset.pfds)");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config");
  validate->add_option("config", config_path, "Path to JSON config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (costs->parsed()) return cmd_costs(config_path);
    if (gen->parsed()) return cmd_gen_data(config_path, out_path);
    if (validate->parsed()) return cmd_validate(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
