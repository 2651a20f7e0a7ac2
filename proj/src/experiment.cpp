#include "pufsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pufsim/rng.hpp"

namespace pufsim {

using nlohmann::json;

namespace {

constexpr const char* kCodeVersion = "pufsim 0.1.0";

struct PreparedData {
  FederatedDataset dataset;
  ModelArch arch;
};

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedData out;
  if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
    auto [train, test] = generate_synthetic(
        cfg.dataset.synthetic.num_classes, cfg.dataset.synthetic.feature_dim,
        cfg.dataset.synthetic.samples_per_class, cfg.dataset.synthetic.class_separation, seed);
    if (cfg.partition.kind == PartitionSpec::Kind::iid) {
      out.dataset = partition_iid(train, cfg.dataset.synthetic.num_classes, cfg.clients, seed);
    } else {
      out.dataset = partition_lda(train, cfg.dataset.synthetic.num_classes, cfg.clients,
                                  cfg.partition.alpha, cfg.partition.min_per_client, seed);
    }
    out.dataset.test = std::move(test);
  } else {
    out.dataset = load_dataset(cfg.dataset.path);
    if (out.dataset.num_clients() != cfg.clients) {
      throw ConfigError("config key 'clients': dataset file holds " +
                        std::to_string(out.dataset.num_clients()) + " clients, config says " +
                        std::to_string(cfg.clients));
    }
  }
  out.arch.kind = cfg.arch.kind;
  out.arch.feature_dim = out.dataset.test.feature_dim;
  out.arch.hidden_dim = cfg.arch.hidden_dim;
  out.arch.num_classes = static_cast<std::size_t>(out.dataset.num_classes);
  return out;
}

LabeledBatch pooled_client_data(const FederatedDataset& dataset,
                                const std::vector<std::size_t>& client_ids) {
  LabeledBatch out;
  for (std::size_t id : client_ids) {
    const LabeledBatch& c = dataset.clients.at(id);
    if (out.feature_dim == 0) out.feature_dim = c.feature_dim;
    out.labels.insert(out.labels.end(), c.labels.begin(), c.labels.end());
    out.inputs.insert(out.inputs.end(), c.inputs.begin(), c.inputs.end());
  }
  return out;
}

EfficacyMetrics evaluate_model(const ParameterVector& w, const FederatedDataset& train_view,
                               const std::vector<std::size_t>& train_clients,
                               const LabeledBatch& test, const LabeledBatch& forget,
                               std::uint64_t seed) {
  EfficacyMetrics m;
  m.test_acc = predict_accuracy(w, test);
  m.forget_acc = forget_accuracy(w, forget);
  double threshold = global_mean_train_loss(w, train_view, train_clients);
  m.mia_yeom = mia_yeom(w, threshold, forget);
  LabeledBatch retain = pooled_client_data(train_view, train_clients);
  MiaSongResult song = mia_song(w, retain, test, forget, seed);
  m.mia_song = song.success_rate;
  m.mia_song_degenerate = song.degenerate;
  return m;
}

}  // namespace

CostInputs cost_inputs_for(const ExperimentConfig& cfg) {
  CostInputs in;
  ModelArch arch;
  arch.kind = cfg.arch.kind;
  arch.hidden_dim = cfg.arch.hidden_dim;
  if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
    arch.feature_dim = cfg.dataset.synthetic.feature_dim;
    arch.num_classes = static_cast<std::size_t>(cfg.dataset.synthetic.num_classes);
    in.model_params = static_cast<double>(schema_size(arch.schema()));
    // Classifier head only: the output layer of the model.
    const Schema schema = arch.schema();
    in.classifier_params = static_cast<double>(schema[schema.size() - 2].size() +
                                               schema[schema.size() - 1].size());
    double train_total = 0.8 * static_cast<double>(cfg.dataset.synthetic.num_classes) *
                         static_cast<double>(cfg.dataset.synthetic.samples_per_class);
    in.samples_per_client = std::floor(train_total / static_cast<double>(cfg.clients));
    // Dense forward+backward is roughly 6 multiply-adds per weight per image.
    in.flops_per_image = 6.0 * in.model_params;
  }
  in.bytes_per_param = 4.0;  // the accounting assumes float32 transport
  in.total_clients = static_cast<double>(cfg.clients);
  in.unlearning_clients = static_cast<double>(cfg.unlearn.targets.size());
  in.remaining_clients = in.total_clients - in.unlearning_clients;
  in.local_epochs = static_cast<double>(cfg.hyper.epochs);
  in.training_rounds = static_cast<double>(cfg.rounds);
  in.retained_rounds = static_cast<double>(cfg.rounds);
  in.calibration_epochs = 0.5;
  in.ascent_epochs = static_cast<double>(cfg.unlearn.pga.ascent_epochs);
  in.degradation_rounds = 6.0;
  in.memory_rounds = 10.0;
  in.recovery_rounds = static_cast<double>(cfg.recovery.max_rounds);

  for (const auto& [key, value] : cfg.cost_inputs) {
    if (key == "model_params") in.model_params = value;
    else if (key == "bytes_per_param") in.bytes_per_param = value;
    else if (key == "classifier_params") in.classifier_params = value;
    else if (key == "total_clients") in.total_clients = value;
    else if (key == "unlearning_clients") in.unlearning_clients = value;
    else if (key == "remaining_clients") in.remaining_clients = value;
    else if (key == "flops_per_image") in.flops_per_image = value;
    else if (key == "samples_per_client") in.samples_per_client = value;
    else if (key == "local_epochs") in.local_epochs = value;
    else if (key == "training_rounds") in.training_rounds = value;
    else if (key == "retained_rounds") in.retained_rounds = value;
    else if (key == "calibration_epochs") in.calibration_epochs = value;
    else if (key == "ascent_epochs") in.ascent_epochs = value;
    else if (key == "degradation_rounds") in.degradation_rounds = value;
    else if (key == "memory_rounds") in.memory_rounds = value;
    else if (key == "recovery_rounds") in.recovery_rounds = value;
    else throw ConfigError("config key 'cost_inputs." + key + "': unknown key");
  }
  in.validate();
  return in;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedResult res;
  res.seed = seed;

  PreparedData data = prepare_data(cfg, seed);
  const FederatedDataset& dataset = data.dataset;

  UnlearnRequest request;
  request.targets = cfg.unlearn.targets;
  request.scope = cfg.unlearn.scope;
  request.sample_fraction = cfg.unlearn.sample_fraction;
  request.sample_seed = seed;
  request.strategy = cfg.unlearn.strategy;
  request.validate(dataset.num_clients());
  ScopeViews views = sample_scope_filter(request, dataset);

  TrainOptions train_opts;
  train_opts.rounds = cfg.rounds;
  train_opts.hyper = {cfg.hyper.epochs, cfg.hyper.lr, cfg.hyper.batch_size};
  train_opts.lr_decay = cfg.hyper.lr_decay;
  train_opts.eta_s = cfg.hyper.eta_s;
  train_opts.num_threads = cfg.num_threads;

  // Original model; for PGA the target's final-round update must be captured,
  // so the last round is replayed from a snapshot.
  ParameterVector original;
  TrainHistory original_history;
  std::optional<ClientUpdate> last_target_update;
  std::size_t n_last = dataset.total_samples();
  if (cfg.unlearn.strategy == Strategy::pga) {
    if (request.targets.size() != 1) {
      throw UnlearnError("pga: multiple-target unlearning is not supported (the reference "
                         "model depends on a single stored update)");
    }
    ParameterVector w_prev;
    if (cfg.rounds > 1) {
      TrainOptions first = train_opts;
      first.rounds = cfg.rounds - 1;
      auto [w, hist] = train(dataset, data.arch, first, seed);
      w_prev = std::move(w);
      original_history = std::move(hist);
    } else {
      w_prev = init_model(data.arch, seed);
    }
    std::size_t last_round = cfg.rounds - 1;
    std::size_t target = request.targets[0];
    HyperParams h = train_opts.hyper;
    h.lr = cfg.hyper.lr * std::pow(cfg.hyper.lr_decay, static_cast<double>(last_round));
    std::uint64_t client_seed = Rng::derive_key(seed, "client-opt", {last_round, target});
    last_target_update = client_opt(dataset.clients.at(target), w_prev, h, client_seed, target);

    TrainOptions last = train_opts;
    last.rounds = 1;
    last.lr_schedule_offset = last_round;
    auto [w, hist] = train_from(dataset, std::move(w_prev), last, seed);
    original = std::move(w);
    original_history.insert(original_history.end(), hist.begin(), hist.end());
  } else {
    auto [w, hist] = train(dataset, data.arch, train_opts, seed);
    original = std::move(w);
    original_history = std::move(hist);
  }

  // Retrain baseline: from scratch on the recovery view (targets removed, or
  // contributing retain data only under sample scope).
  TrainOptions retrain_opts = train_opts;
  retrain_opts.client_ids = views.recovery_clients;
  auto [retrained_model, retrain_history] =
      train(views.recovery_view, data.arch, retrain_opts, seed);
  (void)retrain_history;

  // Apply the unlearning strategy at round R.
  HyperParams unlearn_hyper = train_opts.hyper;
  unlearn_hyper.epochs = cfg.unlearn.unlearn_epochs;
  unlearn_hyper.lr = cfg.hyper.lr * std::pow(cfg.hyper.lr_decay, static_cast<double>(cfg.rounds));
  std::vector<std::size_t> retained_ids;
  for (std::size_t id = 0; id < dataset.num_clients(); ++id) {
    if (std::find(request.targets.begin(), request.targets.end(), id) == request.targets.end()) {
      retained_ids.push_back(id);
    }
  }

  ParameterVector unlearned;
  switch (cfg.unlearn.strategy) {
    case Strategy::natural:
      unlearned = original;
      break;
    case Strategy::retrain:
      unlearned = retrained_model;
      break;
    case Strategy::puf_special:
      unlearned = puf_special_round(original, views.unlearn_view, request.targets,
                                    cfg.unlearn.eta_u, unlearn_hyper, seed, cfg.rounds,
                                    cfg.num_threads);
      break;
    case Strategy::puf_regular:
      unlearned = puf_regular_round(original, views.unlearn_view, retained_ids, request.targets,
                                    cfg.unlearn.eta_r, cfg.unlearn.eta_u, unlearn_hyper, seed,
                                    cfg.rounds, cfg.num_threads);
      break;
    case Strategy::not_first_layer:
      unlearned = not_unlearn(original, cfg.unlearn.not_negate_bias);
      break;
    case Strategy::pga: {
      ParameterVector w_ref = make_pga_reference(original, last_target_update, n_last);
      PgaParams params = cfg.unlearn.pga;
      unlearned = pga_unlearn(original, views.forget_data, w_ref, params,
                              Rng::derive_key(seed, "pga"));
      break;
    }
  }

  res.retrained = evaluate_model(retrained_model, views.recovery_view, views.recovery_clients,
                                 dataset.test, views.forget_data, seed);
  res.original = evaluate_model(original, dataset,
                                [&] {
                                  std::vector<std::size_t> all(dataset.num_clients());
                                  std::iota(all.begin(), all.end(), 0);
                                  return all;
                                }(),
                                dataset.test, views.forget_data, seed);

  for (const RoundRecord& rec : original_history) {
    RoundsRow row;
    row.seed = seed;
    row.phase = "train";
    row.round = rec.round_index;
    row.test_acc = rec.test_accuracy;
    res.rows.push_back(std::move(row));
  }

  // Recovery toward the retrained model's test accuracy, continuing the lr
  // schedule unless the config overrides the offset.
  TrainOptions rec_opts = train_opts;
  rec_opts.lr_schedule_offset = cfg.lr_schedule_offset.value_or(cfg.rounds);
  rec_opts.client_ids = views.recovery_clients;

  auto observer = [&](std::size_t round, const ParameterVector& model) {
    RoundsRow row;
    row.seed = seed;
    row.phase = "recovery";
    row.round = round;
    row.test_acc = predict_accuracy(model, dataset.test);
    row.forget_acc = forget_accuracy(model, views.forget_data);
    double threshold = global_mean_train_loss(model, views.recovery_view, views.recovery_clients);
    row.mia_yeom = mia_yeom(model, threshold, views.forget_data);
    LabeledBatch retain = pooled_client_data(views.recovery_view, views.recovery_clients);
    row.mia_song = mia_song(model, retain, dataset.test, views.forget_data, seed).success_rate;
    res.rows.push_back(std::move(row));
  };

  RecoveryResult recovery =
      recover(unlearned, views.recovery_view, views.recovery_clients, rec_opts,
              cfg.recovery.max_rounds, res.retrained.test_acc, views.forget_data, seed, observer);
  res.recovery_rounds = recovery.recovery_rounds;
  res.recovery_capped = recovery.capped;

  res.unlearned = evaluate_model(recovery.model, views.recovery_view, views.recovery_clients,
                                 dataset.test, views.forget_data, seed);
  EfficacyReport report = delta_report(res.unlearned, res.retrained);
  res.deltas = report.deltas;
  return res;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  // Thread count cannot affect results, so it is not part of the experiment
  // identity: normalize it in the echoed config to keep outputs byte-identical
  // across parallelism levels.
  ExperimentConfig echoed = cfg;
  echoed.num_threads = 1;
  report.config_json = serialize_config(echoed);
  report.code_version = kCodeVersion;
  for (std::uint64_t seed : cfg.seeds) {
    try {
      report.seeds.push_back(run_seed(cfg, seed));
    } catch (const std::exception& e) {
      SeedResult failed;
      failed.seed = seed;
      failed.failed = true;
      failed.error = e.what();
      report.seeds.push_back(std::move(failed));
    }
  }
  report.costs = build_cost_report(cost_inputs_for(cfg));
  return report;
}

// ---- serialization ---------------------------------------------------------

namespace {

json metrics_to_json(const EfficacyMetrics& m) {
  return {{"test_acc", m.test_acc},
          {"forget_acc", m.forget_acc},
          {"mia_song", m.mia_song},
          {"mia_yeom", m.mia_yeom},
          {"mia_song_degenerate", m.mia_song_degenerate}};
}

EfficacyMetrics metrics_from_json(const json& j) {
  EfficacyMetrics m;
  m.test_acc = j.at("test_acc");
  m.forget_acc = j.at("forget_acc");
  m.mia_song = j.at("mia_song");
  m.mia_yeom = j.at("mia_yeom");
  m.mia_song_degenerate = j.at("mia_song_degenerate");
  return m;
}

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json ratio_to_json(double value, bool infinite) {
  return infinite ? json("inf") : json(value);
}

}  // namespace

std::string serialize_report(const ExperimentReport& report) {
  json j;
  j["config"] = json::parse(report.config_json);
  j["code_version"] = report.code_version;
  j["seeds"] = json::array();
  for (const SeedResult& s : report.seeds) {
    json js;
    js["seed"] = s.seed;
    js["failed"] = s.failed;
    js["error"] = s.error;
    js["original"] = metrics_to_json(s.original);
    js["unlearned"] = metrics_to_json(s.unlearned);
    js["retrained"] = metrics_to_json(s.retrained);
    js["deltas"] = {{"test_acc", s.deltas.test_acc},
                    {"forget_acc", s.deltas.forget_acc},
                    {"mia_song", s.deltas.mia_song},
                    {"mia_yeom", s.deltas.mia_yeom}};
    js["recovery_rounds"] = s.recovery_rounds;
    js["recovery_capped"] = s.recovery_capped;
    js["rows"] = json::array();
    for (const RoundsRow& r : s.rows) {
      js["rows"].push_back({{"seed", r.seed},
                            {"phase", r.phase},
                            {"round", r.round},
                            {"test_acc", r.test_acc},
                            {"forget_acc", optional_to_json(r.forget_acc)},
                            {"mia_song", optional_to_json(r.mia_song)},
                            {"mia_yeom", optional_to_json(r.mia_yeom)}});
    }
    j["seeds"].push_back(std::move(js));
  }
  j["costs"] = json::array();
  for (const CostReportEntry& e : report.costs) {
    json jc;
    jc["method"] = to_string(e.cost.method);
    jc["unlearn"] = {{"comm_bytes", e.cost.unlearn.comm_bytes},
                     {"comp_flops", e.cost.unlearn.comp_flops}};
    jc["recovery"] = {{"comm_bytes", e.cost.recovery.comm_bytes},
                      {"comp_flops", e.cost.recovery.comp_flops}};
    jc["total"] = {{"comm_bytes", e.cost.total().comm_bytes},
                   {"comp_flops", e.cost.total().comp_flops}};
    jc["storage_bytes"] = e.cost.storage_bytes;
    jc["comm_negligible"] = e.cost.comm_negligible;
    jc["comp_negligible"] = e.cost.comp_negligible;
    jc["ratios"] = {{"comm", ratio_to_json(e.ratios.comm, e.ratios.comm_infinite)},
                    {"comp", ratio_to_json(e.ratios.comp, e.ratios.comp_infinite)},
                    {"storage", ratio_to_json(e.ratios.storage, e.ratios.storage_infinite)}};
    j["costs"].push_back(std::move(jc));
  }
  return j.dump(2) + "\n";
}

ExperimentReport parse_report(const std::string& text) {
  json j = json::parse(text);
  ExperimentReport report;
  report.config_json = serialize_config(parse_config_text(j.at("config").dump()));
  report.code_version = j.at("code_version");
  for (const json& js : j.at("seeds")) {
    SeedResult s;
    s.seed = js.at("seed");
    s.failed = js.at("failed");
    s.error = js.at("error");
    s.original = metrics_from_json(js.at("original"));
    s.unlearned = metrics_from_json(js.at("unlearned"));
    s.retrained = metrics_from_json(js.at("retrained"));
    s.deltas.test_acc = js.at("deltas").at("test_acc");
    s.deltas.forget_acc = js.at("deltas").at("forget_acc");
    s.deltas.mia_song = js.at("deltas").at("mia_song");
    s.deltas.mia_yeom = js.at("deltas").at("mia_yeom");
    s.recovery_rounds = js.at("recovery_rounds");
    s.recovery_capped = js.at("recovery_capped");
    for (const json& jr : js.at("rows")) {
      RoundsRow r;
      r.seed = jr.at("seed");
      r.phase = jr.at("phase");
      r.round = jr.at("round");
      r.test_acc = jr.at("test_acc");
      r.forget_acc = optional_from_json(jr.at("forget_acc"));
      r.mia_song = optional_from_json(jr.at("mia_song"));
      r.mia_yeom = optional_from_json(jr.at("mia_yeom"));
      s.rows.push_back(std::move(r));
    }
    report.seeds.push_back(std::move(s));
  }
  for (const json& jc : j.at("costs")) {
    CostReportEntry e;
    e.cost.method = cost_method_from_string(jc.at("method"));
    e.cost.unlearn.comm_bytes = jc.at("unlearn").at("comm_bytes");
    e.cost.unlearn.comp_flops = jc.at("unlearn").at("comp_flops");
    e.cost.recovery.comm_bytes = jc.at("recovery").at("comm_bytes");
    e.cost.recovery.comp_flops = jc.at("recovery").at("comp_flops");
    e.cost.storage_bytes = jc.at("storage_bytes");
    e.cost.comm_negligible = jc.at("comm_negligible");
    e.cost.comp_negligible = jc.at("comp_negligible");
    auto ratio = [](const json& v, double& out, bool& inf) {
      if (v.is_string()) {
        out = std::numeric_limits<double>::infinity();
        inf = true;
      } else {
        out = v.get<double>();
        inf = false;
      }
    };
    ratio(jc.at("ratios").at("comm"), e.ratios.comm, e.ratios.comm_infinite);
    ratio(jc.at("ratios").at("comp"), e.ratios.comp, e.ratios.comp_infinite);
    ratio(jc.at("ratios").at("storage"), e.ratios.storage, e.ratios.storage_infinite);
    report.costs.push_back(std::move(e));
  }
  return report;
}

bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
  return a.config_json == b.config_json && a.code_version == b.code_version &&
         a.seeds == b.seeds && a.costs == b.costs;
}

// ---- file emission ---------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("emit_reports: cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("emit_reports: write failed for " + path.string());
}

}  // namespace

void emit_reports(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::path base(dir);
  std::filesystem::create_directories(base);

  write_file(base / "summary.json", serialize_report(report));

  std::string rounds = "seed,phase,round,test_acc,forget_acc,mia_song,mia_yeom\n";
  for (const SeedResult& s : report.seeds) {
    for (const RoundsRow& r : s.rows) {
      rounds += std::to_string(r.seed) + "," + r.phase + "," + std::to_string(r.round) + "," +
                fmt_double(r.test_acc) + "," + fmt_optional(r.forget_acc) + "," +
                fmt_optional(r.mia_song) + "," + fmt_optional(r.mia_yeom) + "\n";
    }
  }
  write_file(base / "rounds.csv", rounds);

  // ratio_vs_retrain is the total-communication improvement factor for the
  // method; "inf" marks negligible (exact zero) communication.
  std::string costs = "method,phase,comm_bytes,comp_flops,storage_bytes,ratio_vs_retrain\n";
  for (const CostReportEntry& e : report.costs) {
    std::string ratio = e.ratios.comm_infinite ? "inf" : fmt_double(e.ratios.comm);
    auto row = [&](const std::string& phase, const PhaseCost& c) {
      costs += to_string(e.cost.method) + "," + phase + "," + fmt_double(c.comm_bytes) + "," +
               fmt_double(c.comp_flops) + "," + fmt_double(e.cost.storage_bytes) + "," + ratio +
               "\n";
    };
    row("unlearn", e.cost.unlearn);
    row("recovery", e.cost.recovery);
    row("total", e.cost.total());
  }
  write_file(base / "costs.csv", costs);
}

}  // namespace pufsim
