#include "pufsim/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace pufsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

template <typename T>
T get_required(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(path + "." + key, "missing required key");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

const std::set<std::string>& cost_input_keys() {
  static const std::set<std::string> keys = {
      "model_params",      "bytes_per_param",  "classifier_params", "total_clients",
      "unlearning_clients", "remaining_clients", "flops_per_image",  "samples_per_client",
      "local_epochs",      "training_rounds",  "retained_rounds",   "calibration_epochs",
      "ascent_epochs",     "degradation_rounds", "memory_rounds",   "recovery_rounds"};
  return keys;
}

DatasetSpec parse_dataset(const json& j) {
  DatasetSpec d;
  check_keys(j, "dataset", {"kind", "path", "num_classes", "feature_dim", "samples_per_class",
                            "class_separation"});
  std::string kind = get_or<std::string>(j, "dataset", "kind", "synthetic");
  if (kind == "synthetic") {
    d.kind = DatasetSpec::Kind::synthetic;
    d.synthetic.num_classes = get_or<int>(j, "dataset", "num_classes", 2);
    d.synthetic.feature_dim = get_or<std::size_t>(j, "dataset", "feature_dim", 2);
    d.synthetic.samples_per_class = get_or<std::size_t>(j, "dataset", "samples_per_class", 100);
    d.synthetic.class_separation = get_or<double>(j, "dataset", "class_separation", 4.0);
  } else if (kind == "file") {
    d.kind = DatasetSpec::Kind::file;
    d.path = get_required<std::string>(j, "dataset", "path");
  } else {
    fail("dataset.kind", "must be 'synthetic' or 'file'");
  }
  return d;
}

PartitionSpec parse_partition(const json& j) {
  PartitionSpec p;
  check_keys(j, "partition", {"kind", "alpha", "min_per_client"});
  std::string kind = get_or<std::string>(j, "partition", "kind", "iid");
  if (kind == "iid") {
    p.kind = PartitionSpec::Kind::iid;
  } else if (kind == "lda") {
    p.kind = PartitionSpec::Kind::lda;
    p.alpha = get_or<double>(j, "partition", "alpha", 0.1);
    p.min_per_client = get_or<std::size_t>(j, "partition", "min_per_client", 2);
  } else {
    fail("partition.kind", "must be 'iid' or 'lda'");
  }
  return p;
}

ArchSpec parse_arch(const json& j) {
  ArchSpec a;
  check_keys(j, "arch", {"kind", "hidden_dim"});
  std::string kind = get_or<std::string>(j, "arch", "kind", "logistic");
  if (kind == "logistic") {
    a.kind = ModelKind::logistic;
  } else if (kind == "mlp") {
    a.kind = ModelKind::mlp;
  } else {
    fail("arch.kind", "must be 'logistic' or 'mlp'");
  }
  a.hidden_dim = get_or<std::size_t>(j, "arch", "hidden_dim", 16);
  return a;
}

HyperSpec parse_hyper(const json& j) {
  HyperSpec h;
  check_keys(j, "hyper", {"epochs", "lr", "batch_size", "lr_decay", "eta_s"});
  h.epochs = get_or<std::size_t>(j, "hyper", "epochs", 1);
  h.lr = get_or<double>(j, "hyper", "lr", 0.1);
  h.batch_size = get_or<std::size_t>(j, "hyper", "batch_size", 32);
  h.lr_decay = get_or<double>(j, "hyper", "lr_decay", 1.0);
  h.eta_s = get_or<double>(j, "hyper", "eta_s", 1.0);
  return h;
}

UnlearnSpec parse_unlearn(const json& j) {
  UnlearnSpec u;
  check_keys(j, "unlearn",
             {"strategy", "targets", "scope", "sample_fraction", "eta_r", "eta_u",
              "unlearn_epochs", "not_negate_bias", "pga"});
  try {
    u.strategy = strategy_from_string(get_required<std::string>(j, "unlearn", "strategy"));
  } catch (const std::invalid_argument& e) {
    fail("unlearn.strategy", e.what());
  }
  u.targets = get_required<std::vector<std::size_t>>(j, "unlearn", "targets");
  std::string scope = get_or<std::string>(j, "unlearn", "scope", "client");
  if (scope == "client") {
    u.scope = UnlearnScope::client;
  } else if (scope == "sample") {
    u.scope = UnlearnScope::sample;
  } else {
    fail("unlearn.scope", "must be 'client' or 'sample'");
  }
  u.sample_fraction = get_or<double>(j, "unlearn", "sample_fraction", 0.5);
  u.eta_r = get_or<double>(j, "unlearn", "eta_r", 1.0);
  double default_eta_u = (u.strategy == Strategy::puf_regular) ? 20.0 : 2.0;
  u.eta_u = get_or<double>(j, "unlearn", "eta_u", default_eta_u);
  u.unlearn_epochs = get_or<std::size_t>(j, "unlearn", "unlearn_epochs", 1);
  u.not_negate_bias = get_or<bool>(j, "unlearn", "not_negate_bias", false);
  if (j.contains("pga")) {
    const json& p = j.at("pga");
    check_keys(p, "unlearn.pga",
               {"ascent_epochs", "clip_threshold", "ball_radius",
                "early_stop_loss_threshold", "batch_size", "lr", "early_stop_enabled"});
    u.pga.ascent_epochs = get_or<std::size_t>(p, "unlearn.pga", "ascent_epochs", 5);
    u.pga.clip_threshold = get_or<double>(p, "unlearn.pga", "clip_threshold", 5.0);
    u.pga.ball_radius = get_or<double>(p, "unlearn.pga", "ball_radius", 1.0);
    u.pga.early_stop_loss_threshold =
        get_or<double>(p, "unlearn.pga", "early_stop_loss_threshold", 6.5);
    u.pga.batch_size = get_or<std::size_t>(p, "unlearn.pga", "batch_size", 32);
    u.pga.lr = get_or<double>(p, "unlearn.pga", "lr", 0.1);
    u.pga.early_stop_enabled = get_or<bool>(p, "unlearn.pga", "early_stop_enabled", true);
  }
  return u;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config key 'seeds': must be nonempty");
  if (clients < 1) throw ConfigError("config key 'clients': must be >= 1");
  if (rounds < 1) throw ConfigError("config key 'rounds': must be >= 1");
  if (recovery.max_rounds < 1) {
    throw ConfigError("config key 'recovery.max_rounds': must be >= 1");
  }
  if (unlearn.targets.empty()) {
    throw ConfigError("config key 'unlearn.targets': must be nonempty");
  }
  for (std::size_t t : unlearn.targets) {
    if (t >= clients) {
      throw ConfigError("config key 'unlearn.targets': client id " + std::to_string(t) +
                        " out of range for clients=" + std::to_string(clients));
    }
  }
  if (unlearn.scope == UnlearnScope::sample &&
      (unlearn.sample_fraction <= 0.0 || unlearn.sample_fraction >= 1.0)) {
    throw ConfigError("config key 'unlearn.sample_fraction': must be in (0, 1)");
  }
  if (hyper.lr < 0.0 || hyper.lr_decay <= 0.0 || hyper.batch_size < 1 || hyper.epochs < 1) {
    throw ConfigError("config key 'hyper': lr >= 0, lr_decay > 0, epochs/batch_size >= 1");
  }
  for (const auto& [k, v] : cost_inputs) {
    if (!cost_input_keys().count(k)) {
      throw ConfigError("config key 'cost_inputs." + k + "': unknown key");
    }
    if (v < 0.0) throw ConfigError("config key 'cost_inputs." + k + "': must be nonnegative");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "<root>",
             {"dataset", "partition", "arch", "clients", "rounds", "hyper", "unlearn",
              "recovery", "seeds", "cost_inputs", "output_dir", "num_threads",
              "lr_schedule_offset"});

  ExperimentConfig cfg;
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("partition")) cfg.partition = parse_partition(j.at("partition"));
  if (j.contains("arch")) cfg.arch = parse_arch(j.at("arch"));
  cfg.clients = get_or<std::size_t>(j, "<root>", "clients", 10);
  cfg.rounds = get_or<std::size_t>(j, "<root>", "rounds", 10);
  if (j.contains("hyper")) cfg.hyper = parse_hyper(j.at("hyper"));
  cfg.unlearn = parse_unlearn(get_required<json>(j, "<root>", "unlearn"));
  if (j.contains("recovery")) {
    check_keys(j.at("recovery"), "recovery", {"max_rounds"});
    cfg.recovery.max_rounds = get_or<std::size_t>(j.at("recovery"), "recovery", "max_rounds", 50);
  }
  cfg.seeds = get_required<std::vector<std::uint64_t>>(j, "<root>", "seeds");
  if (j.contains("cost_inputs")) {
    const json& c = j.at("cost_inputs");
    if (!c.is_object()) fail("cost_inputs", "expected an object");
    for (auto it = c.begin(); it != c.end(); ++it) {
      if (!it.value().is_number()) fail("cost_inputs." + it.key(), "expected a number");
      cfg.cost_inputs[it.key()] = it.value().get<double>();
    }
  }
  cfg.output_dir = get_or<std::string>(j, "<root>", "output_dir", "out");
  cfg.num_threads = get_or<unsigned>(j, "<root>", "num_threads", 1);
  if (j.contains("lr_schedule_offset")) {
    cfg.lr_schedule_offset = get_or<std::size_t>(j, "<root>", "lr_schedule_offset", 0);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  json d;
  if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
    d["kind"] = "synthetic";
    d["num_classes"] = cfg.dataset.synthetic.num_classes;
    d["feature_dim"] = cfg.dataset.synthetic.feature_dim;
    d["samples_per_class"] = cfg.dataset.synthetic.samples_per_class;
    d["class_separation"] = cfg.dataset.synthetic.class_separation;
  } else {
    d["kind"] = "file";
    d["path"] = cfg.dataset.path;
  }
  j["dataset"] = d;

  json p;
  p["kind"] = cfg.partition.kind == PartitionSpec::Kind::iid ? "iid" : "lda";
  if (cfg.partition.kind == PartitionSpec::Kind::lda) {
    p["alpha"] = cfg.partition.alpha;
    p["min_per_client"] = cfg.partition.min_per_client;
  }
  j["partition"] = p;

  json a;
  a["kind"] = cfg.arch.kind == ModelKind::logistic ? "logistic" : "mlp";
  a["hidden_dim"] = cfg.arch.hidden_dim;
  j["arch"] = a;

  j["clients"] = cfg.clients;
  j["rounds"] = cfg.rounds;
  j["hyper"] = {{"epochs", cfg.hyper.epochs},
                {"lr", cfg.hyper.lr},
                {"batch_size", cfg.hyper.batch_size},
                {"lr_decay", cfg.hyper.lr_decay},
                {"eta_s", cfg.hyper.eta_s}};
  json u;
  u["strategy"] = to_string(cfg.unlearn.strategy);
  u["targets"] = cfg.unlearn.targets;
  u["scope"] = cfg.unlearn.scope == UnlearnScope::client ? "client" : "sample";
  u["sample_fraction"] = cfg.unlearn.sample_fraction;
  u["eta_r"] = cfg.unlearn.eta_r;
  u["eta_u"] = cfg.unlearn.eta_u;
  u["unlearn_epochs"] = cfg.unlearn.unlearn_epochs;
  u["not_negate_bias"] = cfg.unlearn.not_negate_bias;
  u["pga"] = {{"ascent_epochs", cfg.unlearn.pga.ascent_epochs},
              {"clip_threshold", cfg.unlearn.pga.clip_threshold},
              {"ball_radius", cfg.unlearn.pga.ball_radius},
              {"early_stop_loss_threshold", cfg.unlearn.pga.early_stop_loss_threshold},
              {"batch_size", cfg.unlearn.pga.batch_size},
              {"lr", cfg.unlearn.pga.lr},
              {"early_stop_enabled", cfg.unlearn.pga.early_stop_enabled}};
  j["unlearn"] = u;
  j["recovery"] = {{"max_rounds", cfg.recovery.max_rounds}};
  j["seeds"] = cfg.seeds;
  j["cost_inputs"] = cfg.cost_inputs;
  j["output_dir"] = cfg.output_dir;
  j["num_threads"] = cfg.num_threads;
  if (cfg.lr_schedule_offset) j["lr_schedule_offset"] = *cfg.lr_schedule_offset;
  return j.dump(2);
}

}  // namespace pufsim
