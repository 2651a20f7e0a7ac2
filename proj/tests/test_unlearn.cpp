#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pufsim/rng.hpp"
#include "pufsim/unlearn.hpp"

using namespace pufsim;

namespace {

FederatedDataset make_dataset(std::uint64_t seed, int classes = 3, std::size_t clients = 5) {
  auto [train, test] = generate_synthetic(classes, 4, 60, 5.0, seed);
  FederatedDataset fd = partition_iid(train, classes, clients, seed);
  fd.test = test;
  return fd;
}

ModelArch arch_for(const FederatedDataset& fd) {
  return {ModelKind::logistic, fd.test.feature_dim, 0, static_cast<std::size_t>(fd.num_classes)};
}

double mean_forget_loss(const ParameterVector& w, const LabeledBatch& data) {
  auto losses = per_sample_losses(w, data);
  return std::accumulate(losses.begin(), losses.end(), 0.0) /
         static_cast<double>(losses.size());
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (Strategy s : {Strategy::puf_regular, Strategy::puf_special, Strategy::not_first_layer,
                     Strategy::pga, Strategy::natural, Strategy::retrain}) {
    CHECK(strategy_from_string(to_string(s)) == s);
  }
  CHECK(to_string(Strategy::not_first_layer) == "not");
  CHECK_THROWS(strategy_from_string("bogus"));
}

TEST_CASE("client scope: targets excluded from recovery, forget data pooled") {
  FederatedDataset fd = make_dataset(1);
  UnlearnRequest req;
  req.targets = {1, 3};
  req.scope = UnlearnScope::client;
  ScopeViews views = sample_scope_filter(req, fd);
  CHECK(views.recovery_clients == std::vector<std::size_t>{0, 2, 4});
  CHECK(views.forget_data.size() == fd.clients[1].size() + fd.clients[3].size());
  CHECK(views.recovery_view == fd);  // data untouched; exclusion is by id
}

TEST_CASE("sample scope: targets keep retain data for recovery") {
  FederatedDataset fd = make_dataset(2);
  UnlearnRequest req;
  req.targets = {2};
  req.scope = UnlearnScope::sample;
  req.sample_fraction = 0.5;
  req.sample_seed = 2;
  ScopeViews views = sample_scope_filter(req, fd);
  CHECK(views.recovery_clients.size() == fd.num_clients());
  std::size_t orig = fd.clients[2].size();
  CHECK(views.unlearn_view.clients[2].size() + views.recovery_view.clients[2].size() == orig);
  CHECK(views.unlearn_view.clients[2] == views.forget_data);
  CHECK(views.recovery_view.clients[0] == fd.clients[0]);  // non-targets untouched
}

TEST_CASE("puf_special round is exactly w - eta_u * Delta-") {
  FederatedDataset fd = make_dataset(3);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 3);
  HyperParams hyper{1, 0.05, 16};
  std::vector<std::size_t> targets = {1, 4};

  auto updates = run_clients(fd, targets, w, hyper, 3, 7);
  ParameterVector delta = aggregate(updates, fd.total_samples(targets));
  ParameterVector expected = w;
  axpy(-2.0, delta, expected);

  ParameterVector got = puf_special_round(w, fd, targets, 2.0, hyper, 3, 7);
  CHECK(got == expected);  // same arithmetic path -> bit-exact
}

TEST_CASE("puf_regular round is exactly w + eta_r*Delta+ - eta_u*Delta-, shared n") {
  FederatedDataset fd = make_dataset(4);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 4);
  HyperParams hyper{1, 0.05, 16};
  std::vector<std::size_t> retained = {0, 2, 3};
  std::vector<std::size_t> targets = {1, 4};
  std::size_t n = fd.total_samples(retained) + fd.total_samples(targets);

  ParameterVector dp = aggregate(run_clients(fd, retained, w, hyper, 4, 9), n);
  ParameterVector dm = aggregate(run_clients(fd, targets, w, hyper, 4, 9), n);
  ParameterVector expected = w;
  axpy(1.0, dp, expected);
  axpy(-20.0, dm, expected);

  ParameterVector got = puf_regular_round(w, fd, retained, targets, 1.0, 20.0, hyper, 4, 9);
  CHECK(got == expected);

  CHECK_THROWS(puf_regular_round(w, fd, {}, targets, 1.0, 20.0, hyper, 4, 9));
  CHECK_THROWS(puf_special_round(w, fd, {}, 2.0, hyper, 4, 9));
}

TEST_CASE("degenerate rates: eta_u=0 special round is the identity") {
  FederatedDataset fd = make_dataset(5);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 5);
  HyperParams hyper{1, 0.05, 16};
  ParameterVector got = puf_special_round(w, fd, {0}, 0.0, hyper, 5, 0);
  CHECK(got == w);
}

TEST_CASE("NoT negation is an involution") {
  FederatedDataset fd = make_dataset(6);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 6);
  ParameterVector once = not_unlearn(w);
  ParameterVector twice = not_unlearn(once);
  CHECK(twice == w);
  // Only the first layer's weights flip.
  std::size_t first = w.schema[0].size();
  for (std::size_t i = 0; i < first; ++i) CHECK(once.values[i] == -w.values[i]);
  for (std::size_t i = first; i < w.size(); ++i) CHECK(once.values[i] == w.values[i]);

  ParameterVector with_bias = not_unlearn(w, true);
  std::size_t off = w.layer_offset(1);
  for (std::size_t i = 0; i < w.schema[1].size(); ++i) {
    CHECK(with_bias.values[off + i] == -w.values[off + i]);
  }
}

TEST_CASE("pga with a zero ball radius pins the model to the reference") {
  FederatedDataset fd = make_dataset(7);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 7);
  ParameterVector w_ref = w;
  for (double& v : w_ref.values) v += 0.01;
  PgaParams p;
  p.ball_radius = 0.0;
  p.early_stop_enabled = false;
  p.ascent_epochs = 1;
  ParameterVector got = pga_unlearn(w, fd.clients[0], w_ref, p, 1);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got.values[i] == doctest::Approx(w_ref.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("pga ascent raises the forget loss inside a generous ball") {
  FederatedDataset fd = make_dataset(8);
  ModelArch arch = arch_for(fd);
  // Train a bit first so the forget loss starts low.
  TrainOptions opts;
  opts.rounds = 10;
  opts.hyper = {1, 0.2, 16};
  auto [w, hist] = train(fd, arch, opts, 8);
  (void)hist;
  const LabeledBatch& forget = fd.clients[1];
  double before = mean_forget_loss(w, forget);

  PgaParams p;
  p.ball_radius = 100.0;
  p.early_stop_enabled = false;
  p.ascent_epochs = 3;
  ParameterVector got = pga_unlearn(w, forget, w, p, 2);
  CHECK(mean_forget_loss(got, forget) > before);
}

TEST_CASE("pga early stop halts once the forget loss crosses the threshold") {
  FederatedDataset fd = make_dataset(9);
  ModelArch arch = arch_for(fd);
  TrainOptions opts;
  opts.rounds = 5;
  opts.hyper = {1, 0.2, 16};
  auto [w, hist] = train(fd, arch, opts, 9);
  (void)hist;
  const LabeledBatch& forget = fd.clients[0];
  PgaParams p;
  p.ball_radius = 100.0;
  p.early_stop_loss_threshold = 1.5;
  p.ascent_epochs = 50;
  ParameterVector got = pga_unlearn(w, forget, w, p, 3);
  double final_loss = mean_forget_loss(got, forget);
  CHECK(final_loss >= 1.5);
  // One batch past the threshold at most: the loss should not run far beyond it.
  CHECK(final_loss < 15.0);
}

TEST_CASE("make_pga_reference subtracts the weighted stored update") {
  Schema s = {{"x", {2}}};
  ParameterVector w({1.0, 2.0}, s);
  ClientUpdate u{ParameterVector({4.0, -8.0}, s), 10, 3};
  ParameterVector ref = make_pga_reference(w, u, 40);
  CHECK(ref.values[0] == doctest::Approx(0.0).epsilon(1e-15));   // 1 - (10/40)*4
  CHECK(ref.values[1] == doctest::Approx(4.0).epsilon(1e-15));   // 2 - (10/40)*(-8)
  CHECK_THROWS_AS(make_pga_reference(w, std::nullopt, 40), UnlearnError);
  CHECK_THROWS(make_pga_reference(w, u, 0));
}

TEST_CASE("retrain_baseline trains only on non-targets") {
  FederatedDataset fd = make_dataset(10);
  ModelArch arch = arch_for(fd);
  TrainOptions opts;
  opts.rounds = 3;
  opts.hyper = {1, 0.1, 16};
  auto [w, hist] = retrain_baseline(fd, {0}, arch, opts, 10);
  (void)w;
  for (const auto& rec : hist) {
    CHECK(rec.participants == std::vector<std::size_t>{1, 2, 3, 4});
  }
  CHECK_THROWS(retrain_baseline(fd, {0, 1, 2, 3, 4}, arch, opts, 10));
}

TEST_CASE("recovery_rounds_from_curve picks the first crossing") {
  std::vector<double> curve = {0.40, 0.55, 0.62};
  CHECK(recovery_rounds_from_curve(curve, 0.60) == std::pair<std::size_t, bool>{2, false});
  CHECK(recovery_rounds_from_curve(curve, 0.50) == std::pair<std::size_t, bool>{1, false});
  CHECK(recovery_rounds_from_curve(curve, 0.30) == std::pair<std::size_t, bool>{0, false});
  CHECK(recovery_rounds_from_curve(curve, 0.90) == std::pair<std::size_t, bool>{2, true});
  CHECK_THROWS(recovery_rounds_from_curve({}, 0.5));
}

TEST_CASE("recover stops at the target and reports the curve") {
  FederatedDataset fd = make_dataset(11);
  ModelArch arch = arch_for(fd);
  ParameterVector w = init_model(arch, 11);
  TrainOptions opts;
  opts.hyper = {1, 0.2, 16};
  std::vector<std::size_t> clients = {0, 1, 2, 3, 4};

  std::size_t observed = 0;
  RecoveryResult res = recover(w, fd, clients, opts, 30, 0.9, fd.clients[0], 11,
                               [&](std::size_t, const ParameterVector&) { ++observed; });
  CHECK_FALSE(res.capped);
  CHECK(res.curve.size() == res.recovery_rounds + 1);
  CHECK(observed == res.curve.size());
  CHECK(res.curve.back().test_accuracy >= 0.9);
  for (std::size_t i = 0; i + 1 < res.curve.size(); ++i) {
    CHECK(res.curve[i].test_accuracy < 0.9);  // stopped at the first crossing
  }

  // Unreachable target: capped at max_rounds.
  RecoveryResult capped = recover(w, fd, clients, opts, 3, 2.0, fd.clients[0], 11);
  CHECK(capped.capped);
  CHECK(capped.recovery_rounds == 3);
  CHECK(capped.curve.size() == 4);
}
