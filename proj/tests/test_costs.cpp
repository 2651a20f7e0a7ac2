#include <doctest.h>

#include <cmath>

#include "pufsim/costs.hpp"

using namespace pufsim;

namespace {

// The reference accounting scenario: 1.1225e7 parameters at 4 bytes, 10
// clients (1 unlearning), 0.15 GFLOPs/image, 5000 images/client, 200 rounds.
CostInputs reference_inputs() {
  CostInputs in;
  in.model_params = 1.1225e7;
  in.bytes_per_param = 4.0;
  in.classifier_params = 5.13e3;
  in.total_clients = 10.0;
  in.unlearning_clients = 1.0;
  in.remaining_clients = 9.0;
  in.flops_per_image = 0.15e9;
  in.samples_per_client = 5000.0;
  in.local_epochs = 1.0;
  in.training_rounds = 200.0;
  in.retained_rounds = 200.0;
  in.calibration_epochs = 0.5;
  in.ascent_epochs = 5.0;
  in.degradation_rounds = 6.0;
  in.memory_rounds = 10.0;
  in.recovery_rounds = 0.0;
  return in;
}

bool within_1pct(double got, double want) {
  return std::fabs(got - want) <= 0.01 * std::fabs(want);
}

}  // namespace

TEST_CASE("reference scenario: pinned cost cells within 1%") {
  CostInputs in = reference_inputs();

  MethodCost retrain = method_costs(CostMethod::retrain, in);
  CHECK(within_1pct(retrain.unlearn.comm_bytes, 1.62e11));
  CHECK(within_1pct(retrain.unlearn.comp_flops, 1.35e15));
  CHECK(within_1pct(retrain.storage_bytes, 4.49e7));
  CHECK(retrain.recovery == PhaseCost{});  // retrain has no recovery phase

  CHECK(within_1pct(method_costs(CostMethod::fed_eraser, in).storage_bytes, 8.98e10));
  CHECK(within_1pct(method_costs(CostMethod::pga, in).storage_bytes, 4.94e8));
  CHECK(within_1pct(method_costs(CostMethod::mode, in).storage_bytes, 8.98e7));
  CHECK(within_1pct(method_costs(CostMethod::puf_special, in).storage_bytes, 4.49e7));
  CHECK(within_1pct(method_costs(CostMethod::not_unlearning, in).storage_bytes, 4.49e7));
}

TEST_CASE("puf unlearning phases: one round over targets (special) or all (regular)") {
  CostInputs in = reference_inputs();
  MethodCost special = method_costs(CostMethod::puf_special, in);
  CHECK(special.unlearn.comm_bytes == doctest::Approx(2.0 * 4.49e7 * 1.0));
  CHECK(special.unlearn.comp_flops == doctest::Approx(0.15e9 * 5000.0 * 1.0));
  MethodCost regular = method_costs(CostMethod::puf_regular, in);
  CHECK(regular.unlearn.comm_bytes == doctest::Approx(2.0 * 4.49e7 * 10.0));
  CHECK(regular.unlearn.comp_flops == doctest::Approx(0.15e9 * 5000.0 * 10.0));
}

TEST_CASE("negligible entries are exact zeros with flags") {
  CostInputs in = reference_inputs();
  MethodCost not_cost = method_costs(CostMethod::not_unlearning, in);
  CHECK(not_cost.unlearn.comm_bytes == 0.0);
  CHECK(not_cost.unlearn.comp_flops == 0.0);
  CHECK(not_cost.comm_negligible);
  CHECK(not_cost.comp_negligible);

  MethodCost fedau = method_costs(CostMethod::fedau, in);
  CHECK(fedau.unlearn.comp_flops == 0.0);
  CHECK(fedau.comp_negligible);
  CHECK_FALSE(fedau.comm_negligible);
  CHECK(fedau.unlearn.comm_bytes == doctest::Approx(2.0 * 5.13e3 * 4.0));
}

TEST_CASE("recovery costs are linear in rounds and added to non-retrain methods") {
  CostInputs in = reference_inputs();
  in.recovery_rounds = 10.0;
  PhaseCost rec10 = recovery_costs(in);
  in.recovery_rounds = 20.0;
  PhaseCost rec20 = recovery_costs(in);
  CHECK(rec20.comm_bytes == doctest::Approx(2.0 * rec10.comm_bytes));
  CHECK(rec20.comp_flops == doctest::Approx(2.0 * rec10.comp_flops));
  CHECK(rec10.comm_bytes == doctest::Approx(2.0 * 4.49e7 * 9.0 * 10.0));

  MethodCost special = method_costs(CostMethod::puf_special, in);
  CHECK(special.recovery == rec20);
  CHECK(special.total().comm_bytes ==
        doctest::Approx(special.unlearn.comm_bytes + rec20.comm_bytes));
}

TEST_CASE("costs scale linearly in model size") {
  CostInputs in = reference_inputs();
  MethodCost base = method_costs(CostMethod::retrain, in);
  in.model_params *= 3.0;
  MethodCost scaled = method_costs(CostMethod::retrain, in);
  CHECK(scaled.unlearn.comm_bytes == doctest::Approx(3.0 * base.unlearn.comm_bytes));
  CHECK(scaled.unlearn.comp_flops == doctest::Approx(base.unlearn.comp_flops));  // F fixed
  CHECK(scaled.storage_bytes == doctest::Approx(3.0 * base.storage_bytes));
}

TEST_CASE("improvement ratios: finite, infinite, and the storage ratio for pga") {
  CostInputs in = reference_inputs();
  MethodCost retrain = method_costs(CostMethod::retrain, in);
  MethodCost special = method_costs(CostMethod::puf_special, in);
  CostRatios r = improvement_ratios(special, retrain);
  // One targets-only round vs 9 clients x 200 rounds.
  CHECK(r.comm == doctest::Approx(9.0 * 200.0 / 1.0));
  CHECK(r.comp == doctest::Approx(9.0 * 200.0 / 1.0));
  CHECK(r.storage == doctest::Approx(1.0));
  CHECK_FALSE(r.comm_infinite);

  MethodCost not_cost = method_costs(CostMethod::not_unlearning, in);
  CostRatios rn = improvement_ratios(not_cost, retrain);
  CHECK(rn.comm_infinite);
  CHECK(rn.comp_infinite);
  CHECK(std::isinf(rn.comm));

  MethodCost pga = method_costs(CostMethod::pga, in);
  CostRatios rp = improvement_ratios(pga, retrain);
  CHECK(rp.storage == doctest::Approx(1.0 / 11.0));  // stores C+1 model copies
}

TEST_CASE("build_cost_report covers every method with ratios vs retrain") {
  CostInputs in = reference_inputs();
  auto report = build_cost_report(in);
  CHECK(report.size() == all_cost_methods().size());
  CHECK(report.front().cost.method == CostMethod::retrain);
  CHECK(report.front().ratios.comm == doctest::Approx(1.0));
  CHECK(report.front().ratios.comp == doctest::Approx(1.0));
  CHECK(report.front().ratios.storage == doctest::Approx(1.0));
}

TEST_CASE("validation rejects negative fields and inconsistent client counts") {
  CostInputs in = reference_inputs();
  in.model_params = -1.0;
  CHECK_THROWS(in.validate());
  in = reference_inputs();
  in.remaining_clients = 5.0;  // 10 != 1 + 5
  CHECK_THROWS(in.validate());
  CHECK_THROWS(method_costs(CostMethod::retrain, in));
}

TEST_CASE("method names round-trip") {
  for (CostMethod m : all_cost_methods()) {
    CHECK(cost_method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(cost_method_from_string("bogus"));
}
