#include "pufsim/costs.hpp"

#include <limits>

namespace pufsim {

void CostInputs::validate() const {
  const double* fields[] = {&model_params,     &bytes_per_param,  &classifier_params,
                            &total_clients,    &unlearning_clients, &remaining_clients,
                            &flops_per_image,  &samples_per_client, &local_epochs,
                            &training_rounds,  &retained_rounds,  &calibration_epochs,
                            &ascent_epochs,    &degradation_rounds, &memory_rounds,
                            &recovery_rounds};
  for (const double* f : fields) {
    if (*f < 0.0) throw std::invalid_argument("CostInputs: all fields must be nonnegative");
  }
  if (total_clients != unlearning_clients + remaining_clients) {
    throw std::invalid_argument("CostInputs: total_clients must equal unlearning + remaining");
  }
}

std::string to_string(CostMethod m) {
  switch (m) {
    case CostMethod::retrain: return "retrain";
    case CostMethod::fed_eraser: return "fed_eraser";
    case CostMethod::pga: return "pga";
    case CostMethod::fedau: return "fedau";
    case CostMethod::mode: return "mode";
    case CostMethod::puf_special: return "puf_special";
    case CostMethod::puf_regular: return "puf_regular";
    case CostMethod::not_unlearning: return "not";
  }
  return "unknown";
}

CostMethod cost_method_from_string(const std::string& s) {
  for (CostMethod m : all_cost_methods()) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown cost method: " + s);
}

const std::vector<CostMethod>& all_cost_methods() {
  static const std::vector<CostMethod> methods = {
      CostMethod::retrain,     CostMethod::fed_eraser,  CostMethod::pga,
      CostMethod::fedau,       CostMethod::mode,        CostMethod::puf_special,
      CostMethod::puf_regular, CostMethod::not_unlearning};
  return methods;
}

double comm_round(double model_params, double bytes_per_param, double participants) {
  if (model_params < 0.0 || bytes_per_param < 0.0 || participants < 0.0) {
    throw std::invalid_argument("comm_round: arguments must be nonnegative");
  }
  return 2.0 * model_params * bytes_per_param * participants;
}

PhaseCost recovery_costs(const CostInputs& in) {
  in.validate();
  PhaseCost c;
  c.comm_bytes = 2.0 * in.model_params * in.bytes_per_param * in.remaining_clients *
                 in.recovery_rounds;
  c.comp_flops = in.flops_per_image * in.samples_per_client * in.local_epochs *
                 in.remaining_clients * in.recovery_rounds;
  return c;
}

MethodCost method_costs(CostMethod method, const CostInputs& in) {
  in.validate();
  const double P = in.model_params;
  const double B = in.bytes_per_param;
  const double PB = P * B;
  const double F = in.flops_per_image;
  const double N = in.samples_per_client;
  const double E = in.local_epochs;
  const double C = in.total_clients;
  const double Cu = in.unlearning_clients;
  const double Cr = in.remaining_clients;

  MethodCost cost;
  cost.method = method;
  cost.storage_bytes = PB;
  switch (method) {
    case CostMethod::retrain:
      // The "unlearning phase" of Retrain is the full from-scratch run.
      cost.unlearn.comm_bytes = 2.0 * PB * Cr * in.training_rounds;
      cost.unlearn.comp_flops = F * N * E * Cr * in.training_rounds;
      break;
    case CostMethod::fed_eraser:
      cost.unlearn.comm_bytes = 2.0 * PB * Cr * in.retained_rounds;
      cost.unlearn.comp_flops = F * N * in.calibration_epochs * Cr * in.retained_rounds;
      cost.storage_bytes = C * in.retained_rounds * PB;
      break;
    case CostMethod::pga:
      cost.unlearn.comm_bytes = 2.0 * PB;
      cost.unlearn.comp_flops = F * N * in.ascent_epochs * Cu;
      // Every client keeps its latest update alongside the server's global
      // model copy.
      cost.storage_bytes = (C + 1.0) * PB;
      break;
    case CostMethod::fedau:
      cost.unlearn.comm_bytes = 2.0 * in.classifier_params * B;
      cost.unlearn.comp_flops = 0.0;
      cost.comp_negligible = true;
      break;
    case CostMethod::mode:
      cost.unlearn.comm_bytes =
          2.0 * PB * (Cr * in.degradation_rounds + C * in.memory_rounds);
      cost.unlearn.comp_flops =
          F * N * E * (Cr * in.degradation_rounds + C * in.memory_rounds);
      cost.storage_bytes = 2.0 * PB;
      break;
    case CostMethod::puf_special:
      cost.unlearn.comm_bytes = 2.0 * PB * Cu;
      cost.unlearn.comp_flops = F * N * E * Cu;
      break;
    case CostMethod::puf_regular:
      cost.unlearn.comm_bytes = 2.0 * PB * C;
      cost.unlearn.comp_flops = F * N * E * C;
      break;
    case CostMethod::not_unlearning:
      cost.unlearn.comm_bytes = 0.0;
      cost.unlearn.comp_flops = 0.0;
      cost.comm_negligible = true;
      cost.comp_negligible = true;
      break;
  }
  if (method != CostMethod::retrain) {
    cost.recovery = recovery_costs(in);
  }
  return cost;
}

namespace {

void ratio_axis(double retrain, double method, double& ratio, bool& infinite) {
  if (retrain <= 0.0) throw std::invalid_argument("improvement_ratios: retrain total must be > 0");
  if (method == 0.0) {
    ratio = std::numeric_limits<double>::infinity();
    infinite = true;
  } else {
    ratio = retrain / method;
    infinite = false;
  }
}

}  // namespace

CostRatios improvement_ratios(const MethodCost& method, const MethodCost& retrain) {
  CostRatios r;
  ratio_axis(retrain.total().comm_bytes, method.total().comm_bytes, r.comm, r.comm_infinite);
  ratio_axis(retrain.total().comp_flops, method.total().comp_flops, r.comp, r.comp_infinite);
  ratio_axis(retrain.storage_bytes, method.storage_bytes, r.storage, r.storage_infinite);
  return r;
}

std::vector<CostReportEntry> build_cost_report(const CostInputs& in) {
  MethodCost retrain = method_costs(CostMethod::retrain, in);
  std::vector<CostReportEntry> report;
  for (CostMethod m : all_cost_methods()) {
    CostReportEntry e;
    e.cost = method_costs(m, in);
    e.ratios = improvement_ratios(e.cost, retrain);
    report.push_back(std::move(e));
  }
  return report;
}

}  // namespace pufsim
