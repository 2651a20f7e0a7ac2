#pragma once

#include <string>
#include <vector>

#include <stdexcept>

namespace pufsim {

// Closed-form cost inputs. All counts are nonnegative; total clients must
// equal unlearning + remaining clients.
struct CostInputs {
  double model_params = 0.0;        // P
  double bytes_per_param = 4.0;     // B (float32)
  double classifier_params = 0.0;   // P_c, FedAU's auxiliary head
  double total_clients = 0.0;       // C
  double unlearning_clients = 0.0;  // C_u
  double remaining_clients = 0.0;   // C_r = C - C_u
  double flops_per_image = 0.0;     // F
  double samples_per_client = 0.0;  // N
  double local_epochs = 1.0;        // E
  double training_rounds = 0.0;     // R, full from-scratch rounds (Retrain)
  double retained_rounds = 0.0;     // R_ret (FedEraser)
  double calibration_epochs = 0.0;  // E_cal (FedEraser)
  double ascent_epochs = 0.0;       // E_asc (PGA)
  double degradation_rounds = 0.0;  // R_d (MoDe)
  double memory_rounds = 0.0;       // R_m (MoDe)
  double recovery_rounds = 0.0;     // R_rec

  void validate() const;
};

enum class CostMethod { retrain, fed_eraser, pga, fedau, mode, puf_special, puf_regular, not_unlearning };

std::string to_string(CostMethod m);
CostMethod cost_method_from_string(const std::string& s);
const std::vector<CostMethod>& all_cost_methods();

struct PhaseCost {
  double comm_bytes = 0.0;
  double comp_flops = 0.0;

  bool operator==(const PhaseCost&) const = default;
};

struct MethodCost {
  CostMethod method = CostMethod::retrain;
  PhaseCost unlearn;
  PhaseCost recovery;
  double storage_bytes = 0.0;
  // Entries the accounting treats as qualitatively negligible (exact zeros).
  bool comm_negligible = false;
  bool comp_negligible = false;

  PhaseCost total() const {
    return {unlearn.comm_bytes + recovery.comm_bytes, unlearn.comp_flops + recovery.comp_flops};
  }

  bool operator==(const MethodCost&) const = default;
};

struct CostRatios {
  double comm = 1.0;
  double comp = 1.0;
  double storage = 1.0;
  bool comm_infinite = false;  // method cost is exactly zero
  bool comp_infinite = false;
  bool storage_infinite = false;

  bool operator==(const CostRatios&) const = default;
};

// Per-round uplink + downlink bytes: 2 * P * B * participants.
double comm_round(double model_params, double bytes_per_param, double participants);

// Recovery-phase totals: 2*P*B*C_r*R_rec bytes, F*N*E*C_r*R_rec FLOPs.
PhaseCost recovery_costs(const CostInputs& in);

// Unlearning-phase cost of one method (Retrain's "unlearning phase" is the
// full from-scratch run).
MethodCost method_costs(CostMethod method, const CostInputs& in);

// retrain_total / method_total per axis; zero method cost yields an infinity
// sentinel with a flag.
CostRatios improvement_ratios(const MethodCost& method, const MethodCost& retrain);

struct CostReportEntry {
  MethodCost cost;
  CostRatios ratios;

  bool operator==(const CostReportEntry&) const = default;
};

// Costs for every method, recovery phase included, ratios vs Retrain.
std::vector<CostReportEntry> build_cost_report(const CostInputs& in);

}  // namespace pufsim
