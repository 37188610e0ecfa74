#pragma once

#include "evshare/coordinator.hpp"
#include "evshare/ieee33.hpp"
#include "evshare/oracle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evshare {

enum class VariantKind { b1_no_storage, b2_individual_storage, b3_inelastic, proposed };

std::string to_string(VariantKind k);
VariantKind parse_variant(const std::string& name);  // b1, b2, b3, proposed

struct BenchmarkVariant {
  VariantKind kind = VariantKind::proposed;
  // Share of each shared storage given to its stations under B2, in the
  // order of connected_stations. Empty means equal shares.
  std::vector<double> split;
  bool distributed = false;  // proposed only
  CoordinationParams params;
  std::optional<bool> storage_cyclic;  // overrides the scenario toggle
};

struct ExperimentResult {
  std::string variant;
  std::vector<std::string> station_ids, storage_ids;
  std::vector<double> cso, seso;
  double dso = 0.0;
  double total = 0.0;
  double reduction = 0.0;  // (B1 total - total) / B1 total, 0 when unknown
  double seconds = 0.0;
  int iterations = 0;
  bool converged = true;
  double relaxation_gap = 0.0;
  std::optional<CoordinationResult> coordination;  // distributed runs only
  Allocation allocation;
  PriceSystem prices;
};

// Scenario seen by a variant: B1 drops storages, B2 splits each shared
// storage into per-station units without grid access.
Scenario variant_scenario(const Scenario& s, const BenchmarkVariant& v);

// b1_total fills the reduction field when given.
ExperimentResult run_benchmark(const Scenario& s, const BenchmarkVariant& v, std::optional<double> b1_total = std::nullopt);

// Scales capacity, energy limits (0.1 / 0.9), power limits (0.3) and the
// initial level (0.5) of every storage by m.
Scenario scale_storage(const Scenario& s, double m);

struct SweepRow {
  double value = 0.0;
  std::string variant;
  ExperimentResult result;
  double storage_throughput = 0.0;  // kWh through all storages
};

std::vector<SweepRow> capacity_sweep(const Scenario& s, const std::vector<double>& multipliers, const std::vector<VariantKind>& variants);

enum class Coefficient { storage_degradation, ev_inconvenience };
Coefficient parse_coefficient(const std::string& name);  // bat or ev
std::vector<SweepRow> coefficient_sweep(const Scenario& s, Coefficient which, const std::vector<double>& values,
                                        const std::vector<VariantKind>& variants);

struct ScalabilityRow {
  int groups = 0;
  int stations = 0, storages = 0, evs = 0;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  double mean_cso_seconds = 0.0;   // per subproblem solve
  double mean_seso_seconds = 0.0;
  double mean_dso_seconds = 0.0;
  double total_cost = 0.0;
};

ScalabilityRow scalability_run(const ScaleTemplate& t, int groups, const CoordinationParams& params = {});

}  // namespace evshare
