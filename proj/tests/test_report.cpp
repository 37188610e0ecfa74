#include "fixtures.hpp"

#include "evshare/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace evshare;
using evshare::testing::bundled;

namespace {

std::string temp_file(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

size_t line_count(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Report, SolutionRoundTrip) {
  const auto r = solve_centralized(bundled());
  const std::string path = temp_file("evshare_solution.json");
  save_solution(path, bundled(), r.allocation, r.prices);
  const Solution back = load_solution(path, bundled());
  EXPECT_EQ(back.prices.station_price, r.prices.station_price);
  EXPECT_EQ(back.prices.storage_price, r.prices.storage_price);
  EXPECT_EQ(back.allocation.flow.station_exchange, r.allocation.flow.station_exchange);
  EXPECT_EQ(back.allocation.storages[0].soc, r.allocation.storages[0].soc);
  EXPECT_EQ(back.allocation.ev[2][3].energy, r.allocation.ev[2][3].energy);
  EXPECT_NEAR(system_costs(bundled(), back.allocation).total, r.objective, 1e-6);
}

TEST(Report, SolutionOfAnotherScenarioIsRejected) {
  const auto r = solve_centralized(bundled());
  const std::string path = temp_file("evshare_solution_other.json");
  save_solution(path, bundled(), r.allocation, r.prices);
  Scenario other = bundled();
  other.stations[0].fleet.pop_back();
  EXPECT_THROW(load_solution(path, other), ScenarioError);
  std::ofstream(temp_file("evshare_broken.json")) << "{";
  EXPECT_THROW(load_solution(temp_file("evshare_broken.json"), bundled()), ScenarioError);
}

TEST(Report, CsvTables) {
  const auto r = solve_centralized(bundled());
  std::ostringstream pay;
  write_payments_csv(pay, profit_allocation(bundled(), r.allocation, r.prices));
  EXPECT_EQ(pay.str().rfind("payer,cs1,cs2,cs3,cs4,ses1,DSO,own,total\n", 0), 0u);
  EXPECT_EQ(line_count(pay.str()), 7u);

  ExperimentResult e;
  e.variant = "proposed";
  e.station_ids = {"a", "b"};
  e.storage_ids = {"s"};
  e.cso = {1.0, 2.0};
  e.seso = {3.0};
  e.dso = 4.0;
  e.total = 10.0;
  std::ostringstream costs, summary;
  write_cost_table_csv(costs, {e});
  write_summary_csv(summary, {e});
  EXPECT_EQ(costs.str(), "variant,stakeholder,cost\nproposed,a,1\nproposed,b,2\nproposed,s,3\nproposed,DSO,4\nproposed,total,10\n");
  EXPECT_EQ(line_count(summary.str()), 2u);

  IterationTrace tr;
  tr.rows.resize(3);
  std::ostringstream trace;
  write_trace_csv(trace, tr);
  EXPECT_EQ(line_count(trace.str()), 4u);
}
