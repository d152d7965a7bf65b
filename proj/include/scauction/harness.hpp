#pragma once

// Scenario runner, mode comparison and the headline experiment suite.

#include "scauction/metrics.hpp"
#include "scauction/netsim.hpp"
#include "scauction/strawman.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace scauction {

/// Dispatches on cfg.mode.
RunResult run_scenario(const ScenarioConfig& cfg);

struct MetricDelta
{
  std::string name;
  double a = 0.0;
  double b = 0.0;
  double abs_delta = 0.0; // b - a
  double pct_delta = 0.0; // (b - a) / a * 100, 0 when a == 0
};

struct ComparisonReport
{
  std::string scenario;
  std::vector<MetricDelta> deltas;
  double max_allocation_diff = 0.0;
  double price_diff = 0.0;
  bool allocation_mismatch = false;

  const MetricDelta& delta(const std::string& name) const;
  std::string text() const;
  nlohmann::json to_json() const;
};

/// Deltas of b relative to a for tx, gas, ETH, messages, rounds, blocks and
/// estimated time. Allocations differing by more than tol are flagged.
ComparisonReport compare_runs(const MetricsRecord& a, const MetricsRecord& b, double tol = 1e-3);

/// n parties with parameters drawn from [0.5, 20] and gamma = 0.2 / n; the
/// first ceil(3n/5) parties are buyers.
ScenarioConfig random_economy(std::size_t n, std::uint64_t seed);

/// Create/close only (no auction iterations) for large party counts.
ScenarioConfig lifecycle_scenario(std::size_t n, std::uint64_t seed);

struct SuiteCheck
{
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult
{
  std::vector<MetricsRecord> records;
  std::vector<SuiteCheck> checks;
  bool all_passed() const;
};

/// Runs the headline scenarios found in dir (paper_baseline, stale_state,
/// elimination, revocation) plus the block scaling series.
SuiteResult paper_suite(const std::filesystem::path& dir, std::optional<std::uint64_t> seed = std::nullopt);

} // namespace scauction
