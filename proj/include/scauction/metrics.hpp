#pragma once

// Run metrics and their CSV / JSON-lines serializations.

#include "scauction/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace scauction {

struct MetricsRecord
{
  std::string scenario;
  Mode mode = Mode::channel;
  std::size_t n_parties = 0;
  std::uint64_t iterations_run = 0;
  std::uint64_t on_chain_tx = 0;
  std::uint64_t gas_total = 0;
  double eth_total = 0.0;
  std::uint64_t off_chain_messages = 0;
  /// Message body bytes per delivery.
  std::uint64_t off_chain_bytes = 0;
  /// Full framed size per delivery, header and sender signature included.
  std::uint64_t off_chain_wire_bytes = 0;
  std::int64_t rounds_elapsed = 0;
  std::uint64_t blocks_used = 0;
  double estimated_seconds = 0.0;
  std::vector<PartyIndex> eliminated;
  std::vector<PartyIndex> revoked;
  double final_price = 0.0;
  std::map<PartyIndex, double> final_allocations;
  bool converged = false;
  /// Transactions and gas per call kind ("create", "state_submit", ...).
  std::map<std::string, std::uint64_t> tx_by_kind;
  std::map<std::string, std::uint64_t> gas_by_kind;
  std::int64_t best_version = -1;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

enum class MetricsFormat
{
  csv,
  json_lines,
};

MetricsFormat parse_metrics_format(const std::string& s);

/// Fixed CSV column order.
const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const MetricsRecord& m);

nlohmann::json metrics_to_json(const MetricsRecord& m);
MetricsRecord metrics_from_json(const nlohmann::json& j);

/// Writes a header (CSV) and one record per line. Throws std::runtime_error
/// when the path cannot be written.
void emit_metrics(const std::vector<MetricsRecord>& records, MetricsFormat format, const std::filesystem::path& path);
void write_metrics(const std::vector<MetricsRecord>& records, MetricsFormat format, std::ostream& out);

std::vector<MetricsRecord> load_metrics_json_lines(const std::filesystem::path& path);

/// eth_total rendered with four decimals, as in the CSV output.
std::string format_eth(double eth);

} // namespace scauction
