#include "scauction/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace scauction {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

} // namespace

MetricsFormat parse_metrics_format(const std::string& s)
{
  if (s == "csv")
    return MetricsFormat::csv;
  if (s == "json" || s == "jsonl" || s == "json-lines")
    return MetricsFormat::json_lines;
  throw std::invalid_argument("unknown metrics format \"" + s + "\" (expected csv or json-lines)");
}

const std::vector<std::string>& csv_columns()
{
  static const std::vector<std::string> cols = {
      "mode",          "n_parties",      "iterations_run", "on_chain_tx",       "gas_total", "eth_total",
      "off_chain_messages", "off_chain_bytes", "rounds_elapsed", "blocks_used", "estimated_seconds", "converged",
  };
  return cols;
}

std::string csv_header()
{
  std::string out;
  for (const auto& c : csv_columns()) {
    if (!out.empty())
      out += ',';
    out += c;
  }
  return out;
}

std::string format_eth(double eth) { return fmt("%.4f", eth); }

std::string csv_row(const MetricsRecord& m)
{
  std::ostringstream os;
  os << to_string(m.mode) << ',' << m.n_parties << ',' << m.iterations_run << ',' << m.on_chain_tx << ','
     << m.gas_total << ',' << format_eth(m.eth_total) << ',' << m.off_chain_messages << ',' << m.off_chain_bytes
     << ',' << m.rounds_elapsed << ',' << m.blocks_used << ',' << fmt("%.1f", m.estimated_seconds) << ','
     << (m.converged ? "true" : "false");
  return os.str();
}

json metrics_to_json(const MetricsRecord& m)
{
  json alloc = json::object();
  for (const auto& [p, q] : m.final_allocations)
    alloc[std::to_string(p)] = q;
  return json{
      {"scenario", m.scenario},
      {"mode", to_string(m.mode)},
      {"n_parties", m.n_parties},
      {"iterations_run", m.iterations_run},
      {"on_chain_tx", m.on_chain_tx},
      {"gas_total", m.gas_total},
      {"eth_total", m.eth_total},
      {"off_chain_messages", m.off_chain_messages},
      {"off_chain_bytes", m.off_chain_bytes},
      {"off_chain_wire_bytes", m.off_chain_wire_bytes},
      {"rounds_elapsed", m.rounds_elapsed},
      {"blocks_used", m.blocks_used},
      {"estimated_seconds", m.estimated_seconds},
      {"eliminated", m.eliminated},
      {"revoked", m.revoked},
      {"final_price", m.final_price},
      {"final_allocations", alloc},
      {"converged", m.converged},
      {"tx_by_kind", m.tx_by_kind},
      {"gas_by_kind", m.gas_by_kind},
      {"best_version", m.best_version},
  };
}

MetricsRecord metrics_from_json(const json& j)
{
  MetricsRecord m;
  m.scenario = j.at("scenario").get<std::string>();
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "channel" && mode != "strawman")
    throw std::invalid_argument("unknown mode " + mode);
  m.mode = mode == "channel" ? Mode::channel : Mode::strawman;
  m.n_parties = j.at("n_parties").get<std::size_t>();
  m.iterations_run = j.at("iterations_run").get<std::uint64_t>();
  m.on_chain_tx = j.at("on_chain_tx").get<std::uint64_t>();
  m.gas_total = j.at("gas_total").get<std::uint64_t>();
  m.eth_total = j.at("eth_total").get<double>();
  m.off_chain_messages = j.at("off_chain_messages").get<std::uint64_t>();
  m.off_chain_bytes = j.at("off_chain_bytes").get<std::uint64_t>();
  m.off_chain_wire_bytes = j.at("off_chain_wire_bytes").get<std::uint64_t>();
  m.rounds_elapsed = j.at("rounds_elapsed").get<std::int64_t>();
  m.blocks_used = j.at("blocks_used").get<std::uint64_t>();
  m.estimated_seconds = j.at("estimated_seconds").get<double>();
  m.eliminated = j.at("eliminated").get<std::vector<PartyIndex>>();
  m.revoked = j.at("revoked").get<std::vector<PartyIndex>>();
  m.final_price = j.at("final_price").get<double>();
  for (const auto& [k, v] : j.at("final_allocations").items())
    m.final_allocations[static_cast<PartyIndex>(std::stoul(k))] = v.get<double>();
  m.converged = j.at("converged").get<bool>();
  m.tx_by_kind = j.at("tx_by_kind").get<std::map<std::string, std::uint64_t>>();
  m.gas_by_kind = j.at("gas_by_kind").get<std::map<std::string, std::uint64_t>>();
  m.best_version = j.at("best_version").get<std::int64_t>();
  return m;
}

void write_metrics(const std::vector<MetricsRecord>& records, MetricsFormat format, std::ostream& out)
{
  if (format == MetricsFormat::csv) {
    out << csv_header() << '\n';
    for (const auto& r : records)
      out << csv_row(r) << '\n';
  } else {
    for (const auto& r : records)
      out << metrics_to_json(r).dump() << '\n';
  }
}

void emit_metrics(const std::vector<MetricsRecord>& records, MetricsFormat format, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write metrics to " + path.string());
  write_metrics(records, format, out);
  out.flush();
  if (!out)
    throw std::runtime_error("failed writing metrics to " + path.string());
}

std::vector<MetricsRecord> load_metrics_json_lines(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open metrics file " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    out.push_back(metrics_from_json(json::parse(line)));
  }
  return out;
}

} // namespace scauction
