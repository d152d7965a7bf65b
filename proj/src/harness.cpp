#include "scauction/harness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace scauction {

using nlohmann::json;

RunResult run_scenario(const ScenarioConfig& cfg)
{
  return cfg.mode == Mode::channel ? run_channel(cfg) : run_strawman(cfg);
}

const MetricDelta& ComparisonReport::delta(const std::string& name) const
{
  for (const auto& d : deltas)
    if (d.name == name)
      return d;
  throw std::out_of_range("no metric " + name);
}

std::string ComparisonReport::text() const
{
  std::ostringstream os;
  os << "comparison: " << scenario << '\n';
  char line[160];
  for (const auto& d : deltas) {
    std::snprintf(line, sizeof line, "  %-20s %16.4f %16.4f %+16.4f %+9.2f%%\n", d.name.c_str(), d.a, d.b,
                  d.abs_delta, d.pct_delta);
    os << line;
  }
  std::snprintf(line, sizeof line, "  max allocation diff %.6g, price diff %.6g%s\n", max_allocation_diff, price_diff,
                allocation_mismatch ? "  MISMATCH" : "");
  os << line;
  return os.str();
}

json ComparisonReport::to_json() const
{
  json ds = json::array();
  for (const auto& d : deltas)
    ds.push_back({{"metric", d.name}, {"a", d.a}, {"b", d.b}, {"abs_delta", d.abs_delta}, {"pct_delta", d.pct_delta}});
  return json{{"scenario", scenario},
              {"deltas", ds},
              {"max_allocation_diff", max_allocation_diff},
              {"price_diff", price_diff},
              {"allocation_mismatch", allocation_mismatch}};
}

ComparisonReport compare_runs(const MetricsRecord& a, const MetricsRecord& b, double tol)
{
  ComparisonReport rep;
  rep.scenario = a.scenario;
  auto add = [&](const char* name, double x, double y) {
    MetricDelta d{name, x, y, y - x, x != 0.0 ? (y - x) / x * 100.0 : 0.0};
    rep.deltas.push_back(d);
  };
  add("on_chain_tx", static_cast<double>(a.on_chain_tx), static_cast<double>(b.on_chain_tx));
  add("gas_total", static_cast<double>(a.gas_total), static_cast<double>(b.gas_total));
  add("eth_total", a.eth_total, b.eth_total);
  add("off_chain_messages", static_cast<double>(a.off_chain_messages), static_cast<double>(b.off_chain_messages));
  add("off_chain_bytes", static_cast<double>(a.off_chain_bytes), static_cast<double>(b.off_chain_bytes));
  add("rounds_elapsed", static_cast<double>(a.rounds_elapsed), static_cast<double>(b.rounds_elapsed));
  add("blocks_used", static_cast<double>(a.blocks_used), static_cast<double>(b.blocks_used));
  add("estimated_seconds", a.estimated_seconds, b.estimated_seconds);

  rep.price_diff = std::abs(a.final_price - b.final_price);
  std::set<PartyIndex> keys;
  for (const auto& [p, q] : a.final_allocations)
    keys.insert(p);
  for (const auto& [p, q] : b.final_allocations)
    keys.insert(p);
  for (PartyIndex p : keys) {
    const auto ia = a.final_allocations.find(p);
    const auto ib = b.final_allocations.find(p);
    const double qa = ia == a.final_allocations.end() ? 0.0 : ia->second;
    const double qb = ib == b.final_allocations.end() ? 0.0 : ib->second;
    rep.max_allocation_diff = std::max(rep.max_allocation_diff, std::abs(qa - qb));
  }
  rep.allocation_mismatch = rep.max_allocation_diff > tol || rep.price_diff > tol;
  return rep;
}

ScenarioConfig random_economy(std::size_t n, std::uint64_t seed)
{
  if (n < 2)
    throw std::invalid_argument("random economy needs at least two parties");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> param(0.5, 20.0);
  auto draw = [&] { return std::round(param(rng) * 1000.0) / 1000.0; };
  ScenarioConfig cfg;
  cfg.name = "random_" + std::to_string(n) + "_" + std::to_string(seed);
  cfg.seed = seed;
  const std::size_t buyers = std::min(n - 1, (3 * n + 4) / 5);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < buyers) {
      const double a = draw();
      const double c = draw();
      cfg.parties.push_back(PartyEcon::buyer(a, c, draw()));
    } else {
      const double w = draw();
      cfg.parties.push_back(PartyEcon::seller(w, draw()));
    }
  }
  cfg.gamma = 0.2 / static_cast<double>(n);
  cfg.eps = 1e-4;
  cfg.record_trace = false;
  return cfg;
}

ScenarioConfig lifecycle_scenario(std::size_t n, std::uint64_t seed)
{
  ScenarioConfig cfg = random_economy(n, seed);
  cfg.name = "lifecycle_" + std::to_string(n);
  cfg.max_iterations = 0;
  return cfg;
}

bool SuiteResult::all_passed() const
{
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.pass; });
}

namespace {

std::uint64_t count_of(const MetricsRecord& m, const std::string& kind)
{
  const auto it = m.tx_by_kind.find(kind);
  return it == m.tx_by_kind.end() ? 0 : it->second;
}

std::uint64_t gas_of(const MetricsRecord& m, const std::string& kind)
{
  const auto it = m.gas_by_kind.find(kind);
  return it == m.gas_by_kind.end() ? 0 : it->second;
}

std::string num(double v, const char* spec = "%.6g")
{
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

} // namespace

SuiteResult paper_suite(const std::filesystem::path& dir, std::optional<std::uint64_t> seed)
{
  SuiteResult out;
  auto load = [&](const char* file) {
    ScenarioConfig cfg = load_scenario(dir / file);
    if (seed)
      cfg.seed = *seed;
    return cfg;
  };
  auto check = [&](std::string name, bool pass, std::string detail) {
    out.checks.push_back(SuiteCheck{std::move(name), pass, std::move(detail)});
  };

  ScenarioConfig base = load("paper_baseline.json");
  base.record_trace = false;
  const RunResult ch = run_channel(base);
  ScenarioConfig straw_cfg = base;
  straw_cfg.mode = Mode::strawman;
  const RunResult st = run_strawman(straw_cfg);
  out.records.push_back(ch.metrics);
  out.records.push_back(st.metrics);
  const MetricsRecord& c = ch.metrics;
  const MetricsRecord& s = st.metrics;
  const double gas_price = base.gas.gas_price_eth;

  check("baseline messages", c.off_chain_messages == 81'000 && c.iterations_run == 300,
        std::to_string(c.off_chain_messages) + " messages over " + std::to_string(c.iterations_run) + " iterations");
  check("baseline transactions", c.on_chain_tx == 20, std::to_string(c.on_chain_tx) + " txs");
  check("baseline create gas", gas_of(c, "create") == 586'180,
        std::to_string(gas_of(c, "create")) + " gas = " + format_eth(gas_of(c, "create") * gas_price) + " ETH");
  check("baseline close gas", gas_of(c, "close") == 547'240,
        std::to_string(gas_of(c, "close")) + " gas = " + format_eth(gas_of(c, "close") * gas_price) + " ETH");
  check("baseline channel ETH", std::abs(c.eth_total - 0.0226) <= 1e-4, format_eth(c.eth_total) + " ETH");
  check("baseline strawman gas", std::abs(static_cast<double>(s.gas_total) - 121'913'080.0) / 121'913'080.0 <= 1e-3,
        std::to_string(s.gas_total) + " gas");
  const double reduction = 1.0 - static_cast<double>(c.on_chain_tx) / static_cast<double>(s.on_chain_tx);
  check("transaction reduction", s.on_chain_tx >= 3000 && reduction >= 0.99,
        std::to_string(s.on_chain_tx) + " vs " + std::to_string(c.on_chain_tx) + " txs, " +
            num(reduction * 100, "%.2f") + "% fewer");
  const double per_iter = static_cast<double>(c.off_chain_bytes) / static_cast<double>(c.iterations_run);
  check("bytes per iteration", std::abs(per_iter - 23'000.0) <= 0.15 * 23'000.0, num(per_iter) + " bytes");

  ScenarioConfig stale = load("stale_state.json");
  const RunResult sr = run_channel(stale);
  out.records.push_back(sr.metrics);
  check("stale-state dispute",
        count_of(sr.metrics, "state_submit") == 2 && gas_of(sr.metrics, "state_submit") == 2 * stale.gas.state_submit_tx,
        std::to_string(count_of(sr.metrics, "state_submit")) + " submits, " +
            format_eth(gas_of(sr.metrics, "state_submit") * gas_price) + " ETH, bestVersion " +
            std::to_string(sr.metrics.best_version));

  ScenarioConfig elim = load("elimination.json");
  const RunResult er = run_channel(elim);
  out.records.push_back(er.metrics);
  check("elimination", count_of(er.metrics, "eliminate") == 9 && er.metrics.converged,
        std::to_string(count_of(er.metrics, "eliminate")) + " txs, " +
            format_eth(gas_of(er.metrics, "eliminate") * gas_price) + " ETH");

  ScenarioConfig rev = load("revocation.json");
  const RunResult rr = run_channel(rev);
  out.records.push_back(rr.metrics);
  check("revocation", count_of(rr.metrics, "revoke") == 1 && rr.metrics.converged,
        std::to_string(count_of(rr.metrics, "revoke")) + " revoke, " +
            format_eth(gas_of(rr.metrics, "revoke") * gas_price) + " ETH");

  for (std::size_t n : {1000u, 2000u, 3000u, 4000u, 5000u}) {
    ScenarioConfig lc = lifecycle_scenario(n, seed.value_or(base.seed));
    const RunResult lr = run_channel(lc);
    out.records.push_back(lr.metrics);
    const std::uint64_t expect = 2 * ((n + lc.gas.block_capacity - 1) / lc.gas.block_capacity);
    check("blocks n=" + std::to_string(n), lr.metrics.blocks_used == expect,
          std::to_string(lr.metrics.blocks_used) + " blocks, expected " + std::to_string(expect));
  }
  return out;
}

} // namespace scauction
