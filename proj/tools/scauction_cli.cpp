// Command-line front end: run a scenario, compare channel and baseline modes,
// or execute the headline experiment suite.

#include "scauction/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace scauction;

namespace {

struct CommonOptions
{
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& opts)
{
  cmd->add_option("--seed", opts.seed, "Override the scenario seed");
  cmd->add_option("--out", opts.out, "Write metrics to this file instead of stdout");
  cmd->add_option("--format", opts.format, "Metrics format: csv or json-lines")
      ->check(CLI::IsMember({"csv", "json", "jsonl", "json-lines"}));
}

void write_records(const std::vector<MetricsRecord>& records, const CommonOptions& opts)
{
  const MetricsFormat fmt = parse_metrics_format(opts.format);
  if (opts.out.empty())
    write_metrics(records, fmt, std::cout);
  else
    emit_metrics(records, fmt, opts.out);
}

ScenarioConfig load_with_seed(const std::string& path, const CommonOptions& opts)
{
  ScenarioConfig cfg = load_scenario(path);
  if (opts.seed)
    cfg.seed = *opts.seed;
  return cfg;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Multiparty state-channel double auction simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_path;
  std::string trace_path;
  auto* run = app.add_subcommand("run", "Run one scenario and emit its metrics");
  run->add_option("scenario", run_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--trace", trace_path, "Write the per-round trace as JSON lines");
  add_common(run, run_opts);

  CommonOptions cmp_opts;
  std::string cmp_path;
  bool cmp_json = false;
  auto* cmp = app.add_subcommand("compare", "Run channel and baseline modes on one economy and diff them");
  cmp->add_option("scenario", cmp_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmp->add_flag("--json-report", cmp_json, "Print the comparison as JSON");
  add_common(cmp, cmp_opts);

  CommonOptions suite_opts;
  std::string suite_dir = "scenarios";
  auto* suite = app.add_subcommand("paper-suite", "Run the headline scenarios and check their results");
  suite->add_option("--scenarios", suite_dir, "Directory holding the scenario files")->check(CLI::ExistingDirectory);
  add_common(suite, suite_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = load_with_seed(run_path, run_opts);
      if (trace_path.empty())
        cfg.record_trace = false;
      const RunResult res = run_scenario(cfg);
      if (!trace_path.empty()) {
        std::ofstream t(trace_path, std::ios::binary | std::ios::trunc);
        if (!t)
          throw std::runtime_error("cannot write trace to " + trace_path);
        t << trace_to_json_lines(res.trace);
      }
      write_records({res.metrics}, run_opts);
      return 0;
    }
    if (*cmp) {
      ScenarioConfig cfg = load_with_seed(cmp_path, cmp_opts);
      cfg.record_trace = false;
      ScenarioConfig ch = cfg;
      ch.mode = Mode::channel;
      ScenarioConfig st = cfg;
      st.mode = Mode::strawman;
      const RunResult a = run_strawman(st);
      const RunResult b = run_channel(ch);
      const ComparisonReport rep = compare_runs(a.metrics, b.metrics);
      if (cmp_json)
        std::cout << rep.to_json().dump(2) << '\n';
      else
        std::cout << rep.text();
      if (!cmp_opts.out.empty())
        write_records({a.metrics, b.metrics}, cmp_opts);
      return rep.allocation_mismatch ? 1 : 0;
    }
    if (*suite) {
      const SuiteResult res = paper_suite(suite_dir, suite_opts.seed);
      for (const auto& c : res.checks)
        std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      write_records(res.records, suite_opts);
      return res.all_passed() ? 0 : 1;
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error at " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
