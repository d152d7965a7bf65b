#pragma once

// Scenario configuration and its JSON schema. Missing optional fields take
// their documented defaults; schema violations carry the offending field path.

#include "scauction/auction.hpp"
#include "scauction/ledger.hpp"
#include "scauction/message.hpp"
#include "scauction/party.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scauction {

class SchemaError : public std::runtime_error
{
public:
  SchemaError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path))
  {
  }

  const std::string& path() const { return path_; }

private:
  std::string path_;
};

enum class Mode
{
  channel,
  strawman,
};

enum class OpenMode
{
  all,       // every party receives create() from its environment
  initiator, // party 0 opens; the others react to its pending create()
};

enum class Behavior
{
  honest,
  silent,         // crash from the first message of `iteration` at or after `phase`
  invalid_reveal, // opening that fails its commitment in `iteration`
  wrong_state,    // perturbed G in `iteration`
  stale_submit,   // state_submit(none, version) on entering `iteration`
  revoke_at,      // revoke() on entering `iteration`
  abort_at,       // crash at the start of `iteration`
};

const char* to_string(Behavior b);
const char* to_string(Mode m);

struct AdversarySpec
{
  PartyIndex party = 0;
  Behavior behavior = Behavior::honest;
  Version iteration = 1;
  MessageKind phase = MessageKind::commit;
  Version version = 0; // stale_submit only
};

struct ScenarioConfig
{
  std::string name = "scenario";
  Mode mode = Mode::channel;
  EconTable parties;
  double deposit = 1.0;
  double initial_balance = 10.0;
  Round delta = 15;
  Round dispute_window = 20;
  double gamma = 0.02;
  double eps = 1e-3;
  Version iteration_cap = 10'000;
  std::optional<Version> max_iterations;
  ComputerPolicy computer_policy = ComputerPolicy::round_robin;
  double refund_fraction = 0.0;
  double round_duration_ms = 101.2;
  double block_time_s = 15.0;
  Round round_cap = 1'000'000;
  OpenMode open = OpenMode::all;
  std::vector<AdversarySpec> adversaries;
  GasTable gas;
  std::uint64_t seed = 1;
  bool record_trace = true;

  /// Throws SchemaError on an invalid combination of fields.
  void validate() const;

  std::optional<AdversarySpec> behavior_of(PartyIndex p) const;
};

ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

} // namespace scauction
