#include "scauction/scenario.hpp"

#include <fstream>
#include <set>

namespace scauction {

using nlohmann::json;

namespace {

std::string describe(const json& v)
{
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "number";
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path, double fallback)
{
  if (!obj.contains(key))
    return fallback;
  const json& v = obj.at(key);
  if (!v.is_number())
    throw SchemaError(path + "." + key, "expected number, got " + describe(v));
  return v.get<double>();
}

double require_number(const json& obj, const std::string& key, const std::string& path)
{
  if (!obj.contains(key))
    throw SchemaError(path + "." + key, "required field missing");
  return get_number(obj, key, path, 0.0);
}

std::int64_t get_integer(const json& obj, const std::string& key, const std::string& path, std::int64_t fallback)
{
  if (!obj.contains(key))
    return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw SchemaError(path + "." + key, "expected integer, got " + describe(v));
  return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path, const std::string& fallback)
{
  if (!obj.contains(key))
    return fallback;
  const json& v = obj.at(key);
  if (!v.is_string())
    throw SchemaError(path + "." + key, "expected string, got " + describe(v));
  return v.get<std::string>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path)
{
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw SchemaError(path + "." + key, "unknown field");
}

Version to_version(std::int64_t v, const std::string& path)
{
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max())
    throw SchemaError(path, "out of range");
  return static_cast<Version>(v);
}

PartyEcon parse_party(const json& j, const std::string& path)
{
  if (!j.is_object())
    throw SchemaError(path, "expected object, got " + describe(j));
  reject_unknown(j, {"role", "a", "c", "w", "capacity"}, path);
  const std::string role = get_string(j, "role", path, "");
  PartyEcon e;
  try {
    if (role == "buyer") {
      e = PartyEcon::buyer(require_number(j, "a", path), require_number(j, "c", path),
                           require_number(j, "capacity", path));
    } else if (role == "seller") {
      e = PartyEcon::seller(require_number(j, "w", path), require_number(j, "capacity", path));
    } else {
      throw SchemaError(path + ".role", "expected \"buyer\" or \"seller\"");
    }
    e.validate();
  } catch (const AuctionError& err) {
    throw SchemaError(path, err.what());
  } catch (const ArithmeticError& err) {
    throw SchemaError(path, err.what());
  }
  return e;
}

Behavior parse_behavior(const std::string& s, const std::string& path)
{
  static const std::map<std::string, Behavior> names = {
      {"honest", Behavior::honest},           {"silent", Behavior::silent},
      {"invalid_reveal", Behavior::invalid_reveal}, {"wrong_state", Behavior::wrong_state},
      {"stale_submit", Behavior::stale_submit}, {"revoke_at", Behavior::revoke_at},
      {"abort_at", Behavior::abort_at},
  };
  const auto it = names.find(s);
  if (it == names.end())
    throw SchemaError(path, "unknown behavior \"" + s + "\"");
  return it->second;
}

MessageKind parse_phase(const std::string& s, const std::string& path)
{
  if (s == "commit")
    return MessageKind::commit;
  if (s == "reveal")
    return MessageKind::reveal;
  if (s == "best_response")
    return MessageKind::best_response;
  if (s == "verified")
    return MessageKind::verified;
  throw SchemaError(path, "unknown phase \"" + s + "\"");
}

AdversarySpec parse_adversary(const json& j, const std::string& path)
{
  if (!j.is_object())
    throw SchemaError(path, "expected object, got " + describe(j));
  reject_unknown(j, {"party", "behavior", "iteration", "phase", "version"}, path);
  AdversarySpec a;
  const std::int64_t party = get_integer(j, "party", path, -1);
  if (party < 0 || party >= kNoParty)
    throw SchemaError(path + ".party", "required party index missing or out of range");
  a.party = static_cast<PartyIndex>(party);
  a.behavior = parse_behavior(get_string(j, "behavior", path, "honest"), path + ".behavior");
  a.iteration = to_version(get_integer(j, "iteration", path, 1), path + ".iteration");
  a.phase = parse_phase(get_string(j, "phase", path, "commit"), path + ".phase");
  a.version = to_version(get_integer(j, "version", path, 0), path + ".version");
  return a;
}

GasTable parse_gas(const json& j, const std::string& path)
{
  if (!j.is_object())
    throw SchemaError(path, "expected object, got " + describe(j));
  reject_unknown(j,
                 {"create_tx", "close_tx", "state_submit_tx", "state_submit_eliminate_tx", "revoke_tx",
                  "strawman_bid_tx", "deploy", "gas_price_eth", "block_capacity"},
                 path);
  GasTable g;
  auto u = [&](const char* key, std::uint64_t& field) {
    const std::int64_t v = get_integer(j, key, path, static_cast<std::int64_t>(field));
    if (v < 0)
      throw SchemaError(path + "." + key, "must be non-negative");
    field = static_cast<std::uint64_t>(v);
  };
  u("create_tx", g.create_tx);
  u("close_tx", g.close_tx);
  u("state_submit_tx", g.state_submit_tx);
  u("state_submit_eliminate_tx", g.state_submit_eliminate_tx);
  u("revoke_tx", g.revoke_tx);
  u("strawman_bid_tx", g.strawman_bid_tx);
  u("deploy", g.deploy);
  u("block_capacity", g.block_capacity);
  g.gas_price_eth = get_number(j, "gas_price_eth", path, g.gas_price_eth);
  if (g.block_capacity < 1)
    throw SchemaError(path + ".block_capacity", "must be at least 1");
  if (!(g.gas_price_eth >= 0))
    throw SchemaError(path + ".gas_price_eth", "must be non-negative");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  return g;
}

} // namespace

const char* to_string(Behavior b)
{
  switch (b) {
    case Behavior::honest: return "honest";
    case Behavior::silent: return "silent";
    case Behavior::invalid_reveal: return "invalid_reveal";
    case Behavior::wrong_state: return "wrong_state";
    case Behavior::stale_submit: return "stale_submit";
    case Behavior::revoke_at: return "revoke_at";
    case Behavior::abort_at: return "abort_at";
  }
  return "?";
}

const char* to_string(Mode m) { return m == Mode::channel ? "channel" : "strawman"; }

void ScenarioConfig::validate() const
{
  if (parties.size() < 2)
    throw SchemaError("$.parties", "at least two parties required");
  if (parties.size() >= kNoParty)
    throw SchemaError("$.parties", "too many parties");
  std::size_t buyers = 0;
  for (const auto& p : parties)
    buyers += p.role == Role::buyer;
  if (buyers == 0)
    throw SchemaError("$.parties", "at least one buyer required");
  if (buyers == parties.size())
    throw SchemaError("$.parties", "at least one seller required");
  if (!(deposit > 0))
    throw SchemaError("$.deposit", "must be positive");
  if (!(initial_balance >= 0))
    throw SchemaError("$.initial_balance", "must be non-negative");
  if (delta < 1)
    throw SchemaError("$.delta", "must be at least 1");
  if (dispute_window < 1)
    throw SchemaError("$.T", "must be at least 1");
  if (!(gamma > 0))
    throw SchemaError("$.gamma", "must be positive");
  if (!(eps >= 0))
    throw SchemaError("$.eps", "must be non-negative");
  if (iteration_cap < 1)
    throw SchemaError("$.iteration_cap", "must be at least 1");
  if (!(refund_fraction >= 0 && refund_fraction <= 1))
    throw SchemaError("$.refund_fraction", "must lie in [0, 1]");
  if (!(round_duration_ms >= 0))
    throw SchemaError("$.round_duration_ms", "must be non-negative");
  if (!(block_time_s >= 0))
    throw SchemaError("$.block_time_s", "must be non-negative");
  if (round_cap < 1)
    throw SchemaError("$.round_cap", "must be at least 1");
  std::set<PartyIndex> seen;
  for (std::size_t i = 0; i < adversaries.size(); ++i) {
    const auto& a = adversaries[i];
    const std::string path = "$.adversary[" + std::to_string(i) + "]";
    if (a.party >= parties.size())
      throw SchemaError(path + ".party", "no such party");
    if (!seen.insert(a.party).second)
      throw SchemaError(path + ".party", "at most one behavior per party");
    if (a.iteration < 1)
      throw SchemaError(path + ".iteration", "must be at least 1");
    if (a.behavior == Behavior::stale_submit && a.version >= a.iteration)
      throw SchemaError(path + ".version", "stale version must precede the injection iteration");
  }
}

std::optional<AdversarySpec> ScenarioConfig::behavior_of(PartyIndex p) const
{
  for (const auto& a : adversaries)
    if (a.party == p && a.behavior != Behavior::honest)
      return a;
  return std::nullopt;
}

ScenarioConfig parse_scenario(const json& j)
{
  const std::string root = "$";
  if (!j.is_object())
    throw SchemaError(root, "expected object, got " + describe(j));
  reject_unknown(j,
                 {"name", "mode", "parties", "deposit", "initial_balance", "delta", "T", "gamma", "eps",
                  "iteration_cap", "max_iterations", "computer_policy", "refund_fraction", "round_duration_ms",
                  "block_time_s", "round_cap", "open", "adversary", "gas", "seed", "record_trace"},
                 root);
  ScenarioConfig c;
  c.name = get_string(j, "name", root, c.name);
  const std::string mode = get_string(j, "mode", root, "channel");
  if (mode == "channel")
    c.mode = Mode::channel;
  else if (mode == "strawman")
    c.mode = Mode::strawman;
  else
    throw SchemaError("$.mode", "expected \"channel\" or \"strawman\"");

  if (!j.contains("parties"))
    throw SchemaError("$.parties", "required field missing");
  const json& parties = j.at("parties");
  if (!parties.is_array())
    throw SchemaError("$.parties", "expected array, got " + describe(parties));
  for (std::size_t i = 0; i < parties.size(); ++i)
    c.parties.push_back(parse_party(parties[i], "$.parties[" + std::to_string(i) + "]"));

  c.deposit = get_number(j, "deposit", root, c.deposit);
  c.initial_balance = get_number(j, "initial_balance", root, c.initial_balance);
  c.delta = get_integer(j, "delta", root, c.delta);
  c.dispute_window = get_integer(j, "T", root, c.dispute_window);
  c.gamma = get_number(j, "gamma", root, c.gamma);
  c.eps = get_number(j, "eps", root, c.eps);
  c.iteration_cap = to_version(get_integer(j, "iteration_cap", root, c.iteration_cap), "$.iteration_cap");
  if (j.contains("max_iterations") && !j.at("max_iterations").is_null())
    c.max_iterations = to_version(get_integer(j, "max_iterations", root, 0), "$.max_iterations");
  const std::string policy = get_string(j, "computer_policy", root, "round_robin");
  if (policy == "round_robin")
    c.computer_policy = ComputerPolicy::round_robin;
  else if (policy == "seeded_random")
    c.computer_policy = ComputerPolicy::seeded_random;
  else
    throw SchemaError("$.computer_policy", "expected \"round_robin\" or \"seeded_random\"");
  c.refund_fraction = get_number(j, "refund_fraction", root, c.refund_fraction);
  c.round_duration_ms = get_number(j, "round_duration_ms", root, c.round_duration_ms);
  c.block_time_s = get_number(j, "block_time_s", root, c.block_time_s);
  c.round_cap = get_integer(j, "round_cap", root, c.round_cap);
  const std::string open = get_string(j, "open", root, "all");
  if (open == "all")
    c.open = OpenMode::all;
  else if (open == "initiator")
    c.open = OpenMode::initiator;
  else
    throw SchemaError("$.open", "expected \"all\" or \"initiator\"");
  if (j.contains("adversary")) {
    const json& adv = j.at("adversary");
    if (!adv.is_array())
      throw SchemaError("$.adversary", "expected array, got " + describe(adv));
    for (std::size_t i = 0; i < adv.size(); ++i)
      c.adversaries.push_back(parse_adversary(adv[i], "$.adversary[" + std::to_string(i) + "]"));
  }
  if (j.contains("gas"))
    c.gas = parse_gas(j.at("gas"), "$.gas");
  const std::int64_t seed = get_integer(j, "seed", root, static_cast<std::int64_t>(c.seed));
  if (seed < 0)
    throw SchemaError("$.seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (j.contains("record_trace")) {
    if (!j.at("record_trace").is_boolean())
      throw SchemaError("$.record_trace", "expected boolean");
    c.record_trace = j.at("record_trace").get<bool>();
  }
  try {
    const std::int64_t gamma_raw = Fixed::from_double(c.gamma).wide();
    if (gamma_raw <= 0)
      throw SchemaError("$.gamma", "below fixed-point resolution");
  } catch (const ArithmeticError& e) {
    throw SchemaError("$.gamma", e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const ScenarioConfig& c)
{
  json parties = json::array();
  for (const auto& p : c.parties) {
    if (p.role == Role::buyer)
      parties.push_back({{"role", "buyer"},
                         {"a", p.valuation_slope.to_double()},
                         {"c", p.valuation_curvature.to_double()},
                         {"capacity", p.capacity.to_double()}});
    else
      parties.push_back(
          {{"role", "seller"}, {"w", p.cost_curvature.to_double()}, {"capacity", p.capacity.to_double()}});
  }
  json adv = json::array();
  for (const auto& a : c.adversaries)
    adv.push_back({{"party", a.party},
                   {"behavior", to_string(a.behavior)},
                   {"iteration", a.iteration},
                   {"phase", to_string(a.phase)},
                   {"version", a.version}});
  json j = {
      {"name", c.name},
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"parties", parties},
      {"deposit", c.deposit},
      {"initial_balance", c.initial_balance},
      {"delta", c.delta},
      {"T", c.dispute_window},
      {"gamma", c.gamma},
      {"eps", c.eps},
      {"iteration_cap", c.iteration_cap},
      {"computer_policy", c.computer_policy == ComputerPolicy::round_robin ? "round_robin" : "seeded_random"},
      {"refund_fraction", c.refund_fraction},
      {"round_duration_ms", c.round_duration_ms},
      {"block_time_s", c.block_time_s},
      {"round_cap", c.round_cap},
      {"open", c.open == OpenMode::all ? "all" : "initiator"},
      {"adversary", adv},
      {"record_trace", c.record_trace},
      {"gas",
       {{"create_tx", c.gas.create_tx},
        {"close_tx", c.gas.close_tx},
        {"state_submit_tx", c.gas.state_submit_tx},
        {"state_submit_eliminate_tx", c.gas.state_submit_eliminate_tx},
        {"revoke_tx", c.gas.revoke_tx},
        {"strawman_bid_tx", c.gas.strawman_bid_tx},
        {"deploy", c.gas.deploy},
        {"gas_price_eth", c.gas.gas_price_eth},
        {"block_capacity", c.gas.block_capacity}}},
  };
  if (c.max_iterations)
    j["max_iterations"] = *c.max_iterations;
  return j;
}

} // namespace scauction
