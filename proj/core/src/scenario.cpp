#include "clab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "clab/errors.hpp"

namespace clab {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Verify: return "verify";
    case ScenarioKind::Learn: return "learn";
    case ScenarioKind::Bribe: return "bribe";
    case ScenarioKind::Penalty: return "penalty";
    case ScenarioKind::Duel: return "duel";
    case ScenarioKind::Auction: return "auction";
    case ScenarioKind::Audit: return "audit";
  }
  throw Error("unknown scenario kind");
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "verify") return ScenarioKind::Verify;
  if (name == "learn") return ScenarioKind::Learn;
  if (name == "bribe") return ScenarioKind::Bribe;
  if (name == "penalty") return ScenarioKind::Penalty;
  if (name == "duel") return ScenarioKind::Duel;
  if (name == "auction") return ScenarioKind::Auction;
  if (name == "audit") return ScenarioKind::Audit;
  throw ConfigError("unknown scenario kind '" + name +
                    "' (expected one of verify, learn, bribe, penalty, duel, auction, audit)");
}

std::vector<std::string> builtin_game_names() {
  return {"stop_light", "matching_pennies"};
}

std::vector<std::string> builtin_device_names() {
  return {"stop_light"};
}

NormalFormGame make_builtin_game(const std::string& name) {
  if (name == "stop_light") return build_stop_light();
  if (name == "matching_pennies") return build_matching_pennies();
  throw ConfigError("unknown built-in game '" + name + "'");
}

SignalDevice make_builtin_device(const std::string& name, const NormalFormGame& game) {
  if (name == "stop_light") {
    SignalDevice device = build_stop_light_device();
    device.validate(game);
    return device;
  }
  throw ConfigError("unknown built-in device '" + name + "'");
}

std::string config_hash(const nlohmann::json& doc) {
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ConfigError(path + ": unknown field '" + key + "'");
    }
  }
}

const nlohmann::json& expect_object(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError(path + ": expected an object");
  return doc;
}

std::uint64_t get_uint(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(path + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

int get_positive_int(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
    throw ConfigError(path + ": expected a positive integer");
  }
  return v.get<int>();
}

double get_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + ": expected a finite number");
  return x;
}

std::string get_string(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

NormalFormGame resolve_game(const nlohmann::json& v, const std::string& path) {
  if (v.is_string()) return make_builtin_game(v.get<std::string>());
  expect_object(v, path);
  if (v.contains("builder")) {
    const std::string builder = get_string(v["builder"], path + ".builder");
    if (builder != "congestion") {
      throw ConfigError(path + ".builder: unknown builder '" + builder + "'");
    }
    reject_unknown(v, {"builder", "players", "routes"}, path);
    if (!v.contains("players") || !v.contains("routes")) {
      throw ConfigError(path + ": congestion builder needs players and routes");
    }
    const int players = get_positive_int(v["players"], path + ".players");
    if (!v["routes"].is_array() || v["routes"].empty()) {
      throw ConfigError(path + ".routes: expected a nonempty array");
    }
    std::vector<RouteLatency> routes;
    for (std::size_t i = 0; i < v["routes"].size(); ++i) {
      const auto& r = v["routes"][i];
      const std::string rpath = path + ".routes[" + std::to_string(i) + "]";
      expect_object(r, rpath);
      reject_unknown(r, {"per_user", "fixed"}, rpath);
      if (!r.contains("per_user") || !r.contains("fixed")) {
        throw ConfigError(rpath + ": needs per_user and fixed");
      }
      routes.push_back(RouteLatency{parse_rational(get_string(r["per_user"], rpath + ".per_user")),
                                    parse_rational(get_string(r["fixed"], rpath + ".fixed"))});
    }
    return build_congestion(players, routes);
  }
  try {
    return NormalFormGame::from_json(v);
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

SignalDevice resolve_device(const nlohmann::json& v, const NormalFormGame& game,
                            const std::string& path) {
  if (v.is_string()) return make_builtin_device(v.get<std::string>(), game);
  expect_object(v, path);
  try {
    return SignalDevice::from_json(v, game);
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

LearnerAlgo parse_algo(const std::string& name, const std::string& path) {
  if (name == "regret_matching") return LearnerAlgo::RegretMatching;
  if (name == "hedge") return LearnerAlgo::Hedge;
  if (name == "swap_regret") return LearnerAlgo::SwapRegret;
  if (name == "pgd") return LearnerAlgo::Pgd;
  throw ConfigError(path + ": unknown algorithm '" + name +
                    "' (expected regret_matching, hedge, swap_regret or pgd)");
}

LearnerSpec parse_learner(const nlohmann::json& v, const std::string& path) {
  expect_object(v, path);
  reject_unknown(v, {"algo", "rate", "step_scale", "sub_algo", "sub_rate"}, path);
  if (!v.contains("algo")) throw ConfigError(path + ": missing field 'algo'");
  LearnerSpec spec;
  spec.algo = parse_algo(get_string(v["algo"], path + ".algo"), path + ".algo");
  if (v.contains("rate")) spec.hedge_rate = get_number(v["rate"], path + ".rate");
  if (v.contains("step_scale")) {
    spec.pgd_step_scale = get_number(v["step_scale"], path + ".step_scale");
  }
  if (v.contains("sub_algo")) {
    spec.sub_algo = parse_algo(get_string(v["sub_algo"], path + ".sub_algo"), path + ".sub_algo");
  }
  if (v.contains("sub_rate")) spec.sub_hedge_rate = get_number(v["sub_rate"], path + ".sub_rate");
  return spec;
}

MediatorPolicy parse_policy(const nlohmann::json& v, const SignalDevice& device,
                            const std::string& path) {
  expect_object(v, path);
  if (!v.contains("kind")) throw ConfigError(path + ": missing field 'kind'");
  const std::string kind = get_string(v["kind"], path + ".kind");
  if (kind == "honest") {
    reject_unknown(v, {"kind"}, path);
    return MediatorPolicy::honest();
  }
  if (kind == "fixed_signal") {
    reject_unknown(v, {"kind", "signal"}, path);
    if (!v.contains("signal")) throw ConfigError(path + ": missing field 'signal'");
    const std::string label = get_string(v["signal"], path + ".signal");
    const int idx = device.signal_index(label);
    if (idx < 0) throw ConfigError(path + ".signal: unknown signal '" + label + "'");
    return MediatorPolicy::fixed_signal(idx);
  }
  if (kind == "reweighted") {
    reject_unknown(v, {"kind", "weights"}, path);
    if (!v.contains("weights") || !v["weights"].is_array()) {
      throw ConfigError(path + ".weights: expected an array of rational strings");
    }
    std::vector<Rational> weights;
    for (const auto& w : v["weights"]) {
      weights.push_back(parse_rational(get_string(w, path + ".weights[]")));
    }
    return MediatorPolicy::reweighted(std::move(weights));
  }
  throw ConfigError(path + ".kind: unknown policy kind '" + kind + "'");
}

PerceptionMap parse_perception(const nlohmann::json& v, const NormalFormGame& game,
                               const SignalDevice& device, const std::string& path) {
  expect_object(v, path);
  reject_unknown(v, {"player", "map"}, path);
  if (!v.contains("player") || !v.contains("map")) {
    throw ConfigError(path + ": needs player and map");
  }
  const int player = static_cast<int>(get_uint(v["player"], path + ".player"));
  if (player >= game.num_players()) {
    throw ConfigError(path + ".player: out of range");
  }
  PerceptionMap perception = PerceptionMap::identity_map(player, device.signals.size());
  expect_object(v["map"], path + ".map");
  for (const auto& [from, to] : v["map"].items()) {
    const int src = device.signal_index(from);
    if (src < 0) throw ConfigError(path + ".map: unknown signal '" + from + "'");
    const int dst = device.signal_index(get_string(to, path + ".map." + from));
    if (dst < 0) {
      throw ConfigError(path + ".map." + from + ": unknown target signal");
    }
    perception.mapping[src] = dst;
  }
  return perception;
}

}  // namespace

ScenarioConfig parse_scenario(const nlohmann::json& doc) {
  expect_object(doc, "config");
  if (!doc.contains("kind")) throw ConfigError("config: missing field 'kind'");
  ScenarioConfig config;
  config.kind = scenario_kind_from_string(get_string(doc["kind"], "config.kind"));
  config.echo = doc;

  std::set<std::string> allowed = {"kind", "seed", "repetitions"};
  switch (config.kind) {
    case ScenarioKind::Verify:
      allowed.insert({"game", "device", "perception"});
      break;
    case ScenarioKind::Learn:
      allowed.insert({"game", "rounds", "learners", "emit_trace"});
      break;
    case ScenarioKind::Bribe:
      allowed.insert({"game", "device", "colluder"});
      break;
    case ScenarioKind::Penalty:
      allowed.insert({"game", "device", "penalty_grid"});
      break;
    case ScenarioKind::Duel:
      allowed.insert({"game", "device", "depth", "programs", "fallback"});
      break;
    case ScenarioKind::Auction:
      allowed.insert({"bids", "random_bids", "tick", "auctioneer"});
      break;
    case ScenarioKind::Audit:
      allowed.insert({"observed", "declared", "threshold", "game", "device", "draws", "policy"});
      break;
  }
  reject_unknown(doc, allowed, "config");

  if (doc.contains("seed")) config.seed = get_uint(doc["seed"], "config.seed");
  if (doc.contains("repetitions")) {
    config.repetitions = get_positive_int(doc["repetitions"], "config.repetitions");
  }

  const bool needs_game = config.kind != ScenarioKind::Auction &&
                          !(config.kind == ScenarioKind::Audit && doc.contains("observed"));
  if (needs_game) {
    if (!doc.contains("game")) throw ConfigError("config: missing field 'game'");
    config.game = resolve_game(doc["game"], "config.game");
  }
  const bool needs_device =
      config.kind == ScenarioKind::Verify || config.kind == ScenarioKind::Bribe ||
      config.kind == ScenarioKind::Penalty ||
      (config.kind == ScenarioKind::Audit && config.game.has_value());
  if (needs_device) {
    if (!doc.contains("device")) throw ConfigError("config: missing field 'device'");
    config.device = resolve_device(doc["device"], *config.game, "config.device");
  } else if (config.kind == ScenarioKind::Duel && doc.contains("device")) {
    config.device = resolve_device(doc["device"], *config.game, "config.device");
  }

  switch (config.kind) {
    case ScenarioKind::Verify: {
      if (doc.contains("perception")) {
        config.perception =
            parse_perception(doc["perception"], *config.game, *config.device,
                             "config.perception");
      }
      break;
    }
    case ScenarioKind::Learn: {
      if (!doc.contains("rounds")) throw ConfigError("config: missing field 'rounds'");
      config.rounds = get_uint(doc["rounds"], "config.rounds");
      if (config.rounds == 0) throw ConfigError("config.rounds: must be at least 1");
      if (doc.contains("emit_trace")) {
        if (!doc["emit_trace"].is_boolean()) {
          throw ConfigError("config.emit_trace: expected a boolean");
        }
        config.emit_trace = doc["emit_trace"].get<bool>();
      }
      const int n = config.game->num_players();
      if (!doc.contains("learners")) {
        config.learners.assign(static_cast<std::size_t>(n), LearnerSpec{});
      } else if (doc["learners"].is_object()) {
        config.learners.assign(static_cast<std::size_t>(n),
                               parse_learner(doc["learners"], "config.learners"));
      } else if (doc["learners"].is_array()) {
        if (doc["learners"].size() != static_cast<std::size_t>(n)) {
          throw ConfigError("config.learners: expected one spec per player (" +
                            std::to_string(n) + ")");
        }
        for (std::size_t i = 0; i < doc["learners"].size(); ++i) {
          config.learners.push_back(parse_learner(
              doc["learners"][i], "config.learners[" + std::to_string(i) + "]"));
        }
      } else {
        throw ConfigError("config.learners: expected an object or an array");
      }
      break;
    }
    case ScenarioKind::Bribe: {
      if (!doc.contains("colluder")) throw ConfigError("config: missing field 'colluder'");
      config.colluder = static_cast<int>(get_uint(doc["colluder"], "config.colluder"));
      if (config.colluder >= config.game->num_players()) {
        throw ConfigError("config.colluder: out of range");
      }
      break;
    }
    case ScenarioKind::Penalty: {
      if (doc.contains("penalty_grid")) {
        if (!doc["penalty_grid"].is_array() || doc["penalty_grid"].empty()) {
          throw ConfigError("config.penalty_grid: expected a nonempty array");
        }
        for (const auto& d : doc["penalty_grid"]) {
          const Rational penalty = parse_rational(get_string(d, "config.penalty_grid[]"));
          if (penalty < 0) {
            throw ConfigError("config.penalty_grid: penalties must be nonnegative");
          }
          config.penalty_grid.push_back(penalty);
        }
      } else {
        for (int k = 0; k <= 20; ++k) config.penalty_grid.push_back(Rational(k, 10));
      }
      break;
    }
    case ScenarioKind::Duel: {
      if (doc.contains("depth")) {
        config.depth = static_cast<std::uint32_t>(get_uint(doc["depth"], "config.depth"));
      }
      if (doc.contains("fallback")) {
        config.fallback_action =
            config.game->action_index(0, get_string(doc["fallback"], "config.fallback"));
      }
      if (doc.contains("programs")) {
        if (!doc["programs"].is_array() || doc["programs"].empty()) {
          throw ConfigError("config.programs: expected a nonempty array of names");
        }
        std::vector<std::string> names;
        for (const auto& n : doc["programs"]) {
          names.push_back(get_string(n, "config.programs[]"));
        }
        config.program_names = std::move(names);
      }
      break;
    }
    case ScenarioKind::Auction: {
      if (doc.contains("bids") == doc.contains("random_bids")) {
        throw ConfigError("config: auction needs exactly one of bids or random_bids");
      }
      if (doc.contains("bids")) {
        if (!doc["bids"].is_array() || doc["bids"].size() < 2) {
          throw ConfigError("config.bids: expected an array of at least two numbers");
        }
        std::vector<double> bids;
        for (const auto& b : doc["bids"]) bids.push_back(get_number(b, "config.bids[]"));
        config.bids = std::move(bids);
      } else {
        const auto& rb = expect_object(doc["random_bids"], "config.random_bids");
        reject_unknown(rb, {"bidders", "low", "high"}, "config.random_bids");
        if (!rb.contains("bidders") || !rb.contains("low") || !rb.contains("high")) {
          throw ConfigError("config.random_bids: needs bidders, low and high");
        }
        RandomBidSpec spec;
        spec.bidders = get_positive_int(rb["bidders"], "config.random_bids.bidders");
        if (spec.bidders < 2) {
          throw ConfigError("config.random_bids.bidders: needs at least two bidders");
        }
        spec.low = get_number(rb["low"], "config.random_bids.low");
        spec.high = get_number(rb["high"], "config.random_bids.high");
        if (!(spec.low >= 0.0) || !(spec.high > spec.low)) {
          throw ConfigError("config.random_bids: requires 0 <= low < high");
        }
        config.random_bids = spec;
      }
      if (doc.contains("tick")) {
        config.tick = get_number(doc["tick"], "config.tick");
        if (!(config.tick > 0.0)) throw ConfigError("config.tick: must be positive");
      }
      if (doc.contains("auctioneer")) {
        const std::string mode = get_string(doc["auctioneer"], "config.auctioneer");
        if (mode == "honest") {
          config.auctioneer = AuctioneerMode::Honest;
        } else if (mode == "shill") {
          config.auctioneer = AuctioneerMode::Shill;
        } else {
          throw ConfigError("config.auctioneer: expected 'honest' or 'shill'");
        }
      }
      break;
    }
    case ScenarioKind::Audit: {
      const bool counts_mode = doc.contains("observed");
      const bool draw_mode = doc.contains("draws");
      if (counts_mode == draw_mode) {
        throw ConfigError("config: audit needs exactly one of observed or draws");
      }
      if (counts_mode) {
        if (doc.contains("game") || doc.contains("device") || doc.contains("policy")) {
          throw ConfigError("config: observed-mode audit does not take game/device/policy");
        }
        if (!doc.contains("declared")) throw ConfigError("config: missing field 'declared'");
        if (!doc["observed"].is_array() || !doc["declared"].is_array() ||
            doc["observed"].size() != doc["declared"].size() || doc["observed"].empty()) {
          throw ConfigError("config: observed and declared must be aligned nonempty arrays");
        }
        std::vector<std::uint64_t> observed;
        std::vector<Rational> declared;
        for (const auto& c : doc["observed"]) {
          observed.push_back(get_uint(c, "config.observed[]"));
        }
        for (const auto& p : doc["declared"]) {
          declared.push_back(parse_rational(get_string(p, "config.declared[]")));
        }
        config.observed = std::move(observed);
        config.declared = std::move(declared);
      } else {
        config.draws = get_uint(doc["draws"], "config.draws");
        if (*config.draws == 0) throw ConfigError("config.draws: must be at least 1");
        if (doc.contains("policy")) {
          config.policy = parse_policy(doc["policy"], *config.device, "config.policy");
        }
      }
      if (doc.contains("threshold")) {
        config.threshold = get_number(doc["threshold"], "config.threshold");
        if (!(*config.threshold > 0.0)) {
          throw ConfigError("config.threshold: must be positive");
        }
      }
      break;
    }
    default:
      break;
  }
  return config;
}

namespace {

void flatten_numeric(const nlohmann::json& node, const std::string& prefix,
                     std::map<std::string, double>& out) {
  if (node.is_number()) {
    out[prefix] = node.get<double>();
  } else if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      flatten_numeric(value, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      flatten_numeric(node[i], prefix + "[" + std::to_string(i) + "]", out);
    }
  }
}

// Aggregation covers summary metrics, not the detail tables (deviation
// lists, duel matrices, raw bids) whose entries are not metrics.
bool is_aggregate_metric(const std::string& path) {
  if (path.rfind("deviations", 0) == 0 || path.rfind("matrix", 0) == 0 ||
      path.rfind("programs", 0) == 0 || path.rfind("bids", 0) == 0 ||
      path.rfind("final_strategies", 0) == 0 || path.rfind("observed", 0) == 0) {
    return false;
  }
  if (path.find("_value") != std::string::npos) return true;
  static const std::set<std::string> named = {
      "price", "honest_price", "extraction", "g_statistic",
      "threshold", "empirical_support", "rounds"};
  return named.count(path) > 0;
}

nlohmann::json aggregate_results(const nlohmann::json& results) {
  std::map<std::string, std::vector<double>> series;
  for (const auto& result : results) {
    std::map<std::string, double> flat;
    flatten_numeric(result, "", flat);
    for (const auto& [path, value] : flat) {
      if (is_aggregate_metric(path)) series[path].push_back(value);
    }
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [path, values] : series) {
    double sum = 0.0, lo = values[0], hi = values[0];
    for (double v : values) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    agg[path] = {{"mean", sum / static_cast<double>(values.size())},
                 {"min", lo},
                 {"max", hi}};
  }
  return agg;
}

void emit_rational(nlohmann::json& obj, const std::string& key, const Rational& v) {
  obj[key] = format_rational(v);
  obj[key + "_value"] = to_double(v);
}

nlohmann::json run_verify_once(const ScenarioConfig& config) {
  const NormalFormGame& game = *config.game;
  const SignalDevice& device = *config.device;
  const JointDistribution outcome = outcome_distribution(game, device);

  nlohmann::json result;
  emit_rational(result, "cce_epsilon", cce_epsilon(game, outcome));
  emit_rational(result, "ce_epsilon", ce_epsilon(game, device));
  emit_rational(result, "swap_ce_epsilon", swap_ce_epsilon(game, device));
  nlohmann::json payoffs = nlohmann::json::array();
  nlohmann::json payoff_values = nlohmann::json::array();
  for (int p = 0; p < game.num_players(); ++p) {
    const Rational v = expected_payoff(game, outcome, p);
    payoffs.push_back(format_rational(v));
    payoff_values.push_back(to_double(v));
  }
  result["expected_payoffs"] = payoffs;
  result["expected_payoff_values"] = payoff_values;
  result["deviations"] = {
      {"unconditional", deviation_reports_to_json(unconditional_deviations(game, outcome))},
      {"conditional", deviation_reports_to_json(conditional_deviations(game, device))},
  };
  if (config.perception) {
    const auto attacked = perception_attack_payoffs(game, device, *config.perception);
    nlohmann::json block;
    block["player"] = config.perception->player;
    nlohmann::json exact = nlohmann::json::array();
    nlohmann::json values = nlohmann::json::array();
    nlohmann::json deltas = nlohmann::json::array();
    for (int p = 0; p < game.num_players(); ++p) {
      exact.push_back(format_rational(attacked[p]));
      values.push_back(to_double(attacked[p]));
      deltas.push_back(format_rational(attacked[p] - expected_payoff(game, outcome, p)));
    }
    block["payoffs"] = exact;
    block["payoff_values"] = values;
    block["deltas_vs_honest"] = deltas;
    result["perception"] = block;
  }
  return result;
}

std::string verify_csv(const ScenarioConfig& config) {
  const NormalFormGame& game = *config.game;
  const SignalDevice& device = *config.device;
  auto reports = unconditional_deviations(game, outcome_distribution(game, device));
  auto conditional = conditional_deviations(game, device);
  reports.insert(reports.end(), conditional.begin(), conditional.end());
  return deviation_reports_to_csv(reports);
}

nlohmann::json run_learn_once(const ScenarioConfig& config, int rep, std::string* csv) {
  const NormalFormGame& game = *config.game;
  const LearnerTrace trace = run_self_play(game, config.learners, config.rounds,
                                           config.seed + static_cast<std::uint64_t>(rep));
  const TraceCertificate cert = certify_trace(game, trace);

  nlohmann::json result;
  result["rounds"] = trace.rounds;
  nlohmann::json finals = nlohmann::json::array();
  for (int p = 0; p < game.num_players(); ++p) {
    const auto strat = trace.strategy_at(trace.rounds - 1, p);
    finals.push_back(std::vector<double>(strat.begin(), strat.end()));
  }
  result["final_strategies"] = finals;

  nlohmann::json ext = nlohmann::json::array(), ext_v = nlohmann::json::array();
  nlohmann::json swp = nlohmann::json::array(), swp_v = nlohmann::json::array();
  for (int p = 0; p < game.num_players(); ++p) {
    ext.push_back(format_rational(cert.external_regrets[p]));
    ext_v.push_back(to_double(cert.external_regrets[p]));
    swp.push_back(format_rational(cert.swap_regrets[p]));
    swp_v.push_back(to_double(cert.swap_regrets[p]));
  }
  result["external_regrets"] = ext;
  result["external_regret_values"] = ext_v;
  result["swap_regrets"] = swp;
  result["swap_regret_values"] = swp_v;
  emit_rational(result, "cce_epsilon", cert.cce_eps);
  emit_rational(result, "weighted_ce_epsilon", cert.weighted_ce_eps);
  emit_rational(result, "per_occurrence_ce_epsilon", cert.per_occurrence_ce_eps);
  const Rational per_round =
      std::max(cert.max_external_regret, Rational(0)) / Rational(trace.rounds);
  emit_rational(result, "max_external_regret_per_round", per_round);
  result["stationary_fallbacks"] = trace.stationary_fallbacks;
  std::size_t support = 0;
  for (std::uint64_t c : trace.profile_counts) support += c > 0 ? 1 : 0;
  result["empirical_support"] = support;

  if (csv && config.emit_trace) {
    std::ostringstream os;
    write_trace_csv(game, trace, os, rep);
    *csv = os.str();
  }
  return result;
}

nlohmann::json run_bribe_once(const ScenarioConfig& config) {
  const BribeOutcome outcome = optimal_bribe(*config.game, *config.device, config.colluder);
  nlohmann::json result;
  result["colluder"] = config.colluder;
  result["best_signal"] = config.device->signals[outcome.signal];
  emit_rational(result, "colluder_payoff", outcome.colluder_payoff);
  emit_rational(result, "honest_payoff", outcome.honest_payoff);
  emit_rational(result, "player_gain", outcome.player_gain);
  emit_rational(result, "mediator_surplus_bound", outcome.mediator_surplus_bound);
  return result;
}

nlohmann::json run_penalty_once(const ScenarioConfig& config) {
  const NormalFormGame& game = *config.game;
  const SignalDevice& device = *config.device;
  nlohmann::json result;
  emit_rational(result, "minimal_stabilizing_penalty",
                minimal_stabilizing_penalty(game, device));
  nlohmann::json sweep = nlohmann::json::array();
  for (const Rational& d : config.penalty_grid) {
    PenaltyDevice pdev{device, d, false};
    const Rational worst = max_penalized_gain(game, pdev);
    nlohmann::json row;
    emit_rational(row, "penalty", d);
    emit_rational(row, "max_gain", worst);
    row["is_exact_ce"] = worst <= 0;
    sweep.push_back(std::move(row));
  }
  result["sweep"] = sweep;
  return result;
}

std::string penalty_csv(const nlohmann::json& result) {
  std::ostringstream os;
  os << "penalty,max_gain,is_exact_ce\n";
  for (const auto& row : result["sweep"]) {
    os << row["penalty"].get<std::string>() << "," << row["max_gain"].get<std::string>()
       << "," << (row["is_exact_ce"].get<bool>() ? "true" : "false") << "\n";
  }
  return os.str();
}

nlohmann::json run_duel_once(const ScenarioConfig& config) {
  const NormalFormGame& game = *config.game;
  std::vector<ProgramStrategy> corpus =
      builtin_program_corpus(game, config.device, config.fallback_action);
  if (config.program_names) {
    std::vector<ProgramStrategy> picked;
    for (const std::string& name : *config.program_names) {
      bool found = false;
      for (const ProgramStrategy& prog : corpus) {
        if (prog.name == name) {
          picked.push_back(prog);
          found = true;
          break;
        }
      }
      if (!found) {
        throw ConfigError("config.programs: unknown program '" + name + "'");
      }
    }
    corpus = std::move(picked);
  }

  nlohmann::json programs = nlohmann::json::array();
  for (const ProgramStrategy& prog : corpus) {
    programs.push_back({{"name", prog.name}, {"identity", prog.identity()}});
  }

  nlohmann::json matrix = nlohmann::json::array();
  for (const ProgramStrategy& row : corpus) {
    nlohmann::json line = nlohmann::json::array();
    for (const ProgramStrategy& col : corpus) {
      Rational row_payoff(0), col_payoff(0);
      if (config.device) {
        // Expected over the signal draw, exactly.
        for (std::size_t s = 0; s < config.device->signals.size(); ++s) {
          const ActionProfile profile =
              execute_program_pair(row, col, config.device->signals[s], config.depth);
          row_payoff += config.device->probabilities[s] * game.payoff(profile, 0);
          col_payoff += config.device->probabilities[s] * game.payoff(profile, 1);
        }
      } else {
        const ActionProfile profile =
            execute_program_pair(row, col, std::nullopt, config.depth);
        row_payoff = game.payoff(profile, 0);
        col_payoff = game.payoff(profile, 1);
      }
      nlohmann::json cell;
      emit_rational(cell, "row_payoff", row_payoff);
      emit_rational(cell, "col_payoff", col_payoff);
      line.push_back(std::move(cell));
    }
    matrix.push_back(std::move(line));
  }

  nlohmann::json result;
  result["depth"] = config.depth;
  result["programs"] = programs;
  result["matrix"] = matrix;
  return result;
}

std::string duel_csv(const nlohmann::json& result) {
  std::ostringstream os;
  os << "row_program,col_program,row_payoff,col_payoff\n";
  const auto& programs = result["programs"];
  const auto& matrix = result["matrix"];
  for (std::size_t i = 0; i < programs.size(); ++i) {
    for (std::size_t j = 0; j < programs.size(); ++j) {
      os << programs[i]["name"].get<std::string>() << ","
         << programs[j]["name"].get<std::string>() << ","
         << matrix[i][j]["row_payoff"].get<std::string>() << ","
         << matrix[i][j]["col_payoff"].get<std::string>() << "\n";
    }
  }
  return os.str();
}

nlohmann::json run_auction_once(const ScenarioConfig& config, int rep) {
  AuctionScenario scenario;
  scenario.tick = config.tick;
  scenario.auctioneer = config.auctioneer;
  if (config.bids) {
    scenario.bids = *config.bids;
  } else {
    RngStream rng(config.seed, static_cast<std::uint64_t>(rep));
    scenario.bids.reserve(static_cast<std::size_t>(config.random_bids->bidders));
    for (int i = 0; i < config.random_bids->bidders; ++i) {
      scenario.bids.push_back(rng.next_in_range(config.random_bids->low,
                                                config.random_bids->high));
    }
  }
  const AuctionOutcome outcome = run_auction(scenario);
  nlohmann::json result;
  result["bids"] = scenario.bids;
  result["winner"] = outcome.winner;
  result["price"] = outcome.price;
  result["honest_price"] = outcome.honest_price;
  result["extraction"] = outcome.extraction;
  return result;
}

nlohmann::json run_audit_once(const ScenarioConfig& config, int rep) {
  std::vector<std::uint64_t> observed;
  std::vector<Rational> declared;
  if (config.observed) {
    observed = *config.observed;
    declared = *config.declared;
  } else {
    // Draw from the device the mediator actually runs, audit against the
    // declared one.
    const SignalDevice declared_device = *config.device;
    const SignalDevice effective = config.policy
                                       ? apply_mediator_policy(declared_device, *config.policy)
                                       : declared_device;
    RngStream rng(config.seed, static_cast<std::uint64_t>(rep));
    observed.assign(declared_device.signals.size(), 0);
    for (std::uint64_t i = 0; i < *config.draws; ++i) {
      ++observed[static_cast<std::size_t>(sample_signal(effective, rng))];
    }
    declared = declared_device.probabilities;
  }
  const double threshold =
      config.threshold ? *config.threshold : default_audit_threshold(declared.size());
  const AuditReport report = audit_signals(observed, declared, threshold);

  nlohmann::json result;
  result["observed"] = report.observed;
  nlohmann::json probs = nlohmann::json::array();
  for (const Rational& p : report.declared) probs.push_back(format_rational(p));
  result["declared"] = probs;
  result["g_statistic"] = report.g_statistic;
  result["threshold"] = report.threshold;
  result["suspicious"] = report.suspicious;
  result["deviation_proven"] = report.deviation_proven;
  return result;
}

std::string audit_csv_rows(const ScenarioConfig& config, const nlohmann::json& result,
                           int rep) {
  std::ostringstream os;
  const auto& observed = result["observed"];
  const auto& declared = result["declared"];
  for (std::size_t s = 0; s < observed.size(); ++s) {
    std::string label = config.device ? config.device->signals[s] : std::to_string(s);
    os << rep << "," << label << "," << observed[s].get<std::uint64_t>() << ","
       << declared[s].get<std::string>() << ","
       << format_double(result["g_statistic"].get<double>()) << ","
       << format_double(result["threshold"].get<double>()) << ","
       << (result["suspicious"].get<bool>() ? "true" : "false") << ","
       << (result["deviation_proven"].get<bool>() ? "true" : "false") << "\n";
  }
  return os.str();
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();

  nlohmann::json results = nlohmann::json::array();
  std::string csv;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    switch (config.kind) {
      case ScenarioKind::Verify:
        results.push_back(run_verify_once(config));
        if (rep == 0) csv = verify_csv(config);
        break;
      case ScenarioKind::Learn: {
        std::string block;
        results.push_back(run_learn_once(config, rep, &block));
        if (config.emit_trace) {
          // Keep the header from the first repetition only.
          if (rep > 0) block.erase(0, block.find('\n') + 1);
          csv += block;
        }
        break;
      }
      case ScenarioKind::Bribe:
        results.push_back(run_bribe_once(config));
        if (rep == 0) {
          const auto& r = results[0];
          std::ostringstream os;
          os << "colluder,best_signal,colluder_payoff,honest_payoff,player_gain,"
                "mediator_surplus_bound\n";
          os << r["colluder"].get<int>() << "," << r["best_signal"].get<std::string>() << ","
             << r["colluder_payoff"].get<std::string>() << ","
             << r["honest_payoff"].get<std::string>() << ","
             << r["player_gain"].get<std::string>() << ","
             << r["mediator_surplus_bound"].get<std::string>() << "\n";
          csv = os.str();
        }
        break;
      case ScenarioKind::Penalty:
        results.push_back(run_penalty_once(config));
        if (rep == 0) csv = penalty_csv(results[0]);
        break;
      case ScenarioKind::Duel:
        results.push_back(run_duel_once(config));
        if (rep == 0) csv = duel_csv(results[0]);
        break;
      case ScenarioKind::Auction: {
        if (rep == 0) csv = "rep,winner,price,honest_price,extraction\n";
        nlohmann::json r = run_auction_once(config, rep);
        std::ostringstream os;
        os << rep << "," << r["winner"].get<int>() << ","
           << format_double(r["price"].get<double>()) << ","
           << format_double(r["honest_price"].get<double>()) << ","
           << format_double(r["extraction"].get<double>()) << "\n";
        csv += os.str();
        results.push_back(std::move(r));
        break;
      }
      case ScenarioKind::Audit: {
        if (rep == 0) {
          csv = "rep,signal,observed,declared,g_statistic,threshold,suspicious,"
                "deviation_proven\n";
        }
        nlohmann::json r = run_audit_once(config, rep);
        csv += audit_csv_rows(config, r, rep);
        results.push_back(std::move(r));
        break;
      }
    }
  }

  const auto stop = std::chrono::steady_clock::now();

  RunReport report;
  report.document = {
      {"schema", "commitment-lab/report/v1"},
      {"kind", to_string(config.kind)},
      {"config", config.echo},
      {"config_hash", config_hash(config.echo)},
      {"seed", config.seed},
      {"repetitions", config.repetitions},
      {"results", results},
      {"aggregate", aggregate_results(results)},
      {"wall_clock_ms",
       std::chrono::duration<double, std::milli>(stop - start).count()},
  };
  report.csv = std::move(csv);
  return report;
}

}  // namespace clab
