#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/commitment.hpp"
#include "clab/equilibrium.hpp"
#include "clab/game.hpp"
#include "clab/learning.hpp"
#include "clab/mediation.hpp"

namespace clab {

enum class ScenarioKind { Verify, Learn, Bribe, Penalty, Duel, Auction, Audit };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

// Built-in instances addressable by name from configs and --list flags.
std::vector<std::string> builtin_game_names();
std::vector<std::string> builtin_device_names();
NormalFormGame make_builtin_game(const std::string& name);
SignalDevice make_builtin_device(const std::string& name, const NormalFormGame& game);

struct RandomBidSpec {
  int bidders = 0;
  double low = 0.0;
  double high = 0.0;
};

// Fully resolved scenario. Built by parse_scenario, which rejects unknown
// fields and reports problems with their JSON path.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Verify;
  std::uint64_t seed = 0;
  int repetitions = 1;

  std::optional<NormalFormGame> game;
  std::optional<SignalDevice> device;

  // learn
  std::vector<LearnerSpec> learners;
  std::uint64_t rounds = 0;
  bool emit_trace = true;

  // verify
  std::optional<PerceptionMap> perception;

  // bribe
  int colluder = 0;

  // penalty
  std::vector<Rational> penalty_grid;

  // duel
  std::uint32_t depth = 1;
  std::optional<std::vector<std::string>> program_names;
  int fallback_action = 0;

  // auction
  std::optional<std::vector<double>> bids;
  std::optional<RandomBidSpec> random_bids;
  double tick = 0.01;
  AuctioneerMode auctioneer = AuctioneerMode::Shill;

  // audit
  std::optional<std::vector<std::uint64_t>> observed;
  std::optional<std::vector<Rational>> declared;
  std::optional<std::uint64_t> draws;
  std::optional<MediatorPolicy> policy;
  std::optional<double> threshold;

  // The validated input document, echoed into reports and hashed.
  nlohmann::json echo;
};

ScenarioConfig parse_scenario(const nlohmann::json& doc);

// 64-bit FNV-1a over the canonical (sorted-key, compact) dump of a document.
std::string config_hash(const nlohmann::json& doc);

struct RunReport {
  nlohmann::json document;  // full envelope, deterministic except wall_clock_ms
  std::string csv;          // kind-specific tabular rendering of the results
};

// Executes the configured repetitions and assembles the report envelope:
// schema, kind, config echo, config hash, per-repetition results, and a
// numeric aggregate (mean/min/max over repetitions, keyed by flattened
// metric path).
RunReport run_scenario(const ScenarioConfig& config);

}  // namespace clab
