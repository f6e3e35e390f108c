#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/equilibrium.hpp"
#include "clab/game.hpp"
#include "clab/mediation.hpp"

namespace clab {

// A signal device plus a committed fine d charged to any player caught
// playing something other than their recommendation.
struct PenaltyDevice {
  SignalDevice base;
  Rational penalty;
  // When set, the fine is paid out to the obedient players instead of being
  // burned. Irrelevant to the deviator's own incentive, so the gain
  // computations below do not depend on it; reports record it.
  bool transfer_to_obedient = false;
};

// Conditional deviation gain net of the fine; exactly 0 when the alternative
// equals the recommendation (obedience is never fined).
Rational penalized_conditional_gain(const NormalFormGame& game, const PenaltyDevice& device,
                                    int player, int recommended, int alternative);

// Largest net conditional gain over players, recommendations that occur, and
// genuine alternatives. Signed: negative means every deviation loses money.
Rational max_penalized_gain(const NormalFormGame& game, const PenaltyDevice& device);

// max(0, max_penalized_gain): the device is an exact correlated equilibrium
// with fine d iff this is 0.
Rational penalized_ce_epsilon(const NormalFormGame& game, const PenaltyDevice& device);

// Smallest fine that turns the device into an exact correlated equilibrium:
// the clamped maximum raw conditional gain.
Rational minimal_stabilizing_penalty(const NormalFormGame& game, const SignalDevice& device);

// One row of a program's decision table. A row fires when every stated
// condition holds; unset conditions always hold. First firing row wins.
struct ProgramClause {
  enum class SignalTest { Any, Absent, Equals };
  enum class SimTest { Any, Unavailable, Equals };

  std::optional<int> seat;        // evaluator must occupy this player slot
  SignalTest signal_test = SignalTest::Any;
  std::string signal;             // label, for SignalTest::Equals
  std::optional<bool> identity_match;  // opponent hash equals expected_opponent?
  SimTest sim_test = SimTest::Any;
  int sim_action = -1;            // for SimTest::Equals
  int action = 0;                 // the action this row plays
};

// A strategy published as source: a decision table over the received signal,
// an opponent-identity check, and the opponent's simulated action. Simulation
// is capped by the program's own depth budget, so mutual simulation always
// bottoms out.
struct ProgramStrategy {
  std::string name;
  int default_action = 0;
  std::uint32_t depth_budget = 0;
  std::vector<ProgramClause> clauses;
  // Identity hash the program compares its opponent against. Not part of the
  // program's own identity, so a program can expect "a copy of myself"
  // without the hash referring to itself.
  std::optional<std::string> expected_opponent;

  // Content hash (FNV-1a, 64-bit) of the decision table and default action.
  // Name, budget and expectation are deliberately excluded.
  std::string identity() const;

  nlohmann::json to_json() const;
  static ProgramStrategy from_json(const nlohmann::json& doc);
};

// Runs both programs for one round. Each is evaluated at
// min(depth, own budget); a program simulating its opponent evaluates it one
// level lower. At effective depth 0 the simulated action is unavailable.
ActionProfile execute_program_pair(const ProgramStrategy& row, const ProgramStrategy& col,
                                   const std::optional<std::string>& signal,
                                   std::uint32_t depth);

ProgramStrategy make_fixed_action_program(const std::string& name, int action);

// Plays whatever it predicts the opponent will play. Budget 1: it only ever
// looks one level down.
ProgramStrategy make_naive_matcher(int n_actions);

// Plays the action after the one it predicts, cyclically. Unbounded budget,
// so against a budgeted opponent it always simulates one level deeper.
ProgramStrategy make_anti_matcher(int n_actions);

// Follows its recommendation if and only if the opponent's code hash equals
// its own; otherwise falls back to fallback_action. Never simulates.
ProgramStrategy make_conditional_cooperator(const NormalFormGame& game,
                                            const SignalDevice& device, int fallback_action);

// The stock lineup used by program duels: one fixed program per action, the
// matcher, the anti-matcher, and (when a device is present) the cooperator.
std::vector<ProgramStrategy> builtin_program_corpus(
    const NormalFormGame& game, const std::optional<SignalDevice>& device,
    int fallback_action);

// Column player's exact payoff when the naive matcher (row) meets the
// anti-matcher (column) in the matcher/mismatcher game at the given depth.
// Requires depth >= 1.
Rational matching_pennies_exploit_value(std::uint32_t depth);

// A receiver-side garbling: player `player` reads signal s as mapping[s] and
// obeys the recommendation of the misread signal.
struct PerceptionMap {
  int player = -1;
  std::vector<int> mapping;

  static PerceptionMap identity_map(int player, std::size_t n_signals);
  void validate(const SignalDevice& device) const;
};

// Expected payoff per player when everyone obeys except that the mapped
// player acts on their misread signal.
std::vector<Rational> perception_attack_payoffs(const NormalFormGame& game,
                                                const SignalDevice& device,
                                                const PerceptionMap& perception);

}  // namespace clab
