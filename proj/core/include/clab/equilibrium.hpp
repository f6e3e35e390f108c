#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clab/game.hpp"
#include "clab/mediation.hpp"

namespace clab {

enum class DeviationKind { Unconditional, Conditional };

// One candidate deviation and its exact expected gain. Unconditional entries
// describe abandoning the device for a fixed action; conditional entries
// describe swapping one recommended action for an alternative.
struct DeviationReport {
  int player = -1;
  DeviationKind kind = DeviationKind::Unconditional;
  std::string detail;  // "Fast" or "Caution->Fast", built from action labels
  Rational gain;       // signed; positive means profitable
  Rational occurrence_probability;  // 1 for unconditional entries

  int target = -1;       // unconditional: the fixed action
  int recommended = -1;  // conditional: the recommendation being overridden
  int alternative = -1;  // conditional: the action played instead
};

// Expected payoff change when `player` ignores the realized profile draw and
// plays `action` while everyone else follows the distribution.
Rational unconditional_deviation_gain(const NormalFormGame& game,
                                      const JointDistribution& dist, int player,
                                      int action);

// Expected payoff change, conditional on being recommended `recommended`,
// from playing `alternative` instead. Throws UndefinedConditionalError when
// the recommendation never occurs.
Rational conditional_deviation_gain(const NormalFormGame& game, const SignalDevice& device,
                                    int player, int recommended, int alternative);

// Probability that `player` is recommended `recommended`.
Rational recommendation_probability(const NormalFormGame& game, const SignalDevice& device,
                                    int player, int recommended);

// Every (player, action) unconditional deviation against the distribution.
std::vector<DeviationReport> unconditional_deviations(const NormalFormGame& game,
                                                      const JointDistribution& dist);

// Every (player, recommendation, alternative) conditional deviation with the
// recommendation occurring with positive probability and alternative != it.
std::vector<DeviationReport> conditional_deviations(const NormalFormGame& game,
                                                    const SignalDevice& device);

// Smallest eps such that the distribution is an eps-coarse-correlated
// equilibrium: the clamped maximum unconditional gain.
Rational cce_epsilon(const NormalFormGame& game, const JointDistribution& dist);

// Smallest eps such that the device is an eps-correlated equilibrium in the
// per-recommendation sense: the clamped maximum conditional gain.
Rational ce_epsilon(const NormalFormGame& game, const SignalDevice& device);

// Occurrence-weighted deviation value: for each player, the sum over
// recommendations of P(recommendation) times the clamped best conditional
// gain, maximized over players. This is the quantity a swap-regret bound
// controls; it can be far below ce_epsilon when rarely-recommended actions
// carry large per-occurrence gains.
Rational swap_ce_epsilon(const NormalFormGame& game, const SignalDevice& device);

struct BestResponse {
  int action = -1;
  Rational value;
};

// Exhaustive best response of `player` against a distribution over the other
// players' profiles. Ties resolve to the lowest action index.
BestResponse brute_force_best_response(const NormalFormGame& game, int player,
                                       const JointDistribution& others);

// Marginal of a joint distribution over every player except `player`. The
// result's shape lists the remaining players in their original order.
JointDistribution marginal_excluding(const NormalFormGame& game,
                                     const JointDistribution& dist, int player);

// Serialization of deviation tables. CSV columns:
// player,kind,detail,gain,occurrence_probability
std::string deviation_reports_to_csv(const std::vector<DeviationReport>& reports);
nlohmann::json deviation_reports_to_json(const std::vector<DeviationReport>& reports);

}  // namespace clab
