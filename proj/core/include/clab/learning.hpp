#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "clab/game.hpp"
#include "clab/mediation.hpp"
#include "clab/rng.hpp"

namespace clab {

enum class LearnerAlgo { RegretMatching, Hedge, SwapRegret, Pgd };

// Per-player learner configuration for self-play. Nonpositive rates and
// scales select the documented defaults at run time (they depend on the
// horizon and the payoff range).
struct LearnerSpec {
  LearnerAlgo algo = LearnerAlgo::RegretMatching;
  double hedge_rate = 0.0;      // Hedge; default sqrt(8 ln A / T)
  double pgd_step_scale = 0.0;  // Pgd; step_t = scale / sqrt(t), default 1/range
  LearnerAlgo sub_algo = LearnerAlgo::RegretMatching;  // SwapRegret internals
  double sub_hedge_rate = 0.0;
};

// Euclidean projection onto the probability simplex (sorted-threshold
// method). Throws on empty or non-finite input.
std::vector<double> project_to_simplex(std::span<const double> v);

// Plays each action proportionally to its clamped cumulative regret,
// uniformly when nothing has positive regret yet.
class RegretMatchingLearner {
 public:
  explicit RegretMatchingLearner(int n_actions);
  explicit RegretMatchingLearner(std::vector<double> initial_regrets);

  const std::vector<double>& strategy() const { return strategy_; }
  const std::vector<double>& cumulative_regrets() const { return regrets_; }

  // Realized baseline: regret of a grows by payoffs[a] - payoffs[played].
  void observe(std::span<const double> payoffs, int played);
  // Expected baseline: payoffs[a] - <strategy, payoffs>. The swap-regret
  // reduction feeds its sub-learners this way since they never act.
  void observe_expected(std::span<const double> payoffs);

 private:
  void refresh();
  std::vector<double> regrets_;
  std::vector<double> strategy_;
};

// Multiplicative weights over log weights; numerically safe under long
// horizons because the softmax subtracts the running maximum.
class HedgeLearner {
 public:
  HedgeLearner(int n_actions, double rate);

  const std::vector<double>& strategy() const { return strategy_; }
  double rate() const { return rate_; }

  void observe(std::span<const double> payoffs);

 private:
  void refresh();
  double rate_;
  std::vector<double> log_weights_;
  std::vector<double> strategy_;
};

// The standard horizon-tuned Hedge rate sqrt(8 ln A / T).
double hedge_default_rate(int n_actions, std::uint64_t horizon);

// Projected ascent on the realized counterfactual payoff vector with the
// step schedule scale / sqrt(t).
class PgdLearner {
 public:
  PgdLearner(int n_actions, double step_scale);
  PgdLearner(std::vector<double> initial_strategy, double step_scale);

  const std::vector<double>& strategy() const { return strategy_; }

  void observe(std::span<const double> gradient);
  void step_with_size(std::span<const double> gradient, double step);

 private:
  double scale_;
  std::uint64_t t_ = 0;
  std::vector<double> strategy_;
};

// Stationary distribution of a row-stochastic matrix via direct elimination
// with partial pivoting. A singular or badly conditioned system falls back
// to the uniform distribution and reports it through *used_fallback.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& matrix,
                                            bool* used_fallback);

// Swap-regret minimizer: one no-regret sub-learner per own action, each fed
// the payoff vector scaled by the probability currently assigned to its
// action; the played strategy is the stationary distribution of the matrix
// of sub-strategies.
class SwapRegretLearner {
 public:
  SwapRegretLearner(int n_actions, LearnerAlgo sub_algo, double sub_hedge_rate);

  const std::vector<double>& strategy() const { return strategy_; }
  std::uint64_t fallback_count() const { return fallbacks_; }
  std::vector<std::vector<double>> sub_matrix() const;

  void observe(std::span<const double> payoffs);

 private:
  void refresh();
  std::vector<std::variant<RegretMatchingLearner, HedgeLearner>> subs_;
  std::vector<double> strategy_;
  std::uint64_t fallbacks_ = 0;
};

// Everything recorded during one self-play run. Strategies are flattened per
// round as [player 0's mixed strategy, player 1's, ...]; running_regret
// holds, per round and player, the best cumulative counterfactual advantage
// so far (unclamped, so it can be negative early on).
struct LearnerTrace {
  std::vector<int> shape;
  std::uint64_t rounds = 0;
  std::vector<ActionProfile> actions;
  std::vector<double> strategies;
  std::vector<double> running_regret;
  std::vector<std::uint64_t> profile_counts;
  std::vector<std::uint64_t> stationary_fallbacks;  // per player, SwapRegret only

  int num_players() const { return static_cast<int>(shape.size()); }
  std::span<const double> strategy_at(std::uint64_t t, int player) const;
  double regret_at(std::uint64_t t, int player) const;
  JointDistribution empirical_distribution() const;

  // Builds the bookkeeping (counts, rounds) for an externally supplied
  // action sequence; strategies and running regrets stay empty. The exact
  // regret functions below only need the counts.
  static LearnerTrace from_actions(const NormalFormGame& game,
                                   const std::vector<ActionProfile>& actions);
};

// Largest payoff spread one player can see; used for default step scales.
double payoff_range(const NormalFormGame& game, int player);

// Runs one learner per player for `rounds` rounds. Each player samples from
// their own deterministic stream derived from (seed, player), so traces are
// reproducible bit for bit.
LearnerTrace run_self_play(const NormalFormGame& game, const std::vector<LearnerSpec>& specs,
                           std::uint64_t rounds, std::uint64_t seed);

// Exact cumulative external regret of one player over the trace: the best
// fixed action's advantage in hindsight. Signed and unscaled by T.
Rational external_regret(const NormalFormGame& game, const LearnerTrace& trace, int player);

// Exact cumulative swap regret: best per-action remapping advantage,
// clamped per origin action, summed.
Rational swap_regret(const NormalFormGame& game, const LearnerTrace& trace, int player);

// The empirical play distribution repackaged as a signal device: one signal
// per realized profile, recommending exactly that profile.
SignalDevice induced_device(const NormalFormGame& game, const LearnerTrace& trace);

// Equilibrium certificates computed from a trace with exact arithmetic.
// cce_eps equals clamped max_external_regret / rounds by construction, and
// weighted_ce_eps equals max_swap_regret / rounds; both identities are what
// makes the learner output auditable.
struct TraceCertificate {
  Rational cce_eps;
  Rational max_external_regret;
  Rational weighted_ce_eps;
  Rational max_swap_regret;
  Rational per_occurrence_ce_eps;
  std::vector<Rational> external_regrets;
  std::vector<Rational> swap_regrets;
};

TraceCertificate certify_trace(const NormalFormGame& game, const LearnerTrace& trace);

// One row per round: t, each player's action label, each player's running
// regret. A repetition index column is prepended when given.
void write_trace_csv(const NormalFormGame& game, const LearnerTrace& trace,
                     std::ostream& out, std::optional<int> repetition = std::nullopt);

}  // namespace clab
