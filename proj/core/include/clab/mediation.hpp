#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clab/game.hpp"
#include "clab/rng.hpp"

namespace clab {

// A trusted correlation device: draws a signal with the declared probability
// and privately recommends one action per player.
struct SignalDevice {
  std::vector<std::string> signals;
  std::vector<Rational> probabilities;
  std::vector<ActionProfile> recommendations;

  // Checks label uniqueness, that probabilities are nonnegative and sum to
  // exactly 1, and that every recommendation is a valid profile of the game.
  void validate(const NormalFormGame& game) const;

  int signal_index(std::string_view label) const;  // -1 when absent
  int recommended_action(int signal, int player) const;

  nlohmann::json to_json(const NormalFormGame& game) const;
  static SignalDevice from_json(const nlohmann::json& doc, const NormalFormGame& game);
};

// The device behind the traffic game: four signals, each an asymmetric
// recommendation pair, weighted so that neither driver wants to disobey
// unconditionally.
SignalDevice build_stop_light_device();

// What the mediator actually does with the declared device. An honest
// mediator draws from it as declared; a corrupted one substitutes a fixed
// signal or a reweighted draw over the same signal set.
struct MediatorPolicy {
  enum class Kind { Honest, FixedSignal, Reweighted };

  Kind kind = Kind::Honest;
  int signal = -1;                 // FixedSignal only
  std::vector<Rational> weights;   // Reweighted only

  static MediatorPolicy honest();
  static MediatorPolicy fixed_signal(int signal);
  static MediatorPolicy reweighted(std::vector<Rational> weights);
};

// The device the players effectively face once the policy is applied.
// Honest returns a field-for-field copy.
SignalDevice apply_mediator_policy(const SignalDevice& device, const MediatorPolicy& policy);

int sample_signal(const SignalDevice& device, RngStream& rng);

// Push the signal distribution through the recommendation map: the joint
// play distribution when everyone obeys.
JointDistribution outcome_distribution(const NormalFormGame& game,
                                       const SignalDevice& device);

// Best fixed signal a single colluding player could pay the mediator to
// send, assuming everyone still obeys their recommendation.
struct BribeOutcome {
  int signal = -1;
  Rational colluder_payoff;        // obedient payoff under the bought signal
  Rational honest_payoff;          // obedient payoff under the declared device
  Rational player_gain;            // colluder_payoff - honest_payoff
  Rational mediator_surplus_bound; // max the mediator could charge, = player_gain
};

BribeOutcome optimal_bribe(const NormalFormGame& game, const SignalDevice& device,
                           int colluding_player);

// Sealed-bid second-price auction. A shill auctioneer inserts a fake bid one
// tick under the top bid, which lifts the price without changing the winner.
enum class AuctioneerMode { Honest, Shill };

struct AuctionScenario {
  std::vector<double> bids;
  double tick = 0.01;
  AuctioneerMode auctioneer = AuctioneerMode::Honest;

  void validate() const;
};

struct AuctionOutcome {
  int winner = -1;
  double price = 0.0;
  double honest_price = 0.0;  // what the price would have been without the shill
  double extraction = 0.0;    // price - honest_price
};

AuctionOutcome run_auction(const AuctionScenario& scenario);

// Frequency audit of observed signals against the declared distribution,
// using a log-likelihood-ratio statistic.
struct AuditReport {
  std::vector<std::uint64_t> observed;
  std::vector<Rational> declared;
  double g_statistic = 0.0;
  double threshold = 0.0;
  bool suspicious = false;
  // True only when a signal of declared probability zero was observed; that
  // is a proof of deviation rather than statistical evidence.
  bool deviation_proven = false;
};

AuditReport audit_signals(const std::vector<std::uint64_t>& observed,
                          const std::vector<Rational>& declared, double threshold);

// 99th percentile of the chi-squared distribution with n_signals - 1 degrees
// of freedom.
double default_audit_threshold(std::size_t n_signals);

}  // namespace clab
