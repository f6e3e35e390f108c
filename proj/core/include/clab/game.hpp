#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clab/rational.hpp"

namespace clab {

// One action per player, by index.
struct ActionProfile {
  std::vector<int> actions;

  ActionProfile() = default;
  ActionProfile(std::initializer_list<int> a) : actions(a) {}
  explicit ActionProfile(std::vector<int> a) : actions(std::move(a)) {}

  bool operator==(const ActionProfile&) const = default;
  auto operator<=>(const ActionProfile&) const = default;
};

// Finite normal-form game with exact rational payoffs. Payoffs live in a
// flattened tensor indexed by the packed profile (player 0 varies slowest),
// so lookup is a stride dot product instead of nested vectors.
class NormalFormGame {
 public:
  // labels[p] are player p's action labels; payoff_tensor is indexed by
  // packed profile, each entry holding one payoff per player.
  NormalFormGame(std::vector<std::vector<std::string>> labels,
                 std::vector<std::vector<Rational>> payoff_tensor);

  int num_players() const { return static_cast<int>(labels_.size()); }
  int num_actions(int player) const;
  std::size_t num_profiles() const { return payoffs_.size(); }
  std::vector<int> shape() const;

  const std::vector<std::string>& action_labels(int player) const;
  const std::string& action_label(int player, int action) const;
  // Throws ConfigError when the label is not one of player's actions.
  int action_index(int player, std::string_view label) const;

  bool valid_profile(const ActionProfile& profile) const;
  // Packed index of a profile; throws InvalidProfileError on a bad profile.
  std::size_t profile_index(const ActionProfile& profile) const;
  ActionProfile profile_at(std::size_t index) const;

  const std::vector<Rational>& payoffs_at(const ActionProfile& profile) const;
  const Rational& payoff(const ActionProfile& profile, int player) const;

  // Same game with every payoff multiplied by c (c > 0 required).
  NormalFormGame scaled(const Rational& c) const;

  nlohmann::json to_json() const;
  static NormalFormGame from_json(const nlohmann::json& doc);

 private:
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::size_t> strides_;
  std::vector<std::vector<Rational>> payoffs_;
};

// Sparse distribution (or more generally a nonnegative measure) over the
// action profiles of a game. Zero-weight entries are not stored, so
// iteration over entries() visits exactly the support in packed-index order.
class JointDistribution {
 public:
  explicit JointDistribution(std::vector<int> shape);

  static JointDistribution point_mass(const NormalFormGame& game,
                                      const ActionProfile& profile);
  static JointDistribution uniform(const NormalFormGame& game);

  const std::vector<int>& shape() const { return shape_; }
  bool matches(const NormalFormGame& game) const;

  // Both throw on negative weights or profiles outside the shape.
  void set_weight(const ActionProfile& profile, const Rational& w);
  void add_weight(const ActionProfile& profile, const Rational& w);

  Rational weight(const ActionProfile& profile) const;
  Rational total_weight() const;
  bool is_normalized() const { return total_weight() == 1; }
  // Throws Error unless the weights sum to exactly 1.
  void require_normalized(std::string_view context) const;

  const std::map<std::size_t, Rational>& entries() const { return weights_; }
  ActionProfile profile_at(std::size_t index) const;
  std::size_t profile_index(const ActionProfile& profile) const;

 private:
  std::vector<int> shape_;
  std::vector<std::size_t> strides_;
  std::map<std::size_t, Rational> weights_;
};

// Exact expected payoff of one player under a normalized distribution.
Rational expected_payoff(const NormalFormGame& game, const JointDistribution& dist,
                         int player);

// Two-player traffic game: actions Fast / Caution / Stop per player, payoffs
// symmetric across the diagonal, with (Caution, Caution) worth 21/10 each.
NormalFormGame build_stop_light();

// Zero-sum matcher/mismatcher game: row wins +1 on equal actions.
NormalFormGame build_matching_pennies();

// Latency of one route as a function of its load k: per_user * k + fixed.
struct RouteLatency {
  Rational per_user;
  Rational fixed;
};

// n anonymous players each pick a route; payoff is minus the latency of the
// chosen route at its realized load.
NormalFormGame build_congestion(int n_players, const std::vector<RouteLatency>& routes);

}  // namespace clab
