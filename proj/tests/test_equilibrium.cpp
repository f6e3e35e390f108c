#include <doctest.h>

#include <algorithm>
#include <vector>

#include "clab/equilibrium.hpp"
#include "clab/errors.hpp"
#include "clab/game.hpp"
#include "clab/mediation.hpp"

using namespace clab;

namespace {

Rational q(const char* text) { return parse_rational(text); }

const Rational& find_conditional(const std::vector<DeviationReport>& reports, int player,
                                 const std::string& detail) {
  for (const auto& r : reports) {
    if (r.player == player && r.kind == DeviationKind::Conditional && r.detail == detail) {
      return r.gain;
    }
  }
  static const Rational missing(-999999);
  return missing;
}

}  // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("stop light device is an exact coarse correlated equilibrium") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const JointDistribution outcome = outcome_distribution(game, device);

  CHECK(expected_payoff(game, outcome, 0) == q("13/3"));
  CHECK(expected_payoff(game, outcome, 1) == q("13/3"));

  const int F = 0, C = 1, S = 2;
  for (int player = 0; player < 2; ++player) {
    CHECK(unconditional_deviation_gain(game, outcome, player, F) == q("-1/3"));
    CHECK(unconditional_deviation_gain(game, outcome, player, C) == q("-13/20"));
    CHECK(unconditional_deviation_gain(game, outcome, player, S) == q("-4/3"));
  }
  CHECK(cce_epsilon(game, outcome) == 0);

  const auto reports = unconditional_deviations(game, outcome);
  REQUIRE(reports.size() == 6);
  for (const auto& r : reports) {
    CHECK(r.gain <= 0);
    CHECK(r.occurrence_probability == 1);
    CHECK(r.kind == DeviationKind::Unconditional);
  }
}

TEST_CASE("unconditional gains match a from-scratch recomputation") {
  // Recompute the fixed-Fast gain for the row player with nothing but the
  // payoff table and the four outcome weights written out by hand.
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const JointDistribution outcome = outcome_distribution(game, device);

  struct Cell {
    Rational weight;
    int row, col;
  };
  const int F = 0, C = 1, S = 2;
  const std::vector<Cell> support = {
      {q("1/3"), S, F},
      {q("1/3"), F, S},
      {q("1/6"), C, S},
      {q("1/6"), S, C},
  };
  Rational obedient(0), fixed_fast(0);
  for (const auto& cell : support) {
    obedient += cell.weight * game.payoff({cell.row, cell.col}, 0);
    fixed_fast += cell.weight * game.payoff({F, cell.col}, 0);
  }
  CHECK(obedient == q("13/3"));
  CHECK(fixed_fast == 4);
  CHECK(unconditional_deviation_gain(game, outcome, 0, F) == fixed_fast - obedient);
}

TEST_CASE("conditional deviation table") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();

  const int F = 0, C = 1, S = 2;
  for (int player = 0; player < 2; ++player) {
    CHECK(conditional_deviation_gain(game, device, player, C, F) == 1);
    CHECK(conditional_deviation_gain(game, device, player, C, S) == -2);
    CHECK(conditional_deviation_gain(game, device, player, F, C) == -1);
    CHECK(conditional_deviation_gain(game, device, player, F, S) == -3);
    CHECK(conditional_deviation_gain(game, device, player, S, F) == -1);
    CHECK(conditional_deviation_gain(game, device, player, S, C) == q("-19/30"));

    CHECK(recommendation_probability(game, device, player, F) == q("1/3"));
    CHECK(recommendation_probability(game, device, player, C) == q("1/6"));
    CHECK(recommendation_probability(game, device, player, S) == q("1/2"));
  }
  CHECK(ce_epsilon(game, device) == 1);

  const auto reports = conditional_deviations(game, device);
  REQUIRE(reports.size() == 12);
  CHECK(find_conditional(reports, 0, "Caution->Fast") == 1);
  CHECK(find_conditional(reports, 1, "Caution->Fast") == 1);
  CHECK(find_conditional(reports, 0, "Stop->Caution") == q("-19/30"));
  for (const auto& r : reports) {
    if (r.detail != "Caution->Fast") CHECK(r.gain < 1);
  }
}

TEST_CASE("occurrence weighted deviation value") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  // Only Caution->Fast is profitable, and Caution is recommended with
  // probability 1/6, so the weighted value is 1/6 while ce_epsilon is 1.
  CHECK(swap_ce_epsilon(game, device) == q("1/6"));
  CHECK(swap_ce_epsilon(game, device) < ce_epsilon(game, device));
}

TEST_CASE("zero occurrence recommendations are rejected") {
  const NormalFormGame game = build_stop_light();
  SignalDevice device;
  device.signals = {"only"};
  device.probabilities = {Rational(1)};
  device.recommendations = {ActionProfile{2, 2}};
  CHECK_THROWS_AS(conditional_deviation_gain(game, device, 0, 0, 1),
                  UndefinedConditionalError);
  // The enumeration simply skips them.
  const auto reports = conditional_deviations(game, device);
  for (const auto& r : reports) CHECK(r.recommended == 2);
}

TEST_CASE("cce epsilon on other distributions") {
  const NormalFormGame game = build_stop_light();
  CHECK(cce_epsilon(game, JointDistribution::uniform(game)) == q("29/90"));
  CHECK(cce_epsilon(game, JointDistribution::point_mass(game, {2, 2})) == 3);

  JointDistribution half(game.shape());
  half.set_weight({0, 0}, q("1/2"));
  CHECK_THROWS_AS(cce_epsilon(game, half), Error);
}

TEST_CASE("coarse bound never exceeds the conditional one") {
  const NormalFormGame pennies = build_matching_pennies();

  SignalDevice mirror;
  mirror.signals = {"A", "B"};
  mirror.probabilities = {q("1/2"), q("1/2")};
  mirror.recommendations = {ActionProfile{0, 0}, ActionProfile{1, 1}};
  CHECK(cce_epsilon(pennies, outcome_distribution(pennies, mirror)) == 1);
  CHECK(ce_epsilon(pennies, mirror) == 2);

  const NormalFormGame stop = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  CHECK(cce_epsilon(stop, outcome_distribution(stop, device)) <= ce_epsilon(stop, device));

  SignalDevice skew;
  skew.signals = {"x", "y", "z"};
  skew.probabilities = {q("1/2"), q("1/4"), q("1/4")};
  skew.recommendations = {ActionProfile{0, 2}, ActionProfile{1, 1}, ActionProfile{2, 0}};
  CHECK(cce_epsilon(stop, outcome_distribution(stop, skew)) <= ce_epsilon(stop, skew));
}

TEST_CASE("brute force best response") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const JointDistribution outcome = outcome_distribution(game, device);

  const JointDistribution col_marginal = marginal_excluding(game, outcome, 0);
  CHECK(col_marginal.weight(ActionProfile{0}) == q("1/3"));
  CHECK(col_marginal.weight(ActionProfile{1}) == q("1/6"));
  CHECK(col_marginal.weight(ActionProfile{2}) == q("1/2"));

  const BestResponse br = brute_force_best_response(game, 0, col_marginal);
  CHECK(br.action == 0);
  CHECK(br.value == 4);

  // Caution earns 1/3 + (21/10)/6 + 6/2 against that marginal.
  const Rational caution_value =
      q("1/3") * game.payoff({1, 0}, 0) + q("1/6") * game.payoff({1, 1}, 0) +
      q("1/2") * game.payoff({1, 2}, 0);
  CHECK(caution_value == q("221/60"));
  CHECK(br.value > caution_value);

  const NormalFormGame pennies = build_matching_pennies();
  JointDistribution col_heads(std::vector<int>{2});
  col_heads.set_weight(ActionProfile{0}, Rational(1));
  const BestResponse match = brute_force_best_response(pennies, 0, col_heads);
  CHECK(match.action == 0);
  CHECK(match.value == 1);

  // Against a uniform opponent both actions tie at 0; lowest index wins.
  JointDistribution coin(std::vector<int>{2});
  coin.set_weight(ActionProfile{0}, q("1/2"));
  coin.set_weight(ActionProfile{1}, q("1/2"));
  const BestResponse tie = brute_force_best_response(pennies, 0, coin);
  CHECK(tie.action == 0);
  CHECK(tie.value == 0);
}

TEST_CASE("epsilons scale with the payoffs") {
  const NormalFormGame game = build_stop_light();
  const NormalFormGame tripled = game.scaled(3);
  const SignalDevice device = build_stop_light_device();
  CHECK(ce_epsilon(tripled, device) == 3);
  CHECK(swap_ce_epsilon(tripled, device) == q("1/2"));
  CHECK(cce_epsilon(tripled, JointDistribution::uniform(tripled)) == q("29/30"));
}

TEST_CASE("deviation table serialization") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const auto reports = conditional_deviations(game, device);

  const std::string csv = deviation_reports_to_csv(reports);
  CHECK(csv.rfind("player,kind,detail,gain,occurrence_probability\n", 0) == 0);
  CHECK(csv.find("1,conditional,Caution->Fast,1,1/6\n") != std::string::npos);
  CHECK(csv.find("0,conditional,Stop->Caution,-19/30,1/2\n") != std::string::npos);

  const nlohmann::json doc = deviation_reports_to_json(reports);
  REQUIRE(doc.is_array());
  REQUIRE(doc.size() == 12);
  bool found = false;
  for (const auto& row : doc) {
    if (row["detail"] == "Caution->Fast" && row["player"] == 0) {
      found = true;
      CHECK(row["gain"] == "1");
      CHECK(row["occurrence_probability"] == "1/6");
      CHECK(row["gain_value"].get<double>() == 1.0);
      CHECK(row["kind"] == "conditional");
    }
  }
  CHECK(found);
}

TEST_CASE("invalid devices and distributions are rejected") {
  const NormalFormGame game = build_stop_light();

  SignalDevice short_sum = build_stop_light_device();
  short_sum.probabilities[0] = q("1/6");
  CHECK_THROWS_AS(ce_epsilon(game, short_sum), ConfigError);

  SignalDevice bad_rec = build_stop_light_device();
  bad_rec.recommendations[0] = ActionProfile{0, 9};
  CHECK_THROWS_AS(ce_epsilon(game, bad_rec), ConfigError);

  CHECK_THROWS_AS(unconditional_deviation_gain(game, JointDistribution::uniform(game), 5, 0),
                  Error);
  CHECK_THROWS_AS(unconditional_deviation_gain(game, JointDistribution::uniform(game), 0, 9),
                  Error);
}

}  // TEST_SUITE
