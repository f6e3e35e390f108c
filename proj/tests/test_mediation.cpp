#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "clab/equilibrium.hpp"
#include "clab/errors.hpp"
#include "clab/game.hpp"
#include "clab/mediation.hpp"
#include "clab/rng.hpp"

using namespace clab;

namespace {

Rational q(const char* text) { return parse_rational(text); }

}  // namespace

TEST_SUITE("mediation") {

TEST_CASE("device validation") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice good = build_stop_light_device();
  CHECK_NOTHROW(good.validate(game));

  SignalDevice bad = good;
  bad.probabilities[0] = q("1/6");
  CHECK_THROWS_AS(bad.validate(game), ConfigError);

  bad = good;
  bad.probabilities[0] = q("-1/3");
  CHECK_THROWS_AS(bad.validate(game), ConfigError);

  bad = good;
  bad.probabilities.pop_back();
  CHECK_THROWS_AS(bad.validate(game), ConfigError);

  bad = good;
  bad.signals[1] = "FS";
  CHECK_THROWS_AS(bad.validate(game), ConfigError);

  bad = good;
  bad.recommendations[2] = ActionProfile{3, 0};
  CHECK_THROWS_AS(bad.validate(game), ConfigError);

  SignalDevice empty;
  CHECK_THROWS_AS(empty.validate(game), ConfigError);

  CHECK(good.signal_index("SC") == 2);
  CHECK(good.signal_index("nope") == -1);
  CHECK(good.recommended_action(0, 0) == 2);
  CHECK(good.recommended_action(0, 1) == 0);
  CHECK_THROWS_AS(good.recommended_action(4, 0), Error);
}

TEST_CASE("outcome distribution") {
  const NormalFormGame game = build_stop_light();
  const JointDistribution outcome = outcome_distribution(game, build_stop_light_device());
  REQUIRE(outcome.entries().size() == 4);
  CHECK(outcome.weight({2, 0}) == q("1/3"));
  CHECK(outcome.weight({0, 2}) == q("1/3"));
  CHECK(outcome.weight({1, 2}) == q("1/6"));
  CHECK(outcome.weight({2, 1}) == q("1/6"));
  CHECK(outcome.is_normalized());

  // Two signals that recommend the same profile merge into one cell.
  SignalDevice doubled;
  doubled.signals = {"a", "b", "c"};
  doubled.probabilities = {q("1/4"), q("1/4"), q("1/2")};
  doubled.recommendations = {ActionProfile{2, 2}, ActionProfile{2, 2}, ActionProfile{0, 0}};
  const JointDistribution merged = outcome_distribution(game, doubled);
  CHECK(merged.entries().size() == 2);
  CHECK(merged.weight({2, 2}) == q("1/2"));
}

TEST_CASE("device JSON round trip") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const nlohmann::json doc = device.to_json(game);
  CHECK(doc["signals"][3] == "CS");
  CHECK(doc["probabilities"][2] == "1/6");
  CHECK(doc["recommendations"][0][0] == "Stop");
  CHECK(doc["recommendations"][0][1] == "Fast");

  const SignalDevice back = SignalDevice::from_json(doc, game);
  CHECK(back.signals == device.signals);
  CHECK(back.probabilities == device.probabilities);
  CHECK(back.recommendations == device.recommendations);

  nlohmann::json extra = doc;
  extra["note"] = "hi";
  CHECK_THROWS_AS(SignalDevice::from_json(extra, game), ConfigError);

  nlohmann::json bad_label = doc;
  bad_label["recommendations"][0][0] = "Swerve";
  CHECK_THROWS_AS(SignalDevice::from_json(bad_label, game), ConfigError);

  nlohmann::json numeric_prob = doc;
  numeric_prob["probabilities"][0] = 0.5;
  CHECK_THROWS_AS(SignalDevice::from_json(numeric_prob, game), ConfigError);
}

TEST_CASE("mediator policies") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();

  const SignalDevice honest = apply_mediator_policy(device, MediatorPolicy::honest());
  CHECK(honest.signals == device.signals);
  CHECK(honest.probabilities == device.probabilities);
  CHECK(honest.recommendations == device.recommendations);

  // Locking the device to FS always plays (Stop, Fast): 7 for the column
  // driver, 2 for the row driver.
  const SignalDevice fixed =
      apply_mediator_policy(device, MediatorPolicy::fixed_signal(device.signal_index("FS")));
  const JointDistribution locked = outcome_distribution(game, fixed);
  CHECK(expected_payoff(game, locked, 1) == 7);
  CHECK(expected_payoff(game, locked, 0) == 2);

  const SignalDevice tilted = apply_mediator_policy(
      device, MediatorPolicy::reweighted({q("1/2"), q("1/2"), q("0"), q("0")}));
  const JointDistribution half = outcome_distribution(game, tilted);
  CHECK(expected_payoff(game, half, 1) == q("9/2"));
  CHECK(expected_payoff(game, half, 0) == q("9/2"));

  CHECK_THROWS_AS(apply_mediator_policy(device, MediatorPolicy::fixed_signal(4)),
                  InvalidScenarioError);
  CHECK_THROWS_AS(apply_mediator_policy(device, MediatorPolicy::fixed_signal(-1)),
                  InvalidScenarioError);
  CHECK_THROWS_AS(apply_mediator_policy(device, MediatorPolicy::reweighted({q("1")})),
                  InvalidScenarioError);
  CHECK_THROWS_AS(
      apply_mediator_policy(device,
                            MediatorPolicy::reweighted({q("1"), q("1"), q("0"), q("-1")})),
      InvalidScenarioError);
  CHECK_THROWS_AS(
      apply_mediator_policy(device,
                            MediatorPolicy::reweighted({q("1/2"), q("0"), q("0"), q("0")})),
      InvalidScenarioError);
}

TEST_CASE("signal sampling") {
  const SignalDevice device = build_stop_light_device();

  SignalDevice point = device;
  point.probabilities = {Rational(0), Rational(0), Rational(1), Rational(0)};
  RngStream rng(99, 0);
  for (int i = 0; i < 50; ++i) CHECK(sample_signal(point, rng) == 2);

  // Identical stream parameters reproduce the draw sequence bit for bit.
  RngStream a(7, 3), b(7, 3);
  std::vector<int> draws_a, draws_b;
  for (int i = 0; i < 200; ++i) {
    draws_a.push_back(sample_signal(device, a));
    draws_b.push_back(sample_signal(device, b));
  }
  CHECK(draws_a == draws_b);

  RngStream c(7, 4);
  std::vector<int> draws_c;
  for (int i = 0; i < 200; ++i) draws_c.push_back(sample_signal(device, c));
  CHECK(draws_a != draws_c);

  // Long-run frequencies sit near the declared distribution (seeded, so this
  // is a fixed arithmetic fact, not a flaky statistical check).
  RngStream big(2024, 0);
  std::array<int, 4> counts{};
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_signal(device, big))];
  const std::array<double, 4> expect = {1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6};
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(std::abs(static_cast<double>(counts[s]) / n - expect[s]) < 0.01);
  }
}

TEST_CASE("bribing the mediator") {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();

  const BribeOutcome col = optimal_bribe(game, device, 1);
  CHECK(col.signal == device.signal_index("FS"));
  CHECK(col.colluder_payoff == 7);
  CHECK(col.honest_payoff == q("13/3"));
  CHECK(col.player_gain == q("8/3"));
  CHECK(col.mediator_surplus_bound == q("8/3"));

  const BribeOutcome row = optimal_bribe(game, device, 0);
  CHECK(row.signal == device.signal_index("SF"));
  CHECK(row.player_gain == q("8/3"));

  // No reweighting of the same signal set can beat the bought vertex.
  const std::vector<std::vector<Rational>> mixes = {
      {q("1/4"), q("1/4"), q("1/4"), q("1/4")},
      {q("0"), q("1"), q("0"), q("0")},
      {q("1/2"), q("0"), q("1/2"), q("0")},
      {q("1/10"), q("3/10"), q("3/10"), q("3/10")},
  };
  for (const auto& w : mixes) {
    const SignalDevice crooked =
        apply_mediator_policy(device, MediatorPolicy::reweighted(w));
    const Rational v = expected_payoff(game, outcome_distribution(game, crooked), 1);
    CHECK(v <= col.colluder_payoff);
  }

  // When the declared device already plays the colluder's favorite cell,
  // buying the mediator gains nothing.
  SignalDevice lone;
  lone.signals = {"only"};
  lone.probabilities = {Rational(1)};
  lone.recommendations = {ActionProfile{0, 2}};
  const BribeOutcome flat = optimal_bribe(game, lone, 0);
  CHECK(flat.player_gain == 0);
  CHECK(flat.colluder_payoff == 7);

  CHECK_THROWS_AS(optimal_bribe(game, device, 2), Error);
}

TEST_CASE("second price auction with a shill bid") {
  AuctionScenario s;
  s.bids = {10.0, 6.0};
  s.tick = 0.01;
  s.auctioneer = AuctioneerMode::Shill;
  const AuctionOutcome shill = run_auction(s);
  CHECK(shill.winner == 0);
  CHECK(shill.honest_price == 6.0);
  CHECK(shill.price == std::max(6.0, 10.0 - 0.01));
  CHECK(shill.extraction == shill.price - 6.0);

  s.auctioneer = AuctioneerMode::Honest;
  const AuctionOutcome honest = run_auction(s);
  CHECK(honest.price == 6.0);
  CHECK(honest.extraction == 0.0);

  // A tied top bid leaves no room for the shill.
  AuctionScenario tie;
  tie.bids = {5.0, 5.0};
  tie.auctioneer = AuctioneerMode::Shill;
  const AuctionOutcome tied = run_auction(tie);
  CHECK(tied.winner == 0);
  CHECK(tied.price == 5.0);
  CHECK(tied.extraction == 0.0);

  AuctionScenario three;
  three.bids = {3.0, 9.0, 6.0};
  three.auctioneer = AuctioneerMode::Shill;
  const AuctionOutcome mid = run_auction(three);
  CHECK(mid.winner == 1);
  CHECK(mid.honest_price == 6.0);
  CHECK(mid.price == std::max(6.0, 9.0 - 0.01));
}

TEST_CASE("auction validation") {
  AuctionScenario s;
  s.bids = {1.0};
  CHECK_THROWS_AS(run_auction(s), InvalidScenarioError);
  s.bids = {1.0, -2.0};
  CHECK_THROWS_AS(run_auction(s), InvalidScenarioError);
  s.bids = {1.0, std::nan("")};
  CHECK_THROWS_AS(run_auction(s), InvalidScenarioError);
  s.bids = {1.0, 2.0};
  s.tick = 0.0;
  CHECK_THROWS_AS(run_auction(s), InvalidScenarioError);
}

TEST_CASE("auction invariants on random bid vectors") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_u64() % 5);
    AuctionScenario s;
    for (std::size_t i = 0; i < n; ++i) s.bids.push_back(rng.next_in_range(0.0, 50.0));
    s.tick = 0.25;

    s.auctioneer = AuctioneerMode::Honest;
    const AuctionOutcome honest = run_auction(s);
    s.auctioneer = AuctioneerMode::Shill;
    const AuctionOutcome shill = run_auction(s);

    const auto top_it = std::max_element(s.bids.begin(), s.bids.end());
    CHECK(honest.winner == static_cast<int>(top_it - s.bids.begin()));
    CHECK(shill.winner == honest.winner);

    std::vector<double> sorted = s.bids;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    CHECK(honest.price == sorted[1]);
    CHECK(shill.price >= honest.price);
    CHECK(shill.price <= *top_it);
    CHECK(shill.extraction >= 0.0);
  }
}

TEST_CASE("signal frequency audit") {
  const std::vector<Rational> declared = {q("1/3"), q("1/3"), q("1/6"), q("1/6")};
  const double threshold = default_audit_threshold(4);

  // Perfectly proportional counts hit every expected cell exactly, so the
  // statistic is zero by construction, not merely small.
  const AuditReport exact = audit_signals({2, 2, 1, 1}, declared, threshold);
  CHECK(exact.g_statistic == 0.0);
  CHECK_FALSE(exact.suspicious);
  CHECK_FALSE(exact.deviation_proven);
  const AuditReport scaled = audit_signals({20, 20, 10, 10}, declared, threshold);
  CHECK(scaled.g_statistic == 0.0);

  // A single all-FS observation is consistent with the device; ten are not.
  const AuditReport one = audit_signals({1, 0, 0, 0}, declared, threshold);
  CHECK(one.g_statistic == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
  CHECK_FALSE(one.suspicious);
  const AuditReport ten = audit_signals({10, 0, 0, 0}, declared, threshold);
  CHECK(ten.g_statistic == doctest::Approx(20.0 * std::log(3.0)).epsilon(1e-12));
  CHECK(ten.suspicious);
  CHECK_FALSE(ten.deviation_proven);

  // Observing a signal the device says is impossible is proof, not evidence.
  const AuditReport proven =
      audit_signals({1, 0, 3}, {q("1/2"), q("1/2"), q("0")}, threshold);
  CHECK(proven.deviation_proven);
  CHECK(std::isinf(proven.g_statistic));
  CHECK(proven.suspicious);
}

TEST_CASE("audit validation") {
  const std::vector<Rational> declared = {q("1/2"), q("1/2")};
  CHECK_THROWS_AS(audit_signals({1, 2, 3}, declared, 1.0), ConfigError);
  CHECK_THROWS_AS(audit_signals({}, {}, 1.0), ConfigError);
  CHECK_THROWS_AS(audit_signals({0, 0}, declared, 1.0), ConfigError);
  CHECK_THROWS_AS(audit_signals({1, 1}, {q("1/2"), q("1/4")}, 1.0), ConfigError);
  CHECK_THROWS_AS(audit_signals({1, 1}, {q("3/2"), q("-1/2")}, 1.0), ConfigError);
}

TEST_CASE("default audit threshold") {
  CHECK(default_audit_threshold(4) == doctest::Approx(11.34486673014437).epsilon(1e-9));
  CHECK(default_audit_threshold(2) == doctest::Approx(6.6348966010212145).epsilon(1e-9));
  CHECK_THROWS_AS(default_audit_threshold(1), ConfigError);
}

}  // TEST_SUITE
