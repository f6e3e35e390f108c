// End-to-end acceptance gate. Each criterion prints exactly one line,
// [PASS] or [FAIL], and the process exits nonzero when anything failed.
// Checks marked "exact" compare rationals with ==; no tolerance is applied
// anywhere a result is computable in exact arithmetic.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/commitment.hpp"
#include "clab/equilibrium.hpp"
#include "clab/errors.hpp"
#include "clab/game.hpp"
#include "clab/learning.hpp"
#include "clab/mediation.hpp"
#include "clab/rng.hpp"
#include "clab/scenario.hpp"

using namespace clab;

namespace {

int criteria_failed = 0;

class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && why_.empty()) why_ = what;
  }
  bool ok() const { return why_.empty(); }
  const std::string& why() const { return why_; }

 private:
  std::string why_;
};

// Runs one criterion, timing it; time_limit_s < 0 means untimed.
void criterion(int id, const std::string& label, double time_limit_s,
               const std::function<void(Checker&)>& body) {
  Checker check;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& err) {
    check.require(false, std::string("unexpected exception: ") + err.what());
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s >= 0.0 && elapsed > time_limit_s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "took %.2f s, limit %.2f s", elapsed, time_limit_s);
    check.require(false, buf);
  }
  char timing[32] = "";
  if (time_limit_s >= 0.0) std::snprintf(timing, sizeof(timing), " (%.2f s)", elapsed);
  if (check.ok()) {
    std::cout << "[PASS] criterion " << id << ": " << label << timing << "\n";
  } else {
    std::cout << "[FAIL] criterion " << id << ": " << label << timing << " -- "
              << check.why() << "\n";
    ++criteria_failed;
  }
}

std::string fr(const Rational& v) { return format_rational(v); }

// Payoff oracle written out independently of the library builders: the row
// payoff table as tenths, plus the four device outcomes. Everything in
// criteria 1-3 is cross-checked against arithmetic on these literals.
Rational oracle_row_payoff(int row, int col) {
  static const long tenths[3][3] = {{0, 30, 70}, {10, 21, 60}, {20, 20, 40}};
  return Rational(tenths[row][col], 10);
}

Rational oracle_payoff(int player, int row, int col) {
  return player == 0 ? oracle_row_payoff(row, col) : oracle_row_payoff(col, row);
}

struct OracleOutcome {
  Rational weight;
  int row, col;
};

std::vector<OracleOutcome> oracle_outcomes() {
  return {{Rational(1, 3), 2, 0},
          {Rational(1, 3), 0, 2},
          {Rational(1, 6), 1, 2},
          {Rational(1, 6), 2, 1}};
}

Rational oracle_unconditional_gain(int player, int fixed_action) {
  Rational gain(0);
  for (const OracleOutcome& o : oracle_outcomes()) {
    const int swapped_row = player == 0 ? fixed_action : o.row;
    const int swapped_col = player == 1 ? fixed_action : o.col;
    gain += o.weight * (oracle_payoff(player, swapped_row, swapped_col) -
                        oracle_payoff(player, o.row, o.col));
  }
  return gain;
}

void criterion_no_unconditional_gain(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const JointDistribution outcome = outcome_distribution(game, build_stop_light_device());
  for (int p = 0; p < 2; ++p) {
    for (int a = 0; a < 3; ++a) {
      const Rational lib = unconditional_deviation_gain(game, outcome, p, a);
      const Rational ref = oracle_unconditional_gain(p, a);
      check.require(lib == ref, "gain mismatch vs literal oracle: player " +
                                    std::to_string(p) + " action " + std::to_string(a) +
                                    " lib=" + fr(lib) + " oracle=" + fr(ref));
      check.require(lib <= 0, "profitable unconditional deviation: player " +
                                  std::to_string(p) + " action " + std::to_string(a) +
                                  " gain=" + fr(lib));
    }
  }
  const Rational eps = cce_epsilon(game, outcome);
  check.require(eps == 0, "cce_epsilon expected exactly 0, got " + fr(eps));
}

void criterion_expected_payoffs(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const JointDistribution outcome = outcome_distribution(game, build_stop_light_device());
  const Rational target(13, 3);
  for (int p = 0; p < 2; ++p) {
    const Rational v = expected_payoff(game, outcome, p);
    check.require(v == target,
                  "player " + std::to_string(p) + " payoff " + fr(v) + ", expected 13/3");
    check.require(std::abs(to_double(v) - 4.3) < 0.04,
                  "payoff not within 0.04 of 4.3: " + std::to_string(to_double(v)));
  }
}

void criterion_conditional_gap(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const Rational eps = ce_epsilon(game, device);
  check.require(eps == 1, "ce_epsilon expected exactly 1, got " + fr(eps));

  for (int p = 0; p < 2; ++p) {
    bool saw_peak = false;
    for (const DeviationReport& r : conditional_deviations(game, device)) {
      if (r.player != p) continue;
      if (r.detail == "Caution->Fast") {
        saw_peak = true;
        check.require(r.gain == 1, "Caution->Fast gain for player " + std::to_string(p) +
                                       " is " + fr(r.gain) + ", expected 1");
      } else {
        check.require(r.gain < 1, "non-peak deviation " + r.detail + " reaches " + fr(r.gain));
      }
    }
    check.require(saw_peak, "player " + std::to_string(p) + " missing Caution->Fast entry");
  }
}

void criterion_bribery(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const int fs = device.signal_index("FS");
  check.require(fs >= 0, "device lacks signal FS");

  const SignalDevice bought = apply_mediator_policy(device, MediatorPolicy::fixed_signal(fs));
  const Rational col = expected_payoff(game, outcome_distribution(game, bought), 1);
  check.require(col == 7, "column payoff under forced FS is " + fr(col) + ", expected 7");

  const BribeOutcome bribe = optimal_bribe(game, device, 1);
  check.require(bribe.signal == fs, "optimal bribe picked signal index " +
                                        std::to_string(bribe.signal) + ", expected FS");
  check.require(bribe.player_gain == Rational(8, 3),
                "bribe gain " + fr(bribe.player_gain) + ", expected 8/3");
  check.require(bribe.mediator_surplus_bound == Rational(8, 3),
                "surplus bound " + fr(bribe.mediator_surplus_bound) + ", expected 8/3");
}

void criterion_penalty_sweep(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const Rational dstar = minimal_stabilizing_penalty(game, device);
  check.require(dstar == 1, "minimal stabilizing penalty " + fr(dstar) + ", expected 1");

  for (int k = 0; k <= 20; ++k) {
    const Rational d(k, 10);
    PenaltyDevice pdev{device, d, false};
    const Rational eps = penalized_ce_epsilon(game, pdev);
    const Rational want = d >= 1 ? Rational(0) : Rational(1) - d;
    check.require(eps == want, "penalty " + fr(d) + ": epsilon " + fr(eps) + ", expected " +
                                   fr(want));
  }
}

void criterion_regret_matching(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const std::vector<LearnerSpec> specs(2);
  const Rational bound(1, 20);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LearnerTrace trace = run_self_play(game, specs, 10000, seed);
    const TraceCertificate cert = certify_trace(game, trace);
    const Rational clamped =
        cert.max_external_regret > 0 ? cert.max_external_regret : Rational(0);
    const Rational per_round = clamped / Rational(trace.rounds);
    check.require(cert.cce_eps == per_round,
                  "seed " + std::to_string(seed) + ": cce_epsilon " + fr(cert.cce_eps) +
                      " != clamped external regret per round " + fr(per_round));
    check.require(per_round <= bound, "seed " + std::to_string(seed) +
                                          ": external regret per round " + fr(per_round) +
                                          " above 1/20");
  }
}

void criterion_swap_regret(Checker& check) {
  const NormalFormGame game = build_stop_light();
  LearnerSpec spec;
  spec.algo = LearnerAlgo::SwapRegret;
  const std::vector<LearnerSpec> specs(2, spec);
  const Rational bound(1, 20);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const LearnerTrace trace = run_self_play(game, specs, 100000, seed);
    const TraceCertificate cert = certify_trace(game, trace);
    const Rational per_round = cert.max_swap_regret / Rational(trace.rounds);
    check.require(cert.weighted_ce_eps == per_round,
                  "seed " + std::to_string(seed) + ": weighted ce epsilon " +
                      fr(cert.weighted_ce_eps) + " != swap regret per round " +
                      fr(per_round));
    check.require(per_round <= bound, "seed " + std::to_string(seed) +
                                          ": swap regret per round " + fr(per_round) +
                                          " above 1/20");
  }
}

void criterion_gradient_play(Checker& check) {
  const NormalFormGame game = build_stop_light();
  LearnerSpec spec;
  spec.algo = LearnerAlgo::Pgd;
  const std::vector<LearnerSpec> specs(2, spec);
  const Rational bound(1, 10);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LearnerTrace trace = run_self_play(game, specs, 10000, seed);
    const Rational eps = cce_epsilon(game, trace.empirical_distribution());
    check.require(eps <= bound, "seed " + std::to_string(seed) + ": cce_epsilon " + fr(eps) +
                                    " above 1/10");
  }
}

void criterion_program_games(Checker& check) {
  for (std::uint32_t depth = 1; depth <= 6; ++depth) {
    const Rational v = matching_pennies_exploit_value(depth);
    check.require(v == 1, "exploit value at depth " + std::to_string(depth) + " is " +
                              fr(v) + ", expected 1");
  }

  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();
  const ProgramStrategy a = make_conditional_cooperator(game, device, 2);
  const ProgramStrategy b = make_conditional_cooperator(game, device, 2);
  check.require(a.identity() == b.identity(), "two honest cooperators hash differently");
  for (std::uint32_t depth = 0; depth <= 6; ++depth) {
    for (std::size_t s = 0; s < device.signals.size(); ++s) {
      const ActionProfile played = execute_program_pair(a, b, device.signals[s], depth);
      check.require(played == device.recommendations[s],
                    "cooperators disobeyed signal " + device.signals[s] + " at depth " +
                        std::to_string(depth));
    }
  }
}

void criterion_perception(Checker& check) {
  const NormalFormGame game = build_stop_light();
  const SignalDevice device = build_stop_light_device();

  PerceptionMap attack = PerceptionMap::identity_map(1, device.signals.size());
  attack.mapping[device.signal_index("CS")] = device.signal_index("FS");
  const auto attacked = perception_attack_payoffs(game, device, attack);
  check.require(attacked[1] == Rational(9, 2),
                "attacker payoff " + fr(attacked[1]) + ", expected 9/2");
  check.require(attacked[1] > Rational(13, 3), "attack not profitable over 13/3");

  const auto honest = perception_attack_payoffs(
      game, device, PerceptionMap::identity_map(1, device.signals.size()));
  check.require(honest[0] == Rational(13, 3) && honest[1] == Rational(13, 3),
                "identity perception shifted payoffs to (" + fr(honest[0]) + ", " +
                    fr(honest[1]) + ")");
}

void criterion_shill_auction(Checker& check) {
  RngStream rng(20240817, 0);
  const double ticks[3] = {0.01, 0.5, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    AuctionScenario scenario;
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_u64() % 7);
    for (std::size_t i = 0; i < n; ++i) {
      scenario.bids.push_back(rng.next_in_range(0.0, 100.0));
    }
    scenario.tick = ticks[trial % 3];

    scenario.auctioneer = AuctioneerMode::Honest;
    const AuctionOutcome honest = run_auction(scenario);
    scenario.auctioneer = AuctioneerMode::Shill;
    const AuctionOutcome shill = run_auction(scenario);

    std::vector<double> sorted = scenario.bids;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(scenario.bids.begin(), scenario.bids.end()) -
        scenario.bids.begin());
    const double expected_extraction =
        std::max(0.0, (scenario.bids[top] - scenario.tick) - sorted[1]);

    check.require(honest.price == sorted[1],
                  "trial " + std::to_string(trial) + ": honest price != second highest bid");
    check.require(shill.winner == honest.winner && honest.winner == static_cast<int>(top),
                  "trial " + std::to_string(trial) + ": shill bid changed the winner");
    check.require(shill.extraction == expected_extraction,
                  "trial " + std::to_string(trial) + ": extraction " +
                      std::to_string(shill.extraction) + " != " +
                      std::to_string(expected_extraction));
    if (!check.ok()) return;
  }
}

void criterion_audit(Checker& check) {
  const std::vector<Rational> declared = {Rational(1, 3), Rational(1, 3), Rational(1, 6),
                                          Rational(1, 6)};
  const double threshold = default_audit_threshold(4);

  for (std::uint64_t n : {std::uint64_t{1}, std::uint64_t{10}, std::uint64_t{100}}) {
    const AuditReport report = audit_signals({n, 0, 0, 0}, declared, threshold);
    check.require(!report.deviation_proven,
                  "all-FS with n=" + std::to_string(n) + " flagged as proven deviation");
    check.require(report.g_statistic > 0.0,
                  "all-FS with n=" + std::to_string(n) + " produced G == 0");
  }

  const AuditReport matched = audit_signals({2, 2, 1, 1}, declared, threshold);
  check.require(matched.g_statistic == 0.0,
                "proportional counts gave G = " + std::to_string(matched.g_statistic));
  const AuditReport scaled = audit_signals({20, 20, 10, 10}, declared, threshold);
  check.require(scaled.g_statistic == 0.0, "scaled proportional counts gave nonzero G");
  const AuditReport off = audit_signals({21, 19, 10, 10}, declared, threshold);
  check.require(off.g_statistic > 0.0, "disproportional counts gave G == 0");
}

void criterion_reproducibility(Checker& check) {
  const std::vector<std::string> configs = {
      R"({"kind":"verify","game":"stop_light","device":"stop_light",
          "perception":{"player":1,"map":{"CS":"FS"}}})",
      R"({"kind":"learn","game":"stop_light","rounds":60,"seed":5,"repetitions":2})",
      R"({"kind":"bribe","game":"stop_light","device":"stop_light","colluder":1})",
      R"({"kind":"penalty","game":"stop_light","device":"stop_light"})",
      R"({"kind":"duel","game":"stop_light","device":"stop_light","depth":3,"fallback":"Stop"})",
      R"({"kind":"auction","random_bids":{"bidders":5,"low":0,"high":100},
          "seed":7,"repetitions":10})",
      R"({"kind":"audit","game":"stop_light","device":"stop_light","draws":2000,
          "policy":{"kind":"fixed_signal","signal":"FS"},"seed":3})",
  };
  for (const std::string& text : configs) {
    const ScenarioConfig config = parse_scenario(nlohmann::json::parse(text));
    RunReport first = run_scenario(config);
    RunReport second = run_scenario(config);
    first.document.erase("wall_clock_ms");
    second.document.erase("wall_clock_ms");
    const std::string kind = to_string(config.kind);
    check.require(first.document.dump() == second.document.dump(),
                  kind + " report changed between identical runs");
    check.require(first.csv == second.csv, kind + " CSV changed between identical runs");
  }
}

}  // namespace

int main() {
  criterion(1, "signal device admits no profitable unconditional deviation", 1.0,
            criterion_no_unconditional_gain);
  criterion(2, "coordinated driving pays 13/3 per driver", -1.0, criterion_expected_payoffs);
  criterion(3, "conditional deviation gap is exactly 1, peaked at Caution->Fast", -1.0,
            criterion_conditional_gap);
  criterion(4, "a bribed mediator forcing FS hands the colluder 7 (gain 8/3)", -1.0,
            criterion_bribery);
  criterion(5, "fine of 1 stabilizes the device across the whole penalty grid", 1.0,
            criterion_penalty_sweep);
  criterion(6, "regret matching certifies cce within 1/20 over 10 seeds", 10.0,
            criterion_regret_matching);
  criterion(7, "swap-regret play certifies weighted ce within 1/20 over 3 seeds", 60.0,
            criterion_swap_regret);
  criterion(8, "projected gradient play reaches cce 1/10 over 10 seeds", -1.0,
            criterion_gradient_play);
  criterion(9, "program simulation: exploit value 1 and honest cooperator handshakes", -1.0,
            criterion_program_games);
  criterion(10, "perception attack CS->FS lifts the attacker to exactly 9/2", -1.0,
            criterion_perception);
  criterion(11, "shill auction invariants hold on 1000 random bid vectors", -1.0,
            criterion_shill_auction);
  criterion(12, "signal audit separates proportional counts (G == 0) from skewed ones", -1.0,
            criterion_audit);
  criterion(13, "every scenario kind reruns to identical reports", -1.0,
            criterion_reproducibility);

  if (criteria_failed == 0) {
    std::cout << "all 13 criteria passed\n";
    return 0;
  }
  std::cout << criteria_failed << " of 13 criteria failed\n";
  return 1;
}
