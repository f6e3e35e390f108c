#include "clab/mediation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "clab/errors.hpp"

namespace clab {

void SignalDevice::validate(const NormalFormGame& game) const {
  if (signals.empty()) throw ConfigError("device: needs at least one signal");
  if (probabilities.size() != signals.size() || recommendations.size() != signals.size()) {
    throw ConfigError("device: signals, probabilities and recommendations must align");
  }
  std::set<std::string> seen(signals.begin(), signals.end());
  if (seen.size() != signals.size()) {
    throw ConfigError("device: duplicate signal label");
  }
  Rational total(0);
  for (const Rational& p : probabilities) {
    if (p < 0) throw ConfigError("device: negative signal probability");
    total += p;
  }
  if (total != 1) {
    throw ConfigError("device: signal probabilities sum to " + format_rational(total) +
                      ", expected 1");
  }
  for (const auto& rec : recommendations) {
    if (!game.valid_profile(rec)) {
      throw ConfigError("device: recommendation is not a valid profile of the game");
    }
  }
}

int SignalDevice::signal_index(std::string_view label) const {
  for (std::size_t i = 0; i < signals.size(); ++i) {
    if (signals[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int SignalDevice::recommended_action(int signal, int player) const {
  if (signal < 0 || signal >= static_cast<int>(signals.size())) {
    throw Error("signal index " + std::to_string(signal) + " out of range");
  }
  const auto& rec = recommendations[signal].actions;
  if (player < 0 || player >= static_cast<int>(rec.size())) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
  return rec[player];
}

nlohmann::json SignalDevice::to_json(const NormalFormGame& game) const {
  validate(game);
  nlohmann::json doc;
  doc["signals"] = signals;
  nlohmann::json probs = nlohmann::json::array();
  for (const Rational& p : probabilities) probs.push_back(format_rational(p));
  doc["probabilities"] = probs;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : recommendations) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < game.num_players(); ++p) {
      row.push_back(game.action_label(p, rec.actions[p]));
    }
    recs.push_back(row);
  }
  doc["recommendations"] = recs;
  return doc;
}

SignalDevice SignalDevice::from_json(const nlohmann::json& doc, const NormalFormGame& game) {
  if (!doc.is_object()) throw ConfigError("device: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "signals" && key != "probabilities" && key != "recommendations") {
      throw ConfigError("device: unknown field '" + key + "'");
    }
  }
  if (!doc.contains("signals") || !doc.contains("probabilities") ||
      !doc.contains("recommendations")) {
    throw ConfigError("device: requires fields signals, probabilities, recommendations");
  }
  SignalDevice device;
  if (!doc["signals"].is_array()) throw ConfigError("device.signals: expected an array");
  for (const auto& s : doc["signals"]) {
    if (!s.is_string()) throw ConfigError("device.signals: labels must be strings");
    device.signals.push_back(s.get<std::string>());
  }
  if (!doc["probabilities"].is_array()) {
    throw ConfigError("device.probabilities: expected an array");
  }
  for (const auto& p : doc["probabilities"]) {
    if (!p.is_string()) {
      throw ConfigError("device.probabilities: values must be rational strings");
    }
    device.probabilities.push_back(parse_rational(p.get<std::string>()));
  }
  if (!doc["recommendations"].is_array()) {
    throw ConfigError("device.recommendations: expected an array");
  }
  for (const auto& row : doc["recommendations"]) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(game.num_players())) {
      throw ConfigError("device.recommendations: each entry needs one action per player");
    }
    ActionProfile rec;
    for (int p = 0; p < game.num_players(); ++p) {
      if (!row[p].is_string()) {
        throw ConfigError("device.recommendations: actions must be labels");
      }
      rec.actions.push_back(game.action_index(p, row[p].get<std::string>()));
    }
    device.recommendations.push_back(std::move(rec));
  }
  device.validate(game);
  return device;
}

SignalDevice build_stop_light_device() {
  // The binding convention is the recommendation table, not the label text:
  // under FS the row driver is told Stop and the column driver Fast, and so
  // on down the list.
  SignalDevice device;
  device.signals = {"FS", "SF", "SC", "CS"};
  device.probabilities = {Rational(1, 3), Rational(1, 3), Rational(1, 6), Rational(1, 6)};
  const int fast = 0, caution = 1, stop = 2;
  device.recommendations = {
      ActionProfile{stop, fast},     // FS
      ActionProfile{fast, stop},     // SF
      ActionProfile{caution, stop},  // SC
      ActionProfile{stop, caution},  // CS
  };
  return device;
}

MediatorPolicy MediatorPolicy::honest() {
  return MediatorPolicy{};
}

MediatorPolicy MediatorPolicy::fixed_signal(int signal) {
  MediatorPolicy policy;
  policy.kind = Kind::FixedSignal;
  policy.signal = signal;
  return policy;
}

MediatorPolicy MediatorPolicy::reweighted(std::vector<Rational> weights) {
  MediatorPolicy policy;
  policy.kind = Kind::Reweighted;
  policy.weights = std::move(weights);
  return policy;
}

SignalDevice apply_mediator_policy(const SignalDevice& device, const MediatorPolicy& policy) {
  switch (policy.kind) {
    case MediatorPolicy::Kind::Honest:
      return device;
    case MediatorPolicy::Kind::FixedSignal: {
      if (policy.signal < 0 || policy.signal >= static_cast<int>(device.signals.size())) {
        throw InvalidScenarioError("mediator policy: fixed signal index out of range");
      }
      SignalDevice out = device;
      for (auto& p : out.probabilities) p = 0;
      out.probabilities[policy.signal] = 1;
      return out;
    }
    case MediatorPolicy::Kind::Reweighted: {
      if (policy.weights.size() != device.signals.size()) {
        throw InvalidScenarioError(
            "mediator policy: reweighting needs one weight per signal");
      }
      Rational total(0);
      for (const Rational& w : policy.weights) {
        if (w < 0) throw InvalidScenarioError("mediator policy: negative weight");
        total += w;
      }
      if (total != 1) {
        throw InvalidScenarioError("mediator policy: weights sum to " +
                                   format_rational(total) + ", expected 1");
      }
      SignalDevice out = device;
      out.probabilities = policy.weights;
      return out;
    }
  }
  throw Error("unreachable mediator policy kind");
}

int sample_signal(const SignalDevice& device, RngStream& rng) {
  std::vector<double> weights;
  weights.reserve(device.probabilities.size());
  for (const Rational& p : device.probabilities) weights.push_back(to_double(p));
  return rng.sample_index(weights);
}

JointDistribution outcome_distribution(const NormalFormGame& game,
                                       const SignalDevice& device) {
  device.validate(game);
  JointDistribution dist(game.shape());
  for (std::size_t s = 0; s < device.signals.size(); ++s) {
    dist.add_weight(device.recommendations[s], device.probabilities[s]);
  }
  return dist;
}

BribeOutcome optimal_bribe(const NormalFormGame& game, const SignalDevice& device,
                           int colluding_player) {
  device.validate(game);
  if (colluding_player < 0 || colluding_player >= game.num_players()) {
    throw Error("colluding player index out of range");
  }
  BribeOutcome out;
  out.honest_payoff =
      expected_payoff(game, outcome_distribution(game, device), colluding_player);
  // Expected payoff of any reweighting is a convex combination of the
  // per-signal obedient payoffs, so a best fixed signal is optimal over all
  // corrupt policies on this signal set. Ties resolve to the lowest index.
  for (std::size_t s = 0; s < device.signals.size(); ++s) {
    const Rational v = game.payoff(device.recommendations[s], colluding_player);
    if (out.signal < 0 || v > out.colluder_payoff) {
      out.signal = static_cast<int>(s);
      out.colluder_payoff = v;
    }
  }
  out.player_gain = out.colluder_payoff - out.honest_payoff;
  out.mediator_surplus_bound = out.player_gain;
  return out;
}

void AuctionScenario::validate() const {
  if (bids.size() < 2) {
    throw InvalidScenarioError("auction: needs at least two bids");
  }
  for (double b : bids) {
    if (!std::isfinite(b) || b < 0.0) {
      throw InvalidScenarioError("auction: bids must be finite and nonnegative");
    }
  }
  if (!(tick > 0.0) || !std::isfinite(tick)) {
    throw InvalidScenarioError("auction: tick must be positive");
  }
}

AuctionOutcome run_auction(const AuctionScenario& scenario) {
  scenario.validate();
  const auto& bids = scenario.bids;
  std::size_t top = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    if (bids[i] > bids[top]) top = i;
  }
  double second = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i != top && bids[i] > second) second = bids[i];
  }
  AuctionOutcome out;
  out.winner = static_cast<int>(top);
  out.honest_price = second;
  if (scenario.auctioneer == AuctioneerMode::Shill) {
    // The shill bid sits one tick below the top bid; the price is whichever
    // of it and the true runner-up is higher. The winner never changes.
    out.price = std::max(second, bids[top] - scenario.tick);
  } else {
    out.price = second;
  }
  out.extraction = out.price - out.honest_price;
  return out;
}

AuditReport audit_signals(const std::vector<std::uint64_t>& observed,
                          const std::vector<Rational>& declared, double threshold) {
  if (observed.size() != declared.size()) {
    throw ConfigError("audit: observed counts and declared distribution must align");
  }
  if (observed.empty()) throw ConfigError("audit: empty signal set");
  Rational total_p(0);
  for (const Rational& p : declared) {
    if (p < 0) throw ConfigError("audit: negative declared probability");
    total_p += p;
  }
  if (total_p != 1) {
    throw ConfigError("audit: declared probabilities sum to " + format_rational(total_p) +
                      ", expected 1");
  }
  std::uint64_t n = 0;
  for (std::uint64_t c : observed) n += c;
  if (n == 0) throw ConfigError("audit: no observations");

  AuditReport report;
  report.observed = observed;
  report.declared = declared;
  report.threshold = threshold;

  double g = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == 0) continue;
    if (declared[i] == 0) {
      report.deviation_proven = true;
      g = std::numeric_limits<double>::infinity();
      break;
    }
    // Skip exactly matching cells (O_i == n * p_i as rationals) so that a
    // perfectly proportional sample yields G == 0 exactly.
    const Rational expected = Rational(observed[i]) / (Rational(n) * declared[i]);
    if (expected == 1) continue;
    g += 2.0 * static_cast<double>(observed[i]) * std::log(to_double(expected));
  }
  report.g_statistic = g;
  report.suspicious = g > threshold;
  return report;
}

double default_audit_threshold(std::size_t n_signals) {
  if (n_signals < 2) {
    throw ConfigError("audit threshold: needs at least two signals");
  }
  boost::math::chi_squared_distribution<double> chi(static_cast<double>(n_signals - 1));
  return boost::math::quantile(chi, 0.99);
}

}  // namespace clab
