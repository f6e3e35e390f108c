#include "clab/equilibrium.hpp"

#include <sstream>

#include "clab/errors.hpp"

namespace clab {

namespace {

void check_player(const NormalFormGame& game, int player) {
  if (player < 0 || player >= game.num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
}

void check_action(const NormalFormGame& game, int player, int action) {
  if (action < 0 || action >= game.num_actions(player)) {
    throw Error("action index " + std::to_string(action) + " out of range for player " +
                std::to_string(player));
  }
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string quoted = "\"";
  for (char c : raw) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

Rational unconditional_deviation_gain(const NormalFormGame& game,
                                      const JointDistribution& dist, int player,
                                      int action) {
  check_player(game, player);
  check_action(game, player, action);
  if (!dist.matches(game)) {
    throw InvalidProfileError("distribution shape does not match the game");
  }
  dist.require_normalized("unconditional_deviation_gain");
  Rational gain(0);
  for (const auto& [idx, w] : dist.entries()) {
    ActionProfile profile = dist.profile_at(idx);
    const Rational faithful = game.payoff(profile, player);
    profile.actions[player] = action;
    gain += w * (game.payoff(profile, player) - faithful);
  }
  return gain;
}

Rational recommendation_probability(const NormalFormGame& game, const SignalDevice& device,
                                    int player, int recommended) {
  device.validate(game);
  check_player(game, player);
  check_action(game, player, recommended);
  Rational total(0);
  for (std::size_t s = 0; s < device.signals.size(); ++s) {
    if (device.recommendations[s].actions[player] == recommended) {
      total += device.probabilities[s];
    }
  }
  return total;
}

Rational conditional_deviation_gain(const NormalFormGame& game, const SignalDevice& device,
                                    int player, int recommended, int alternative) {
  device.validate(game);
  check_player(game, player);
  check_action(game, player, recommended);
  check_action(game, player, alternative);
  Rational occurrence(0);
  Rational weighted_gain(0);
  for (std::size_t s = 0; s < device.signals.size(); ++s) {
    if (device.recommendations[s].actions[player] != recommended) continue;
    occurrence += device.probabilities[s];
    ActionProfile profile = device.recommendations[s];
    const Rational faithful = game.payoff(profile, player);
    profile.actions[player] = alternative;
    weighted_gain += device.probabilities[s] * (game.payoff(profile, player) - faithful);
  }
  if (occurrence == 0) {
    throw UndefinedConditionalError(
        "player " + std::to_string(player) + " is never recommended '" +
        game.action_label(player, recommended) + "'");
  }
  return weighted_gain / occurrence;
}

std::vector<DeviationReport> unconditional_deviations(const NormalFormGame& game,
                                                      const JointDistribution& dist) {
  std::vector<DeviationReport> reports;
  for (int p = 0; p < game.num_players(); ++p) {
    for (int a = 0; a < game.num_actions(p); ++a) {
      DeviationReport r;
      r.player = p;
      r.kind = DeviationKind::Unconditional;
      r.detail = game.action_label(p, a);
      r.gain = unconditional_deviation_gain(game, dist, p, a);
      r.occurrence_probability = 1;
      r.target = a;
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<DeviationReport> conditional_deviations(const NormalFormGame& game,
                                                    const SignalDevice& device) {
  device.validate(game);
  std::vector<DeviationReport> reports;
  for (int p = 0; p < game.num_players(); ++p) {
    for (int rec = 0; rec < game.num_actions(p); ++rec) {
      const Rational occurrence = recommendation_probability(game, device, p, rec);
      if (occurrence == 0) continue;
      for (int alt = 0; alt < game.num_actions(p); ++alt) {
        if (alt == rec) continue;
        DeviationReport r;
        r.player = p;
        r.kind = DeviationKind::Conditional;
        r.detail = game.action_label(p, rec) + "->" + game.action_label(p, alt);
        r.gain = conditional_deviation_gain(game, device, p, rec, alt);
        r.occurrence_probability = occurrence;
        r.recommended = rec;
        r.alternative = alt;
        reports.push_back(std::move(r));
      }
    }
  }
  return reports;
}

Rational cce_epsilon(const NormalFormGame& game, const JointDistribution& dist) {
  Rational worst(0);
  for (int p = 0; p < game.num_players(); ++p) {
    for (int a = 0; a < game.num_actions(p); ++a) {
      const Rational gain = unconditional_deviation_gain(game, dist, p, a);
      if (gain > worst) worst = gain;
    }
  }
  return worst;
}

Rational ce_epsilon(const NormalFormGame& game, const SignalDevice& device) {
  Rational worst(0);
  for (const DeviationReport& r : conditional_deviations(game, device)) {
    if (r.gain > worst) worst = r.gain;
  }
  return worst;
}

Rational swap_ce_epsilon(const NormalFormGame& game, const SignalDevice& device) {
  device.validate(game);
  Rational worst(0);
  for (int p = 0; p < game.num_players(); ++p) {
    Rational value(0);
    for (int rec = 0; rec < game.num_actions(p); ++rec) {
      const Rational occurrence = recommendation_probability(game, device, p, rec);
      if (occurrence == 0) continue;
      Rational best(0);  // alternative == rec contributes exactly 0
      for (int alt = 0; alt < game.num_actions(p); ++alt) {
        if (alt == rec) continue;
        const Rational gain = conditional_deviation_gain(game, device, p, rec, alt);
        if (gain > best) best = gain;
      }
      value += occurrence * best;
    }
    if (value > worst) worst = value;
  }
  return worst;
}

JointDistribution marginal_excluding(const NormalFormGame& game,
                                     const JointDistribution& dist, int player) {
  check_player(game, player);
  if (!dist.matches(game)) {
    throw InvalidProfileError("distribution shape does not match the game");
  }
  std::vector<int> shape;
  for (int p = 0; p < game.num_players(); ++p) {
    if (p != player) shape.push_back(game.num_actions(p));
  }
  if (shape.empty()) {
    throw Error("marginal_excluding: game has a single player");
  }
  JointDistribution marginal(shape);
  for (const auto& [idx, w] : dist.entries()) {
    ActionProfile full = dist.profile_at(idx);
    ActionProfile rest;
    for (int p = 0; p < game.num_players(); ++p) {
      if (p != player) rest.actions.push_back(full.actions[p]);
    }
    marginal.add_weight(rest, w);
  }
  return marginal;
}

BestResponse brute_force_best_response(const NormalFormGame& game, int player,
                                       const JointDistribution& others) {
  check_player(game, player);
  std::vector<int> expected_shape;
  for (int p = 0; p < game.num_players(); ++p) {
    if (p != player) expected_shape.push_back(game.num_actions(p));
  }
  if (others.shape() != expected_shape) {
    throw InvalidProfileError(
        "opponent distribution shape does not match the remaining players");
  }
  others.require_normalized("brute_force_best_response");

  BestResponse best;
  for (int a = 0; a < game.num_actions(player); ++a) {
    Rational value(0);
    for (const auto& [idx, w] : others.entries()) {
      ActionProfile rest = others.profile_at(idx);
      ActionProfile full;
      std::size_t r = 0;
      for (int p = 0; p < game.num_players(); ++p) {
        full.actions.push_back(p == player ? a : rest.actions[r++]);
      }
      value += w * game.payoff(full, player);
    }
    if (best.action < 0 || value > best.value) {
      best.action = a;
      best.value = value;
    }
  }
  return best;
}

std::string deviation_reports_to_csv(const std::vector<DeviationReport>& reports) {
  std::ostringstream os;
  os << "player,kind,detail,gain,occurrence_probability\n";
  for (const DeviationReport& r : reports) {
    os << r.player << ","
       << (r.kind == DeviationKind::Unconditional ? "unconditional" : "conditional") << ","
       << csv_field(r.detail) << "," << format_rational(r.gain) << ","
       << format_rational(r.occurrence_probability) << "\n";
  }
  return os.str();
}

nlohmann::json deviation_reports_to_json(const std::vector<DeviationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DeviationReport& r : reports) {
    nlohmann::json row;
    row["player"] = r.player;
    row["kind"] = r.kind == DeviationKind::Unconditional ? "unconditional" : "conditional";
    row["detail"] = r.detail;
    row["gain"] = format_rational(r.gain);
    row["gain_value"] = to_double(r.gain);
    row["occurrence_probability"] = format_rational(r.occurrence_probability);
    row["occurrence_value"] = to_double(r.occurrence_probability);
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace clab
