#include "clab/commitment.hpp"

#include <cstdio>

#include "clab/errors.hpp"

namespace clab {

Rational penalized_conditional_gain(const NormalFormGame& game, const PenaltyDevice& device,
                                    int player, int recommended, int alternative) {
  if (device.penalty < 0) throw Error("penalty must be nonnegative");
  if (alternative == recommended) return Rational(0);
  return conditional_deviation_gain(game, device.base, player, recommended, alternative) -
         device.penalty;
}

Rational max_penalized_gain(const NormalFormGame& game, const PenaltyDevice& device) {
  if (device.penalty < 0) throw Error("penalty must be nonnegative");
  const auto reports = conditional_deviations(game, device.base);
  if (reports.empty()) {
    throw Error("device admits no conditional deviations to evaluate");
  }
  bool first = true;
  Rational worst(0);
  for (const DeviationReport& r : reports) {
    const Rational net = r.gain - device.penalty;
    if (first || net > worst) {
      worst = net;
      first = false;
    }
  }
  return worst;
}

Rational penalized_ce_epsilon(const NormalFormGame& game, const PenaltyDevice& device) {
  const Rational worst = max_penalized_gain(game, device);
  return worst > 0 ? worst : Rational(0);
}

Rational minimal_stabilizing_penalty(const NormalFormGame& game,
                                     const SignalDevice& device) {
  Rational worst(0);
  for (const DeviationReport& r : conditional_deviations(game, device)) {
    if (r.gain > worst) worst = r.gain;
  }
  return worst;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_clause(const ProgramClause& c) {
  std::string s = "seat=";
  s += c.seat ? std::to_string(*c.seat) : "*";
  s += ";sig=";
  switch (c.signal_test) {
    case ProgramClause::SignalTest::Any: s += "*"; break;
    case ProgramClause::SignalTest::Absent: s += "!"; break;
    case ProgramClause::SignalTest::Equals: s += "=" + c.signal; break;
  }
  s += ";id=";
  s += c.identity_match ? (*c.identity_match ? "1" : "0") : "*";
  s += ";sim=";
  switch (c.sim_test) {
    case ProgramClause::SimTest::Any: s += "*"; break;
    case ProgramClause::SimTest::Unavailable: s += "!"; break;
    case ProgramClause::SimTest::Equals: s += "=" + std::to_string(c.sim_action); break;
  }
  s += ";act=" + std::to_string(c.action);
  return s;
}

}  // namespace

std::string ProgramStrategy::identity() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, "default=" + std::to_string(default_action));
  for (const ProgramClause& c : clauses) {
    h = fnv1a(h, "|" + canonical_clause(c));
  }
  char buf[2 + 16 + 1];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

bool clause_fires(const ProgramClause& c, int seat, const std::optional<std::string>& signal,
                  bool id_match, const std::optional<int>& sim) {
  if (c.seat && *c.seat != seat) return false;
  switch (c.signal_test) {
    case ProgramClause::SignalTest::Any: break;
    case ProgramClause::SignalTest::Absent:
      if (signal) return false;
      break;
    case ProgramClause::SignalTest::Equals:
      if (!signal || *signal != c.signal) return false;
      break;
  }
  if (c.identity_match && *c.identity_match != id_match) return false;
  switch (c.sim_test) {
    case ProgramClause::SimTest::Any: break;
    case ProgramClause::SimTest::Unavailable:
      if (sim) return false;
      break;
    case ProgramClause::SimTest::Equals:
      if (!sim || *sim != c.sim_action) return false;
      break;
  }
  return true;
}

int evaluate_program(const ProgramStrategy& self, const ProgramStrategy& other, int seat,
                     const std::optional<std::string>& signal, std::uint32_t depth) {
  const std::uint32_t effective = std::min(depth, self.depth_budget);
  const bool id_match =
      self.expected_opponent.has_value() && *self.expected_opponent == other.identity();
  std::optional<int> sim;
  if (effective > 0) {
    // The opponent is simulated with one level less to spend; its own budget
    // caps it further. Strictly decreasing depth guarantees termination.
    sim = evaluate_program(other, self, 1 - seat, signal, effective - 1);
  }
  for (const ProgramClause& c : self.clauses) {
    if (clause_fires(c, seat, signal, id_match, sim)) return c.action;
  }
  return self.default_action;
}

}  // namespace

ActionProfile execute_program_pair(const ProgramStrategy& row, const ProgramStrategy& col,
                                   const std::optional<std::string>& signal,
                                   std::uint32_t depth) {
  ActionProfile profile;
  profile.actions.push_back(evaluate_program(row, col, 0, signal, depth));
  profile.actions.push_back(evaluate_program(col, row, 1, signal, depth));
  return profile;
}

ProgramStrategy make_fixed_action_program(const std::string& name, int action) {
  if (action < 0) throw Error("fixed program action must be nonnegative");
  ProgramStrategy prog;
  prog.name = name;
  prog.default_action = action;
  return prog;
}

ProgramStrategy make_naive_matcher(int n_actions) {
  if (n_actions < 1) throw Error("matcher needs at least one action");
  ProgramStrategy prog;
  prog.name = "naive_matcher";
  prog.default_action = 0;
  prog.depth_budget = 1;
  for (int a = 0; a < n_actions; ++a) {
    ProgramClause c;
    c.sim_test = ProgramClause::SimTest::Equals;
    c.sim_action = a;
    c.action = a;
    prog.clauses.push_back(c);
  }
  return prog;
}

ProgramStrategy make_anti_matcher(int n_actions) {
  if (n_actions < 1) throw Error("anti-matcher needs at least one action");
  ProgramStrategy prog;
  prog.name = "anti_matcher";
  prog.default_action = 0;
  prog.depth_budget = UINT32_MAX;
  for (int a = 0; a < n_actions; ++a) {
    ProgramClause c;
    c.sim_test = ProgramClause::SimTest::Equals;
    c.sim_action = a;
    c.action = (a + 1) % n_actions;
    prog.clauses.push_back(c);
  }
  return prog;
}

ProgramStrategy make_conditional_cooperator(const NormalFormGame& game,
                                            const SignalDevice& device,
                                            int fallback_action) {
  device.validate(game);
  if (game.num_players() != 2) {
    throw Error("conditional cooperator is defined for two-player games");
  }
  ProgramStrategy prog;
  prog.name = "conditional_cooperator";
  prog.default_action = fallback_action;
  prog.depth_budget = 0;
  // One row per (seat, signal): obey the recommendation for that seat, but
  // only against a verified copy. Both seats share this one table, so both
  // copies hash identically.
  for (int seat = 0; seat < 2; ++seat) {
    for (std::size_t s = 0; s < device.signals.size(); ++s) {
      ProgramClause c;
      c.seat = seat;
      c.signal_test = ProgramClause::SignalTest::Equals;
      c.signal = device.signals[s];
      c.identity_match = true;
      c.action = device.recommendations[s].actions[seat];
      prog.clauses.push_back(c);
    }
  }
  prog.expected_opponent = prog.identity();
  return prog;
}

std::vector<ProgramStrategy> builtin_program_corpus(
    const NormalFormGame& game, const std::optional<SignalDevice>& device,
    int fallback_action) {
  if (game.num_players() != 2) {
    throw Error("program duels are defined for two-player games");
  }
  if (game.num_actions(0) != game.num_actions(1)) {
    throw Error("program duels need both players to share an action count");
  }
  const int n = game.num_actions(0);
  std::vector<ProgramStrategy> corpus;
  for (int a = 0; a < n; ++a) {
    corpus.push_back(make_fixed_action_program("always_" + game.action_label(0, a), a));
  }
  corpus.push_back(make_naive_matcher(n));
  corpus.push_back(make_anti_matcher(n));
  if (device) {
    corpus.push_back(make_conditional_cooperator(game, *device, fallback_action));
  }
  return corpus;
}

Rational matching_pennies_exploit_value(std::uint32_t depth) {
  if (depth < 1) {
    throw Error("exploit value needs at least one level of simulation");
  }
  const NormalFormGame game = build_matching_pennies();
  const ProgramStrategy matcher = make_naive_matcher(2);
  const ProgramStrategy anti = make_anti_matcher(2);
  const ActionProfile profile = execute_program_pair(matcher, anti, std::nullopt, depth);
  return game.payoff(profile, 1);
}

namespace {

const char* clause_key_seat = "seat";
const char* clause_key_signal = "signal";
const char* clause_key_no_signal = "requires_no_signal";
const char* clause_key_identity = "identity_match";
const char* clause_key_sim = "sim_action";
const char* clause_key_sim_unavail = "sim_unavailable";
const char* clause_key_action = "action";

nlohmann::json clause_to_json(const ProgramClause& c) {
  nlohmann::json row;
  if (c.seat) row[clause_key_seat] = *c.seat;
  if (c.signal_test == ProgramClause::SignalTest::Equals) row[clause_key_signal] = c.signal;
  if (c.signal_test == ProgramClause::SignalTest::Absent) row[clause_key_no_signal] = true;
  if (c.identity_match) row[clause_key_identity] = *c.identity_match;
  if (c.sim_test == ProgramClause::SimTest::Equals) row[clause_key_sim] = c.sim_action;
  if (c.sim_test == ProgramClause::SimTest::Unavailable) row[clause_key_sim_unavail] = true;
  row[clause_key_action] = c.action;
  return row;
}

ProgramClause clause_from_json(const nlohmann::json& row) {
  if (!row.is_object()) throw ConfigError("program clause: expected an object");
  ProgramClause c;
  for (const auto& [key, value] : row.items()) {
    if (key == clause_key_seat) {
      if (!value.is_number_integer()) throw ConfigError("program clause: seat must be an integer");
      c.seat = value.get<int>();
    } else if (key == clause_key_signal) {
      if (!value.is_string()) throw ConfigError("program clause: signal must be a string");
      c.signal_test = ProgramClause::SignalTest::Equals;
      c.signal = value.get<std::string>();
    } else if (key == clause_key_no_signal) {
      if (!value.is_boolean() || !value.get<bool>()) {
        throw ConfigError("program clause: requires_no_signal must be true when present");
      }
      c.signal_test = ProgramClause::SignalTest::Absent;
    } else if (key == clause_key_identity) {
      if (!value.is_boolean()) {
        throw ConfigError("program clause: identity_match must be a boolean");
      }
      c.identity_match = value.get<bool>();
    } else if (key == clause_key_sim) {
      if (!value.is_number_integer()) {
        throw ConfigError("program clause: sim_action must be an integer");
      }
      c.sim_test = ProgramClause::SimTest::Equals;
      c.sim_action = value.get<int>();
    } else if (key == clause_key_sim_unavail) {
      if (!value.is_boolean() || !value.get<bool>()) {
        throw ConfigError("program clause: sim_unavailable must be true when present");
      }
      c.sim_test = ProgramClause::SimTest::Unavailable;
    } else if (key == clause_key_action) {
      if (!value.is_number_integer()) {
        throw ConfigError("program clause: action must be an integer");
      }
      c.action = value.get<int>();
    } else {
      throw ConfigError("program clause: unknown field '" + key + "'");
    }
  }
  if (!row.contains(clause_key_action)) {
    throw ConfigError("program clause: missing field 'action'");
  }
  if (row.contains(clause_key_signal) && row.contains(clause_key_no_signal)) {
    throw ConfigError("program clause: signal and requires_no_signal conflict");
  }
  if (row.contains(clause_key_sim) && row.contains(clause_key_sim_unavail)) {
    throw ConfigError("program clause: sim_action and sim_unavailable conflict");
  }
  return c;
}

}  // namespace

nlohmann::json ProgramStrategy::to_json() const {
  nlohmann::json doc;
  doc["name"] = name;
  doc["default_action"] = default_action;
  doc["depth_budget"] = depth_budget;
  nlohmann::json rows = nlohmann::json::array();
  for (const ProgramClause& c : clauses) rows.push_back(clause_to_json(c));
  doc["clauses"] = rows;
  if (expected_opponent) doc["expected_opponent"] = *expected_opponent;
  doc["identity"] = identity();
  return doc;
}

ProgramStrategy ProgramStrategy::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("program: expected a JSON object");
  ProgramStrategy prog;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name") {
      if (!value.is_string()) throw ConfigError("program.name: expected a string");
      prog.name = value.get<std::string>();
    } else if (key == "default_action") {
      if (!value.is_number_integer()) {
        throw ConfigError("program.default_action: expected an integer");
      }
      prog.default_action = value.get<int>();
    } else if (key == "depth_budget") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) {
        throw ConfigError("program.depth_budget: expected a nonnegative integer");
      }
      const auto budget = value.get<std::int64_t>();
      if (budget < 0 || budget > static_cast<std::int64_t>(UINT32_MAX)) {
        throw ConfigError("program.depth_budget: out of range");
      }
      prog.depth_budget = static_cast<std::uint32_t>(budget);
    } else if (key == "clauses") {
      if (!value.is_array()) throw ConfigError("program.clauses: expected an array");
      for (const auto& row : value) prog.clauses.push_back(clause_from_json(row));
    } else if (key == "expected_opponent") {
      if (!value.is_string()) {
        throw ConfigError("program.expected_opponent: expected a string");
      }
      prog.expected_opponent = value.get<std::string>();
    } else if (key == "identity") {
      // Informational on output; ignored on input so documents round-trip.
      if (!value.is_string()) throw ConfigError("program.identity: expected a string");
    } else {
      throw ConfigError("program: unknown field '" + key + "'");
    }
  }
  return prog;
}

PerceptionMap PerceptionMap::identity_map(int player, std::size_t n_signals) {
  PerceptionMap m;
  m.player = player;
  m.mapping.resize(n_signals);
  for (std::size_t s = 0; s < n_signals; ++s) m.mapping[s] = static_cast<int>(s);
  return m;
}

void PerceptionMap::validate(const SignalDevice& device) const {
  if (mapping.size() != device.signals.size()) {
    throw InvalidScenarioError("perception map: needs one entry per signal");
  }
  for (int target : mapping) {
    if (target < 0 || target >= static_cast<int>(device.signals.size())) {
      throw InvalidScenarioError("perception map: target signal out of range");
    }
  }
}

std::vector<Rational> perception_attack_payoffs(const NormalFormGame& game,
                                                const SignalDevice& device,
                                                const PerceptionMap& perception) {
  device.validate(game);
  perception.validate(device);
  if (perception.player < 0 || perception.player >= game.num_players()) {
    throw Error("perception map: player index out of range");
  }
  std::vector<Rational> totals(static_cast<std::size_t>(game.num_players()), Rational(0));
  for (std::size_t s = 0; s < device.signals.size(); ++s) {
    ActionProfile played = device.recommendations[s];
    const int misread = perception.mapping[s];
    played.actions[perception.player] =
        device.recommendations[misread].actions[perception.player];
    for (int p = 0; p < game.num_players(); ++p) {
      totals[p] += device.probabilities[s] * game.payoff(played, p);
    }
  }
  return totals;
}

}  // namespace clab
