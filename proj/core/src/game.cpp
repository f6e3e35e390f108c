#include "clab/game.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "clab/errors.hpp"

namespace clab {

namespace {

std::vector<std::size_t> compute_strides(const std::vector<int>& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (int p = static_cast<int>(shape.size()) - 2; p >= 0; --p) {
    strides[p] = strides[p + 1] * static_cast<std::size_t>(shape[p + 1]);
  }
  return strides;
}

std::string profile_to_string(const ActionProfile& profile) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < profile.actions.size(); ++i) {
    if (i) os << ",";
    os << profile.actions[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

NormalFormGame::NormalFormGame(std::vector<std::vector<std::string>> labels,
                               std::vector<std::vector<Rational>> payoff_tensor)
    : labels_(std::move(labels)), payoffs_(std::move(payoff_tensor)) {
  if (labels_.empty()) throw ConfigError("game needs at least one player");
  std::size_t expected = 1;
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    const auto& acts = labels_[p];
    if (acts.empty()) {
      throw ConfigError("player " + std::to_string(p) + " has no actions");
    }
    std::set<std::string> seen(acts.begin(), acts.end());
    if (seen.size() != acts.size()) {
      throw ConfigError("duplicate action label for player " + std::to_string(p));
    }
    expected *= acts.size();
  }
  if (payoffs_.size() != expected) {
    throw ConfigError("payoff tensor has " + std::to_string(payoffs_.size()) +
                      " entries, expected " + std::to_string(expected));
  }
  for (const auto& cell : payoffs_) {
    if (cell.size() != labels_.size()) {
      throw ConfigError("payoff cell does not list one value per player");
    }
  }
  std::vector<int> shp;
  shp.reserve(labels_.size());
  for (const auto& acts : labels_) shp.push_back(static_cast<int>(acts.size()));
  strides_ = compute_strides(shp);
}

int NormalFormGame::num_actions(int player) const {
  if (player < 0 || player >= num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
  return static_cast<int>(labels_[player].size());
}

std::vector<int> NormalFormGame::shape() const {
  std::vector<int> s;
  s.reserve(labels_.size());
  for (const auto& acts : labels_) s.push_back(static_cast<int>(acts.size()));
  return s;
}

const std::vector<std::string>& NormalFormGame::action_labels(int player) const {
  num_actions(player);  // range check
  return labels_[player];
}

const std::string& NormalFormGame::action_label(int player, int action) const {
  if (action < 0 || action >= num_actions(player)) {
    throw Error("action index " + std::to_string(action) + " out of range for player " +
                std::to_string(player));
  }
  return labels_[player][action];
}

int NormalFormGame::action_index(int player, std::string_view label) const {
  const auto& acts = action_labels(player);
  for (std::size_t i = 0; i < acts.size(); ++i) {
    if (acts[i] == label) return static_cast<int>(i);
  }
  throw ConfigError("unknown action '" + std::string(label) + "' for player " +
                    std::to_string(player));
}

bool NormalFormGame::valid_profile(const ActionProfile& profile) const {
  if (profile.actions.size() != labels_.size()) return false;
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    if (profile.actions[p] < 0 ||
        profile.actions[p] >= static_cast<int>(labels_[p].size())) {
      return false;
    }
  }
  return true;
}

std::size_t NormalFormGame::profile_index(const ActionProfile& profile) const {
  if (!valid_profile(profile)) {
    throw InvalidProfileError("profile " + profile_to_string(profile) +
                              " does not fit this game");
  }
  std::size_t idx = 0;
  for (std::size_t p = 0; p < strides_.size(); ++p) {
    idx += static_cast<std::size_t>(profile.actions[p]) * strides_[p];
  }
  return idx;
}

ActionProfile NormalFormGame::profile_at(std::size_t index) const {
  if (index >= payoffs_.size()) {
    throw InvalidProfileError("profile index " + std::to_string(index) + " out of range");
  }
  ActionProfile profile;
  profile.actions.resize(labels_.size());
  for (std::size_t p = 0; p < strides_.size(); ++p) {
    profile.actions[p] = static_cast<int>(index / strides_[p]);
    index %= strides_[p];
  }
  return profile;
}

const std::vector<Rational>& NormalFormGame::payoffs_at(const ActionProfile& profile) const {
  return payoffs_[profile_index(profile)];
}

const Rational& NormalFormGame::payoff(const ActionProfile& profile, int player) const {
  if (player < 0 || player >= num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
  return payoffs_[profile_index(profile)][player];
}

NormalFormGame NormalFormGame::scaled(const Rational& c) const {
  if (c <= 0) throw Error("payoff scale must be positive");
  auto tensor = payoffs_;
  for (auto& cell : tensor) {
    for (auto& v : cell) v *= c;
  }
  return NormalFormGame(labels_, std::move(tensor));
}

namespace {

// The serialized payoff tensor nests one array level per player, innermost
// arrays holding one rational string per player.
nlohmann::json payoffs_to_json(const NormalFormGame& game, std::vector<int>& prefix) {
  const int player = static_cast<int>(prefix.size());
  if (player == game.num_players()) {
    ActionProfile profile(prefix);
    nlohmann::json cell = nlohmann::json::array();
    for (const Rational& v : game.payoffs_at(profile)) {
      cell.push_back(format_rational(v));
    }
    return cell;
  }
  nlohmann::json level = nlohmann::json::array();
  for (int a = 0; a < game.num_actions(player); ++a) {
    prefix.push_back(a);
    level.push_back(payoffs_to_json(game, prefix));
    prefix.pop_back();
  }
  return level;
}

void payoffs_from_json(const nlohmann::json& node, const std::vector<int>& shape,
                       std::vector<int>& prefix,
                       std::vector<std::vector<Rational>>& tensor,
                       const std::vector<std::size_t>& strides) {
  const std::size_t player = prefix.size();
  if (!node.is_array()) {
    throw ConfigError("payoffs: expected an array at depth " + std::to_string(player));
  }
  if (player == shape.size()) {
    throw ConfigError("payoffs: nesting deeper than the player count");
  }
  if (player + 1 == shape.size()) {
    // node is the row for the last player: each element is a payoff cell.
    if (node.size() != static_cast<std::size_t>(shape[player])) {
      throw ConfigError("payoffs: wrong arity at depth " + std::to_string(player));
    }
    for (int a = 0; a < shape[player]; ++a) {
      const auto& cell = node[a];
      if (!cell.is_array() || cell.size() != shape.size()) {
        throw ConfigError("payoffs: each cell must list one value per player");
      }
      std::size_t idx = 0;
      for (std::size_t p = 0; p < prefix.size(); ++p) {
        idx += static_cast<std::size_t>(prefix[p]) * strides[p];
      }
      idx += static_cast<std::size_t>(a) * strides[player];
      std::vector<Rational> values;
      values.reserve(shape.size());
      for (const auto& v : cell) {
        if (!v.is_string()) {
          throw ConfigError("payoffs: values must be rational strings like \"21/10\"");
        }
        values.push_back(parse_rational(v.get<std::string>()));
      }
      tensor[idx] = std::move(values);
    }
    return;
  }
  if (node.size() != static_cast<std::size_t>(shape[player])) {
    throw ConfigError("payoffs: wrong arity at depth " + std::to_string(player));
  }
  for (int a = 0; a < shape[player]; ++a) {
    prefix.push_back(a);
    payoffs_from_json(node[a], shape, prefix, tensor, strides);
    prefix.pop_back();
  }
}

}  // namespace

nlohmann::json NormalFormGame::to_json() const {
  nlohmann::json doc;
  doc["players"] = num_players();
  doc["actions"] = labels_;
  std::vector<int> prefix;
  doc["payoffs"] = payoffs_to_json(*this, prefix);
  return doc;
}

NormalFormGame NormalFormGame::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("game: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "players" && key != "actions" && key != "payoffs") {
      throw ConfigError("game: unknown field '" + key + "'");
    }
  }
  if (!doc.contains("players") || !doc.contains("actions") || !doc.contains("payoffs")) {
    throw ConfigError("game: requires fields players, actions, payoffs");
  }
  if (!doc["players"].is_number_integer()) {
    throw ConfigError("game.players: expected an integer");
  }
  const int n = doc["players"].get<int>();
  if (n < 1) throw ConfigError("game.players: must be at least 1");
  if (!doc["actions"].is_array() || doc["actions"].size() != static_cast<std::size_t>(n)) {
    throw ConfigError("game.actions: expected one label array per player");
  }
  std::vector<std::vector<std::string>> labels;
  for (const auto& arr : doc["actions"]) {
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError("game.actions: each player needs a nonempty label array");
    }
    std::vector<std::string> acts;
    for (const auto& lab : arr) {
      if (!lab.is_string()) throw ConfigError("game.actions: labels must be strings");
      acts.push_back(lab.get<std::string>());
    }
    labels.push_back(std::move(acts));
  }
  std::vector<int> shape;
  std::size_t total = 1;
  for (const auto& acts : labels) {
    shape.push_back(static_cast<int>(acts.size()));
    total *= acts.size();
  }
  std::vector<std::vector<Rational>> tensor(total);
  std::vector<int> prefix;
  payoffs_from_json(doc["payoffs"], shape, prefix, tensor, compute_strides(shape));
  return NormalFormGame(std::move(labels), std::move(tensor));
}

JointDistribution::JointDistribution(std::vector<int> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw Error("joint distribution needs a nonempty shape");
  for (int n : shape_) {
    if (n < 1) throw Error("joint distribution shape entries must be positive");
  }
  strides_ = compute_strides(shape_);
}

JointDistribution JointDistribution::point_mass(const NormalFormGame& game,
                                                const ActionProfile& profile) {
  JointDistribution dist(game.shape());
  game.profile_index(profile);  // validates
  dist.set_weight(profile, Rational(1));
  return dist;
}

JointDistribution JointDistribution::uniform(const NormalFormGame& game) {
  JointDistribution dist(game.shape());
  const std::size_t n = game.num_profiles();
  const Rational w(1, static_cast<unsigned long>(n));
  for (std::size_t i = 0; i < n; ++i) {
    dist.weights_[i] = w;
  }
  return dist;
}

bool JointDistribution::matches(const NormalFormGame& game) const {
  return shape_ == game.shape();
}

std::size_t JointDistribution::profile_index(const ActionProfile& profile) const {
  if (profile.actions.size() != shape_.size()) {
    throw InvalidProfileError("profile " + profile_to_string(profile) +
                              " does not fit this distribution");
  }
  std::size_t idx = 0;
  for (std::size_t p = 0; p < shape_.size(); ++p) {
    if (profile.actions[p] < 0 || profile.actions[p] >= shape_[p]) {
      throw InvalidProfileError("profile " + profile_to_string(profile) +
                                " does not fit this distribution");
    }
    idx += static_cast<std::size_t>(profile.actions[p]) * strides_[p];
  }
  return idx;
}

ActionProfile JointDistribution::profile_at(std::size_t index) const {
  ActionProfile profile;
  profile.actions.resize(shape_.size());
  for (std::size_t p = 0; p < shape_.size(); ++p) {
    profile.actions[p] = static_cast<int>(index / strides_[p]);
    index %= strides_[p];
  }
  return profile;
}

void JointDistribution::set_weight(const ActionProfile& profile, const Rational& w) {
  if (w < 0) throw Error("distribution weights must be nonnegative");
  const std::size_t idx = profile_index(profile);
  if (w == 0) {
    weights_.erase(idx);
  } else {
    weights_[idx] = w;
  }
}

void JointDistribution::add_weight(const ActionProfile& profile, const Rational& w) {
  if (w < 0) throw Error("distribution weights must be nonnegative");
  if (w == 0) return;
  weights_[profile_index(profile)] += w;
}

Rational JointDistribution::weight(const ActionProfile& profile) const {
  auto it = weights_.find(profile_index(profile));
  return it == weights_.end() ? Rational(0) : it->second;
}

Rational JointDistribution::total_weight() const {
  Rational total(0);
  for (const auto& [idx, w] : weights_) {
    (void)idx;
    total += w;
  }
  return total;
}

void JointDistribution::require_normalized(std::string_view context) const {
  if (!is_normalized()) {
    throw Error(std::string(context) + ": distribution weights must sum to exactly 1, got " +
                format_rational(total_weight()));
  }
}

Rational expected_payoff(const NormalFormGame& game, const JointDistribution& dist,
                         int player) {
  if (player < 0 || player >= game.num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
  if (!dist.matches(game)) {
    throw InvalidProfileError("distribution shape does not match the game");
  }
  dist.require_normalized("expected_payoff");
  Rational total(0);
  for (const auto& [idx, w] : dist.entries()) {
    total += w * game.payoff(dist.profile_at(idx), player);
  }
  return total;
}

NormalFormGame build_stop_light() {
  const std::vector<std::string> acts = {"Fast", "Caution", "Stop"};
  // Row payoffs by (row action, column action); the game is symmetric, so the
  // column player's payoff at (a, b) is the row payoff at (b, a).
  const Rational u[3][3] = {
      {Rational(0), Rational(3), Rational(7)},
      {Rational(1), Rational(21, 10), Rational(6)},
      {Rational(2), Rational(2), Rational(4)},
  };
  std::vector<std::vector<Rational>> tensor;
  tensor.reserve(9);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      tensor.push_back({u[a][b], u[b][a]});
    }
  }
  return NormalFormGame({acts, acts}, std::move(tensor));
}

NormalFormGame build_matching_pennies() {
  const std::vector<std::string> acts = {"Heads", "Tails"};
  std::vector<std::vector<Rational>> tensor;
  tensor.reserve(4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Rational row = (a == b) ? Rational(1) : Rational(-1);
      tensor.push_back({row, -row});
    }
  }
  return NormalFormGame({acts, acts}, std::move(tensor));
}

NormalFormGame build_congestion(int n_players, const std::vector<RouteLatency>& routes) {
  if (n_players < 1) throw ConfigError("congestion game needs at least one player");
  if (routes.empty()) throw ConfigError("congestion game needs at least one route");
  for (const auto& r : routes) {
    if (r.per_user < 0 || r.fixed < 0) {
      throw ConfigError("congestion latencies must have nonnegative coefficients");
    }
  }
  const int m = static_cast<int>(routes.size());
  std::vector<std::string> acts;
  for (int r = 0; r < m; ++r) acts.push_back("route" + std::to_string(r));
  std::vector<std::vector<std::string>> labels(n_players, acts);

  std::size_t total = 1;
  for (int p = 0; p < n_players; ++p) total *= static_cast<std::size_t>(m);
  std::vector<std::size_t> strides =
      compute_strides(std::vector<int>(static_cast<std::size_t>(n_players), m));

  std::vector<std::vector<Rational>> tensor(total);
  std::vector<int> load(static_cast<std::size_t>(m));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::fill(load.begin(), load.end(), 0);
    std::size_t rest = idx;
    std::vector<int> choice(static_cast<std::size_t>(n_players));
    for (int p = 0; p < n_players; ++p) {
      choice[p] = static_cast<int>(rest / strides[p]);
      rest %= strides[p];
      ++load[choice[p]];
    }
    std::vector<Rational> cell(static_cast<std::size_t>(n_players));
    for (int p = 0; p < n_players; ++p) {
      const auto& r = routes[choice[p]];
      cell[p] = -(r.per_user * load[choice[p]] + r.fixed);
    }
    tensor[idx] = std::move(cell);
  }
  return NormalFormGame(std::move(labels), std::move(tensor));
}

}  // namespace clab
