#include "clab/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clab/equilibrium.hpp"
#include "clab/errors.hpp"

namespace clab {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite entry");
  }
}

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(std::string(what) + ": payoff vector length " + std::to_string(got) +
                ", expected " + std::to_string(want));
  }
}

}  // namespace

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw Error("project_to_simplex: empty vector");
  check_finite(v, "project_to_simplex");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
  }
  return out;
}

RegretMatchingLearner::RegretMatchingLearner(int n_actions) {
  if (n_actions < 1) throw Error("regret matching: needs at least one action");
  regrets_.assign(static_cast<std::size_t>(n_actions), 0.0);
  refresh();
}

RegretMatchingLearner::RegretMatchingLearner(std::vector<double> initial_regrets)
    : regrets_(std::move(initial_regrets)) {
  if (regrets_.empty()) throw Error("regret matching: needs at least one action");
  check_finite(regrets_, "regret matching");
  refresh();
}

void RegretMatchingLearner::refresh() {
  strategy_.assign(regrets_.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < regrets_.size(); ++a) {
    strategy_[a] = std::max(regrets_[a], 0.0);
    total += strategy_[a];
  }
  if (total > 0.0) {
    for (double& p : strategy_) p /= total;
  } else {
    std::fill(strategy_.begin(), strategy_.end(), 1.0 / static_cast<double>(regrets_.size()));
  }
}

void RegretMatchingLearner::observe(std::span<const double> payoffs, int played) {
  check_length(payoffs.size(), regrets_.size(), "regret matching");
  check_finite(payoffs, "regret matching");
  if (played < 0 || played >= static_cast<int>(regrets_.size())) {
    throw Error("regret matching: played action out of range");
  }
  const double baseline = payoffs[played];
  for (std::size_t a = 0; a < regrets_.size(); ++a) {
    regrets_[a] += payoffs[a] - baseline;
  }
  refresh();
}

void RegretMatchingLearner::observe_expected(std::span<const double> payoffs) {
  check_length(payoffs.size(), regrets_.size(), "regret matching");
  check_finite(payoffs, "regret matching");
  double baseline = 0.0;
  for (std::size_t a = 0; a < regrets_.size(); ++a) {
    baseline += strategy_[a] * payoffs[a];
  }
  for (std::size_t a = 0; a < regrets_.size(); ++a) {
    regrets_[a] += payoffs[a] - baseline;
  }
  refresh();
}

HedgeLearner::HedgeLearner(int n_actions, double rate) : rate_(rate) {
  if (n_actions < 1) throw Error("hedge: needs at least one action");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw Error("hedge: rate must be positive");
  log_weights_.assign(static_cast<std::size_t>(n_actions), 0.0);
  refresh();
}

void HedgeLearner::refresh() {
  const double peak = *std::max_element(log_weights_.begin(), log_weights_.end());
  strategy_.assign(log_weights_.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < log_weights_.size(); ++a) {
    strategy_[a] = std::exp(log_weights_[a] - peak);
    total += strategy_[a];
  }
  for (double& p : strategy_) p /= total;
}

void HedgeLearner::observe(std::span<const double> payoffs) {
  check_length(payoffs.size(), log_weights_.size(), "hedge");
  check_finite(payoffs, "hedge");
  for (std::size_t a = 0; a < log_weights_.size(); ++a) {
    log_weights_[a] += rate_ * payoffs[a];
  }
  refresh();
}

double hedge_default_rate(int n_actions, std::uint64_t horizon) {
  if (n_actions < 2 || horizon == 0) return 1.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(n_actions)) /
                   static_cast<double>(horizon));
}

PgdLearner::PgdLearner(int n_actions, double step_scale) : scale_(step_scale) {
  if (n_actions < 1) throw Error("pgd: needs at least one action");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) {
    throw Error("pgd: step scale must be positive");
  }
  strategy_.assign(static_cast<std::size_t>(n_actions),
                   1.0 / static_cast<double>(n_actions));
}

PgdLearner::PgdLearner(std::vector<double> initial_strategy, double step_scale)
    : scale_(step_scale), strategy_(std::move(initial_strategy)) {
  if (strategy_.empty()) throw Error("pgd: needs at least one action");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) {
    throw Error("pgd: step scale must be positive");
  }
  check_finite(strategy_, "pgd");
  strategy_ = project_to_simplex(strategy_);
}

void PgdLearner::step_with_size(std::span<const double> gradient, double step) {
  check_length(gradient.size(), strategy_.size(), "pgd");
  check_finite(gradient, "pgd");
  if (!(step > 0.0) || !std::isfinite(step)) throw Error("pgd: step must be positive");
  std::vector<double> moved(strategy_.size());
  for (std::size_t a = 0; a < strategy_.size(); ++a) {
    moved[a] = strategy_[a] + step * gradient[a];
  }
  strategy_ = project_to_simplex(moved);
  // Projection is exact only up to rounding; renormalize so downstream
  // sampling sees weights summing to 1 within 1e-12.
  const double total = std::accumulate(strategy_.begin(), strategy_.end(), 0.0);
  for (double& p : strategy_) p /= total;
}

void PgdLearner::observe(std::span<const double> gradient) {
  ++t_;
  step_with_size(gradient, scale_ / std::sqrt(static_cast<double>(t_)));
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& matrix,
                                            bool* used_fallback) {
  const std::size_t n = matrix.size();
  if (used_fallback) *used_fallback = false;
  if (n == 0) throw Error("stationary_distribution: empty matrix");
  for (const auto& row : matrix) {
    if (row.size() != n) throw Error("stationary_distribution: matrix must be square");
  }
  const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
  if (n == 1) return uniform;

  // Solve sigma (M - I) = 0 with sum(sigma) = 1: columns of (M^T - I), last
  // equation replaced by the normalization.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = matrix[j][i] - (i == j ? 1.0 : 0.0);
    }
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) {
      if (used_fallback) *used_fallback = true;
      return uniform;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> sigma(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sigma[i] = a[i][n] / a[i][i];
    if (sigma[i] < 0.0) {
      if (sigma[i] < -1e-9) {
        if (used_fallback) *used_fallback = true;
        return uniform;
      }
      sigma[i] = 0.0;
    }
    total += sigma[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    if (used_fallback) *used_fallback = true;
    return uniform;
  }
  for (double& p : sigma) p /= total;
  return sigma;
}

SwapRegretLearner::SwapRegretLearner(int n_actions, LearnerAlgo sub_algo,
                                     double sub_hedge_rate) {
  if (n_actions < 1) throw Error("swap regret learner: needs at least one action");
  for (int i = 0; i < n_actions; ++i) {
    switch (sub_algo) {
      case LearnerAlgo::RegretMatching:
        subs_.emplace_back(RegretMatchingLearner(n_actions));
        break;
      case LearnerAlgo::Hedge:
        if (!(sub_hedge_rate > 0.0)) {
          throw Error("swap regret learner: hedge sub-learners need a positive rate");
        }
        subs_.emplace_back(HedgeLearner(n_actions, sub_hedge_rate));
        break;
      default:
        throw Error("swap regret learner: sub-learner must be regret matching or hedge");
    }
  }
  refresh();
}

std::vector<std::vector<double>> SwapRegretLearner::sub_matrix() const {
  std::vector<std::vector<double>> q;
  q.reserve(subs_.size());
  for (const auto& sub : subs_) {
    q.push_back(std::visit([](const auto& s) { return s.strategy(); }, sub));
  }
  return q;
}

void SwapRegretLearner::refresh() {
  bool fell_back = false;
  strategy_ = stationary_distribution(sub_matrix(), &fell_back);
  if (fell_back) ++fallbacks_;
}

void SwapRegretLearner::observe(std::span<const double> payoffs) {
  check_length(payoffs.size(), subs_.size(), "swap regret learner");
  check_finite(payoffs, "swap regret learner");
  std::vector<double> scaled(payoffs.size());
  for (std::size_t i = 0; i < subs_.size(); ++i) {
    for (std::size_t a = 0; a < payoffs.size(); ++a) {
      scaled[a] = strategy_[i] * payoffs[a];
    }
    std::visit(
        [&](auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, RegretMatchingLearner>) {
            s.observe_expected(scaled);
          } else {
            s.observe(scaled);
          }
        },
        subs_[i]);
  }
  refresh();
}

std::span<const double> LearnerTrace::strategy_at(std::uint64_t t, int player) const {
  std::size_t stride = 0;
  for (int n : shape) stride += static_cast<std::size_t>(n);
  std::size_t offset = t * stride;
  for (int p = 0; p < player; ++p) offset += static_cast<std::size_t>(shape[p]);
  return std::span<const double>(strategies).subspan(offset,
                                                     static_cast<std::size_t>(shape[player]));
}

double LearnerTrace::regret_at(std::uint64_t t, int player) const {
  return running_regret[t * static_cast<std::size_t>(shape.size()) +
                        static_cast<std::size_t>(player)];
}

JointDistribution LearnerTrace::empirical_distribution() const {
  JointDistribution dist(shape);
  if (rounds == 0) throw Error("empirical distribution of an empty trace");
  const Rational denom(rounds);
  for (std::size_t idx = 0; idx < profile_counts.size(); ++idx) {
    if (profile_counts[idx] == 0) continue;
    dist.add_weight(dist.profile_at(idx), Rational(profile_counts[idx]) / denom);
  }
  return dist;
}

LearnerTrace LearnerTrace::from_actions(const NormalFormGame& game,
                                        const std::vector<ActionProfile>& actions) {
  if (actions.empty()) throw Error("trace needs at least one round");
  LearnerTrace trace;
  trace.shape = game.shape();
  trace.rounds = actions.size();
  trace.actions = actions;
  trace.profile_counts.assign(game.num_profiles(), 0);
  trace.stationary_fallbacks.assign(static_cast<std::size_t>(game.num_players()), 0);
  for (const ActionProfile& profile : actions) {
    ++trace.profile_counts[game.profile_index(profile)];
  }
  return trace;
}

double payoff_range(const NormalFormGame& game, int player) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t idx = 0; idx < game.num_profiles(); ++idx) {
    const double u = to_double(game.payoff(game.profile_at(idx), player));
    if (first) {
      lo = hi = u;
      first = false;
    } else {
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  return hi - lo;
}

namespace {

using AnyLearner =
    std::variant<RegretMatchingLearner, HedgeLearner, SwapRegretLearner, PgdLearner>;

AnyLearner make_learner(const NormalFormGame& game, const LearnerSpec& spec, int player,
                        std::uint64_t rounds) {
  const int n = game.num_actions(player);
  switch (spec.algo) {
    case LearnerAlgo::RegretMatching:
      return RegretMatchingLearner(n);
    case LearnerAlgo::Hedge: {
      const double rate =
          spec.hedge_rate > 0.0 ? spec.hedge_rate : hedge_default_rate(n, rounds);
      return HedgeLearner(n, rate);
    }
    case LearnerAlgo::SwapRegret: {
      double sub_rate = spec.sub_hedge_rate;
      if (spec.sub_algo == LearnerAlgo::Hedge && !(sub_rate > 0.0)) {
        const double range = payoff_range(game, player);
        sub_rate = hedge_default_rate(n, rounds) / std::max(1.0, range);
      }
      return SwapRegretLearner(n, spec.sub_algo, sub_rate);
    }
    case LearnerAlgo::Pgd: {
      double scale = spec.pgd_step_scale;
      if (!(scale > 0.0)) {
        const double range = payoff_range(game, player);
        scale = range > 0.0 ? 1.0 / range : 1.0;
      }
      return PgdLearner(n, scale);
    }
  }
  throw Error("unknown learner algorithm");
}

}  // namespace

LearnerTrace run_self_play(const NormalFormGame& game, const std::vector<LearnerSpec>& specs,
                           std::uint64_t rounds, std::uint64_t seed) {
  const int n_players = game.num_players();
  if (specs.size() != static_cast<std::size_t>(n_players)) {
    throw Error("run_self_play: one learner spec per player required, got " +
                std::to_string(specs.size()));
  }
  if (rounds == 0) throw Error("run_self_play: rounds must be at least 1");

  // Double-precision payoff cache indexed [profile][player].
  std::vector<std::vector<double>> payoff_cache(game.num_profiles());
  for (std::size_t idx = 0; idx < game.num_profiles(); ++idx) {
    const auto& exact = game.payoffs_at(game.profile_at(idx));
    payoff_cache[idx].reserve(exact.size());
    for (const Rational& u : exact) payoff_cache[idx].push_back(to_double(u));
  }

  std::vector<AnyLearner> learners;
  std::vector<RngStream> streams;
  learners.reserve(static_cast<std::size_t>(n_players));
  streams.reserve(static_cast<std::size_t>(n_players));
  for (int p = 0; p < n_players; ++p) {
    learners.push_back(make_learner(game, specs[p], p, rounds));
    streams.emplace_back(seed, static_cast<std::uint64_t>(p));
  }

  LearnerTrace trace;
  trace.shape = game.shape();
  trace.rounds = rounds;
  trace.profile_counts.assign(game.num_profiles(), 0);
  trace.stationary_fallbacks.assign(static_cast<std::size_t>(n_players), 0);
  std::size_t stride = 0;
  for (int p = 0; p < n_players; ++p) stride += static_cast<std::size_t>(game.num_actions(p));
  trace.actions.reserve(rounds);
  trace.strategies.reserve(rounds * stride);
  trace.running_regret.reserve(rounds * static_cast<std::size_t>(n_players));

  // Cumulative counterfactual advantage per player and action, for the
  // running regret column. The certified values are recomputed exactly from
  // the counts afterwards; these doubles are diagnostics.
  std::vector<std::vector<double>> advantage(static_cast<std::size_t>(n_players));
  for (int p = 0; p < n_players; ++p) {
    advantage[p].assign(static_cast<std::size_t>(game.num_actions(p)), 0.0);
  }

  ActionProfile profile;
  profile.actions.assign(static_cast<std::size_t>(n_players), 0);
  std::vector<double> counterfactual;
  for (std::uint64_t t = 0; t < rounds; ++t) {
    for (int p = 0; p < n_players; ++p) {
      const auto& strat =
          std::visit([](const auto& l) -> const std::vector<double>& { return l.strategy(); },
                     learners[p]);
      trace.strategies.insert(trace.strategies.end(), strat.begin(), strat.end());
      profile.actions[p] = streams[p].sample_index(strat);
    }
    const std::size_t idx = game.profile_index(profile);
    ++trace.profile_counts[idx];
    trace.actions.push_back(profile);

    for (int p = 0; p < n_players; ++p) {
      const int played = profile.actions[p];
      const int n_acts = game.num_actions(p);
      counterfactual.assign(static_cast<std::size_t>(n_acts), 0.0);
      ActionProfile probe = profile;
      for (int a = 0; a < n_acts; ++a) {
        probe.actions[p] = a;
        counterfactual[a] = payoff_cache[game.profile_index(probe)][p];
      }
      const double realized = counterfactual[played];
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < n_acts; ++a) {
        advantage[p][a] += counterfactual[a] - realized;
        best = std::max(best, advantage[p][a]);
      }
      trace.running_regret.push_back(best);

      std::visit(
          [&](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, RegretMatchingLearner>) {
              l.observe(counterfactual, played);
            } else {
              l.observe(counterfactual);
            }
          },
          learners[p]);
    }
  }

  for (int p = 0; p < n_players; ++p) {
    if (auto* swap = std::get_if<SwapRegretLearner>(&learners[p])) {
      trace.stationary_fallbacks[p] = swap->fallback_count();
    }
  }
  return trace;
}

namespace {

void check_trace(const NormalFormGame& game, const LearnerTrace& trace, int player) {
  if (trace.shape != game.shape()) {
    throw Error("trace shape does not match the game");
  }
  if (player < 0 || player >= game.num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
  if (trace.rounds == 0) throw Error("empty trace");
}

}  // namespace

Rational external_regret(const NormalFormGame& game, const LearnerTrace& trace, int player) {
  check_trace(game, trace, player);
  // Aggregating over profile counts is exact and order-independent, so this
  // matches the round-by-round definition value for value.
  Rational realized(0);
  std::vector<Rational> fixed(static_cast<std::size_t>(game.num_actions(player)),
                              Rational(0));
  for (std::size_t idx = 0; idx < trace.profile_counts.size(); ++idx) {
    const std::uint64_t count = trace.profile_counts[idx];
    if (count == 0) continue;
    ActionProfile profile = game.profile_at(idx);
    realized += Rational(count) * game.payoff(profile, player);
    for (int a = 0; a < game.num_actions(player); ++a) {
      profile.actions[player] = a;
      fixed[a] += Rational(count) * game.payoff(profile, player);
    }
  }
  Rational best = fixed[0];
  for (const Rational& v : fixed) best = std::max(best, v);
  return best - realized;
}

Rational swap_regret(const NormalFormGame& game, const LearnerTrace& trace, int player) {
  check_trace(game, trace, player);
  const int n = game.num_actions(player);
  // gain[i][j]: cumulative payoff change from playing j on the rounds where
  // i was actually played.
  std::vector<std::vector<Rational>> gain(static_cast<std::size_t>(n),
                                          std::vector<Rational>(static_cast<std::size_t>(n),
                                                                Rational(0)));
  for (std::size_t idx = 0; idx < trace.profile_counts.size(); ++idx) {
    const std::uint64_t count = trace.profile_counts[idx];
    if (count == 0) continue;
    ActionProfile profile = game.profile_at(idx);
    const int played = profile.actions[player];
    const Rational realized = game.payoff(profile, player);
    for (int j = 0; j < n; ++j) {
      profile.actions[player] = j;
      gain[played][j] += Rational(count) * (game.payoff(profile, player) - realized);
    }
    profile.actions[player] = played;
  }
  Rational total(0);
  for (int i = 0; i < n; ++i) {
    Rational best(0);
    for (int j = 0; j < n; ++j) best = std::max(best, gain[i][j]);
    total += best;
  }
  return total;
}

SignalDevice induced_device(const NormalFormGame& game, const LearnerTrace& trace) {
  if (trace.shape != game.shape()) throw Error("trace shape does not match the game");
  if (trace.rounds == 0) throw Error("empty trace");
  SignalDevice device;
  const Rational denom(trace.rounds);
  for (std::size_t idx = 0; idx < trace.profile_counts.size(); ++idx) {
    if (trace.profile_counts[idx] == 0) continue;
    const ActionProfile profile = game.profile_at(idx);
    std::string label;
    for (int p = 0; p < game.num_players(); ++p) {
      if (p) label += "|";
      label += game.action_label(p, profile.actions[p]);
    }
    device.signals.push_back(std::move(label));
    device.probabilities.push_back(Rational(trace.profile_counts[idx]) / denom);
    device.recommendations.push_back(profile);
  }
  return device;
}

TraceCertificate certify_trace(const NormalFormGame& game, const LearnerTrace& trace) {
  TraceCertificate cert;
  const Rational denom(trace.rounds);
  for (int p = 0; p < game.num_players(); ++p) {
    cert.external_regrets.push_back(external_regret(game, trace, p));
    cert.swap_regrets.push_back(swap_regret(game, trace, p));
  }
  cert.max_external_regret = cert.external_regrets[0];
  cert.max_swap_regret = cert.swap_regrets[0];
  for (int p = 1; p < game.num_players(); ++p) {
    cert.max_external_regret = std::max(cert.max_external_regret, cert.external_regrets[p]);
    cert.max_swap_regret = std::max(cert.max_swap_regret, cert.swap_regrets[p]);
  }
  cert.cce_eps = cce_epsilon(game, trace.empirical_distribution());
  const SignalDevice device = induced_device(game, trace);
  cert.weighted_ce_eps = swap_ce_epsilon(game, device);
  cert.per_occurrence_ce_eps = ce_epsilon(game, device);
  return cert;
}

void write_trace_csv(const NormalFormGame& game, const LearnerTrace& trace,
                     std::ostream& out, std::optional<int> repetition) {
  if (repetition) out << "rep,";
  out << "t";
  for (int p = 0; p < game.num_players(); ++p) out << ",action_" << p;
  for (int p = 0; p < game.num_players(); ++p) out << ",regret_" << p;
  out << "\n";
  for (std::uint64_t t = 0; t < trace.rounds; ++t) {
    if (repetition) out << *repetition << ",";
    out << t;
    for (int p = 0; p < game.num_players(); ++p) {
      out << "," << game.action_label(p, trace.actions[t].actions[p]);
    }
    for (int p = 0; p < game.num_players(); ++p) {
      out << "," << format_double(trace.regret_at(t, p));
    }
    out << "\n";
  }
}

}  // namespace clab
