#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

#include "tabmdp/errors.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/perturb.hpp"
#include "tabmdp/rng.hpp"

namespace tabmdp {

/// min over s and a1 < a2 of |Q(s,a1) - Q(s,a2)|; +inf when |A| = 1.
inline double min_pairwise_gap(const QVector& q, std::size_t num_actions) {
  if (num_actions == 0 || q.size() % static_cast<Eigen::Index>(num_actions) != 0) {
    throw InvalidArgument("Q length is not a multiple of the action count");
  }
  double gap = std::numeric_limits<double>::infinity();
  const auto n_a = static_cast<Eigen::Index>(num_actions);
  for (Eigen::Index base = 0; base < q.size(); base += n_a) {
    for (Eigen::Index a1 = 0; a1 < n_a; ++a1) {
      for (Eigen::Index a2 = a1 + 1; a2 < n_a; ++a2) {
        gap = std::min(gap, std::abs(q(base + a1) - q(base + a2)));
      }
    }
  }
  return gap;
}

/// xi delta (1 - gamma) / (4 |S| |A|^2).
inline double tiebreak_threshold(double xi, double delta, double discount, std::size_t num_states,
                                 std::size_t num_actions) {
  const double a = static_cast<double>(num_actions);
  return xi * delta * (1.0 - discount) / (4.0 * static_cast<double>(num_states) * a * a);
}

/// 3-sigma binomial slack sqrt(p (1 - p) / trials).
inline double binomial_slack(double p, std::int64_t trials) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

struct TieBreakReport {
  double xi = 0.0;
  double delta = 0.0;
  double threshold = 0.0;
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  double failure_rate = 0.0;
  bool pass = false;
};

/// Each trial perturbs rewards with the trial's child seed, solves the
/// perturbed MDP by PI and fails when some pair of actions is within the
/// threshold (gap <= threshold, so an exact tie fails even at threshold 0).
inline TieBreakReport certify_tie_breaking(const TabularMDP& mdp, double xi, double delta,
                                           std::int64_t trials, std::uint64_t seed) {
  if (trials < 100) throw InvalidArgument("at least 100 trials are required");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw InvalidArgument("xi must be finite and >= 0");
  TieBreakReport out;
  out.xi = xi;
  out.delta = delta;
  out.trials = trials;
  out.threshold = tiebreak_threshold(xi, delta, mdp.discount(), mdp.num_states(), mdp.num_actions());
  if (xi > 0.0 && out.threshold < 1e-9) {
    throw InvalidArgument("threshold " + std::to_string(out.threshold) +
                          " is below 1e-9 and cannot be resolved in double precision");
  }
  if (mdp.num_actions() > 1) {
    for (std::int64_t t = 0; t < trials; ++t) {
      const PerturbationConfig cfg{xi, 1.0, 1.0, rng::child_seed(seed, static_cast<std::uint64_t>(t))};
      const SolveResult opt = solve_optimal(perturb_rewards(mdp, cfg), Method::kPi);
      if (min_pairwise_gap(opt.q, mdp.num_actions()) <= out.threshold) ++out.failures;
    }
  }
  out.failure_rate = static_cast<double>(out.failures) / static_cast<double>(trials);
  out.pass = out.failure_rate <= delta + binomial_slack(delta, trials);
  return out;
}

inline nlohmann::json to_json(const TieBreakReport& r) {
  return {{"xi", r.xi},         {"delta", r.delta},       {"threshold", r.threshold},
          {"trials", r.trials}, {"failures", r.failures}, {"failure_rate", r.failure_rate},
          {"pass", r.pass}};
}

}  // namespace tabmdp
