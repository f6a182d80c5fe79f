#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "tabmdp/errors.hpp"
#include "tabmdp/generative.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/rng.hpp"

namespace tabmdp {

/// Uniform reward noise zeta(s,a) ~ Unif(0, xi). xi == 0 is the unperturbed
/// baseline.
struct PerturbationConfig {
  double xi = 0.0;
  double alpha = 1.0;
  double c1 = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw InvalidArgument("xi must be finite and >= 0");
    if (!(alpha >= 1.0)) throw InvalidArgument("alpha must be >= 1");
    if (!(c1 > 0.0)) throw InvalidArgument("c1 must be positive");
  }
};

struct PlannerConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double c0 = 4.0;
  double c2 = 4.0;
  Method method = Method::kQvi;

  void validate(double discount) const {
    if (!(epsilon > 0.0 && epsilon <= 1.0 / (1.0 - discount))) {
      throw InvalidArgument("epsilon must lie in (0, 1/(1-gamma)]");
    }
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (!(c0 > 0.0)) throw InvalidArgument("c0 must be positive");
    if (!(c2 > 0.0)) throw InvalidArgument("c2 must be positive");
  }
};

/// xi = c1 (1 - gamma) eps / (|S|^alpha |A|^alpha).
inline double perturbation_scale(std::size_t num_states, std::size_t num_actions, double discount,
                                 double epsilon, double c1, double alpha) {
  if (num_states == 0 || num_actions == 0) throw InvalidArgument("empty state or action set");
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("discount must lie in (0, 1)");
  if (!(epsilon > 0.0) || !(c1 > 0.0) || !(alpha >= 1.0)) {
    throw InvalidArgument("perturbation_scale needs epsilon > 0, c1 > 0, alpha >= 1");
  }
  const double log_xi = std::log(c1) + std::log1p(-discount) + std::log(epsilon) -
                        alpha * std::log(static_cast<double>(num_states) * static_cast<double>(num_actions));
  const double xi = std::exp(log_xi);
  if (!(xi >= std::numeric_limits<double>::min())) {
    throw InvalidArgument("perturbation scale underflows double precision (log xi = " +
                          std::to_string(log_xi) + "); lower alpha");
  }
  return xi;
}

/// The zeta vector for a config, drawn from the (seed, s, a) reward-noise streams.
inline Vector reward_noise(const PerturbationConfig& cfg, std::size_t num_states, std::size_t num_actions) {
  cfg.validate();
  Vector zeta(static_cast<Eigen::Index>(num_states * num_actions));
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const rng::KeyedStream stream(cfg.seed, rng::Stream::kRewardNoise, s, a);
      zeta(static_cast<Eigen::Index>(s * num_actions + a)) = cfg.xi * stream.uniform(0);
    }
  }
  return zeta;
}

/// r_p = r + zeta; kernel and discount untouched.
inline TabularMDP perturb_rewards(const TabularMDP& mdp, const PerturbationConfig& cfg) {
  return mdp.with_reward(mdp.reward() + reward_noise(cfg, mdp.num_states(), mdp.num_actions()));
}

namespace detail {

// log(|S||A| / ((1 - gamma) eps delta)), shared by the sample-size and
// iteration-count formulas.
inline double planning_log_term(const PlannerConfig& cfg, std::size_t num_states,
                                std::size_t num_actions, double discount) {
  return std::log(static_cast<double>(num_states) * static_cast<double>(num_actions) /
                  ((1.0 - discount) * cfg.epsilon * cfg.delta));
}

}  // namespace detail

/// Pre-ceiling value c0 log(|S||A|/((1-gamma) eps delta)) / ((1-gamma)^3 eps^2).
inline double required_sample_size_real(const PlannerConfig& cfg, std::size_t num_states,
                                        std::size_t num_actions, double discount) {
  cfg.validate(discount);
  const double h = 1.0 - discount;
  return cfg.c0 * detail::planning_log_term(cfg, num_states, num_actions, discount) /
         (h * h * h * cfg.epsilon * cfg.epsilon);
}

inline std::int64_t required_sample_size(const PlannerConfig& cfg, std::size_t num_states,
                                         std::size_t num_actions, double discount) {
  const double n = std::ceil(required_sample_size_real(cfg, num_states, num_actions, discount));
  if (!(n < 9.0e18)) throw InvalidArgument("required sample size overflows int64");
  return static_cast<std::int64_t>(n);
}

/// k = ceil(c2 / (1 - gamma) * log(|S||A| / ((1 - gamma) eps delta))).
inline int planning_iterations(const PlannerConfig& cfg, std::size_t num_states,
                               std::size_t num_actions, double discount) {
  cfg.validate(discount);
  const double k = std::ceil(cfg.c2 / (1.0 - discount) *
                             detail::planning_log_term(cfg, num_states, num_actions, discount));
  return static_cast<int>(std::max(1.0, k));
}

/// 2 gamma^{k+1} / (1 - gamma)^2: sup-norm distance between Q of the k-th
/// greedy policy and the optimal Q.
inline double optimization_error_bound(double discount, int iterations) {
  const double h = 1.0 - discount;
  return 2.0 * std::pow(discount, iterations + 1) / (h * h);
}

struct PlanResult {
  Policy policy;
  QVector q;  // final Q iterate of the planner
  int iterations = 0;
  double xi = 0.0;
  double optimization_error = 0.0;
};

/// Plans on the perturbed empirical MDP (P-hat, r + zeta, gamma) for the
/// prescribed number of iterations and returns the greedy policy of the
/// final Q iterate.
inline PlanResult plan_perturbed(const EmpiricalModel& em, const Vector& base_reward, double discount,
                                 const PerturbationConfig& pcfg, const PlannerConfig& cfg) {
  pcfg.validate();
  cfg.validate(discount);
  const TabularMDP perturbed = perturb_rewards(empirical_mdp(em, base_reward, discount), pcfg);
  const int k = planning_iterations(cfg, em.num_states, em.num_actions, discount);

  PlanResult out;
  out.xi = pcfg.xi;
  out.optimization_error = optimization_error_bound(discount, k);
  // tol is tiny so QVI runs all k steps unless it reaches an exact fixed point.
  const SolveResult solved = solve_optimal(perturbed, cfg.method, k, std::numeric_limits<double>::min());
  out.iterations = solved.iterations;
  out.q = solved.last_iterate;
  out.policy = greedy_policy(out.q, em.num_actions);
  return out;
}

struct EndToEndResult {
  Policy policy;
  double achieved_gap = 0.0;  // ||V* - V^pi||_inf on the true MDP
  double q_gap = 0.0;         // ||Q* - Q^pi||_inf on the true MDP
  std::int64_t samples_per_pair = 0;
  int iterations = 0;
};

/// Sample with a fixed per-pair budget, plan, and score the learned policy
/// on the true MDP by exact evaluation.
inline EndToEndResult end_to_end_with_n(const TabularMDP& mdp_true, std::int64_t n,
                                        const PlannerConfig& cfg, const PerturbationConfig& pcfg,
                                        std::uint64_t sample_seed) {
  const EmpiricalModel em = sample_empirical_kernel(mdp_true, n, sample_seed);
  const PlanResult plan = plan_perturbed(em, mdp_true.reward(), mdp_true.discount(), pcfg, cfg);
  const SolveResult optimal = solve_optimal(mdp_true, Method::kPi);
  const PolicyValue learned = evaluate_policy_exact(mdp_true, plan.policy);
  EndToEndResult out;
  out.policy = plan.policy;
  out.achieved_gap = sup_norm(optimal.v - learned.v);
  out.q_gap = sup_norm(optimal.q - learned.q);
  out.samples_per_pair = n;
  out.iterations = plan.iterations;
  return out;
}

/// As end_to_end_with_n with N taken from the sample-size formula.
inline EndToEndResult end_to_end(const TabularMDP& mdp_true, const PlannerConfig& cfg,
                                 const PerturbationConfig& pcfg, std::uint64_t sample_seed) {
  const std::int64_t n =
      required_sample_size(cfg, mdp_true.num_states(), mdp_true.num_actions(), mdp_true.discount());
  return end_to_end_with_n(mdp_true, n, cfg, pcfg, sample_seed);
}

}  // namespace tabmdp
