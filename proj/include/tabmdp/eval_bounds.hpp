#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "tabmdp/errors.hpp"
#include "tabmdp/generative.hpp"
#include "tabmdp/mdp.hpp"

namespace tabmdp {

/// V-hat^pi = (I - gamma P-hat_pi)^{-1} r_pi on the empirical kernel.
inline ValueVector plug_in_evaluate(const EmpiricalModel& em, const Vector& reward, double discount,
                                    const Policy& pi) {
  check_policy(em.num_states, em.num_actions, pi);
  if (reward.size() != static_cast<Eigen::Index>(em.num_states * em.num_actions)) {
    throw InvalidArgument("reward length does not match the empirical model");
  }
  const Matrix p_hat = policy_kernel(em.kernel_hat, em.num_actions, pi);
  return solve_resolvent(p_hat, discount, policy_select(reward, em.num_actions, pi));
}

/// ceil(log(e / (1 - gamma))): the depth of the auxiliary recursion.
inline int default_depth(double discount) {
  return static_cast<int>(std::ceil(1.0 - std::log1p(-discount)));
}

/// r^(0) = r_pi, V^(l) = (I - gamma P_pi)^{-1} r^(l), r^(l) = sqrt(Var_{P_pi} V^(l-1)).
struct AuxiliarySequence {
  int depth = 0;
  std::vector<Vector> r_levels;
  std::vector<ValueVector> v_levels;
};

inline AuxiliarySequence auxiliary_sequence_from(const Matrix& p_sub, double discount, const Vector& r_pi,
                                                 int depth) {
  if (depth < 1) throw InvalidArgument("auxiliary depth must be >= 1");
  AuxiliarySequence out;
  out.depth = depth;
  out.r_levels.push_back(r_pi);
  out.v_levels.push_back(solve_resolvent(p_sub, discount, r_pi));
  for (int l = 1; l <= depth; ++l) {
    Vector r = variance_of_value(p_sub, out.v_levels.back()).cwiseSqrt();
    out.v_levels.push_back(solve_resolvent(p_sub, discount, r));
    out.r_levels.push_back(std::move(r));
  }
  return out;
}

inline AuxiliarySequence auxiliary_sequence(const TabularMDP& mdp, const Policy& pi, int depth) {
  const PolicyMatrices pm = policy_matrices(mdp, pi);
  return auxiliary_sequence_from(pm.p_sub, mdp.discount(), pm.r_pi, depth);
}

/// (4 / (gamma sqrt(1 - gamma)))^{l-1} ||V^(1)||: growth bound on deeper levels.
inline double auxiliary_level_bound(double discount, int level, double v1_norm) {
  return std::pow(4.0 / (discount * std::sqrt(1.0 - discount)), level - 1) * v1_norm;
}

/// ||(I - gamma P_pi)^{-1} sqrt(Var_{P_pi} V)||_inf for V = (I - gamma P_pi)^{-1} r.
inline double resolvent_variance_norm(const Matrix& p_sub, double discount, const ValueVector& v) {
  return sup_norm(solve_resolvent(p_sub, discount, variance_of_value(p_sub, v).cwiseSqrt()));
}

struct ResolventVarianceCheck {
  double lhs = 0.0;
  double rhs = 0.0;            // 4 / (gamma sqrt(1 - gamma)) ||V||
  double classical_rhs = 0.0;  // 2 log 2 / (gamma (1 - gamma)^{3/2}) ||r||
  bool holds = false;
  bool classical_holds = false;
};

inline ResolventVarianceCheck check_resolvent_variance(const Matrix& p_sub, double discount,
                                                       const Vector& r_nonneg) {
  if ((r_nonneg.array() < 0.0).any()) throw InvalidArgument("reward must be nonnegative");
  const ValueVector v = solve_resolvent(p_sub, discount, r_nonneg);
  ResolventVarianceCheck out;
  out.lhs = resolvent_variance_norm(p_sub, discount, v);
  out.rhs = 4.0 / (discount * std::sqrt(1.0 - discount)) * sup_norm(v);
  out.classical_rhs =
      2.0 * std::numbers::ln2 / (discount * std::pow(1.0 - discount, 1.5)) * sup_norm(r_nonneg);
  out.holds = out.lhs <= out.rhs;
  out.classical_holds = out.lhs <= out.classical_rhs;
  return out;
}

/// r_nonneg has one entry per state and plays the role of r_pi.
inline ResolventVarianceCheck check_resolvent_variance_bound(const TabularMDP& mdp, const Policy& pi,
                                                 const Vector& r_nonneg) {
  if (r_nonneg.size() != static_cast<Eigen::Index>(mdp.num_states())) {
    throw InvalidArgument("r_nonneg must have one entry per state");
  }
  check_policy(mdp, pi);
  return check_resolvent_variance(policy_kernel(mdp.kernel(), mdp.num_actions(), pi), mdp.discount(),
                                  r_nonneg);
}

struct BernsteinLevel {
  int level = 0;
  bool holds = false;
  double max_violation = 0.0;  // max over states of lhs - rhs (<= 0 when holding)
  double minimal_beta = 0.0;   // smallest beta making this level hold
};

struct BernsteinReport {
  double beta = 0.0;
  std::int64_t n = 0;
  std::vector<BernsteinLevel> levels;
  bool all_hold = true;
  double minimal_beta = 0.0;
};

namespace detail {

// Smallest beta >= 0 with |d| <= sqrt(beta / n) sigma + beta v_norm / n:
// the positive root of (v_norm / n) x^2 + (sigma / sqrt(n)) x - |d| in x = sqrt(beta).
inline double minimal_bernstein_beta(double d, double sigma, double v_norm, double n) {
  const double abs_d = std::abs(d);
  if (abs_d == 0.0) return 0.0;
  const double a = v_norm / n;
  const double b = sigma / std::sqrt(n);
  double x;
  if (a == 0.0) {
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    x = abs_d / b;
  } else {
    // Stable form of (-b + sqrt(b^2 + 4 a |d|)) / (2a).
    x = 2.0 * abs_d / (b + std::sqrt(b * b + 4.0 * a * abs_d));
  }
  return x * x;
}

}  // namespace detail

/// Evaluates |(P-hat_pi - P_pi) V^(l)| <= sqrt(beta/N) sqrt(Var_{P_pi} V^(l)) + beta ||V^(l)|| / N
/// entrywise for every level of `aux`.
inline BernsteinReport bernstein_condition_check(const Matrix& p_true_sub, const Matrix& p_hat_sub,
                                                 const AuxiliarySequence& aux, double beta, std::int64_t n) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (p_true_sub.rows() != p_hat_sub.rows() || p_true_sub.cols() != p_hat_sub.cols()) {
    throw InvalidArgument("true and empirical policy kernels differ in shape");
  }
  const double nd = static_cast<double>(n);
  BernsteinReport out;
  out.beta = beta;
  out.n = n;
  for (std::size_t l = 0; l < aux.v_levels.size(); ++l) {
    const ValueVector& v = aux.v_levels[l];
    const Vector dev = (p_hat_sub - p_true_sub) * v;
    const Vector sigma = variance_of_value(p_true_sub, v).cwiseSqrt();
    const double v_norm = sup_norm(v);
    BernsteinLevel lv;
    lv.level = static_cast<int>(l);
    lv.max_violation = -std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < dev.size(); ++s) {
      const double rhs = std::sqrt(beta / nd) * sigma(s) + beta * v_norm / nd;
      lv.max_violation = std::max(lv.max_violation, std::abs(dev(s)) - rhs);
      lv.minimal_beta = std::max(lv.minimal_beta, detail::minimal_bernstein_beta(dev(s), sigma(s), v_norm, nd));
    }
    lv.holds = lv.max_violation <= 0.0;
    out.all_hold = out.all_hold && lv.holds;
    out.minimal_beta = std::max(out.minimal_beta, lv.minimal_beta);
    out.levels.push_back(lv);
  }
  return out;
}

/// 2 log(4 m |S| / delta): the level-uniform high-probability choice of beta.
inline double bernstein_beta(std::size_t num_states, int depth, double delta) {
  return 2.0 * std::log(4.0 * depth * static_cast<double>(num_states) / delta);
}

struct EvalBoundReport {
  double empirical_error = 0.0;
  double instance_bound = 0.0;
  double worst_case_bound = 0.0;
  double resolvent_variance_norm = 0.0;
  std::int64_t n = 0;
  double delta = 0.0;
  double log_factor = 0.0;  // L = log(4 |S| log(e / (1 - gamma)) / delta)
};

/// L = log(4 |S| log(e / (1 - gamma)) / delta).
inline double evaluation_log_factor(std::size_t num_states, double discount, double delta) {
  return std::log(4.0 * static_cast<double>(num_states) * (1.0 - std::log1p(-discount)) / delta);
}

/// N >= 32 e^2 / (1 - gamma) L, under which the instance bound holds w.p. 1 - delta.
inline bool evaluation_premise_holds(std::int64_t n, std::size_t num_states, double discount, double delta) {
  const double e2 = std::exp(2.0);
  return static_cast<double>(n) >= 32.0 * e2 / (1.0 - discount) * evaluation_log_factor(num_states, discount, delta);
}

/// The policy must not depend on `em`; nothing here can check that.
inline EvalBoundReport eval_bound_report(const TabularMDP& mdp_true, const EmpiricalModel& em,
                                         const Policy& pi, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (em.num_states != mdp_true.num_states() || em.num_actions != mdp_true.num_actions()) {
    throw InvalidArgument("empirical model dimensions do not match the MDP");
  }
  const double gamma = mdp_true.discount();
  const PolicyMatrices pm = policy_matrices(mdp_true, pi);
  const ValueVector v = solve_resolvent(pm.p_sub, gamma, pm.r_pi);
  const ValueVector v_hat = plug_in_evaluate(em, mdp_true.reward(), gamma, pi);
  const double nd = static_cast<double>(em.samples_per_pair);
  const double big_l = evaluation_log_factor(mdp_true.num_states(), gamma, delta);

  EvalBoundReport out;
  out.n = em.samples_per_pair;
  out.delta = delta;
  out.log_factor = big_l;
  out.empirical_error = sup_norm(v_hat - v);
  out.resolvent_variance_norm = resolvent_variance_norm(pm.p_sub, gamma, v);
  out.instance_bound = 4.0 * gamma * std::sqrt(2.0 * big_l / nd) * out.resolvent_variance_norm +
                       2.0 * gamma * big_l / ((1.0 - gamma) * nd) * sup_norm(v);
  out.worst_case_bound =
      6.0 * std::sqrt(2.0 * big_l / (nd * std::pow(1.0 - gamma, 3))) * sup_norm(mdp_true.reward());
  return out;
}

inline nlohmann::json to_json(const EvalBoundReport& r) {
  return {{"empirical_error", r.empirical_error},
          {"instance_bound", r.instance_bound},
          {"worst_case_bound", r.worst_case_bound},
          {"resolvent_variance_norm", r.resolvent_variance_norm},
          {"n", r.n},
          {"delta", r.delta},
          {"log_factor", r.log_factor}};
}

inline nlohmann::json to_json(const BernsteinReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : r.levels) {
    levels.push_back({{"level", lv.level}, {"holds", lv.holds}, {"minimal_beta", lv.minimal_beta}});
  }
  return {{"beta", r.beta}, {"n", r.n}, {"all_hold", r.all_hold}, {"minimal_beta", r.minimal_beta},
          {"levels", std::move(levels)}};
}

/// Separation gap: min over states of best minus second-best Q; +inf for |A| = 1.
struct SeparationGap {
  double gap = std::numeric_limits<double>::infinity();
  Policy argmax;
};

inline SeparationGap separation_gap(const QVector& q, std::size_t num_actions) {
  if (num_actions == 0 || q.size() % static_cast<Eigen::Index>(num_actions) != 0) {
    throw InvalidArgument("Q length is not a multiple of the action count");
  }
  SeparationGap out;
  out.argmax = greedy_policy(q, num_actions);
  if (num_actions == 1) return out;
  for (std::size_t s = 0; s < out.argmax.size(); ++s) {
    const double best = q(static_cast<Eigen::Index>(s * num_actions + out.argmax[s]));
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < num_actions; ++a) {
      if (a != out.argmax[s]) second = std::max(second, q(static_cast<Eigen::Index>(s * num_actions + a)));
    }
    out.gap = std::min(out.gap, best - second);
  }
  return out;
}

/// Right side of V-hat - V = gamma (I - gamma P-hat_pi)^{-1} (P-hat_pi - P_pi) V.
inline ValueVector first_order_expansion(const Matrix& p_true_sub, const Matrix& p_hat_sub, double discount,
                                         const ValueVector& v) {
  return discount * solve_resolvent(p_hat_sub, discount, (p_hat_sub - p_true_sub) * v);
}

/// gamma R dP V + gamma^2 R-hat dP R dP V with R, R-hat the true and empirical resolvents.
inline ValueVector second_order_expansion(const Matrix& p_true_sub, const Matrix& p_hat_sub, double discount,
                                          const ValueVector& v) {
  const Matrix dp = p_hat_sub - p_true_sub;
  const Vector inner = solve_resolvent(p_true_sub, discount, dp * v);
  return discount * inner + discount * discount * solve_resolvent(p_hat_sub, discount, dp * inner);
}

}  // namespace tabmdp
