#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tabmdp/absorbing.hpp"
#include "tabmdp/eval_bounds.hpp"
#include "tabmdp/families.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/perturb.hpp"
#include "tabmdp/rng.hpp"

namespace tabmdp {

/// Number of Neumann terms sum_{i<K} (gamma P)^i needed for a tail
/// gamma^K / (1 - gamma) below 1e-10, and never fewer than 200.
inline int neumann_terms(double discount) {
  const double needed = std::ceil(std::log(1e-10 * (1.0 - discount)) / std::log(discount));
  return std::max(200, static_cast<int>(needed));
}

inline Matrix neumann_sum(const Matrix& p_sub, double discount, int terms) {
  const Eigen::Index n = p_sub.rows();
  Matrix sum = Matrix::Zero(n, n);
  Matrix power = Matrix::Identity(n, n);
  for (int i = 0; i < terms; ++i) {
    sum += power;
    power = discount * (power * p_sub);
  }
  return sum;
}

/// Properties of R = (I - gamma P_pi)^{-1}: (a) Neumann series, (b) nonnegative
/// entries, (c) every row has l1 norm at most 1/(1 - gamma), (d) (1 - gamma) R 1 = 1,
/// (e) r1 <= r2 implies R r1 <= R r2.
struct ResolventChecks {
  double neumann_error = 0.0;
  double min_entry = 0.0;
  double max_row_l1 = 0.0;
  double row_sum_error = 0.0;
  double monotone_violation = 0.0;  // max of (R r1 - R r2), <= 0 when monotone
  bool a = false, b = false, c = false, d = false, e = false;
  bool all() const { return a && b && c && d && e; }
};

inline ResolventChecks check_resolvent_properties(const Matrix& p_sub, double discount, const Vector& r1,
                                                  const Vector& r2) {
  if ((r1.array() < 0.0).any() || (r2.array() < r1.array()).any()) {
    throw InvalidArgument("monotonicity check needs 0 <= r1 <= r2");
  }
  const Matrix inv = resolvent(p_sub, discount);
  const double horizon = 1.0 / (1.0 - discount);
  ResolventChecks out;
  out.neumann_error = (neumann_sum(p_sub, discount, neumann_terms(discount)) - inv).cwiseAbs().maxCoeff();
  out.min_entry = inv.minCoeff();
  out.max_row_l1 = inv.cwiseAbs().rowwise().sum().maxCoeff();
  out.row_sum_error = sup_norm((1.0 - discount) * inv.rowwise().sum() - Vector::Ones(inv.rows()));
  out.monotone_violation = (inv * r1 - inv * r2).maxCoeff();
  out.a = out.neumann_error <= 1e-8;
  out.b = out.min_entry >= -1e-12;
  out.c = out.max_row_l1 <= horizon + 1e-9;
  out.d = out.row_sum_error <= 1e-10;
  out.e = out.monotone_violation <= 1e-12 * (1.0 + sup_norm(inv * r2));
  return out;
}

/// max over (s, a) of ||Q*_{s,a,u*} - Q*|| and ||V*_{s,a,u*} - V*||.
struct AbsorbingEquivalence {
  double max_q_error = 0.0;
  double max_v_error = 0.0;
};

inline AbsorbingEquivalence check_absorbing_equivalence(const TabularMDP& mdp) {
  const SolveResult opt = solve_optimal(mdp, Method::kPi);
  AbsorbingEquivalence out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const double u = detail::absorbing_reward_from(mdp, opt.v, s, a);
      const SolveResult abs_opt = solve_optimal(make_absorbing(mdp, {s, a, u}), Method::kPi);
      out.max_q_error = std::max(out.max_q_error, sup_norm(abs_opt.q - opt.q));
      out.max_v_error = std::max(out.max_v_error, sup_norm(abs_opt.v - opt.v));
    }
  }
  return out;
}

/// ||Q*_{s,a,u} - Q*_{s,a,u'}|| against |u - u'| / (1 - gamma).
struct LipschitzCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline LipschitzCheck check_absorbing_lipschitz(const TabularMDP& mdp, std::size_t s, std::size_t a, double u,
                                                double u_prime) {
  const SolveResult q1 = solve_optimal(make_absorbing(mdp, {s, a, u}), Method::kPi);
  const SolveResult q2 = solve_optimal(make_absorbing(mdp, {s, a, u_prime}), Method::kPi);
  LipschitzCheck out;
  out.lhs = sup_norm(q1.q - q2.q);
  out.rhs = std::abs(u - u_prime) / (1.0 - mdp.discount());
  out.holds = out.lhs <= out.rhs + 1e-8;
  return out;
}

/// Seeded random instance for the lemma battery: 1..max_states states,
/// 1..max_actions actions, discount from `discounts`.
struct BatteryInstance {
  TabularMDP mdp;
  Policy pi;
};

inline BatteryInstance battery_instance(std::uint64_t seed, std::size_t max_states, std::size_t max_actions,
                                        const std::vector<double>& discounts) {
  const rng::KeyedStream pick(seed, rng::Stream::kTrial, 0xba77);
  const auto draw = [&](std::uint64_t k, std::size_t count) {
    return std::min(count - 1, static_cast<std::size_t>(pick.uniform(k) * static_cast<double>(count)));
  };
  const std::size_t n_s = 1 + draw(0, max_states);
  const std::size_t n_a = 1 + draw(1, max_actions);
  const double gamma = discounts[draw(2, discounts.size())];
  TabularMDP mdp = generate_mdp(Family::kRandomDirichlet, n_s, n_a, gamma, seed);
  std::vector<std::size_t> actions(n_s);
  for (std::size_t s = 0; s < n_s; ++s) actions[s] = draw(3 + s, n_a);
  return {std::move(mdp), Policy(std::move(actions))};
}

struct BatteryRow {
  std::string name;
  std::int64_t checks = 0;
  std::int64_t failures = 0;
  double worst = 0.0;  // largest observed lhs/rhs or error, depending on the row
};

/// Hard deterministic lemma checks over `instances` seeded random MDPs.
inline std::vector<BatteryRow> run_lemma_battery(std::int64_t instances, std::uint64_t seed) {
  const std::vector<double> discounts{0.5, 0.9, 0.95};
  BatteryRow resolvent_row{"resolvent-properties"};
  BatteryRow absorbing_row{"absorbing-equivalence"};
  BatteryRow variance_row{"resolvent-variance"};
  BatteryRow classical_row{"resolvent-variance-classical"};
  BatteryRow lipschitz_row{"absorbing-lipschitz"};
  BatteryRow shift_row{"perturbation-shift"};

  for (std::int64_t t = 0; t < instances; ++t) {
    const std::uint64_t s_seed = rng::child_seed(seed, static_cast<std::uint64_t>(t));
    const BatteryInstance inst = battery_instance(s_seed, 6, 3, discounts);
    const TabularMDP& mdp = inst.mdp;
    const double gamma = mdp.discount();
    const PolicyMatrices pm = policy_matrices(mdp, inst.pi);
    const rng::KeyedStream extra(s_seed, rng::Stream::kTrial, 0xe7);

    Vector r2(pm.r_pi.size());
    for (Eigen::Index i = 0; i < r2.size(); ++i) r2(i) = pm.r_pi(i) + extra.uniform(static_cast<std::uint64_t>(i));
    const ResolventChecks rc = check_resolvent_properties(pm.p_sub, gamma, pm.r_pi, r2);
    ++resolvent_row.checks;
    if (!rc.all()) ++resolvent_row.failures;
    resolvent_row.worst = std::max(resolvent_row.worst, rc.neumann_error);

    const AbsorbingEquivalence ae = check_absorbing_equivalence(mdp);
    ++absorbing_row.checks;
    if (!(ae.max_q_error <= 1e-8 && ae.max_v_error <= 1e-8)) ++absorbing_row.failures;
    absorbing_row.worst = std::max(absorbing_row.worst, ae.max_q_error);

    const ResolventVarianceCheck vc = check_resolvent_variance(pm.p_sub, gamma, pm.r_pi);
    ++variance_row.checks;
    ++classical_row.checks;
    if (!vc.holds) ++variance_row.failures;
    if (!vc.classical_holds) ++classical_row.failures;
    if (vc.rhs > 0.0) variance_row.worst = std::max(variance_row.worst, vc.lhs / vc.rhs);
    if (vc.classical_rhs > 0.0) classical_row.worst = std::max(classical_row.worst, vc.lhs / vc.classical_rhs);

    const double horizon = 1.0 / (1.0 - gamma);
    const std::size_t s = std::min(mdp.num_states() - 1, static_cast<std::size_t>(extra.uniform(1000) * mdp.num_states()));
    const std::size_t a = std::min(mdp.num_actions() - 1, static_cast<std::size_t>(extra.uniform(1001) * mdp.num_actions()));
    const double u = (2.0 * extra.uniform(1002) - 1.0) * horizon;
    const double u_prime = (2.0 * extra.uniform(1003) - 1.0) * horizon;
    const LipschitzCheck lc = check_absorbing_lipschitz(mdp, s, a, u, u_prime);
    ++lipschitz_row.checks;
    if (!lc.holds) ++lipschitz_row.failures;
    if (lc.rhs > 0.0) lipschitz_row.worst = std::max(lipschitz_row.worst, lc.lhs / lc.rhs);

    const double xi = extra.uniform(1004);
    const PerturbationConfig pcfg{xi, 1.0, 1.0, s_seed};
    const PolicyValue base = evaluate_policy_exact(mdp, inst.pi);
    const PolicyValue shifted = evaluate_policy_exact(perturb_rewards(mdp, pcfg), inst.pi);
    const double shift = sup_norm(shifted.v - base.v);
    ++shift_row.checks;
    if (!(shift <= xi * horizon + 1e-12)) ++shift_row.failures;
    if (xi > 0.0) shift_row.worst = std::max(shift_row.worst, shift / (xi * horizon));
  }
  return {resolvent_row, absorbing_row, variance_row, classical_row, lipschitz_row, shift_row};
}

}  // namespace tabmdp
