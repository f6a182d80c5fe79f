#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tabmdp/errors.hpp"
#include "tabmdp/eval_bounds.hpp"
#include "tabmdp/generative.hpp"
#include "tabmdp/mdp.hpp"

namespace tabmdp {

/// Pair (s, a) turned into a self-loop paying u forever.
struct AbsorbingSpec {
  std::size_t state = 0;
  std::size_t action = 0;
  double u = 0.0;
};

inline double effective_horizon(double discount) { return 1.0 / (1.0 - discount); }

inline TabularMDP make_absorbing(const TabularMDP& mdp, const AbsorbingSpec& spec) {
  if (spec.state >= mdp.num_states() || spec.action >= mdp.num_actions()) {
    throw InvalidArgument("absorbing pair out of range");
  }
  if (!(std::abs(spec.u) <= effective_horizon(mdp.discount()) + 1e-12)) {
    throw InvalidArgument("absorbing reward u = " + std::to_string(spec.u) + " exceeds 1/(1-gamma)");
  }
  const auto row = static_cast<Eigen::Index>(mdp.index(spec.state, spec.action));
  Matrix kernel = mdp.kernel();
  kernel.row(row).setZero();
  kernel(row, static_cast<Eigen::Index>(spec.state)) = 1.0;
  Vector reward = mdp.reward();
  reward(row) = spec.u;
  return TabularMDP(mdp.num_states(), mdp.num_actions(), std::move(kernel), std::move(reward), mdp.discount());
}

namespace detail {

// u = Q*(s,a) - gamma V*(s) = r(s,a) + gamma (P V*)_{s,a} - gamma V*(s).
inline double absorbing_reward_from(const TabularMDP& mdp, const ValueVector& v_star, std::size_t s,
                                    std::size_t a) {
  const auto row = static_cast<Eigen::Index>(mdp.index(s, a));
  return mdp.reward(s, a) + mdp.discount() * mdp.kernel().row(row).dot(v_star) -
         mdp.discount() * v_star(static_cast<Eigen::Index>(s));
}

}  // namespace detail

/// The absorbing reward under which M_{s,a,u} has the same optimal Q as M.
inline double canonical_u_star(const TabularMDP& mdp, std::size_t s, std::size_t a) {
  if (s >= mdp.num_states() || a >= mdp.num_actions()) throw InvalidArgument("pair out of range");
  const SolveResult opt = solve_optimal(mdp, Method::kPi);
  return detail::absorbing_reward_from(mdp, opt.v, s, a);
}

/// Grid {-n step, ..., 0, ..., n step} with n the largest integer such that
/// n step < 1/(1 - gamma). Stored by (step, n); points() materializes it.
struct EpsilonNet {
  double step = 0.0;
  std::int64_t n = 0;

  std::int64_t cardinality() const { return 2 * n + 1; }
  double point(std::int64_t k) const { return static_cast<double>(k) * step; }

  std::vector<double> points() const {
    if (n > 50'000'000) throw InvalidArgument("net too large to materialize");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(cardinality()));
    for (std::int64_t k = -n; k <= n; ++k) out.push_back(point(k));
    return out;
  }

  /// Nearest net point, ties toward the smaller value, clamped to the net's range.
  double snap(double u) const {
    const double scaled = u / step;
    auto k = static_cast<std::int64_t>(std::ceil(scaled - 0.5));
    if (k > n) k = n;
    if (k < -n) k = -n;
    return point(k);
  }
};

inline EpsilonNet build_net(double discount, double step) {
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("discount must lie in (0, 1)");
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("net step must be positive");
  const double horizon = effective_horizon(discount);
  EpsilonNet net;
  net.step = step;
  if (step >= horizon) return net;
  const double ratio = horizon / step;
  if (ratio > 9.0e18) throw InvalidArgument("net step too small");
  auto n = static_cast<std::int64_t>(std::ceil(ratio)) - 1;
  while (n > 0 && static_cast<double>(n) * step >= horizon) --n;
  while (static_cast<double>(n + 1) * step < horizon) ++n;
  net.n = n;
  return net;
}

enum class MatchStatus { kMatched, kMismatch, kNotApplicable };

inline std::string to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::kMatched: return "matched";
    case MatchStatus::kMismatch: return "mismatch";
    case MatchStatus::kNotApplicable: return "not-applicable";
  }
  return "unknown";
}

struct NetMatchResult {
  MatchStatus status = MatchStatus::kNotApplicable;
  bool matches = false;
  double separation = 0.0;
  double u_hat = 0.0;  // canonical absorbing reward on the empirical MDP
  double u0 = 0.0;     // its net point
  double net_step = 0.0;
  Policy empirical_policy;
  Policy absorbing_policy;
};

/// Snaps the empirical canonical reward of (s, a) to the (1 - gamma) omega / 4
/// net and checks that the absorbing empirical MDP at that net point keeps
/// the empirical optimal policy. Not applicable when the empirical optimal Q
/// is separated by less than omega.
inline NetMatchResult net_point_match(const EmpiricalModel& em, const Vector& reward, double discount,
                                 std::size_t s, std::size_t a, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  const TabularMDP m_hat = empirical_mdp(em, reward, discount);
  if (s >= m_hat.num_states() || a >= m_hat.num_actions()) throw InvalidArgument("pair out of range");
  const SolveResult opt = solve_optimal(m_hat, Method::kPi);
  const SeparationGap sep = separation_gap(opt.q, m_hat.num_actions());

  NetMatchResult out;
  out.separation = sep.gap;
  out.empirical_policy = opt.policy;
  out.net_step = (1.0 - discount) * omega / 4.0;
  if (!(sep.gap >= omega)) return out;

  const EpsilonNet net = build_net(discount, out.net_step);
  out.u_hat = detail::absorbing_reward_from(m_hat, opt.v, s, a);
  out.u0 = net.snap(out.u_hat);
  const SolveResult absorbed = solve_optimal(make_absorbing(m_hat, {s, a, out.u0}), Method::kPi);
  out.absorbing_policy = absorbed.policy;
  out.matches = absorbed.policy == opt.policy;
  out.status = out.matches ? MatchStatus::kMatched : MatchStatus::kMismatch;
  return out;
}

}  // namespace tabmdp
