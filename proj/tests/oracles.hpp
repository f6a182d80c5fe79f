#pragma once

// Reference computations for the tests. They avoid the library's solvers
// and random streams: plain loops in long double and std::mt19937_64.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "tabmdp/mdp.hpp"

namespace oracle {

using tabmdp::Matrix;
using tabmdp::Policy;
using tabmdp::TabularMDP;
using tabmdp::Vector;

/// Random MDP with Dirichlet(1) rows and U[0,1] rewards from mt19937_64.
inline TabularMDP random_mdp(std::size_t n_s, std::size_t n_a, double discount, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix p(static_cast<Eigen::Index>(n_s * n_a), static_cast<Eigen::Index>(n_s));
  Vector r(static_cast<Eigen::Index>(n_s * n_a));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = expo(gen);
    p.row(i) /= p.row(i).sum();
    r(i) = unif(gen);
  }
  return TabularMDP(n_s, n_a, std::move(p), std::move(r), discount);
}

inline Policy random_policy(std::size_t n_s, std::size_t n_a, std::uint64_t seed) {
  std::mt19937_64 gen(seed ^ 0x5eedULL);
  std::vector<std::size_t> acts(n_s);
  for (auto& a : acts) a = std::uniform_int_distribution<std::size_t>(0, n_a - 1)(gen);
  return Policy(std::move(acts));
}

/// V^pi by iterating T_pi in long double until the change is below tol.
inline std::vector<long double> fixed_point_value(const TabularMDP& mdp, const Policy& pi, long double tol = 1e-13L) {
  const std::size_t n_s = mdp.num_states();
  std::vector<long double> v(n_s, 0.0L), next(n_s);
  for (int it = 0; it < 10'000'000; ++it) {
    long double change = 0.0L;
    for (std::size_t s = 0; s < n_s; ++s) {
      const auto row = static_cast<Eigen::Index>(mdp.index(s, pi[s]));
      long double acc = 0.0L;
      for (std::size_t t = 0; t < n_s; ++t) acc += static_cast<long double>(mdp.kernel()(row, t)) * v[t];
      next[s] = static_cast<long double>(mdp.reward()(row)) + mdp.discount() * acc;
      change = std::max(change, std::fabs(next[s] - v[s]));
    }
    v.swap(next);
    if (change < tol) break;
  }
  return v;
}

/// Q = r + gamma P V in long double.
inline std::vector<long double> q_from_v(const TabularMDP& mdp, const std::vector<long double>& v) {
  std::vector<long double> q(mdp.num_pairs());
  for (std::size_t i = 0; i < q.size(); ++i) {
    long double acc = 0.0L;
    for (std::size_t t = 0; t < mdp.num_states(); ++t) {
      acc += static_cast<long double>(mdp.kernel()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))) * v[t];
    }
    q[i] = static_cast<long double>(mdp.reward()(static_cast<Eigen::Index>(i))) + mdp.discount() * acc;
  }
  return q;
}

/// Calls f on each of the |A|^|S| deterministic policies.
inline void for_each_policy(std::size_t n_s, std::size_t n_a, const std::function<void(const Policy&)>& f) {
  std::vector<std::size_t> acts(n_s, 0);
  while (true) {
    f(Policy(acts));
    std::size_t k = 0;
    while (k < n_s && ++acts[k] == n_a) acts[k++] = 0;
    if (k == n_s) return;
  }
}

/// Entrywise max of V^pi over all deterministic policies (= V*), by
/// enumeration and fixed-point evaluation.
inline std::vector<long double> optimal_value_by_enumeration(const TabularMDP& mdp) {
  std::vector<long double> best(mdp.num_states(), -1e300L);
  for_each_policy(mdp.num_states(), mdp.num_actions(), [&](const Policy& pi) {
    const auto v = fixed_point_value(mdp, pi, 1e-14L);
    for (std::size_t s = 0; s < v.size(); ++s) best[s] = std::max(best[s], v[s]);
  });
  return best;
}

/// sum p_i v_i^2 - (sum p_i v_i)^2 in long double.
inline long double direct_variance(const Eigen::RowVectorXd& p, const Vector& v) {
  long double m1 = 0.0L, m2 = 0.0L;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    m1 += static_cast<long double>(p(i)) * v(i);
    m2 += static_cast<long double>(p(i)) * v(i) * v(i);
  }
  return m2 - m1 * m1;
}

/// Gauss-Jordan solve of (I - gamma P_pi) x = b in long double with partial pivoting.
inline std::vector<long double> resolvent_solve(const Matrix& p_sub, double discount, const Vector& b) {
  const std::size_t n = static_cast<std::size_t>(p_sub.rows());
  std::vector<std::vector<long double>> a(n, std::vector<long double>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = (i == j ? 1.0L : 0.0L) - static_cast<long double>(discount) *
                                             p_sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    a[i][n] = b(static_cast<Eigen::Index>(i));
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i) {
      if (std::fabs(a[i][c]) > std::fabs(a[piv][c])) piv = i;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const long double f = a[i][c] / a[c][c];
      for (std::size_t j = c; j <= n; ++j) a[i][j] -= f * a[c][j];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
  return x;
}

inline double max_abs_diff(const Vector& x, const std::vector<long double>& y) {
  long double m = 0.0L;
  for (Eigen::Index i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x(i) - y[static_cast<std::size_t>(i)]));
  return static_cast<double>(m);
}

inline Vector to_vector(const std::vector<long double>& y) {
  Vector x(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) x(static_cast<Eigen::Index>(i)) = static_cast<double>(y[i]);
  return x;
}

}  // namespace oracle
