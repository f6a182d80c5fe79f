#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tabmdp/errors.hpp"

namespace tabmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Values over states, length |S|.
using ValueVector = Vector;
/// Values over state-action pairs, flattened as s * |A| + a.
using QVector = Vector;

inline constexpr double kRowSumTolerance = 1e-12;

inline double sup_norm(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

/// Max absolute row sum (the induced infinity norm).
inline double row_sum_norm(const Matrix& m) {
  return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Discounted MDP with finite state and action sets. Row s*|A|+a of the
/// kernel is the next-state distribution of (s, a).
class TabularMDP {
 public:
  TabularMDP(std::size_t num_states, std::size_t num_actions, Matrix kernel, Vector reward,
             double discount)
      : num_states_(num_states),
        num_actions_(num_actions),
        kernel_(std::move(kernel)),
        reward_(std::move(reward)),
        discount_(discount) {
    validate();
  }

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_pairs() const { return num_states_ * num_actions_; }
  const Matrix& kernel() const { return kernel_; }
  const Vector& reward() const { return reward_; }
  double discount() const { return discount_; }

  std::size_t index(std::size_t s, std::size_t a) const { return s * num_actions_ + a; }
  double reward(std::size_t s, std::size_t a) const { return reward_(index(s, a)); }

  TabularMDP with_reward(Vector reward) const {
    return {num_states_, num_actions_, kernel_, std::move(reward), discount_};
  }
  TabularMDP with_kernel(Matrix kernel) const {
    return {num_states_, num_actions_, std::move(kernel), reward_, discount_};
  }

 private:
  void validate() const {
    if (num_states_ == 0 || num_actions_ == 0) {
      throw InvalidArgument("num_states and num_actions must be positive");
    }
    if (!(discount_ > 0.0 && discount_ < 1.0)) {
      throw InvalidArgument("discount must lie in (0, 1), got " + std::to_string(discount_));
    }
    const auto pairs = static_cast<Eigen::Index>(num_pairs());
    if (kernel_.rows() != pairs || kernel_.cols() != static_cast<Eigen::Index>(num_states_)) {
      std::ostringstream os;
      os << "kernel must be " << pairs << " x " << num_states_ << ", got " << kernel_.rows()
         << " x " << kernel_.cols();
      throw InvalidArgument(os.str());
    }
    if (reward_.size() != pairs) {
      throw InvalidArgument("reward must have length " + std::to_string(pairs));
    }
    for (Eigen::Index i = 0; i < pairs; ++i) {
      if (!std::isfinite(reward_(i))) {
        throw InvalidArgument("reward[" + std::to_string(i) + "] is not finite");
      }
      double sum = 0.0;
      for (Eigen::Index j = 0; j < kernel_.cols(); ++j) {
        const double p = kernel_(i, j);
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw InvalidArgument("kernel[" + std::to_string(i) + "][" + std::to_string(j) +
                                "] must be a finite nonnegative number");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "kernel row " << i << " sums to " << sum << ", expected 1";
        throw InvalidArgument(os.str());
      }
    }
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  Matrix kernel_;
  Vector reward_;
  double discount_;
};

/// Deterministic stationary policy: one action index per state.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::size_t> actions) : actions_(std::move(actions)) {}

  static Policy constant(std::size_t num_states, std::size_t action = 0) {
    return Policy(std::vector<std::size_t>(num_states, action));
  }

  std::size_t size() const { return actions_.size(); }
  std::size_t operator[](std::size_t s) const { return actions_[s]; }
  std::size_t& operator[](std::size_t s) { return actions_[s]; }
  const std::vector<std::size_t>& actions() const { return actions_; }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::vector<std::size_t> actions_;
};

inline void check_policy(std::size_t num_states, std::size_t num_actions, const Policy& pi) {
  if (pi.size() != num_states) {
    throw InvalidArgument("policy has " + std::to_string(pi.size()) + " entries, expected " +
                          std::to_string(num_states));
  }
  for (std::size_t s = 0; s < num_states; ++s) {
    if (pi[s] >= num_actions) {
      throw InvalidArgument("policy action " + std::to_string(pi[s]) + " at state " +
                            std::to_string(s) + " is out of range");
    }
  }
}

inline void check_policy(const TabularMDP& mdp, const Policy& pi) {
  check_policy(mdp.num_states(), mdp.num_actions(), pi);
}

/// Projection Pi^pi, P^pi = P Pi^pi, P_pi = Pi^pi P and r_pi.
struct PolicyMatrices {
  Matrix projection;
  Matrix p_super;
  Matrix p_sub;
  Vector r_pi;
};

/// Rows (s, pi(s)) of a |S||A| x |S| kernel, i.e. P_pi.
inline Matrix policy_kernel(const Matrix& kernel, std::size_t num_actions, const Policy& pi) {
  Matrix out(static_cast<Eigen::Index>(pi.size()), kernel.cols());
  for (std::size_t s = 0; s < pi.size(); ++s) {
    out.row(static_cast<Eigen::Index>(s)) = kernel.row(static_cast<Eigen::Index>(s * num_actions + pi[s]));
  }
  return out;
}

/// Entries (s, pi(s)) of a length |S||A| vector.
inline Vector policy_select(const Vector& per_pair, std::size_t num_actions, const Policy& pi) {
  Vector out(static_cast<Eigen::Index>(pi.size()));
  for (std::size_t s = 0; s < pi.size(); ++s) {
    out(static_cast<Eigen::Index>(s)) = per_pair(static_cast<Eigen::Index>(s * num_actions + pi[s]));
  }
  return out;
}

inline PolicyMatrices policy_matrices(const TabularMDP& mdp, const Policy& pi) {
  check_policy(mdp, pi);
  const auto n_s = static_cast<Eigen::Index>(mdp.num_states());
  const auto n_sa = static_cast<Eigen::Index>(mdp.num_pairs());
  PolicyMatrices out;
  out.projection = Matrix::Zero(n_s, n_sa);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    out.projection(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(mdp.index(s, pi[s]))) = 1.0;
  }
  out.p_super = mdp.kernel() * out.projection;
  out.p_sub = policy_kernel(mdp.kernel(), mdp.num_actions(), pi);
  out.r_pi = policy_select(mdp.reward(), mdp.num_actions(), pi);
  return out;
}

/// Solves (I - gamma P_pi) x = rhs by dense LU with partial pivoting and
/// checks the residual.
inline Vector solve_resolvent(const Matrix& p_sub, double discount, const Vector& rhs) {
  const auto n = p_sub.rows();
  const Matrix system = Matrix::Identity(n, n) - discount * p_sub;
  Eigen::PartialPivLU<Matrix> lu(system);
  Vector x = lu.solve(rhs);
  const double residual = sup_norm(system * x - rhs);
  if (!(residual <= 1e-10 * (1.0 + sup_norm(rhs)))) {
    std::ostringstream os;
    os << "resolvent solve residual " << residual << " exceeds tolerance";
    throw InternalError(os.str());
  }
  return x;
}

/// Explicit (I - gamma P_pi)^{-1}.
inline Matrix resolvent(const Matrix& p_sub, double discount) {
  const auto n = p_sub.rows();
  const Matrix system = Matrix::Identity(n, n) - discount * p_sub;
  return Eigen::PartialPivLU<Matrix>(system).inverse();
}

struct PolicyValue {
  ValueVector v;
  QVector q;
};

/// V^pi = (I - gamma P_pi)^{-1} r_pi and Q^pi = r + gamma P V^pi.
inline PolicyValue evaluate_policy_exact(const TabularMDP& mdp, const Policy& pi) {
  check_policy(mdp, pi);
  const Matrix p_sub = policy_kernel(mdp.kernel(), mdp.num_actions(), pi);
  const Vector r_pi = policy_select(mdp.reward(), mdp.num_actions(), pi);
  PolicyValue out;
  out.v = solve_resolvent(p_sub, mdp.discount(), r_pi);
  out.q = mdp.reward() + mdp.discount() * (mdp.kernel() * out.v);
  return out;
}

/// max_a Q(s, a) for every state.
inline ValueVector state_max(const QVector& q, std::size_t num_actions) {
  const auto n_s = q.size() / static_cast<Eigen::Index>(num_actions);
  ValueVector v(n_s);
  for (Eigen::Index s = 0; s < n_s; ++s) {
    v(s) = q.segment(s * static_cast<Eigen::Index>(num_actions), static_cast<Eigen::Index>(num_actions)).maxCoeff();
  }
  return v;
}

/// T(Q)(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) max_a' Q(s',a').
inline QVector bellman_optimality_step(const TabularMDP& mdp, const QVector& q) {
  if (q.size() != static_cast<Eigen::Index>(mdp.num_pairs())) {
    throw InvalidArgument("Q has length " + std::to_string(q.size()) + ", expected " +
                          std::to_string(mdp.num_pairs()));
  }
  return mdp.reward() + mdp.discount() * (mdp.kernel() * state_max(q, mdp.num_actions()));
}

/// Argmax per state; ties go to the smallest action index.
inline Policy greedy_policy(const QVector& q, std::size_t num_actions) {
  if (num_actions == 0 || q.size() % static_cast<Eigen::Index>(num_actions) != 0) {
    throw InvalidArgument("Q length is not a multiple of num_actions");
  }
  const auto n_s = static_cast<std::size_t>(q.size()) / num_actions;
  std::vector<std::size_t> actions(n_s, 0);
  for (std::size_t s = 0; s < n_s; ++s) {
    std::size_t best = 0;
    double best_value = q(static_cast<Eigen::Index>(s * num_actions));
    for (std::size_t a = 1; a < num_actions; ++a) {
      const double value = q(static_cast<Eigen::Index>(s * num_actions + a));
      if (value > best_value) {
        best = a;
        best_value = value;
      }
    }
    actions[s] = best;
  }
  return Policy(std::move(actions));
}

enum class Method { kQvi, kPi };

inline std::string to_string(Method m) { return m == Method::kQvi ? "qvi" : "pi"; }

inline Method parse_method(const std::string& name) {
  if (name == "qvi") return Method::kQvi;
  if (name == "pi") return Method::kPi;
  throw InvalidArgument("unknown method '" + name + "', expected qvi or pi");
}

struct SolveResult {
  Policy policy;
  ValueVector v;  // exact value of `policy`
  QVector q;      // exact Q of `policy`
  int iterations = 0;
  bool converged = false;
  QVector last_iterate;  // final Q iterate of the method
  std::vector<ValueVector> value_trace;  // PI only: exact value of every policy visited
};

namespace detail {

// Policy improvement that keeps the incumbent action unless another one is
// better by more than a rounding-level margin, so PI cannot flip between
// numerically tied actions forever.
inline Policy improve_policy(const QVector& q, std::size_t num_actions, const Policy& current) {
  Policy next = greedy_policy(q, num_actions);
  for (std::size_t s = 0; s < next.size(); ++s) {
    const double incumbent = q(static_cast<Eigen::Index>(s * num_actions + current[s]));
    const double best = q(static_cast<Eigen::Index>(s * num_actions + next[s]));
    if (best - incumbent <= 1e-14 * (1.0 + std::abs(best))) next[s] = current[s];
  }
  return next;
}

}  // namespace detail

/// Q-value iteration from Q = 0 or exact policy iteration. QVI stops once
/// ||Q_{k+1} - Q_k|| <= tol (1 - gamma) / (2 gamma); PI stops when the policy
/// is stable. Either way the returned V and Q are exact for the returned
/// policy, and `converged` is false if max_iters was exhausted.
inline SolveResult solve_optimal(const TabularMDP& mdp, Method method, int max_iters = 100000,
                                 double tol = 1e-12) {
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const double gamma = mdp.discount();
  const std::size_t n_a = mdp.num_actions();
  SolveResult out;

  if (method == Method::kQvi) {
    const double stop = tol * (1.0 - gamma) / (2.0 * gamma);
    QVector q = QVector::Zero(static_cast<Eigen::Index>(mdp.num_pairs()));
    for (int k = 1; k <= max_iters; ++k) {
      QVector next = bellman_optimality_step(mdp, q);
      const double change = sup_norm(next - q);
      q = std::move(next);
      out.iterations = k;
      if (change <= stop) {
        out.converged = true;
        break;
      }
    }
    out.last_iterate = q;
    out.policy = greedy_policy(q, n_a);
    const PolicyValue pv = evaluate_policy_exact(mdp, out.policy);
    out.v = pv.v;
    out.q = pv.q;
    return out;
  }

  Policy pi = greedy_policy(mdp.reward(), n_a);
  PolicyValue pv = evaluate_policy_exact(mdp, pi);
  out.value_trace.push_back(pv.v);
  for (int k = 1; k <= max_iters; ++k) {
    out.iterations = k;
    Policy next = detail::improve_policy(pv.q, n_a, pi);
    if (next == pi) {
      out.converged = true;
      break;
    }
    pi = std::move(next);
    pv = evaluate_policy_exact(mdp, pi);
    out.value_trace.push_back(pv.v);
  }
  out.policy = pi;
  out.v = pv.v;
  out.q = pv.q;
  out.last_iterate = pv.q;
  return out;
}

/// Var_P(V) = P(V o V) - (PV) o (PV) per row, evaluated in centered form.
inline Vector variance_of_value(const Matrix& kernel_rows, const ValueVector& v) {
  if (kernel_rows.cols() != v.size()) {
    throw InvalidArgument("variance_of_value: kernel has " + std::to_string(kernel_rows.cols()) +
                          " columns but V has length " + std::to_string(v.size()));
  }
  Vector out(kernel_rows.rows());
  for (Eigen::Index i = 0; i < kernel_rows.rows(); ++i) {
    const double mean = kernel_rows.row(i).dot(v);
    double var = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double d = v(j) - mean;
      var += kernel_rows(i, j) * d * d;
    }
    if (var < -1e-9) throw InternalError("negative variance at row " + std::to_string(i));
    out(i) = std::max(var, 0.0);
  }
  return out;
}

}  // namespace tabmdp
