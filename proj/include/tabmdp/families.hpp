#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "tabmdp/errors.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/rng.hpp"

namespace tabmdp {

enum class Family { kRandomDirichlet, kChain, kSymmetricAdversarial };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::kRandomDirichlet: return "random-dirichlet";
    case Family::kChain: return "chain";
    case Family::kSymmetricAdversarial: return "symmetric-adversarial";
  }
  return "unknown";
}

inline Family parse_family(const std::string& name) {
  if (name == "random-dirichlet") return Family::kRandomDirichlet;
  if (name == "chain") return Family::kChain;
  if (name == "symmetric-adversarial") return Family::kSymmetricAdversarial;
  throw InvalidArgument("unknown family '" + name +
                        "', expected random-dirichlet, chain or symmetric-adversarial");
}

namespace detail {

// Dirichlet(1, ..., 1) row: normalized Exp(1) draws.
inline Eigen::RowVectorXd dirichlet_row(std::size_t size, const rng::KeyedStream& stream) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(size));
  for (std::size_t j = 0; j < size; ++j) {
    // 1 - u lies in (0, 1], so the log is finite.
    row(static_cast<Eigen::Index>(j)) = -std::log1p(-stream.uniform(j));
  }
  const double total = row.sum();
  if (!(total > 0.0)) {
    row.setZero();
    row(0) = 1.0;
    return row;
  }
  row /= total;
  return row;
}

inline TabularMDP random_dirichlet(std::size_t n_s, std::size_t n_a, double discount, std::uint64_t seed) {
  Matrix p(static_cast<Eigen::Index>(n_s * n_a), static_cast<Eigen::Index>(n_s));
  Vector r(static_cast<Eigen::Index>(n_s * n_a));
  for (std::size_t s = 0; s < n_s; ++s) {
    for (std::size_t a = 0; a < n_a; ++a) {
      const auto i = static_cast<Eigen::Index>(s * n_a + a);
      p.row(i) = dirichlet_row(n_s, rng::KeyedStream(seed, rng::Stream::kGenKernel, s, a));
      r(i) = rng::KeyedStream(seed, rng::Stream::kGenReward, s, a).uniform(0);
    }
  }
  return TabularMDP(n_s, n_a, std::move(p), std::move(r), discount);
}

// One row and one reward per state, copied to every action.
inline TabularMDP symmetric_adversarial(std::size_t n_s, std::size_t n_a, double discount,
                                        std::uint64_t seed) {
  Matrix p(static_cast<Eigen::Index>(n_s * n_a), static_cast<Eigen::Index>(n_s));
  Vector r(static_cast<Eigen::Index>(n_s * n_a));
  for (std::size_t s = 0; s < n_s; ++s) {
    const Eigen::RowVectorXd row = dirichlet_row(n_s, rng::KeyedStream(seed, rng::Stream::kGenKernel, s, 0));
    const double reward = rng::KeyedStream(seed, rng::Stream::kGenReward, s, 0).uniform(0);
    for (std::size_t a = 0; a < n_a; ++a) {
      p.row(static_cast<Eigen::Index>(s * n_a + a)) = row;
      r(static_cast<Eigen::Index>(s * n_a + a)) = reward;
    }
  }
  return TabularMDP(n_s, n_a, std::move(p), std::move(r), discount);
}

// Action-gap range of the chain, in units of (1 - gamma)^{-3/2}.
inline constexpr double kChainGapLow = 1e-4;
inline constexpr double kChainGapHigh = 0.02;

// State n_s - 1 is a zero-reward sink. Every transient state s has a safe
// action 0 (deterministic self-loop) and a risky action 1 that stays with
// probability gamma and otherwise advances to s + 1. The safe reward is set
// so that safe beats risky by a gap d_s; the gaps are stratified on a log
// scale so that every sample size meets some states whose gap is comparable
// to its estimation noise. Risky self-loop rewards alternate 1, 0 so that
// downstream values do not cancel the estimation noise. Extra actions are
// zero-reward self-loops.
inline TabularMDP chain(std::size_t n_s, std::size_t n_a, double discount, std::uint64_t seed) {
  if (n_s < 2) throw InvalidArgument("chain family needs at least 2 states");
  const auto pairs = static_cast<Eigen::Index>(n_s * n_a);
  Matrix p = Matrix::Zero(pairs, static_cast<Eigen::Index>(n_s));
  Vector r = Vector::Zero(pairs);
  const double horizon = 1.0 / (1.0 - discount);
  const double gap_scale = std::pow(1.0 - discount, -1.5);
  const double log_span = std::log(kChainGapHigh / kChainGapLow);
  const double strata = static_cast<double>(n_s - 1);

  Vector v = Vector::Zero(static_cast<Eigen::Index>(n_s));
  for (std::size_t a = 0; a < n_a; ++a) p(static_cast<Eigen::Index>((n_s - 1) * n_a + a), n_s - 1) = 1.0;

  for (std::size_t k = n_s - 1; k-- > 0;) {
    const auto s = static_cast<Eigen::Index>(k);
    const double stay = discount;
    const double rho = (k % 2 == 0) ? 1.0 : 0.0;
    const double q_risky = (rho + discount * (1.0 - stay) * v(s + 1)) / (1.0 - discount * stay);
    const double u = rng::KeyedStream(seed, rng::Stream::kGenChain, k).uniform(0);
    double gap = std::exp(std::log(kChainGapHigh) - (static_cast<double>(k) + u) * log_span / strata) * gap_scale;
    gap = std::min(gap, 0.9 * (horizon - q_risky));
    const double v_s = q_risky + gap;
    v(s) = v_s;

    const auto safe = static_cast<Eigen::Index>(k * n_a);
    p(safe, s) = 1.0;
    r(safe) = (1.0 - discount) * v_s;
    for (std::size_t a = 1; a < n_a; ++a) {
      const auto i = static_cast<Eigen::Index>(k * n_a + a);
      p(i, s) = 1.0;
      if (a == 1) {
        p(i, s) = stay;
        p(i, s + 1) = 1.0 - stay;
        r(i) = rho;
      }
    }
  }
  return TabularMDP(n_s, n_a, std::move(p), std::move(r), discount);
}

}  // namespace detail

/// Seeded instance of a family; identical arguments give a bit-identical MDP.
inline TabularMDP generate_mdp(Family family, std::size_t num_states, std::size_t num_actions,
                               double discount, std::uint64_t seed) {
  if (num_states == 0 || num_actions == 0) throw InvalidArgument("empty state or action set");
  if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("discount must lie in (0, 1)");
  switch (family) {
    case Family::kRandomDirichlet: return detail::random_dirichlet(num_states, num_actions, discount, seed);
    case Family::kChain: return detail::chain(num_states, num_actions, discount, seed);
    case Family::kSymmetricAdversarial:
      return detail::symmetric_adversarial(num_states, num_actions, discount, seed);
  }
  throw InvalidArgument("unknown family");
}

}  // namespace tabmdp
