#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "tabmdp/errors.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/rng.hpp"

namespace tabmdp {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Transition counts from N generative-model draws per (s, a) and the
/// induced empirical kernel counts / N.
struct EmpiricalModel {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  CountMatrix counts;
  std::int64_t samples_per_pair = 0;
  Matrix kernel_hat;
  std::uint64_t source_seed = 0;
};

/// Inverse-CDF draw from a probability row, scanning left to right. A
/// uniform landing exactly on a cumulative boundary goes to the lower index.
inline Eigen::Index sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& row, double u) {
  double cumulative = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row(j) <= 0.0) continue;
    cumulative += row(j);
    last_positive = j;
    if (u < cumulative) return j;
  }
  return last_positive;  // u beyond a row sum that rounded below 1
}

/// Counts for a single pair. Depends only on (seed, s, a, n), never on
/// which other pairs were sampled.
inline Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> sample_pair_counts(const TabularMDP& mdp,
                                                                        std::size_t s, std::size_t a,
                                                                        std::int64_t n,
                                                                        std::uint64_t seed) {
  const rng::KeyedStream stream(seed, rng::Stream::kTransition, s, a);
  const auto row = mdp.kernel().row(static_cast<Eigen::Index>(mdp.index(s, a)));
  Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> counts =
      Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>::Zero(row.size());
  for (std::int64_t k = 0; k < n; ++k) {
    ++counts(sample_categorical(row, stream.uniform(static_cast<std::uint64_t>(k))));
  }
  return counts;
}

inline Matrix counts_to_kernel(const CountMatrix& counts, std::int64_t n) {
  return counts.cast<double>() / static_cast<double>(n);
}

inline EmpiricalModel sample_empirical_kernel(const TabularMDP& mdp, std::int64_t n,
                                              std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("samples per pair must be >= 1");
  EmpiricalModel em;
  em.num_states = mdp.num_states();
  em.num_actions = mdp.num_actions();
  em.samples_per_pair = n;
  em.source_seed = seed;
  em.counts = CountMatrix::Zero(static_cast<Eigen::Index>(mdp.num_pairs()),
                                static_cast<Eigen::Index>(mdp.num_states()));
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      em.counts.row(static_cast<Eigen::Index>(mdp.index(s, a))) = sample_pair_counts(mdp, s, a, n, seed);
    }
  }
  em.kernel_hat = counts_to_kernel(em.counts, n);
  return em;
}

inline TabularMDP empirical_mdp(const EmpiricalModel& em, const Vector& reward, double discount) {
  if (reward.size() != static_cast<Eigen::Index>(em.num_states * em.num_actions)) {
    throw InvalidArgument("reward length does not match the empirical model");
  }
  return TabularMDP(em.num_states, em.num_actions, em.kernel_hat, reward, discount);
}

/// N^total = N |S| |A|.
inline std::int64_t total_sample_size(const EmpiricalModel& em) {
  return em.samples_per_pair * static_cast<std::int64_t>(em.num_states) *
         static_cast<std::int64_t>(em.num_actions);
}

inline nlohmann::json empirical_to_json(const EmpiricalModel& em) {
  nlohmann::json counts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < em.counts.rows(); ++i) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(em.counts.cols()));
    for (Eigen::Index j = 0; j < em.counts.cols(); ++j) row[static_cast<std::size_t>(j)] = em.counts(i, j);
    counts.push_back(std::move(row));
  }
  return {{"n", em.samples_per_pair}, {"seed", em.source_seed}, {"counts", std::move(counts)}};
}

/// Inverse of empirical_to_json; |A| cannot be recovered from counts alone.
inline EmpiricalModel empirical_from_json(const nlohmann::json& doc, std::size_t num_actions) {
  if (!doc.is_object() || !doc.contains("n") || !doc.contains("seed") || !doc.contains("counts")) {
    throw InvalidArgument("empirical model JSON needs fields n, seed, counts");
  }
  EmpiricalModel em;
  em.samples_per_pair = doc.at("n").get<std::int64_t>();
  em.source_seed = doc.at("seed").get<std::uint64_t>();
  const auto& rows = doc.at("counts");
  if (!rows.is_array() || rows.empty() || num_actions == 0 || rows.size() % num_actions != 0) {
    throw InvalidArgument("field 'counts' has the wrong number of rows");
  }
  em.num_actions = num_actions;
  em.num_states = rows.size() / num_actions;
  em.counts = CountMatrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(em.num_states));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != em.num_states) {
      throw InvalidArgument("field 'counts[" + std::to_string(i) + "]' has the wrong length");
    }
    std::int64_t total = 0;
    for (std::size_t j = 0; j < em.num_states; ++j) {
      const auto c = rows[i][j].get<std::int64_t>();
      if (c < 0) throw InvalidArgument("negative count in row " + std::to_string(i));
      em.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      total += c;
    }
    if (total != em.samples_per_pair) {
      throw InvalidArgument("counts row " + std::to_string(i) + " does not sum to n");
    }
  }
  em.kernel_hat = counts_to_kernel(em.counts, em.samples_per_pair);
  return em;
}

}  // namespace tabmdp
