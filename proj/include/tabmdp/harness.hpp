#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tabmdp/absorbing.hpp"
#include "tabmdp/errors.hpp"
#include "tabmdp/eval_bounds.hpp"
#include "tabmdp/families.hpp"
#include "tabmdp/generative.hpp"
#include "tabmdp/mdp.hpp"
#include "tabmdp/perturb.hpp"
#include "tabmdp/rng.hpp"
#include "tabmdp/tiebreak.hpp"

namespace tabmdp {

enum class SweepMode { kPlan, kEvaluate, kLemmas, kTiebreak };

inline std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::kPlan: return "plan";
    case SweepMode::kEvaluate: return "evaluate";
    case SweepMode::kLemmas: return "lemmas";
    case SweepMode::kTiebreak: return "tiebreak";
  }
  return "unknown";
}

inline SweepMode parse_sweep_mode(const std::string& name) {
  if (name == "plan") return SweepMode::kPlan;
  if (name == "evaluate") return SweepMode::kEvaluate;
  if (name == "lemmas") return SweepMode::kLemmas;
  if (name == "tiebreak") return SweepMode::kTiebreak;
  throw InvalidArgument("unknown mode '" + name + "', expected plan, evaluate, lemmas or tiebreak");
}

struct ExperimentSpec {
  Family family = Family::kRandomDirichlet;
  std::size_t num_states = 4;
  std::size_t num_actions = 2;
  std::vector<double> discounts{0.9};
  std::vector<std::int64_t> sample_sizes{256};
  double epsilon = 0.1;
  double delta = 0.1;
  std::vector<std::uint64_t> seeds{0};
  SweepMode mode = SweepMode::kPlan;
  std::string output_path;

  Method method = Method::kQvi;
  std::optional<double> xi;  // unset: derived from epsilon, c1 and alpha per discount
  double alpha = 1.0;
  double c0 = 4.0;
  double c1 = 1.0;
  double c2 = 4.0;
  bool record_timing = false;  // wall_time_ms stays 0 unless set, keeping reruns byte-identical

  void validate() const {
    if (num_states == 0 || num_actions == 0) throw InvalidArgument("num_states and num_actions must be positive");
    if (discounts.empty()) throw InvalidArgument("discounts grid is empty");
    if (sample_sizes.empty()) throw InvalidArgument("sample_sizes grid is empty");
    if (seeds.empty()) throw InvalidArgument("seeds list is empty");
    for (double g : discounts) {
      if (!(g > 0.0 && g < 1.0)) throw InvalidArgument("every discount must lie in (0, 1)");
    }
    for (std::int64_t n : sample_sizes) {
      if (n < 1) throw InvalidArgument("every sample size must be >= 1");
    }
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (xi && !(*xi >= 0.0)) throw InvalidArgument("xi must be >= 0");
    if (!(alpha >= 1.0)) throw InvalidArgument("alpha must be >= 1");
  }
};

namespace detail {

template <typename T>
void read_optional(const nlohmann::json& doc, const char* field, T& target) {
  const auto it = doc.find(field);
  if (it == doc.end()) return;
  try {
    target = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace detail

/// Fields mirror ExperimentSpec; every field is optional.
inline ExperimentSpec experiment_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InvalidArgument("experiment config must be a JSON object");
  ExperimentSpec spec;
  std::string family = to_string(spec.family);
  std::string mode = to_string(spec.mode);
  std::string method = to_string(spec.method);
  detail::read_optional(doc, "family", family);
  detail::read_optional(doc, "mode", mode);
  detail::read_optional(doc, "method", method);
  spec.family = parse_family(family);
  spec.mode = parse_sweep_mode(mode);
  spec.method = parse_method(method);
  detail::read_optional(doc, "num_states", spec.num_states);
  detail::read_optional(doc, "num_actions", spec.num_actions);
  detail::read_optional(doc, "discounts", spec.discounts);
  detail::read_optional(doc, "sample_sizes", spec.sample_sizes);
  detail::read_optional(doc, "epsilon", spec.epsilon);
  detail::read_optional(doc, "delta", spec.delta);
  detail::read_optional(doc, "seeds", spec.seeds);
  detail::read_optional(doc, "output_path", spec.output_path);
  detail::read_optional(doc, "alpha", spec.alpha);
  detail::read_optional(doc, "c0", spec.c0);
  detail::read_optional(doc, "c1", spec.c1);
  detail::read_optional(doc, "c2", spec.c2);
  detail::read_optional(doc, "record_timing", spec.record_timing);
  if (doc.contains("xi")) {
    double xi = 0.0;
    detail::read_optional(doc, "xi", xi);
    spec.xi = xi;
  }
  spec.validate();
  return spec;
}

struct SweepRecord {
  Family family = Family::kRandomDirichlet;
  double discount = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  double error_sup = 0.0;
  double bound_instance = 0.0;
  double bound_worst = 0.0;
  std::int64_t wall_time_ms = 0;
};

/// 12 sqrt(2 log(32 |S||A| / ((1 - gamma)^3 omega delta)) / (N (1 - gamma)^3)):
/// suboptimality bound of the perturbed planner given separation omega.
inline double planning_bound(std::size_t num_states, std::size_t num_actions, double discount, double omega,
                             double delta, std::int64_t n) {
  const double h3 = std::pow(1.0 - discount, 3);
  const double sa = static_cast<double>(num_states) * static_cast<double>(num_actions);
  return 12.0 * std::sqrt(2.0 * std::log(32.0 * sa / (h3 * omega * delta)) / (static_cast<double>(n) * h3));
}

namespace detail {

inline std::uint64_t sampling_seed(std::uint64_t seed, std::int64_t n) {
  return rng::KeyedStream(seed, rng::Stream::kTrial, static_cast<std::uint64_t>(n), 1).bits(0);
}

inline std::uint64_t noise_seed(std::uint64_t seed, std::int64_t n) {
  return rng::KeyedStream(seed, rng::Stream::kTrial, static_cast<std::uint64_t>(n), 2).bits(0);
}

inline SweepRecord run_cell(const ExperimentSpec& spec, double discount, std::int64_t n, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const TabularMDP mdp = generate_mdp(spec.family, spec.num_states, spec.num_actions, discount, seed);
  const EmpiricalModel em = sample_empirical_kernel(mdp, n, sampling_seed(seed, n));
  const std::size_t n_s = mdp.num_states();
  const std::size_t n_a = mdp.num_actions();

  const auto xi_for = [&]() {
    return spec.xi ? *spec.xi : perturbation_scale(n_s, n_a, discount, spec.epsilon, spec.c1, spec.alpha);
  };

  SweepRecord rec;
  rec.family = spec.family;
  rec.discount = discount;
  rec.n = n;
  rec.seed = seed;

  switch (spec.mode) {
    case SweepMode::kPlan: {
      const PlannerConfig cfg{spec.epsilon, spec.delta, spec.c0, spec.c2, spec.method};
      const PerturbationConfig pcfg{xi_for(), spec.alpha, spec.c1, noise_seed(seed, n)};
      const PlanResult plan = plan_perturbed(em, mdp.reward(), discount, pcfg, cfg);
      const SolveResult opt = solve_optimal(mdp, Method::kPi);
      rec.error_sup = sup_norm(opt.v - evaluate_policy_exact(mdp, plan.policy).v);
      rec.bound_instance = eval_bound_report(mdp, em, opt.policy, spec.delta).instance_bound;
      const double omega = pcfg.xi * spec.delta * (1.0 - discount) / (4.0 * n_s * n_a * n_a);
      rec.bound_worst = omega > 0.0 ? planning_bound(n_s, n_a, discount, omega, spec.delta, n)
                                    : std::numeric_limits<double>::infinity();
      break;
    }
    case SweepMode::kEvaluate: {
      const SolveResult opt = solve_optimal(mdp, Method::kPi);
      const EvalBoundReport report = eval_bound_report(mdp, em, opt.policy, spec.delta);
      rec.error_sup = report.empirical_error;
      rec.bound_instance = report.instance_bound;
      rec.bound_worst = report.worst_case_bound;
      break;
    }
    case SweepMode::kLemmas: {
      const TabularMDP m_hat = empirical_mdp(em, mdp.reward(), discount);
      const SolveResult opt = solve_optimal(m_hat, Method::kPi);
      double worst = 0.0;
      for (std::size_t s = 0; s < n_s; ++s) {
        for (std::size_t a = 0; a < n_a; ++a) {
          const double u = absorbing_reward_from(m_hat, opt.v, s, a);
          worst = std::max(worst, sup_norm(solve_optimal(make_absorbing(m_hat, {s, a, u}), Method::kPi).q - opt.q));
        }
      }
      const PolicyMatrices pm = policy_matrices(m_hat, opt.policy);
      const ResolventVarianceCheck vc = check_resolvent_variance(pm.p_sub, discount, pm.r_pi);
      rec.error_sup = worst;
      rec.bound_instance = vc.lhs;
      rec.bound_worst = vc.rhs;
      break;
    }
    case SweepMode::kTiebreak: {
      const double xi = xi_for();
      const PerturbationConfig pcfg{xi, spec.alpha, spec.c1, noise_seed(seed, n)};
      const TabularMDP perturbed = perturb_rewards(empirical_mdp(em, mdp.reward(), discount), pcfg);
      rec.error_sup = min_pairwise_gap(solve_optimal(perturbed, Method::kPi).q, n_a);
      rec.bound_instance = tiebreak_threshold(xi, spec.delta, discount, n_s, n_a);
      rec.bound_worst = xi;
      break;
    }
  }
  if (spec.record_timing) {
    rec.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                           .count();
  }
  return rec;
}

}  // namespace detail

/// One record per (discount, n, seed), sorted in that order.
inline std::vector<SweepRecord> run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<SweepRecord> out;
  out.reserve(spec.discounts.size() * spec.sample_sizes.size() * spec.seeds.size());
  for (double g : spec.discounts) {
    for (std::int64_t n : spec.sample_sizes) {
      for (std::uint64_t seed : spec.seeds) out.push_back(detail::run_cell(spec, g, n, seed));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SweepRecord& x, const SweepRecord& y) {
    return std::tie(x.discount, x.n, x.seed) < std::tie(y.discount, y.n, y.seed);
  });
  return out;
}

inline constexpr const char* kCsvHeader = "family,discount,n,seed,error_sup,bound_instance,bound_worst,wall_time_ms";

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    out += to_string(r.family) + "," + detail::format_double(r.discount) + "," + std::to_string(r.n) + "," +
           std::to_string(r.seed) + "," + detail::format_double(r.error_sup) + "," +
           detail::format_double(r.bound_instance) + "," + detail::format_double(r.bound_worst) + "," +
           std::to_string(r.wall_time_ms) + "\n";
  }
  return out;
}

inline void write_csv(const std::vector<SweepRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << records_to_csv(records);
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;    // distinct x values used
  std::size_t excluded = 0;  // records dropped for a non-positive x or y
  std::vector<double> xs;
  std::vector<double> medians;
};

namespace detail {

inline double record_field(const SweepRecord& r, const std::string& field) {
  if (field == "n") return static_cast<double>(r.n);
  if (field == "discount") return r.discount;
  if (field == "horizon") return 1.0 / (1.0 - r.discount);
  if (field == "error_sup") return r.error_sup;
  if (field == "bound_instance") return r.bound_instance;
  if (field == "bound_worst") return r.bound_worst;
  throw InvalidArgument("unknown record field '" + field + "'");
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Least squares of log(median y) on log x, the median taken over all
/// records sharing an x (zeros included, so seeds with no error count).
/// Records with a non-positive x and x groups whose median is non-positive
/// are excluded and counted. x_field may be "horizon" for 1 / (1 - discount).
inline SlopeFit fit_loglog_slope(const std::vector<SweepRecord>& records, const std::string& x_field,
                                 const std::string& y_field) {
  std::vector<std::pair<double, double>> pts;
  SlopeFit fit;
  for (const auto& r : records) {
    const double x = detail::record_field(r, x_field);
    const double y = detail::record_field(r, y_field);
    if (x > 0.0 && std::isfinite(x) && !std::isnan(y)) {
      pts.emplace_back(x, y);
    } else {
      ++fit.excluded;
    }
  }
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    std::vector<double> ys;
    while (j < pts.size() && pts[j].first == pts[i].first) ys.push_back(pts[j++].second);
    const double med = detail::median(ys);
    if (med > 0.0 && std::isfinite(med)) {
      fit.xs.push_back(pts[i].first);
      fit.medians.push_back(med);
    } else {
      fit.excluded += ys.size();
    }
    i = j;
  }
  fit.points = fit.xs.size();
  if (fit.points < 3) throw InvalidArgument("slope fit needs at least 3 distinct positive x values");

  const auto k = static_cast<double>(fit.points);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < fit.points; ++i) {
    mx += std::log(fit.xs[i]);
    my += std::log(fit.medians[i]);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < fit.points; ++i) {
    const double dx = std::log(fit.xs[i]) - mx;
    const double dy = std::log(fit.medians[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace tabmdp
