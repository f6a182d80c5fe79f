// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tabmdp/tabmdp.hpp"

using namespace tabmdp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<double> kBatteryDiscounts{0.5, 0.9, 0.95};

// 1. Canonical absorbing reward reproduces Q*.
Outcome absorbing_equivalence() {
  std::int64_t pairs = 0, failures = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const BatteryInstance inst = battery_instance(rng::child_seed(101, t), 6, 3, kBatteryDiscounts);
    const TabularMDP& m = inst.mdp;
    const SolveResult opt = solve_optimal(m, Method::kPi);
    for (std::size_t s = 0; s < m.num_states(); ++s) {
      for (std::size_t a = 0; a < m.num_actions(); ++a) {
        const double u = canonical_u_star(m, s, a);
        const double err = sup_norm(solve_optimal(make_absorbing(m, {s, a, u}), Method::kPi).q - opt.q);
        worst = std::max(worst, err);
        ++pairs;
        if (!(err <= 1e-8)) ++failures;
      }
    }
  }
  return {failures == 0, fmt("%lld pairs, %lld failures, max err %.3g", (long long)pairs, (long long)failures, worst)};
}

// 2. Resolvent-variance bound and the classical bound.
Outcome resolvent_variance() {
  std::int64_t fail_new = 0, fail_classical = 0;
  double worst_new = 0.0, worst_classical = 0.0;
  const std::vector<double> discounts{0.5, 0.9, 0.99};
  for (std::uint64_t t = 0; t < 10000; ++t) {
    const std::uint64_t seed = rng::child_seed(202, t);
    const BatteryInstance inst = battery_instance(seed, 6, 3, discounts);
    const PolicyMatrices pm = policy_matrices(inst.mdp, inst.pi);
    const rng::KeyedStream rs(seed, rng::Stream::kTrial, 0x72);
    Vector r(pm.r_pi.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = rs.uniform(static_cast<std::uint64_t>(i));
    const ResolventVarianceCheck c = check_resolvent_variance(pm.p_sub, inst.mdp.discount(), r);
    if (!c.holds) ++fail_new;
    if (!c.classical_holds) ++fail_classical;
    if (c.rhs > 0) worst_new = std::max(worst_new, c.lhs / c.rhs);
    if (c.classical_rhs > 0) worst_classical = std::max(worst_classical, c.lhs / c.classical_rhs);
  }
  return {fail_new == 0 && fail_classical == 0,
          fmt("10000 instances, violations %lld / %lld (classical), max ratio %.3f / %.3f", (long long)fail_new,
              (long long)fail_classical, worst_new, worst_classical)};
}

// 3. Resolvent properties (a)-(e).
Outcome resolvent_properties() {
  std::int64_t failures = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const std::uint64_t seed = rng::child_seed(303, t);
    const BatteryInstance inst = battery_instance(seed, 6, 3, kBatteryDiscounts);
    const PolicyMatrices pm = policy_matrices(inst.mdp, inst.pi);
    const rng::KeyedStream rs(seed, rng::Stream::kTrial, 0x73);
    Vector r2(pm.r_pi.size());
    for (Eigen::Index i = 0; i < r2.size(); ++i) r2(i) = pm.r_pi(i) + rs.uniform(static_cast<std::uint64_t>(i));
    const ResolventChecks rc = check_resolvent_properties(pm.p_sub, inst.mdp.discount(), pm.r_pi, r2);
    if (!rc.all()) ++failures;
    worst = std::max(worst, rc.neumann_error);
  }
  return {failures == 0, fmt("1000 instances, %lld failures, max Neumann err %.3g", (long long)failures, worst)};
}

// 4. QVI and PI against enumeration.
Outcome planner_oracle() {
  std::int64_t failures = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const BatteryInstance inst = battery_instance(rng::child_seed(404, t), 4, 3, kBatteryDiscounts);
    const auto v_star = oracle::optimal_value_by_enumeration(inst.mdp);
    for (Method method : {Method::kQvi, Method::kPi}) {
      const SolveResult r = solve_optimal(inst.mdp, method);
      const double err = oracle::max_abs_diff(evaluate_policy_exact(inst.mdp, r.policy).v, v_star);
      worst = std::max(worst, err);
      if (!(err <= 1e-9)) ++failures;
    }
  }
  return {failures == 0, fmt("100 instances x 2 methods, %lld failures, max err %.3g", (long long)failures, worst)};
}

// 5. Reward perturbation moves every policy value by at most xi / (1 - gamma).
Outcome perturbation_shift() {
  std::int64_t failures = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const std::uint64_t seed = rng::child_seed(505, t);
    const BatteryInstance inst = battery_instance(seed, 6, 3, kBatteryDiscounts);
    const double gamma = inst.mdp.discount();
    const double xi = rng::KeyedStream(seed, rng::Stream::kTrial, 0x75).uniform(0);
    const TabularMDP p = perturb_rewards(inst.mdp, {xi, 1.0, 1.0, seed});
    const double shift = sup_norm(evaluate_policy_exact(p, inst.pi).v - evaluate_policy_exact(inst.mdp, inst.pi).v);
    if (!(shift <= xi / (1.0 - gamma) + 1e-12)) ++failures;
    if (xi > 0) worst = std::max(worst, shift * (1.0 - gamma) / xi);
  }
  return {failures == 0, fmt("1000 triples, %lld failures, max shift/bound %.6f", (long long)failures, worst)};
}

// 6. Absorbing optimal Q is (1 - gamma)^-1 Lipschitz in u.
Outcome lipschitz() {
  std::int64_t failures = 0;
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    const std::uint64_t seed = rng::child_seed(606, t);
    const BatteryInstance inst = battery_instance(seed, 6, 3, kBatteryDiscounts);
    const TabularMDP& m = inst.mdp;
    const rng::KeyedStream rs(seed, rng::Stream::kTrial, 0x76);
    const double h = 1.0 / (1.0 - m.discount());
    const auto s = std::min(m.num_states() - 1, static_cast<std::size_t>(rs.uniform(0) * m.num_states()));
    const auto a = std::min(m.num_actions() - 1, static_cast<std::size_t>(rs.uniform(1) * m.num_actions()));
    const LipschitzCheck lc =
        check_absorbing_lipschitz(m, s, a, (2 * rs.uniform(2) - 1) * h, (2 * rs.uniform(3) - 1) * h);
    if (!lc.holds) ++failures;
    if (lc.rhs > 0) worst = std::max(worst, lc.lhs / lc.rhs);
  }
  return {failures == 0, fmt("500 tuples, %lld failures, max lhs/rhs %.4f", (long long)failures, worst)};
}

constexpr std::size_t kEvalStates = 5, kEvalActions = 3;
constexpr double kEvalDiscount = 0.9, kEvalDelta = 0.05;
constexpr std::int64_t kEvalN = 2000;
constexpr int kEvalSeeds = 1000;

TabularMDP eval_instance() { return generate_mdp(Family::kRandomDirichlet, kEvalStates, kEvalActions, kEvalDiscount, 7); }

// 7. Plug-in evaluation error under the worst-case bound.
Outcome evaluation_certification() {
  const TabularMDP m = eval_instance();
  const Policy pi = solve_optimal(m, Method::kPi).policy;
  int covered = 0, ordered = 0;
  for (int t = 0; t < kEvalSeeds; ++t) {
    const EmpiricalModel em = sample_empirical_kernel(m, kEvalN, rng::child_seed(707, static_cast<std::uint64_t>(t)));
    const EvalBoundReport r = eval_bound_report(m, em, pi, kEvalDelta);
    if (r.empirical_error <= r.worst_case_bound) ++covered;
    if (r.instance_bound <= r.worst_case_bound) ++ordered;
  }
  const double rate = static_cast<double>(covered) / kEvalSeeds;
  const double need = 0.95 - binomial_slack(0.95, kEvalSeeds);
  return {rate >= need && ordered == kEvalSeeds,
          fmt("coverage %.3f (need >= %.4f), instance <= worst on %d/%d seeds", rate, need, ordered, kEvalSeeds)};
}

// 8. Bernstein condition with beta_1 = 2 log(4 m |S| / delta).
Outcome bernstein() {
  const TabularMDP m = eval_instance();
  const Policy pi = solve_optimal(m, Method::kPi).policy;
  const int depth = default_depth(kEvalDiscount);
  const double beta = bernstein_beta(kEvalStates, depth, kEvalDelta);
  const PolicyMatrices pm = policy_matrices(m, pi);
  const AuxiliarySequence aux = auxiliary_sequence_from(pm.p_sub, kEvalDiscount, pm.r_pi, depth);
  int failures = 0;
  double worst_beta = 0.0;
  for (int t = 0; t < kEvalSeeds; ++t) {
    const EmpiricalModel em = sample_empirical_kernel(m, kEvalN, rng::child_seed(707, static_cast<std::uint64_t>(t)));
    const BernsteinReport rep =
        bernstein_condition_check(pm.p_sub, policy_kernel(em.kernel_hat, kEvalActions, pi), aux, beta, kEvalN);
    if (!rep.all_hold) ++failures;
    worst_beta = std::max(worst_beta, rep.minimal_beta);
  }
  const double rate = static_cast<double>(failures) / kEvalSeeds;
  const double limit = kEvalDelta + binomial_slack(kEvalDelta, kEvalSeeds);
  return {rate <= limit,
          fmt("beta %.3f (m=%d), failure rate %.3f (limit %.4f), largest needed beta %.3f", beta, depth, rate, limit,
              worst_beta)};
}

// 9. Tie-breaking on the symmetric instance, with a noiseless control.
Outcome tie_breaking() {
  const TabularMDP m = generate_mdp(Family::kSymmetricAdversarial, 4, 3, 0.9, 0);
  const TieBreakReport rep = certify_tie_breaking(m, 0.1, 0.1, 1000, 909);
  const TieBreakReport control = certify_tie_breaking(m, 0.0, 0.1, 1000, 909);
  const double success = 1.0 - rep.failure_rate;
  const double need = 0.9 - binomial_slack(0.9, 1000);
  return {success >= need && control.failures == control.trials,
          fmt("separated on %.3f of trials (need >= %.4f), control failures %lld/%lld", success, need,
              (long long)control.failures, (long long)control.trials)};
}

ExperimentSpec chain_plan_spec() {
  ExperimentSpec spec;
  spec.family = Family::kChain;
  spec.num_states = 8;
  spec.num_actions = 2;
  spec.epsilon = 0.01;
  spec.delta = 0.1;
  spec.mode = SweepMode::kPlan;
  spec.seeds.clear();
  for (std::uint64_t s = 0; s < 50; ++s) spec.seeds.push_back(s);
  return spec;
}

std::string medians_text(const SlopeFit& f) {
  std::string out;
  for (std::size_t i = 0; i < f.xs.size(); ++i) out += fmt(" %g:%.4g", f.xs[i], f.medians[i]);
  return out;
}

// 10. Error falls like N^-1/2.
Outcome n_scaling() {
  ExperimentSpec spec = chain_plan_spec();
  spec.discounts = {0.9};
  spec.sample_sizes.clear();
  for (int k = 6; k <= 14; ++k) spec.sample_sizes.push_back(std::int64_t{1} << k);
  const SlopeFit f = fit_loglog_slope(run_sweep(spec), "n", "error_sup");
  return {f.slope >= -0.6 && f.slope <= -0.4 && f.r2 >= 0.9,
          fmt("slope %.4f, r2 %.4f, excluded %zu; medians", f.slope, f.r2, f.excluded) + medians_text(f)};
}

// 11. Error grows like (1 - gamma)^-3/2.
Outcome gamma_scaling() {
  ExperimentSpec spec = chain_plan_spec();
  spec.discounts = {0.8, 0.9, 0.95, 0.975};
  spec.sample_sizes = {4096};
  const SlopeFit f = fit_loglog_slope(run_sweep(spec), "horizon", "error_sup");
  return {f.slope >= 1.0 && f.slope <= 2.0,
          fmt("slope %.4f, r2 %.4f, excluded %zu; medians", f.slope, f.r2, f.excluded) + medians_text(f)};
}

// 12. Snapped absorbing reward keeps the empirical optimal policy.
Outcome net_match() {
  const double omega = 0.01;
  std::int64_t qualifying = 0, matched = 0, skipped = 0;
  bool snaps_ok = true;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const std::uint64_t seed = rng::child_seed(1212, t);
    const BatteryInstance inst = battery_instance(seed, 5, 3, kBatteryDiscounts);
    const TabularMDP& m = inst.mdp;
    const double gamma = m.discount();
    const EmpiricalModel em = sample_empirical_kernel(m, 40, seed);
    // even t: original rewards; odd t: rewards with tie-breaking noise
    Vector reward = m.reward();
    if (t % 2 == 1) reward = perturb_rewards(m, {0.1, 1.0, 1.0, seed}).reward();
    for (std::size_t s = 0; s < m.num_states(); ++s) {
      for (std::size_t a = 0; a < m.num_actions(); ++a) {
        const NetMatchResult r = net_point_match(em, reward, gamma, s, a, omega);
        if (r.status == MatchStatus::kNotApplicable) {
          ++skipped;
          continue;
        }
        ++qualifying;
        if (r.matches) ++matched;
        if (!(std::abs(r.u_hat - r.u0) <= (1.0 - gamma) * omega / 4.0)) snaps_ok = false;
      }
    }
  }
  return {qualifying > 0 && matched == qualifying && snaps_ok,
          fmt("%lld/%lld qualifying pairs matched, %lld pairs below separation, snap distances %s",
              (long long)matched, (long long)qualifying, (long long)skipped, snaps_ok ? "ok" : "VIOLATED")};
}

// 13. Identical configurations give identical bytes.
Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "tabmdp_acceptance";
  std::filesystem::create_directories(dir);
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  int checks = 0, diffs = 0;
  ExperimentSpec spec;
  spec.num_states = 4;
  spec.discounts = {0.8, 0.95};
  spec.sample_sizes = {32, 256};
  spec.seeds = {0, 1, 2};
  for (Family fam : {Family::kRandomDirichlet, Family::kChain, Family::kSymmetricAdversarial}) {
    for (SweepMode mode : {SweepMode::kPlan, SweepMode::kEvaluate, SweepMode::kLemmas, SweepMode::kTiebreak}) {
      spec.family = fam;
      spec.mode = mode;
      spec.xi = mode == SweepMode::kTiebreak ? std::optional<double>(0.1) : std::nullopt;
      const auto a = dir / "a.csv", b = dir / "b.csv";
      write_csv(run_sweep(spec), a.string());
      write_csv(run_sweep(spec), b.string());
      ++checks;
      if (slurp(a) != slurp(b) || slurp(a).empty()) ++diffs;
    }
  }
  const TabularMDP sym = generate_mdp(Family::kSymmetricAdversarial, 4, 3, 0.9, 0);
  ++checks;
  if (to_json(certify_tie_breaking(sym, 0.1, 0.1, 200, 5)).dump() !=
      to_json(certify_tie_breaking(sym, 0.1, 0.1, 200, 5)).dump()) {
    ++diffs;
  }
  const TabularMDP m = eval_instance();
  const Policy pi = Policy::constant(kEvalStates, 0);
  ++checks;
  if (to_json(eval_bound_report(m, sample_empirical_kernel(m, 100, 3), pi, 0.1)).dump() !=
      to_json(eval_bound_report(m, sample_empirical_kernel(m, 100, 3), pi, 0.1)).dump()) {
    ++diffs;
  }
  std::filesystem::remove_all(dir);
  return {diffs == 0, fmt("%d comparisons, %d differ", checks, diffs)};
}

struct Criterion {
  const char* name;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"absorbing-equivalence", 60, absorbing_equivalence},
      {"resolvent-variance-bounds", 120, resolvent_variance},
      {"resolvent-properties", 0, resolvent_properties},
      {"planner-vs-enumeration", 60, planner_oracle},
      {"perturbation-shift", 0, perturbation_shift},
      {"absorbing-lipschitz", 0, lipschitz},
      {"evaluation-bound-coverage", 300, evaluation_certification},
      {"bernstein-condition", 0, bernstein},
      {"tie-breaking", 180, tie_breaking},
      {"n-scaling", 600, n_scaling},
      {"gamma-scaling", 600, gamma_scaling},
      {"net-point-match", 180, net_match},
      {"reproducibility", 0, reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      out.pass = false;
      out.detail += fmt(" [over time limit %.0fs]", c.time_limit_s);
    }
    if (!out.pass) ++failed;
    std::printf("%s %2zu %-26s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", i + 1, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
