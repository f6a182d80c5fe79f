#include <catch_amalgamated.hpp>

#include <cmath>

#include "tabmdp/harness.hpp"

using namespace tabmdp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SweepRecord record(double discount, std::int64_t n, double err) {
  SweepRecord r;
  r.discount = discount;
  r.n = n;
  r.error_sup = err;
  return r;
}

}  // namespace

TEST_CASE("families", "[families]") {
  for (Family f : {Family::kRandomDirichlet, Family::kChain, Family::kSymmetricAdversarial}) {
    CHECK(parse_family(to_string(f)) == f);
    const TabularMDP a = generate_mdp(f, 5, 3, 0.9, 11);
    const TabularMDP b = generate_mdp(f, 5, 3, 0.9, 11);
    CHECK(a.kernel() == b.kernel());
    CHECK(a.reward() == b.reward());
    CHECK(a.reward().minCoeff() >= 0.0);
    CHECK(a.reward().maxCoeff() <= 1.0);
    for (Eigen::Index i = 0; i < a.kernel().rows(); ++i) {
      CHECK_THAT(a.kernel().row(i).sum(), WithinAbs(1.0, 1e-12));
    }
  }
  CHECK(generate_mdp(Family::kRandomDirichlet, 5, 3, 0.9, 11).kernel() !=
        generate_mdp(Family::kRandomDirichlet, 5, 3, 0.9, 12).kernel());
  CHECK_THROWS_AS(parse_family("grid-world"), InvalidArgument);
  CHECK_THROWS_AS(generate_mdp(Family::kChain, 1, 2, 0.9, 0), InvalidArgument);

  // chain: safe action 0 is uniquely optimal everywhere but the sink
  const TabularMDP c = generate_mdp(Family::kChain, 8, 2, 0.9, 3);
  const SolveResult opt = solve_optimal(c, Method::kPi);
  for (std::size_t s = 0; s + 1 < 8; ++s) {
    CHECK(opt.policy[s] == 0);
    CHECK(opt.q(static_cast<Eigen::Index>(2 * s)) > opt.q(static_cast<Eigen::Index>(2 * s + 1)));
  }
  CHECK(opt.v(7) == 0.0);
}

TEST_CASE("experiment config parsing", "[harness]") {
  const ExperimentSpec d = experiment_from_json(nlohmann::json::object());
  CHECK(d.family == Family::kRandomDirichlet);
  CHECK(d.mode == SweepMode::kPlan);
  CHECK_FALSE(d.xi.has_value());

  const auto doc = nlohmann::json::parse(R"({"family": "chain", "num_states": 6, "discounts": [0.8, 0.9],
      "sample_sizes": [10, 20], "seeds": [1, 2], "mode": "evaluate", "xi": 0.0, "method": "pi"})");
  const ExperimentSpec s = experiment_from_json(doc);
  CHECK(s.family == Family::kChain);
  CHECK(s.num_states == 6);
  CHECK(s.discounts == std::vector<double>{0.8, 0.9});
  CHECK(s.mode == SweepMode::kEvaluate);
  CHECK(s.method == Method::kPi);
  CHECK(s.xi == 0.0);

  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"discounts": [1.0]})")), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"num_states": "four"})")), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"mode": "fly"})")), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"seeds": []})")), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse("[1]")), InvalidArgument);
  for (SweepMode m : {SweepMode::kPlan, SweepMode::kEvaluate, SweepMode::kLemmas, SweepMode::kTiebreak}) {
    CHECK(parse_sweep_mode(to_string(m)) == m);
  }
}

TEST_CASE("sweep output is ordered and reproducible", "[harness]") {
  ExperimentSpec spec;
  spec.family = Family::kRandomDirichlet;
  spec.num_states = 3;
  spec.discounts = {0.9, 0.5};
  spec.sample_sizes = {50, 10};
  spec.seeds = {2, 0, 1};
  for (SweepMode mode : {SweepMode::kPlan, SweepMode::kEvaluate, SweepMode::kLemmas, SweepMode::kTiebreak}) {
    spec.mode = mode;
    if (mode == SweepMode::kTiebreak) spec.xi = 0.1;
    const auto recs = run_sweep(spec);
    REQUIRE(recs.size() == 12);
    for (std::size_t i = 1; i < recs.size(); ++i) {
      const auto key = [](const SweepRecord& r) { return std::make_tuple(r.discount, r.n, r.seed); };
      CHECK(key(recs[i - 1]) < key(recs[i]));
    }
    for (const auto& r : recs) {
      CHECK(r.error_sup >= 0.0);
      CHECK(r.wall_time_ms == 0);
    }
    const std::string csv = records_to_csv(recs);
    CHECK(csv == records_to_csv(run_sweep(spec)));
    CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  }
}

TEST_CASE("sweep cells agree with a direct computation", "[harness]") {
  ExperimentSpec spec;
  spec.num_states = 4;
  spec.discounts = {0.9};
  spec.sample_sizes = {100};
  spec.seeds = {5};
  spec.mode = SweepMode::kEvaluate;
  const SweepRecord r = run_sweep(spec).front();
  const TabularMDP m = generate_mdp(Family::kRandomDirichlet, 4, 2, 0.9, 5);
  const EmpiricalModel em = sample_empirical_kernel(m, 100, detail::sampling_seed(5, 100));
  const EvalBoundReport rep = eval_bound_report(m, em, solve_optimal(m, Method::kPi).policy, 0.1);
  CHECK(r.error_sup == rep.empirical_error);
  CHECK(r.bound_instance == rep.instance_bound);
  CHECK(r.bound_worst == rep.worst_case_bound);

  spec.mode = SweepMode::kPlan;
  spec.xi = 0.0;
  CHECK(std::isinf(run_sweep(spec).front().bound_worst));
}

TEST_CASE("planning bound formula", "[harness]") {
  const double v = planning_bound(4, 2, 0.9, 1e-3, 0.1, 1000);
  CHECK_THAT(v, WithinRel(12.0 * std::sqrt(2.0 * std::log(32.0 * 8 / (1e-3 * 1e-3 * 0.1)) / (1000 * 1e-3)), 1e-12));
}

TEST_CASE("log-log slope fit", "[harness]") {
  std::vector<SweepRecord> recs;
  for (std::int64_t n : {100, 200, 400, 800, 1600}) {
    for (double noise : {0.5, 1.0, 2.0}) recs.push_back(record(0.9, n, 3.0 * noise / std::sqrt(static_cast<double>(n))));
  }
  const SlopeFit f = fit_loglog_slope(recs, "n", "error_sup");
  CHECK_THAT(f.slope, WithinAbs(-0.5, 1e-12));
  CHECK_THAT(f.r2, WithinAbs(1.0, 1e-12));
  CHECK(f.points == 5);
  CHECK(f.excluded == 0);
  CHECK_THAT(f.medians[0], WithinRel(0.3, 1e-12));

  // zeros count toward the median; a group whose median is zero is excluded
  std::vector<SweepRecord> z = recs;
  z.push_back(record(0.9, 100, 0.0));
  z.push_back(record(0.9, 3200, 0.0));
  z.push_back(record(0.9, 3200, 0.0));
  z.push_back(record(0.9, 3200, 1.0));
  const SlopeFit g = fit_loglog_slope(z, "n", "error_sup");
  CHECK(g.points == 5);
  CHECK(g.excluded == 3);
  CHECK_THAT(g.medians[0], WithinRel(0.5 * (0.15 + 0.3), 1e-12));

  std::vector<SweepRecord> h;
  for (double gamma : {0.8, 0.9, 0.95, 0.975}) h.push_back(record(gamma, 100, std::pow(1.0 / (1.0 - gamma), 1.5)));
  CHECK_THAT(fit_loglog_slope(h, "horizon", "error_sup").slope, WithinAbs(1.5, 1e-12));

  CHECK_THROWS_AS(fit_loglog_slope(h, "speed", "error_sup"), InvalidArgument);
  h.resize(2);
  CHECK_THROWS_AS(fit_loglog_slope(h, "horizon", "error_sup"), InvalidArgument);
}

TEST_CASE("chain plan sweep: median error decreases in N", "[sweep-monotone]") {
  ExperimentSpec spec;
  spec.family = Family::kChain;
  spec.num_states = 8;
  spec.num_actions = 2;
  spec.discounts = {0.9};
  spec.sample_sizes.clear();
  for (int k = 6; k <= 14; ++k) spec.sample_sizes.push_back(std::int64_t{1} << k);
  spec.seeds.clear();
  for (std::uint64_t s = 0; s < 50; ++s) spec.seeds.push_back(s);
  spec.epsilon = 0.01;
  spec.mode = SweepMode::kPlan;
  const SlopeFit f = fit_loglog_slope(run_sweep(spec), "n", "error_sup");
  REQUIRE(f.points == 9);
  for (std::size_t i = 1; i < f.points; ++i) {
    INFO("N " << f.xs[i - 1] << " -> " << f.xs[i] << ": " << f.medians[i - 1] << " -> " << f.medians[i]);
    CHECK(f.medians[i] < f.medians[i - 1]);
  }
}
