// Command-line front end: solve, evaluate, plan, sweep, verify-lemmas,
// certify-tiebreak. Exit codes: 0 ok, 1 bad input or usage, 2 a lemma check
// failed in verify-lemmas.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "tabmdp/tabmdp.hpp"

namespace {

using tabmdp::io::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAssertion = 2;

struct Options {
  std::string mdp_path;
  std::string config_path;
  std::string out_path;
  std::optional<std::int64_t> seeds;
  std::int64_t trials = 1000;
  std::optional<std::string> method;
  std::optional<double> xi;
  std::optional<double> alpha;
  std::optional<std::int64_t> n;
  std::uint64_t seed = 0;
  double delta = 0.1;
  std::string policy;
};

json load_config(const Options& opt) {
  return opt.config_path.empty() ? json::object() : tabmdp::io::read_json_file(opt.config_path);
}

void emit(const json& doc, const Options& opt) {
  const std::string text = doc.dump(2) + "\n";
  if (opt.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::FILE* f = std::fopen(opt.out_path.c_str(), "wb");
  if (f == nullptr) throw tabmdp::InvalidArgument("cannot open '" + opt.out_path + "' for writing");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

tabmdp::Policy parse_policy(const std::string& text, std::size_t num_states) {
  std::vector<std::size_t> actions;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      const long long a = std::stoll(item, &used);
      if (used != item.size() || a < 0) throw std::invalid_argument(item);
      actions.push_back(static_cast<std::size_t>(a));
    } catch (const std::exception&) {
      throw tabmdp::InvalidArgument("--policy entry '" + item + "' is not a non-negative integer");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (actions.size() != num_states) {
    throw tabmdp::InvalidArgument("--policy has " + std::to_string(actions.size()) + " entries, expected " +
                                  std::to_string(num_states));
  }
  return tabmdp::Policy(std::move(actions));
}

int run_solve(const Options& opt) {
  const tabmdp::TabularMDP mdp = tabmdp::io::load_mdp(opt.mdp_path);
  const tabmdp::SolveResult res = tabmdp::solve_optimal(mdp, tabmdp::parse_method(opt.method.value_or("qvi")));
  emit({{"method", opt.method.value_or("qvi")},
        {"policy", tabmdp::io::policy_to_json(res.policy)},
        {"v", tabmdp::io::vector_to_json(res.v)},
        {"q", tabmdp::io::vector_to_json(res.q)},
        {"iterations", res.iterations},
        {"converged", res.converged}},
       opt);
  return kExitOk;
}

int run_evaluate(const Options& opt) {
  const tabmdp::TabularMDP mdp = tabmdp::io::load_mdp(opt.mdp_path);
  const json cfg = load_config(opt);
  const std::int64_t n = opt.n.value_or(cfg.value("n", std::int64_t{1000}));
  const double delta = cfg.value("delta", opt.delta);
  const tabmdp::Policy pi = opt.policy.empty() ? tabmdp::solve_optimal(mdp, tabmdp::Method::kPi).policy
                                               : parse_policy(opt.policy, mdp.num_states());
  tabmdp::check_policy(mdp, pi);
  const tabmdp::EmpiricalModel em = tabmdp::sample_empirical_kernel(mdp, n, opt.seed);
  const tabmdp::EvalBoundReport report = tabmdp::eval_bound_report(mdp, em, pi, delta);

  const int depth = tabmdp::default_depth(mdp.discount());
  const tabmdp::PolicyMatrices pm = tabmdp::policy_matrices(mdp, pi);
  const tabmdp::AuxiliarySequence aux = tabmdp::auxiliary_sequence_from(pm.p_sub, mdp.discount(), pm.r_pi, depth);
  const tabmdp::BernsteinReport bern = tabmdp::bernstein_condition_check(
      pm.p_sub, tabmdp::policy_kernel(em.kernel_hat, mdp.num_actions(), pi), aux,
      tabmdp::bernstein_beta(mdp.num_states(), depth, delta), n);

  json out = tabmdp::to_json(report);
  out["policy"] = tabmdp::io::policy_to_json(pi);
  out["v_hat"] = tabmdp::io::vector_to_json(tabmdp::plug_in_evaluate(em, mdp.reward(), mdp.discount(), pi));
  out["seed"] = opt.seed;
  out["bernstein"] = tabmdp::to_json(bern);
  emit(out, opt);
  return kExitOk;
}

int run_plan(const Options& opt) {
  const tabmdp::TabularMDP mdp = tabmdp::io::load_mdp(opt.mdp_path);
  const json cfg = load_config(opt);
  tabmdp::PlannerConfig pc;
  pc.epsilon = cfg.value("epsilon", pc.epsilon);
  pc.delta = cfg.value("delta", pc.delta);
  pc.c0 = cfg.value("c0", pc.c0);
  pc.c2 = cfg.value("c2", pc.c2);
  pc.method = tabmdp::parse_method(opt.method.value_or(cfg.value("method", std::string("qvi"))));
  pc.validate(mdp.discount());

  tabmdp::PerturbationConfig pert;
  pert.alpha = opt.alpha.value_or(cfg.value("alpha", pert.alpha));
  pert.c1 = cfg.value("c1", pert.c1);
  pert.seed = cfg.value("seed", opt.seed);
  if (opt.xi) {
    pert.xi = *opt.xi;
  } else if (cfg.contains("xi")) {
    pert.xi = cfg.at("xi").get<double>();
  } else {
    pert.xi = tabmdp::perturbation_scale(mdp.num_states(), mdp.num_actions(), mdp.discount(), pc.epsilon, pert.c1,
                                         pert.alpha);
  }
  const std::uint64_t sample_seed = cfg.value("sample_seed", opt.seed);
  const std::int64_t n = opt.n.value_or(cfg.value(
      "n", tabmdp::required_sample_size(pc, mdp.num_states(), mdp.num_actions(), mdp.discount())));

  const tabmdp::EndToEndResult res = tabmdp::end_to_end_with_n(mdp, n, pc, pert, sample_seed);
  emit({{"policy", tabmdp::io::policy_to_json(res.policy)},
        {"achieved_gap", res.achieved_gap},
        {"q_gap", res.q_gap},
        {"n", res.samples_per_pair},
        {"iterations", res.iterations},
        {"xi", pert.xi},
        {"method", tabmdp::to_string(pc.method)}},
       opt);
  return kExitOk;
}

int run_sweep(const Options& opt) {
  if (opt.config_path.empty()) throw tabmdp::InvalidArgument("sweep needs --config <path.json>");
  json cfg = load_config(opt);
  if (opt.seeds) {
    json seeds = json::array();
    for (std::int64_t s = 0; s < *opt.seeds; ++s) seeds.push_back(s);
    cfg["seeds"] = seeds;
  }
  if (opt.xi) cfg["xi"] = *opt.xi;
  if (opt.alpha) cfg["alpha"] = *opt.alpha;
  if (opt.method) cfg["method"] = *opt.method;
  const tabmdp::ExperimentSpec spec = tabmdp::experiment_from_json(cfg);
  const auto records = tabmdp::run_sweep(spec);
  const std::string out = !opt.out_path.empty() ? opt.out_path : spec.output_path;
  if (out.empty()) {
    std::cout << tabmdp::records_to_csv(records);
  } else {
    tabmdp::write_csv(records, out);
  }
  return kExitOk;
}

int run_verify_lemmas(const Options& opt) {
  const std::int64_t instances = opt.seeds.value_or(100);
  if (instances < 1) throw tabmdp::InvalidArgument("--seeds must be >= 1");
  const auto rows = tabmdp::run_lemma_battery(instances, opt.seed);
  bool ok = true;
  std::printf("%-30s %8s %8s %12s  %s\n", "check", "checks", "failures", "worst", "status");
  for (const auto& row : rows) {
    ok = ok && row.failures == 0;
    std::printf("%-30s %8lld %8lld %12.4e  %s\n", row.name.c_str(), static_cast<long long>(row.checks),
                static_cast<long long>(row.failures), row.worst, row.failures == 0 ? "PASS" : "FAIL");
  }
  return ok ? kExitOk : kExitAssertion;
}

int run_certify_tiebreak(const Options& opt) {
  const json cfg = load_config(opt);
  const tabmdp::TabularMDP mdp =
      opt.mdp_path.empty()
          ? tabmdp::generate_mdp(tabmdp::Family::kSymmetricAdversarial, cfg.value("num_states", std::size_t{4}),
                                 cfg.value("num_actions", std::size_t{3}), cfg.value("discount", 0.9),
                                 cfg.value("instance_seed", std::uint64_t{0}))
          : tabmdp::io::load_mdp(opt.mdp_path);
  const double xi = opt.xi.value_or(cfg.value("xi", 0.1));
  const double delta = cfg.value("delta", opt.delta);
  const tabmdp::TieBreakReport report =
      tabmdp::certify_tie_breaking(mdp, xi, delta, cfg.value("trials", opt.trials), cfg.value("seed", opt.seed));
  emit(tabmdp::to_json(report), opt);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular MDP planning and bound verification"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_path, "Output path (default: stdout)");
  };
  const auto add_mdp = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("mdp", opt.mdp_path, "MDP JSON file");
    if (required) o->required();
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve an MDP exactly and print pi*, V*, Q*");
  add_mdp(solve, true);
  add_common(solve);
  solve->add_option("--method", opt.method, "qvi or pi")->check(CLI::IsMember({"qvi", "pi"}));

  CLI::App* evaluate = app.add_subcommand("evaluate", "Plug-in policy evaluation with error bounds");
  add_mdp(evaluate, true);
  add_common(evaluate);
  evaluate->add_option("--n", opt.n, "Samples per state-action pair");
  evaluate->add_option("--seed", opt.seed, "Sampling seed");
  evaluate->add_option("--delta", opt.delta, "Failure probability");
  evaluate->add_option("--policy", opt.policy, "Comma-separated actions (default: optimal policy)");

  CLI::App* plan = app.add_subcommand("plan", "Sample, perturb, plan and score on the true MDP");
  add_mdp(plan, true);
  add_common(plan);
  plan->add_option("--method", opt.method, "qvi or pi")->check(CLI::IsMember({"qvi", "pi"}));
  plan->add_option("--xi", opt.xi, "Perturbation size (default from epsilon, c1, alpha)");
  plan->add_option("--alpha", opt.alpha, "Exponent in the perturbation size");
  plan->add_option("--n", opt.n, "Samples per pair (default from the sample-size formula)");
  plan->add_option("--seed", opt.seed, "Seed for sampling and reward noise");

  CLI::App* sweep = app.add_subcommand("sweep", "Run an experiment sweep and write CSV");
  add_common(sweep);
  sweep->add_option("--seeds", opt.seeds, "Use seeds 0..k-1");
  sweep->add_option("--method", opt.method, "qvi or pi")->check(CLI::IsMember({"qvi", "pi"}));
  sweep->add_option("--xi", opt.xi, "Fixed perturbation size");
  sweep->add_option("--alpha", opt.alpha, "Exponent in the perturbation size");

  CLI::App* verify = app.add_subcommand("verify-lemmas", "Run the deterministic lemma checks");
  verify->add_option("--seeds", opt.seeds, "Number of random instances (default 100)");
  verify->add_option("--seed", opt.seed, "Base seed");

  CLI::App* tiebreak = app.add_subcommand("certify-tiebreak", "Monte-Carlo tie-breaking certification");
  add_mdp(tiebreak, false);
  add_common(tiebreak);
  tiebreak->add_option("--trials", opt.trials, "Number of perturbation trials");
  tiebreak->add_option("--xi", opt.xi, "Perturbation size (default 0.1)");
  tiebreak->add_option("--delta", opt.delta, "Failure probability");
  tiebreak->add_option("--seed", opt.seed, "Base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitInvalid;
  }

  try {
    if (*solve) return run_solve(opt);
    if (*evaluate) return run_evaluate(opt);
    if (*plan) return run_plan(opt);
    if (*sweep) return run_sweep(opt);
    if (*verify) return run_verify_lemmas(opt);
    if (*tiebreak) return run_certify_tiebreak(opt);
  } catch (const tabmdp::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::cerr << app.help();
  return kExitInvalid;
}
