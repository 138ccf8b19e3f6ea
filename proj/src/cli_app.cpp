#include "potlab/cli_app.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "potlab/experiments.hpp"
#include "potlab/serialize.hpp"
#include "potlab/theory_checks.hpp"
#include "potlab/trainer.hpp"

namespace potlab::cli {

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty value list: " + csv);
  return out;
}

CostKind cost_from_flag(const std::string& s) {
  if (s == "euclidean") return Euclidean{};
  if (s == "sq_euclidean") return SqEuclidean{};
  throw std::invalid_argument("unknown cost: " + s + " (euclidean|sq_euclidean)");
}

int cmd_solve(const std::string& mu_path, const std::string& nu_path,
              const std::string& cost_flag, const std::string& out_path) {
  DiscreteMeasure mu = io::load_measure(mu_path);
  DiscreteMeasure nu = io::load_measure(nu_path);
  CostKind cost = cost_from_flag(cost_flag);
  Matrix c = cost_matrix(mu, nu, cost);
  TransportPlan plan = solve_primal(mu, nu, c);

  std::cout << "{\"w_value\": " << io::format_sig(plan.value) << "}\n";

  if (!out_path.empty()) {
    DualCertificate cert = dual_potentials(plan, c, mu, nu);
    io::json doc = io::plan_to_json(plan);
    doc["potentials"] = io::certificate_to_json(cert);
    io::atomic_write(out_path, doc.dump(2) + "\n");
  }
  return 0;
}

int cmd_check(const std::string& name, std::size_t seeds, std::uint64_t base_seed,
              const std::string& out_path) {
  auto reports = run_check_suite(name, seeds, base_seed);
  std::size_t failed = 0;
  for (const auto& r : reports)
    if (!r.passed) ++failed;
  io::json doc = io::reports_to_json(reports);
  if (out_path.empty())
    std::cout << doc.dump(2) << "\n";
  else
    io::atomic_write(out_path, doc.dump(2) + "\n");
  std::cerr << name << ": " << (reports.size() - failed) << "/" << reports.size()
            << " instances passed\n";
  return failed == 0 ? 0 : 1;
}

int cmd_experiment_prop1(const std::vector<double>& sigma2s, std::size_t n_mc,
                         std::uint64_t seed, const std::string& out_dir) {
  io::json summary = io::json::array();
  std::ostringstream csv;
  csv << "sigma2,c,w_dagger,w_c\n";
  bool ok = true;
  for (double s2 : sigma2s) {
    Prop1Result r = prop1_gaussian(s2, 0.25, 1.35, 0.005, n_mc, Rng(seed));
    for (std::size_t i = 0; i < r.grid.size(); ++i)
      csv << s2 << ',' << r.grid[i] << ',' << io::format_sig(r.w_dagger_curve[i]) << ','
          << io::format_sig(r.w_c_curve[i]) << '\n';
    double expect = std::sqrt(1.0 - s2);
    summary.push_back({{"sigma2", s2},
                       {"c_dagger", r.c_dagger},
                       {"c_star", r.c_star},
                       {"c_star_analytic", expect}});
    if (std::abs(r.c_star - expect) > 0.02 || std::abs(r.c_dagger - 1.0) > 0.02)
      ok = false;
  }
  if (!out_dir.empty()) {
    io::atomic_write(out_dir + "/prop1_curves.csv", csv.str());
    io::atomic_write(out_dir + "/prop1_summary.json", summary.dump(2) + "\n");
  } else {
    std::cout << summary.dump(2) << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_experiment_blurriness(const std::string& out_dir) {
  // Hand-computable fixtures: both atoms share one latent code (averaging
  // forced), then each atom gets its own code (no averaging).
  DiscreteMeasure x = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.75, 0.25});
  Matrix q_shared(2, 1);
  q_shared(0, 0) = 1.0;
  q_shared(1, 0) = 1.0;
  Matrix q_disjoint(2, 2);
  q_disjoint(0, 0) = 1.0;
  q_disjoint(1, 1) = 1.0;

  BlurrinessResult shared = blurriness_demo(x, q_shared);
  BlurrinessResult disjoint = blurriness_demo(x, q_disjoint);

  io::json doc{{"shared", {{"g_star", shared.decoder_table.data},
                           {"blurry", shared.blurry[0]}}},
               {"disjoint", {{"g_star", disjoint.decoder_table.data},
                             {"blurry_any", disjoint.blurry[0] || disjoint.blurry[1]}}}};
  std::ostringstream csv;
  csv << "fixture,z,g_star,blurry\n";
  csv << "shared,0," << io::format_sig(shared.decoder_table(0, 0)) << ','
      << (shared.blurry[0] ? 1 : 0) << '\n';
  for (std::size_t k = 0; k < 2; ++k)
    csv << "disjoint," << k << ',' << io::format_sig(disjoint.decoder_table(k, 0)) << ','
        << (disjoint.blurry[k] ? 1 : 0) << '\n';
  if (!out_dir.empty()) {
    io::atomic_write(out_dir + "/blurriness_table.csv", csv.str());
    io::atomic_write(out_dir + "/blurriness_summary.json", doc.dump(2) + "\n");
  } else {
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int cmd_experiment_fragility(double epsilon, const std::string& out_dir) {
  FragilityGeometry geom{{0.0, 0.0}, {4.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  FragilityResult base = dual_fragility(geom, 0.0);
  FragilityResult bumped = dual_fragility(geom, epsilon);
  io::json doc{{"epsilon_zero", io::fragility_to_json(base)},
               {"epsilon", io::fragility_to_json(bumped)}};
  if (!out_dir.empty())
    io::atomic_write(out_dir + "/fragility.json", doc.dump(2) + "\n");
  else
    std::cout << doc.dump(2) << "\n";
  bool ok = bumped.suboptimality <= epsilon && bumped.cosine <= 0.0 &&
            bumped.lipschitz_violation <= 1e-6;
  return ok ? 0 : 1;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  TrainConfig cfg = io::config_from_json(io::json::parse(io::read_file(config_path)));
  TrainOutput out = train(cfg, out_dir);
  const MetricsRow& last = out.metrics.back();
  std::cout << "{\"final_step\": " << last.step
            << ", \"w_eval\": " << io::format_sig(last.w_eval) << "}\n";
  return 0;
}

int cmd_evaluate(const std::string& ckpt_prefix, const std::string& config_path,
                 std::size_t n_eval, std::uint64_t seed) {
  TrainConfig cfg = io::config_from_json(io::json::parse(io::read_file(config_path)));
  MlpNet dec = io::load_checkpoint(ckpt_prefix);
  Rng rng(seed);
  MetricsRow row = evaluate(dec, cfg.dataset, cfg.cost, n_eval, rng);
  std::cout << "{\"w_eval\": " << io::format_sig(row.w_eval) << "}\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& lambda_list, const std::string& sigma2_list) {
  if (lambda_list.empty() == sigma2_list.empty())
    throw std::invalid_argument("sweep: exactly one of --lambda/--sigma2 required");
  TrainConfig base = io::config_from_json(io::json::parse(io::read_file(config_path)));
  bool over_lambda = !lambda_list.empty();
  std::vector<double> values = parse_list(over_lambda ? lambda_list : sigma2_list);

  std::vector<TrainConfig> cfgs;
  std::vector<std::string> dirs;
  for (double v : values) {
    TrainConfig c = base;
    if (over_lambda)
      c.lambda = v;
    else
      c.sigma2 = v;
    validate_config(c);
    cfgs.push_back(c);
    std::ostringstream dir;
    dir << out_dir << '/' << (over_lambda ? "lambda" : "sigma2") << '=' << v;
    dirs.push_back(dir.str());
  }

  std::vector<MetricsRow> finals(cfgs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(cfgs.size()); ++k) {
    auto i = static_cast<std::size_t>(k);
    TrainOutput out = train(cfgs[i], dirs[i]);
    finals[i] = out.metrics.back();
  }

  std::ostringstream csv;
  csv << (over_lambda ? "lambda" : "sigma2") << ",step,recon,penalty,total,w_eval\n";
  for (std::size_t i = 0; i < cfgs.size(); ++i)
    csv << values[i] << ',' << finals[i].step << ',' << io::format_sig(finals[i].recon)
        << ',' << io::format_sig(finals[i].penalty) << ','
        << io::format_sig(finals[i].total) << ',' << io::format_sig(finals[i].w_eval)
        << '\n';
  io::atomic_write(out_dir + "/summary.csv", csv.str());
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"potlab: exact optimal transport, penalized-OT training, and claim checks"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "exact OT between two measure files");
  std::string mu_path, nu_path, cost_flag = "euclidean", solve_out;
  solve->add_option("--mu", mu_path, "source measure json")->required();
  solve->add_option("--nu", nu_path, "target measure json")->required();
  solve->add_option("--cost", cost_flag, "euclidean|sq_euclidean");
  solve->add_option("--out", solve_out, "write plan + potentials json");

  // check
  auto* check = app.add_subcommand("check", "run a randomized verification suite");
  std::string check_name;
  std::size_t check_seeds = 20;
  std::uint64_t seed = 0;
  std::string check_out;
  check->add_option("name", check_name, "suite name")->required();
  check->add_option("--seeds", check_seeds, "number of instances");
  check->add_option("--seed", seed, "base seed (default 0)");
  check->add_option("--out", check_out, "report json path");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a named case study");
  std::string exp_name, exp_out;
  std::string sigma2_csv = "0.25,0.5,0.75";
  std::size_t n_mc = 10000;
  double epsilon = 0.01;
  exp->add_option("name", exp_name, "prop1|blurriness|fragility")->required();
  exp->add_option("--out", exp_out, "output directory");
  exp->add_option("--sigma2", sigma2_csv, "comma list (prop1)");
  exp->add_option("--n-mc", n_mc, "monte carlo samples (prop1)");
  exp->add_option("--epsilon", epsilon, "suboptimality budget (fragility)");
  exp->add_option("--seed", seed, "seed (default 0)");

  // train
  auto* tr = app.add_subcommand("train", "run a training config");
  std::string train_cfg, train_out;
  tr->add_option("--config", train_cfg, "config json")->required();
  tr->add_option("--out", train_out, "output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "exact-OT validation of a checkpoint");
  std::string ev_ckpt, ev_cfg;
  std::size_t ev_n = 512;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint prefix (no extension)")->required();
  ev->add_option("--config", ev_cfg, "config json")->required();
  ev->add_option("--n-eval", ev_n, "evaluation sample count");
  ev->add_option("--seed", seed, "seed (default 0)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "grid over lambda or sigma2");
  std::string sw_cfg, sw_out, sw_lambda, sw_sigma2;
  sw->add_option("--config", sw_cfg, "base config json")->required();
  sw->add_option("--out", sw_out, "output directory")->required();
  sw->add_option("--lambda", sw_lambda, "comma list of lambda values");
  sw->add_option("--sigma2", sw_sigma2, "comma list of sigma2 values");

  std::vector<std::string> argv(args);
  try {
    std::vector<const char*> cargv;
    cargv.push_back("potlab");
    for (const auto& a : argv) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << std::flush;
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(mu_path, nu_path, cost_flag, solve_out);
    if (check->parsed()) {
      if (check_seeds == 0) {
        std::cerr << "check: --seeds must be >= 1\n";
        return 2;
      }
      return cmd_check(check_name, check_seeds, seed, check_out);
    }
    if (exp->parsed()) {
      if (exp_name == "prop1")
        return cmd_experiment_prop1(parse_list(sigma2_csv), n_mc, seed, exp_out);
      if (exp_name == "blurriness") return cmd_experiment_blurriness(exp_out);
      if (exp_name == "fragility") return cmd_experiment_fragility(epsilon, exp_out);
      std::cerr << "unknown experiment '" << exp_name
                << "'; valid names: prop1 blurriness fragility\n";
      return 2;
    }
    if (tr->parsed()) return cmd_train(train_cfg, train_out);
    if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_cfg, ev_n, seed);
    if (sw->parsed()) return cmd_sweep(sw_cfg, sw_out, sw_lambda, sw_sigma2);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace potlab::cli
