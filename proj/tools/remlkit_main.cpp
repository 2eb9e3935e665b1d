// remlkit: simulate variety-trial benchmarks, fit variance components by
// REML (Newton / Fisher scoring / average information), evaluate the
// restricted log-likelihood, and report LDL^T factorization statistics.
//
// Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 rank-deficient X.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "remlkit/amd.hpp"
#include "remlkit/datagen.hpp"
#include "remlkit/dense_oracle.hpp"
#include "remlkit/ldl.hpp"
#include "remlkit/mme.hpp"
#include "remlkit/model.hpp"
#include "remlkit/reml.hpp"

namespace {

using namespace remlkit;

struct CommonOpts {
  std::string data_path, model_path;
  double sigma2 = 1.0;
  std::vector<double> kappa;
  std::string ordering = "amd";
};

ModelSpec load_model(const CommonOpts& o) {
  const DataTable table = DataTable::read_csv(o.data_path);
  const ModelDescriptor desc = ModelDescriptor::parse_file(o.model_path);
  return build_model(table, desc);
}

Theta theta_from(const CommonOpts& o, int q) {
  Theta th;
  th.sigma2 = o.sigma2;
  th.kappa = o.kappa.empty() ? std::vector<double>(q, 1.0) : o.kappa;
  if ((int)th.kappa.size() != q)
    throw std::invalid_argument("expected " + std::to_string(q) + " kappa values");
  return th;
}

int cmd_simulate(const std::string& params_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed) {
  BenchParams params = parse_params_json(params_path);
  if (has_seed) params.seed = seed_override;
  const BenchDataset ds = generate(params);
  std::filesystem::create_directories(out_dir);
  ds.to_table().write_csv(out_dir + "/data.csv");
  ds.write_metadata(out_dir + "/metadata.json");
  {
    std::ofstream os(out_dir + "/model.desc");
    os << "response = response\n"
       << "random =";
    for (const char* t : kBenchTermNames) os << " " << t;
    os << "\n";
  }
  const BenchSummary s = summarize(ds);
  std::cout << "units=" << s.units << "\n"
            << "summary=" << s.to_line() << "\n";
  return 0;
}

void print_trace_line(std::ostream& os, const IterRecord& rec) {
  nlohmann::json j;
  j["iter"] = rec.iter;
  j["sigma2"] = rec.theta.sigma2;
  j["kappa"] = rec.theta.kappa;
  j["loglik"] = rec.loglik;
  j["score_norm"] = rec.score_norm;
  j["halvings"] = rec.halvings;
  if (rec.steepest_ascent) j["steepest_ascent"] = true;
  os << j.dump() << "\n";
}

int cmd_fit(const CommonOpts& o, const FitOptions& opts,
            const std::string& out_path) {
  const ModelSpec model = load_model(o);
  const FitResult result = fit(model, opts);

  std::cout << "converged=" << (result.converged ? 1 : 0) << "\n"
            << "iterations=" << result.iterations << "\n"
            << "loglik=" << result.loglik << "\n"
            << "score_norm=" << result.final_score_norm << "\n"
            << "sigma2=" << result.theta_hat.sigma2 << " se="
            << result.std_errors[0] << "\n";
  for (int k = 0; k < model.q(); ++k)
    std::cout << "kappa." << model.factors[k].name << "="
              << result.theta_hat.kappa[k] << " se=" << result.std_errors[1 + k]
              << (result.at_boundary[k] ? " at_boundary=1" : "") << "\n";

  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open for write: " + out_path);
    for (const auto& rec : result.trace) print_trace_line(os, rec);
  } else {
    for (const auto& rec : result.trace) print_trace_line(std::cerr, rec);
  }
  return result.converged ? 0 : 3;
}

int cmd_loglik(const CommonOpts& o) {
  const ModelSpec model = load_model(o);
  const Theta theta = theta_from(o, model.q());
  RemlEvaluator ev(model);
  ev.set_theta(theta);
  const double nv = model.n - model.p;
  std::cout.precision(12);
  std::cout << "loglik=" << ev.log_likelihood() << "\n"
            << "const=" << nv * std::log(2.0 * 3.14159265358979323846 * theta.sigma2)
            << "\n"
            << "logdet_c=" << ev.mme().logdet_c() << "\n"
            << "logdet_g=" << ev.mme().logdet_g() << "\n"
            << "ypy_over_sigma2=" << ev.ypy() / theta.sigma2 << "\n";
  return 0;
}

int cmd_factor_stats(const CommonOpts& o, const std::string& dump_prefix) {
  const ModelSpec model = load_model(o);
  const Theta theta = theta_from(o, model.q());
  using clock = std::chrono::steady_clock;

  MmeContext probe(model, /*use_amd=*/false);  // pattern only
  const SparseSymPattern& pat = probe.pattern();

  const auto t0 = clock::now();
  const std::vector<int> perm =
      o.ordering == "natural" ? natural_order(pat.m) : amd_order(pat);
  const auto t1 = clock::now();
  const SymbolicPlan plan = symbolic_factor(pat, perm);

  MmeContext ctx(model, o.ordering != "natural");
  const auto t2 = clock::now();
  ctx.set_theta(theta);
  const auto t3 = clock::now();

  const double density_c =
      1000.0 * pat.nnz() / ((double)pat.m * (pat.m + 1) / 2.0);
  const double density_l =
      1000.0 * plan.nnz_l / ((double)pat.m * (pat.m + 1) / 2.0);
  std::cout << "order=" << pat.m << "\n"
            << "nnz_c=" << pat.nnz() << "\n"
            << "nz_per_col_c=" << (double)pat.nnz() / pat.m << "\n"
            << "density_c_permille=" << density_c << "\n"
            << "nnz_l=" << plan.nnz_l << "\n"
            << "nz_per_col_l=" << (double)plan.nnz_l / pat.m << "\n"
            << "density_l_permille=" << density_l << "\n"
            << "flops=" << plan.flops << "\n"
            << "ordering=" << o.ordering << "\n"
            << "order_time_s="
            << std::chrono::duration<double>(t1 - t0).count() << "\n"
            << "factor_time_s="
            << std::chrono::duration<double>(t3 - t2).count() << "\n";
  if (!dump_prefix.empty())
    ctx.dump(dump_prefix + "_c.mtx", dump_prefix + "_rhs.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"REML variance-component estimation for linear mixed models"};
  app.require_subcommand(1);

  CommonOpts common;
  FitOptions fit_opts;
  std::string params_path, out_path, dump_prefix;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string method = "ai";
  bool no_profile = false;

  auto add_common = [&](CLI::App* sub, bool with_theta) {
    sub->add_option("data", common.data_path, "input CSV")->required();
    sub->add_option("model", common.model_path, "model descriptor")->required();
    if (with_theta) {
      sub->add_option("--sigma2", common.sigma2, "residual variance");
      sub->add_option("--kappa", common.kappa, "variance ratios (one per term)");
    }
  };

  auto* sim = app.add_subcommand("simulate", "generate a benchmark dataset");
  std::string sim_out = ".";
  sim->add_option("params", params_path, "JSON parameter file")->required();
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
    has_seed = true;
  });

  auto* fitc = app.add_subcommand("fit", "fit variance components by REML");
  add_common(fitc, false);
  fitc->add_option("--method", method, "ai|fisher|newton");
  fitc->add_option("--max-iter", fit_opts.max_iter, "iteration cap");
  fitc->add_option("--tol-score", fit_opts.tol_score, "score tolerance");
  fitc->add_option("--tol-loglik", fit_opts.tol_loglik, "loglik-change tolerance");
  fitc->add_flag("--no-profile-sigma2", no_profile,
                 "keep sigma2 as a Newton coordinate instead of profiling");
  fitc->add_flag("--profile-sigma2", [](std::int64_t) {},
                 "profile sigma2 between kappa updates (default)");
  fitc->add_option("--dense-threshold", fit_opts.dense_threshold,
                   "max n for newton/fisher");
  fitc->add_option("--out", out_path, "trace output file (JSON lines)");

  auto* llc = app.add_subcommand("loglik", "evaluate the restricted log-likelihood");
  add_common(llc, true);

  auto* fsc = app.add_subcommand("factor-stats", "LDL^T factorization statistics");
  add_common(fsc, true);
  fsc->add_option("--ordering", common.ordering, "amd|natural")
      ->check(CLI::IsMember({"amd", "natural"}));
  fsc->add_option("--dump", dump_prefix, "dump C and rhs with this path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(params_path, sim_out, seed, has_seed);
    if (fitc->parsed()) {
      if (method == "ai")
        fit_opts.method = FitMethod::ai;
      else if (method == "fisher")
        fit_opts.method = FitMethod::fisher;
      else if (method == "newton")
        fit_opts.method = FitMethod::newton;
      else
        throw std::invalid_argument("unknown method '" + method + "'");
      fit_opts.profile_sigma2 = !no_profile;
      return cmd_fit(common, fit_opts, out_path);
    }
    if (llc->parsed()) return cmd_loglik(common);
    if (fsc->parsed()) return cmd_factor_stats(common, dump_prefix);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::cerr << "remlkit: " << what << "\n";
    if (what.find("rank deficient") != std::string::npos) return 4;
    return 2;
  }
  return 2;
}
