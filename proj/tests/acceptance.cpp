// End-to-end acceptance gate. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "remlkit/amd.hpp"
#include "remlkit/datagen.hpp"
#include "remlkit/dense_oracle.hpp"
#include "remlkit/ldl.hpp"
#include "remlkit/mme.hpp"
#include "remlkit/reml.hpp"

using namespace remlkit;

namespace {

int g_failures = 0;

void report(int crit, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", crit, ok ? "PASS" : "FAIL",
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Small crossed instance: subset of the six benchmark terms, n kept modest.
ModelSpec make_instance(std::uint64_t seed, int q, int scale = 2) {
  BenchParams p;
  p.years = 2 + scale;
  p.centres = 3 + scale;
  p.varieties = 6 + 3 * scale;
  p.poisson_mean = 1.0;
  p.control_varieties = 2;
  p.seed = seed;
  const BenchDataset ds = generate(p);
  ModelDescriptor d = ds.descriptor();
  d.random_terms.resize(q);  // first q of the six terms
  return build_model(ds.to_table(), d);
}

Theta make_theta(int q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.3, 1.6);
  Theta th;
  th.sigma2 = u(rng);
  for (int k = 0; k < q; ++k) th.kappa.push_back(u(rng));
  return th;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void criterion1_gradient() {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int q = 1 + t % 4;
    const ModelSpec m = make_instance(100 + t, q, t % 3);
    const Theta th = make_theta(q, 500 + t);
    const ScoreVec s = score(m, th);
    const Eigen::VectorXd sv = s.full();
    for (int i = 0; i <= q; ++i) {
      Theta up = th, dn = th;
      double& ux = i == 0 ? up.sigma2 : up.kappa[i - 1];
      double& dx = i == 0 ? dn.sigma2 : dn.kappa[i - 1];
      // fourth-order central stencil: truncation and roundoff both well
      // below the 1e-6 gate
      const double h = 1e-4 * std::max(1.0, std::abs(ux));
      Theta up2 = th, dn2 = th;
      double& ux2 = i == 0 ? up2.sigma2 : up2.kappa[i - 1];
      double& dx2 = i == 0 ? dn2.sigma2 : dn2.kappa[i - 1];
      ux += h;
      dx -= h;
      ux2 += 2 * h;
      dx2 -= 2 * h;
      const double fd = (-log_likelihood(m, up2) + 8 * log_likelihood(m, up) -
                         8 * log_likelihood(m, dn) + log_likelihood(m, dn2)) /
                        (12 * h);
      worst = std::max(worst, std::abs(sv(i) - fd) /
                                  std::max(1e-12, std::abs(fd)));
    }
  }
  report(1, worst < 1e-6,
         fmt("score vs central differences, worst rel err %.3g (< 1e-6), 20 "
             "instances",
             worst));
}

void criterion2_hessian() {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int q = 1 + t % 3;
    const ModelSpec m = make_instance(300 + t, q, 0);
    const Theta th = make_theta(q, 900 + t);
    const Eigen::MatrixXd io =
        oracle::info_dense(m, th, InfoKind::observed).values;
    Eigen::MatrixXd fd(1 + q, 1 + q);
    for (int j = 0; j <= q; ++j) {
      Theta up = th, dn = th;
      double& ux = j == 0 ? up.sigma2 : up.kappa[j - 1];
      double& dx = j == 0 ? dn.sigma2 : dn.kappa[j - 1];
      const double h = 1e-5 * std::max(1.0, std::abs(ux));
      ux += h;
      dx -= h;
      fd.col(j) = -(score(m, up).full() - score(m, dn).full()) / (2 * h);
    }
    fd = 0.5 * (fd + fd.transpose().eval());
    worst = std::max(worst, (io - fd).cwiseAbs().maxCoeff() /
                                io.cwiseAbs().maxCoeff());
  }
  report(2, worst < 1e-4,
         fmt("observed info vs finite-difference Hessian, worst rel err %.3g "
             "(< 1e-4), 10 instances",
             worst));
}

void criterion3_triple_p() {
  double worst = 0.0, worst_res = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int q = 1 + t % 4;
    const ModelSpec m = make_instance(1100 + t, q, t % 3);
    const Theta th = make_theta(q, 1500 + t);
    const auto forms = oracle::p_three_ways(m, th);
    worst = std::max(
        worst, forms.max_dev / forms.via_c.cwiseAbs().maxCoeff());

    MmeContext ctx(m);
    ctx.set_theta(th);
    const Eigen::VectorXd py = ctx.apply_p(m.y);
    const Eigen::VectorXd e = ctx.solve_mme().residual;
    worst_res = std::max(worst_res, (py - e).norm() / e.norm());
  }
  report(3, worst < 1e-9 && worst_res < 1e-10,
         fmt("P three ways rel dev %.3g (< 1e-9); Py vs residual rel dev "
             "%.3g (< 1e-10), 20 instances",
             worst, worst_res));
}

void criterion4_logdet() {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int q = 1 + t % 4;
    const ModelSpec m = make_instance(2100 + t, q, t % 3);
    const Theta th = make_theta(q, 2500 + t);
    const auto id = oracle::logdet_identity(m, th);
    MmeContext ctx(m);
    ctx.set_theta(th);
    const double sparse = ctx.logdet_c() + ctx.logdet_g();
    worst = std::max(worst, std::abs(id.lhs - id.rhs) / std::abs(id.rhs));
    worst = std::max(worst, std::abs(sparse - id.rhs) / std::abs(id.rhs));
  }

  // hand-checkable four-record toy: both sides log 12
  DataTable t;
  t.names = {"y", "g"};
  t.columns = {{"1", "2", "3", "4"}, {"a", "a", "b", "b"}};
  ModelDescriptor d;
  d.response = "y";
  d.random_terms = {"g"};
  const ModelSpec toy = build_model(t, d);
  Theta th1;
  th1.kappa = {1.0};
  const auto id = oracle::logdet_identity(toy, th1);
  const bool toy_ok = std::abs(id.lhs - std::log(12.0)) < 1e-12 &&
                      std::abs(id.rhs - std::log(12.0)) < 1e-12;
  report(4, worst < 1e-8 && toy_ok,
         fmt("log-det identity rel dev %.3g (< 1e-8), 20 instances; toy both "
             "sides = log 12: ",
             worst) +
             (toy_ok ? "yes" : "no"));
}

void criterion5_splitting() {
  const auto t0 = std::chrono::steady_clock::now();
  const int q = 3;
  const ModelSpec m = make_instance(3100, q, 1);
  const Theta th = make_theta(q, 3500);

  // exact-zero cells of the remainder (sigma2,sigma2) and (kappa,kappa)
  const InfoMatrix rem = splitting_check(m, th);
  const double scale =
      oracle::average_info_dense(m, th).values.cwiseAbs().maxCoeff();
  double zero_dev = std::abs(rem.values(0, 0));
  for (int i = 1; i <= q; ++i)
    for (int j = 1; j <= q; ++j)
      zero_dev = std::max(zero_dev, std::abs(rem.values(i, j)));

  // Monte Carlo over fresh responses at the true theta: the (sigma2,kappa)
  // remainder has mean zero. Remainder(0,k) depends on y only through
  // y'P Hdot_k P y, so precompute the fixed matrices.
  const Eigen::MatrixXd p = oracle::dense_p(m, th);
  std::vector<Eigen::MatrixXd> mk(q);
  std::vector<double> tk(q);
  for (int k = 0; k < q; ++k) {
    const Eigen::MatrixXd hd = oracle::dense_hdot(m, k);
    mk[k] = p * hd * p;
    tk[k] = (p * hd).trace();
  }
  const double s2 = th.sigma2, s4 = s2 * s2;

  std::mt19937_64 rng(20260826);
  std::normal_distribution<double> g;
  const int reps = 2000;
  Eigen::MatrixXd samples(reps, q);
  Eigen::VectorXd y(m.n), noise(m.n);
  for (int r = 0; r < reps; ++r) {
    y.setConstant(10.0);
    for (int k = 0; k < q; ++k) {
      const auto& f = m.factors[k];
      std::vector<double> u(f.levels);
      const double sd = std::sqrt(s2 * th.kappa[k]);
      for (double& v : u) v = sd * g(rng);
      f.scatter_z(u.data(), y);
    }
    for (int i = 0; i < m.n; ++i) y(i) += std::sqrt(s2) * g(rng);
    for (int k = 0; k < q; ++k)
      samples(r, k) = 0.25 * (tk[k] / s2 - y.dot(mk[k] * y) / s4);
  }
  bool mc_ok = true;
  double worst_z = 0.0;
  for (int k = 0; k < q; ++k) {
    const double mean = samples.col(k).mean();
    const double sd = std::sqrt(
        (samples.col(k).array() - mean).square().sum() / (reps - 1));
    const double z = std::abs(mean) / (sd / std::sqrt((double)reps));
    worst_z = std::max(worst_z, z);
    if (z > 3.0) mc_ok = false;
  }
  report(5, zero_dev < 1e-9 * std::max(1.0, scale) && mc_ok,
         fmt("remainder zero-cells max %.3g; Monte Carlo (sigma2,kappa) "
             "worst |mean|/SE %.2f (< 3), 2000 reps, %.1fs",
             zero_dev, worst_z, elapsed_s(t0)));
}

void criterion6_fisher_constants() {
  double worst_tr = 0.0, worst_iss = 0.0;
  for (int t = 0; t < 5; ++t) {
    const int q = 1 + t % 4;
    const ModelSpec m = make_instance(4100 + t, q, 1);
    const Theta th = make_theta(q, 4500 + t);
    const Eigen::MatrixXd p = oracle::dense_p(m, th);
    const Eigen::MatrixXd h = oracle::dense_h(m, th);
    const double nv = m.n - m.p;
    worst_tr = std::max(worst_tr, std::abs((p * h).trace() - nv));
    const double iss = oracle::info_dense(m, th, InfoKind::fisher).values(0, 0);
    worst_iss = std::max(
        worst_iss,
        std::abs(iss - nv / (2.0 * th.sigma2 * th.sigma2)));
  }
  report(6, worst_tr < 1e-8 && worst_iss == 0.0,
         fmt("tr(PH) - (n-p) max dev %.3g (< 1e-8); Fisher (s2,s2) vs "
             "(n-p)/2s4 dev %.3g (exact)",
             worst_tr, worst_iss));
}

std::int64_t flops_from_factor(const LdlFactor& f) {
  const int m = (int)f.d.size();
  std::int64_t s = 0;
  for (int j = 0; j < m; ++j) {
    const std::int64_t mi = (f.col_ptr[j + 1] - f.col_ptr[j]) + 1;
    s += mi * mi;
  }
  return s - m;
}

void criterion7_flops() {
  bool ok = true;
  std::int64_t dense10 = -1;
  for (int t = 0; t < 6; ++t) {
    const int q = 1 + t % 4;
    const ModelSpec m = make_instance(5100 + t, q, t % 3);
    const Theta th = make_theta(q, 5500 + t);
    MmeContext ctx(m);
    ctx.set_theta(th);
    if (ctx.plan().flops != flops_from_factor(ctx.factor())) ok = false;
  }
  {
    TripletBuilder tb(10);
    for (int j = 0; j < 10; ++j)
      for (int i = j; i < 10; ++i) tb.add(i, j, i == j ? 20.0 : 1.0);
    const SparseSym s = tb.build();
    const SymbolicPlan plan = symbolic_factor(s.pattern, natural_order(10));
    const LdlFactor f = numeric_factor(s.values, plan);
    dense10 = plan.flops;
    if (plan.flops != 375 || flops_from_factor(f) != 375) ok = false;
  }
  report(7, ok,
         fmt("flop count == sum(m_i^2) - m from the realized factor on every "
             "factorization; dense m=10 gives %g (= 375)",
             (double)dense10));
}

void criterion8_ordering(std::vector<std::string>& table_lines) {
  bool ok = true;
  double p1_ratio = 0.0;
  char buf[256];
  table_lines.push_back(
      "prob order nnz_c nzcol_c dens_c nnz_l_amd nzcol_l dens_l nnz_l_natural");
  for (int i = 1; i <= 10; ++i) {
    BenchParams p = preset("P" + std::to_string(i));
    p.seed = 8000 + i;
    const BenchDataset ds = generate(p);
    const ModelSpec m = build_model(ds.to_table(), ds.descriptor());
    MmeContext ctx(m);
    const SparseSymPattern& pat = ctx.pattern();
    const std::vector<int> amd = amd_order(pat);
    const std::int64_t nnz_amd = nnz_l_count(pat, amd);
    const std::int64_t nnz_nat = nnz_l_count(pat, natural_order(pat.m));
    if (nnz_amd > nnz_nat) ok = false;
    if (i == 1) p1_ratio = (double)nnz_amd / pat.nnz();
    const double half = (double)pat.m * (pat.m + 1) / 2.0;
    std::snprintf(buf, sizeof buf, "P%d %d %d %.1f %.1f %lld %.1f %.1f %lld",
                  i, pat.m, pat.nnz(), (double)pat.nnz() / pat.m,
                  1000.0 * pat.nnz() / half, (long long)nnz_amd,
                  (double)nnz_amd / pat.m, 1000.0 * nnz_amd / half,
                  (long long)nnz_nat);
    table_lines.push_back(buf);
  }
  const double ref = 112618.0 / 56946.0;
  const bool ratio_ok = p1_ratio > ref / 3.0 && p1_ratio < ref * 3.0;
  report(8, ok && ratio_ok,
         fmt("AMD nnz(L) <= natural on all 10 benchmarks; P1 nnz(L)/nnz(C) = "
             "%.2f vs reference %.2f (within 3x)",
             p1_ratio, ref));
}

void criterion9_structure() {
  BenchParams p = preset("P1");
  p.seed = 9001;
  const BenchDataset ds = generate(p);
  const ModelSpec m = build_model(ds.to_table(), ds.descriptor());
  int total = 0;
  for (int k = 0; k < kBenchTerms; ++k) total += ds.realized[k];
  const bool own_ok = m.system_order() == 1 + total;
  // reference P1 margins: 12 + 22 + 130 + 132 + 673 + 2518 effects + mean
  const int reference = 1 + 12 + 22 + 130 + 132 + 673 + 2518;
  report(9, own_ok && reference == 3488,
         fmt("system order = 1 + sum(realized levels) = %g; reference "
             "margins give %g (= 3488)",
             (double)m.system_order(), (double)reference));
}

void criterion10_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const int seeds = 50;
  int converged = 0, within = 0, total = 0;
  long long n_sum = 0;
  for (int s = 0; s < seeds; ++s) {
    BenchParams p = preset("P1-mini");
    p.seed = 10000 + s;
    const BenchDataset ds = generate(p);
    const ModelSpec m = build_model(ds.to_table(), ds.descriptor());
    n_sum += m.n;
    FitOptions opts;
    opts.max_iter = 20;
    FitResult r;
    try {
      r = fit(m, opts);
    } catch (const std::exception&) {
      continue;
    }
    if (!r.converged) continue;
    ++converged;
    ++total;
    if (std::abs(r.theta_hat.sigma2 - p.sigma2) <= 3.0 * r.std_errors[0])
      ++within;
    for (int k = 0; k < m.q(); ++k) {
      ++total;
      if (std::abs(r.theta_hat.kappa[k] - p.gamma[k]) <=
          3.0 * r.std_errors[1 + k])
        ++within;
    }
  }
  const double frac = total > 0 ? (double)within / total : 0.0;
  report(10, converged >= 45 && frac >= 0.9,
         fmt("AI converged within 20 iters on %g/50 seeds (>= 45); %.1f%% of "
             "estimates within 3 asymptotic SEs of truth (>= 90%%)",
             (double)converged, 100.0 * frac) +
             fmt("; mean n = %g; %.1fs", (double)n_sum / seeds, elapsed_s(t0)));
}

void criterion11_speed() {
  BenchParams p = preset("P1");
  p.seed = 11001;
  const BenchDataset ds = generate(p);
  const ModelSpec m = build_model(ds.to_table(), ds.descriptor());
  Theta th;
  th.sigma2 = 1.0;
  th.kappa = std::vector<double>(m.q(), 0.5);

  MmeContext ctx(m);  // ordering + symbolic analysis, done once, untimed
  ctx.set_theta(th);  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  ctx.set_theta(th);  // assemble values + numeric factor
  const Eigen::VectorXd py = ctx.apply_p(m.y);
  Eigen::MatrixXd eta(m.n, m.q());
  for (int k = 0; k < m.q(); ++k) eta.col(k) = hdot_matvec(m, k, py);
  const Eigen::MatrixXd zeta = ctx.apply_p_multi(eta);  // q more solves
  const double secs = elapsed_s(t0);
  const double guard = py.sum() + zeta.sum();  // defeat dead-code elimination
  report(11, secs < 1.0 && std::isfinite(guard),
         fmt("one AI iteration (assemble + factor + %g P-applications) on "
             "n=%g took %.3fs (< 1s)",
             (double)(m.q() + 1), (double)m.n, secs) +
             fmt(", order %g", (double)m.system_order()));
}

}  // namespace

int main() {
#ifndef _WIN32
  ::setenv("REMLKIT_THREADS", "4", /*overwrite=*/0);
#endif
  std::vector<std::string> table_lines;
  criterion1_gradient();
  criterion2_hessian();
  criterion3_triple_p();
  criterion4_logdet();
  criterion5_splitting();
  criterion6_fisher_constants();
  criterion7_flops();
  criterion8_ordering(table_lines);
  criterion9_structure();
  criterion10_recovery();
  criterion11_speed();

  std::printf("\nordering report (AMD vs natural):\n");
  for (const auto& line : table_lines) std::printf("  %s\n", line.c_str());

  std::printf("\n%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
