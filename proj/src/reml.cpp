#include "remlkit/reml.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "remlkit/dense_oracle.hpp"

namespace remlkit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

RemlEvaluator::RemlEvaluator(const ModelSpec& model)
    : model_(&model), ctx_(model) {}

void RemlEvaluator::set_theta(const Theta& theta) {
  py_.reset();
  traces_.reset();
  have_theta_ = false;
  ctx_.set_theta(theta);
  theta_ = theta;
  have_theta_ = true;
}

const Eigen::VectorXd& RemlEvaluator::py() {
  if (!have_theta_) throw std::logic_error("reml: set_theta not called");
  if (!py_) py_ = ctx_.apply_p(model_->y);
  return *py_;
}

double RemlEvaluator::ypy() { return model_->y.dot(py()); }

const std::vector<double>& RemlEvaluator::trace_terms() {
  if (!traces_) {
    std::vector<double> t(model_->q());
    for (int k = 0; k < model_->q(); ++k) t[k] = ctx_.trace_p_hdot(k);
    traces_ = std::move(t);
  }
  return *traces_;
}

double RemlEvaluator::log_likelihood() {
  const double nv = model_->n - model_->p;
  return -0.5 * (nv * std::log(2.0 * kPi * theta_.sigma2) + ctx_.logdet_c() +
                 ctx_.logdet_g() + ypy() / theta_.sigma2);
}

ScoreVec RemlEvaluator::score() {
  const double s2 = theta_.sigma2;
  const double nv = model_->n - model_->p;
  ScoreVec s;
  s.s_sigma2 = -0.5 * (nv / s2 - ypy() / (s2 * s2));
  s.s_kappa.resize(model_->q());
  const Eigen::VectorXd& xi = py();
  const auto& tr = trace_terms();
  for (int k = 0; k < model_->q(); ++k) {
    const Eigen::VectorXd eta = hdot_matvec(*model_, k, xi);
    s.s_kappa[k] = -0.5 * (tr[k] - xi.dot(eta) / s2);
  }
  return s;
}

InfoMatrix RemlEvaluator::average_info() {
  const int q = model_->q();
  const double s2 = theta_.sigma2;
  const Eigen::VectorXd& xi = py();

  Eigen::MatrixXd eta(model_->n, q);
  for (int k = 0; k < q; ++k) eta.col(k) = hdot_matvec(*model_, k, xi);
  const Eigen::MatrixXd zeta = ctx_.apply_p_multi(eta);

  InfoMatrix info;
  info.kind = InfoKind::average;
  info.values.resize(1 + q, 1 + q);
  info.values(0, 0) = ypy() / (2.0 * s2 * s2 * s2);
  for (int i = 0; i < q; ++i) {
    info.values(0, 1 + i) = info.values(1 + i, 0) =
        xi.dot(eta.col(i)) / (2.0 * s2 * s2);
    for (int j = 0; j <= i; ++j)
      info.values(1 + i, 1 + j) = info.values(1 + j, 1 + i) =
          eta.col(i).dot(zeta.col(j)) / (2.0 * s2);
  }
  return info;
}

double RemlEvaluator::profile_sigma2() {
  const double s2 = ypy() / (model_->n - model_->p);
  if (s2 <= 0.0)
    std::fputs("remlkit: warning: degenerate fit, y^T P y = 0\n", stderr);
  return s2;
}

double log_likelihood(const ModelSpec& model, const Theta& theta) {
  RemlEvaluator ev(model);
  ev.set_theta(theta);
  return ev.log_likelihood();
}

ScoreVec score(const ModelSpec& model, const Theta& theta) {
  RemlEvaluator ev(model);
  ev.set_theta(theta);
  return ev.score();
}

InfoMatrix average_info(const ModelSpec& model, const Theta& theta) {
  RemlEvaluator ev(model);
  ev.set_theta(theta);
  return ev.average_info();
}

double profile_sigma2(const ModelSpec& model, const std::vector<double>& kappa) {
  RemlEvaluator ev(model);
  Theta th;
  th.sigma2 = 1.0;
  th.kappa = kappa;
  ev.set_theta(th);
  return ev.profile_sigma2();
}

InfoMatrix splitting_check(const ModelSpec& model, const Theta& theta,
                           int dense_threshold) {
  oracle::require_dense_scale(model.n, dense_threshold);
  const InfoMatrix observed = oracle::info_dense(model, theta, InfoKind::observed);
  const InfoMatrix fisher = oracle::info_dense(model, theta, InfoKind::fisher);
  const InfoMatrix average = average_info(model, theta);
  InfoMatrix rem;
  rem.kind = InfoKind::remainder;
  rem.values = 0.5 * (observed.values + fisher.values) - average.values;
  return rem;
}

namespace {

struct UpdateDirection {
  Eigen::VectorXd delta;  // full-length (1+q), zeros on frozen coordinates
  bool steepest = false;
};

// Solve info * delta = score on the free coordinates; one round of diagonal
// regularization before falling back to steepest ascent.
UpdateDirection solve_update(const Eigen::MatrixXd& info,
                             const Eigen::VectorXd& score,
                             const std::vector<int>& free) {
  const int nf = (int)free.size();
  Eigen::MatrixXd a(nf, nf);
  Eigen::VectorXd s(nf);
  for (int i = 0; i < nf; ++i) {
    s[i] = score[free[i]];
    for (int j = 0; j < nf; ++j) a(i, j) = info(free[i], free[j]);
  }

  UpdateDirection dir;
  dir.delta = Eigen::VectorXd::Zero(score.size());
  auto try_solve = [&](const Eigen::MatrixXd& mat, Eigen::VectorXd& out) {
    Eigen::LLT<Eigen::MatrixXd> llt(mat);
    if (llt.info() != Eigen::Success) return false;
    out = llt.solve(s);
    return out.allFinite();
  };

  Eigen::VectorXd d(nf);
  bool ok = try_solve(a, d);
  if (!ok) {
    const double ridge = 1e-8 * a.trace() / nf;
    ok = try_solve(a + ridge * Eigen::MatrixXd::Identity(nf, nf), d);
  }
  if (!ok) {
    d = s;  // steepest ascent
    dir.steepest = true;
  }
  for (int i = 0; i < nf; ++i) dir.delta[free[i]] = d[i];
  return dir;
}

Theta apply_step(const Theta& theta, const Eigen::VectorXd& delta, double alpha,
                 double kappa_min) {
  Theta out = theta;
  out.sigma2 += alpha * delta[0];
  for (std::size_t k = 0; k < out.kappa.size(); ++k) {
    out.kappa[k] += alpha * delta[1 + k];
    if (out.kappa[k] < kappa_min) out.kappa[k] = kappa_min;  // project onto domain
  }
  return out;
}

}  // namespace

FitResult fit(const ModelSpec& model, const FitOptions& opts) {
  const int q = model.q();
  if (opts.method != FitMethod::ai && model.n > opts.dense_threshold)
    throw std::invalid_argument(
        "fit: newton/fisher need the dense information matrix; n exceeds the "
        "dense threshold");

  RemlEvaluator ev(model);

  Theta theta;
  if (opts.theta0) {
    theta = *opts.theta0;
  } else {
    theta.kappa.assign(q, 0.1);
    const double var_y =
        (model.y.array() - model.y.mean()).square().sum() / (model.n - 1);
    theta.sigma2 = var_y / (1.0 + 0.1 * q);
    if (!(theta.sigma2 > 0.0)) theta.sigma2 = 1.0;
  }
  for (double& k : theta.kappa) k = std::max(k, opts.kappa_min);

  ev.set_theta(theta);
  if (opts.profile_sigma2) {
    const double s2 = ev.profile_sigma2();
    if (s2 > 0.0) {
      theta.sigma2 = s2;
      ev.set_theta(theta);  // P untouched, but keep evaluator state coherent
    }
  }
  double loglik = ev.log_likelihood();

  FitResult result;
  result.at_boundary.assign(q, false);
  std::vector<int> pinned_for(q, 0);

  bool converged = false;
  double prev_loglik = loglik;
  int accepted = 0;
  double score_norm = 0.0;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const ScoreVec s = ev.score();
    Eigen::VectorXd sfull = s.full();

    // Projected score: a coordinate pinned at the kappa floor with the
    // score pushing outward cannot move, so it does not count against
    // convergence (and is frozen out of the update).
    std::vector<int> free;
    if (!opts.profile_sigma2) free.push_back(0);
    Eigen::VectorXd sproj = sfull;
    if (opts.profile_sigma2) sproj[0] = 0.0;  // zero by construction
    for (int k = 0; k < q; ++k) {
      const bool pinned = theta.kappa[k] <= opts.kappa_min && sfull[1 + k] < 0.0;
      if (pinned)
        sproj[1 + k] = 0.0;
      else
        free.push_back(1 + k);
    }
    score_norm = sproj.cwiseAbs().maxCoeff();

    const double tol_s = opts.tol_score * (1.0 + std::fabs(loglik));
    if (score_norm < tol_s &&
        (iter == 1 || std::fabs(loglik - prev_loglik) < opts.tol_loglik)) {
      converged = true;
      break;
    }
    if (free.empty()) break;

    Eigen::MatrixXd info;
    switch (opts.method) {
      case FitMethod::ai:
        info = ev.average_info().values;
        break;
      case FitMethod::fisher:
        info = oracle::info_dense(model, theta, InfoKind::fisher).values;
        break;
      case FitMethod::newton:
        info = oracle::info_dense(model, theta, InfoKind::observed).values;
        break;
    }
    if (opts.profile_sigma2 && info(0, 0) > 0.0) {
      // curvature of the profiled likelihood: Schur complement removing the
      // sigma^2 row/column (the raw kappa block badly over-damps the step
      // when sigma^2 and kappa are strongly coupled)
      info.block(1, 1, q, q) -=
          info.block(1, 0, q, 1) * info.block(0, 1, 1, q) / info(0, 0);
    }
    const UpdateDirection dir = solve_update(info, sfull, free);

    // Step halving until the restricted log-likelihood does not decrease.
    prev_loglik = loglik;
    double alpha = 1.0;
    int halvings = 0;
    bool accepted_step = false;
    for (; halvings <= opts.max_halvings; ++halvings, alpha *= 0.5) {
      Theta trial = apply_step(theta, dir.delta, alpha, opts.kappa_min);
      if (!(trial.sigma2 > 0.0)) continue;  // left the domain
      try {
        ev.set_theta(trial);
      } catch (const NotPositiveDefinite&) {
        continue;
      }
      if (opts.profile_sigma2) {
        const double s2 = ev.profile_sigma2();
        if (s2 > 0.0) {
          trial.sigma2 = s2;
          ev.set_theta(trial);
        }
      }
      const double trial_ll = ev.log_likelihood();
      if (trial_ll >= loglik - 1e-12) {
        theta = trial;
        loglik = trial_ll;
        accepted_step = true;
        break;
      }
    }
    if (!accepted_step) {
      ev.set_theta(theta);  // restore; no uphill step found
      converged = score_norm < tol_s;
      break;
    }

    ++accepted;
    for (int k = 0; k < q; ++k) {
      pinned_for[k] = theta.kappa[k] <= opts.kappa_min ? pinned_for[k] + 1 : 0;
      if (pinned_for[k] >= 3) result.at_boundary[k] = true;
    }

    IterRecord rec;
    rec.iter = iter;
    rec.theta = theta;
    rec.loglik = loglik;
    rec.score_norm = score_norm;
    rec.halvings = halvings;
    rec.steepest_ascent = dir.steepest;
    result.trace.push_back(rec);
  }

  result.theta_hat = theta;
  result.loglik = loglik;
  result.iterations = accepted;
  result.converged = converged;
  result.final_score_norm = score_norm;
  result.final_info = ev.average_info();
  {
    Eigen::MatrixXd cov =
        result.final_info.values.ldlt().solve(
            Eigen::MatrixXd::Identity(1 + q, 1 + q));
    result.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return result;
}

}  // namespace remlkit
