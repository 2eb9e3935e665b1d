#include "remlkit/dense_oracle.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace remlkit::oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

double spd_logdet(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}
}  // namespace

void require_dense_scale(int n, int threshold) {
  if (n > threshold)
    throw std::invalid_argument("dense oracle: n exceeds dense threshold (" +
                                std::to_string(n) + " > " +
                                std::to_string(threshold) + ")");
}

Eigen::MatrixXd dense_z(const ModelSpec& model) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(model.n, model.total_levels());
  int off = 0;
  for (const auto& f : model.factors) {
    for (int r = 0; r < model.n; ++r)
      if (f.level_of_row[r] >= 0) z(r, off + f.level_of_row[r]) = 1.0;
    off += f.levels;
  }
  return z;
}

Eigen::MatrixXd dense_h(const ModelSpec& model, const Theta& theta) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(model.n, model.n);
  for (int k = 0; k < model.q(); ++k)
    h += theta.kappa[k] * dense_hdot(model, k);
  return h;
}

Eigen::MatrixXd dense_hdot(const ModelSpec& model, int k) {
  if (k < 0 || k >= model.q())
    throw std::invalid_argument("dense_hdot: k out of range");
  const auto& f = model.factors[k];
  Eigen::MatrixXd zk = Eigen::MatrixXd::Zero(model.n, f.levels);
  for (int r = 0; r < model.n; ++r)
    if (f.level_of_row[r] >= 0) zk(r, f.level_of_row[r]) = 1.0;
  return zk * zk.transpose();
}

Eigen::MatrixXd dense_c(const ModelSpec& model, const Theta& theta) {
  const Eigen::MatrixXd z = dense_z(model);
  const int p = model.p, b = (int)z.cols();
  Eigen::MatrixXd w(model.n, p + b);
  w << model.X, z;
  Eigen::MatrixXd c = w.transpose() * w;
  for (int k = 0; k < model.q(); ++k) {
    const int off = model.level_offset(k);
    for (int l = 0; l < model.factors[k].levels; ++l)
      c(off + l, off + l) += 1.0 / theta.kappa[k];
  }
  return c;
}

LBasis build_l_basis(const Eigen::MatrixXd& x) {
  const int n = (int)x.rows(), p = (int)x.cols();
  if (n <= p) throw std::invalid_argument("l_basis: n must exceed p");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_qr(x);
  if (rank_qr.rank() < p) throw std::invalid_argument("l_basis: X is rank deficient");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);

  LBasis lb;
  lb.k1 = qfull.leftCols(p);
  lb.k2 = qfull.rightCols(n - p);

  // L^T = [X, K2]^-1 (B = I), so L = [X, K2]^-T.
  Eigen::MatrixXd basis(n, n);
  basis << x, lb.k2;
  const Eigen::MatrixXd l =
      basis.transpose().partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  lb.l1 = l.leftCols(p);
  lb.l2 = l.rightCols(n - p);
  return lb;
}

double ProjectorReport::max_dev() const {
  return std::max(std::max(dev_k1k1, dev_k2k2), std::max(dev_l2form, dev_idem));
}

ProjectorReport projector_identities(const Eigen::MatrixXd& x) {
  const int n = (int)x.rows();
  const LBasis lb = build_l_basis(x);
  const Eigen::MatrixXd px =
      x * (x.transpose() * x).ldlt().solve(x.transpose());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  ProjectorReport rep;
  rep.dev_k1k1 = (px - lb.k1 * lb.k1.transpose()).cwiseAbs().maxCoeff();
  rep.dev_k2k2 = (eye - px - lb.k2 * lb.k2.transpose()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd l2form =
      lb.l2 * (lb.l2.transpose() * lb.l2).ldlt().solve(lb.l2.transpose());
  rep.dev_l2form = (eye - px - l2form).cwiseAbs().maxCoeff();
  rep.dev_idem = (px * px - px).cwiseAbs().maxCoeff();
  return rep;
}

Eigen::MatrixXd dense_p(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd hinv = spd_inverse(h, "H");
  const Eigen::MatrixXd hix = hinv * x;
  return hinv - hix * (x.transpose() * hix).ldlt().solve(hix.transpose());
}

Eigen::MatrixXd dense_p(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  return dense_p(model.X, dense_h(model, theta));
}

PForms p_three_ways(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const Eigen::MatrixXd h = dense_h(model, theta);
  PForms forms;
  forms.via_hinv = dense_p(model.X, h);

  const LBasis lb = build_l_basis(model.X);
  forms.via_l2 = lb.l2 *
                 (lb.l2.transpose() * h * lb.l2).ldlt().solve(lb.l2.transpose());

  const Eigen::MatrixXd z = dense_z(model);
  Eigen::MatrixXd w(model.n, model.p + z.cols());
  w << model.X, z;
  const Eigen::MatrixXd c = dense_c(model, theta);
  forms.via_c = Eigen::MatrixXd::Identity(model.n, model.n) -
                w * c.ldlt().solve(w.transpose());

  forms.max_dev = std::max(
      (forms.via_hinv - forms.via_l2).cwiseAbs().maxCoeff(),
      std::max((forms.via_hinv - forms.via_c).cwiseAbs().maxCoeff(),
               (forms.via_l2 - forms.via_c).cwiseAbs().maxCoeff()));
  return forms;
}

double p_equivalence(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd pa = dense_p(x, h);
  const LBasis lb = build_l_basis(x);
  const Eigen::MatrixXd pb =
      lb.l2 * (lb.l2.transpose() * h * lb.l2).ldlt().solve(lb.l2.transpose());
  return (pa - pb).cwiseAbs().maxCoeff();
}

double xhx_identity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd hinv = spd_inverse(h, "H");
  const Eigen::MatrixXd lhs =
      (x.transpose() * hinv * x).inverse();
  const LBasis lb = build_l_basis(x);
  const Eigen::MatrixXd hl2 = h * lb.l2;
  const Eigen::MatrixXd rhs =
      lb.l1.transpose() * h * lb.l1 -
      lb.l1.transpose() * hl2 *
          (lb.l2.transpose() * hl2).ldlt().solve(hl2.transpose() * lb.l1);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd woodbury_hinv(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const Eigen::MatrixXd z = dense_z(model);
  Eigen::MatrixXd inner = z.transpose() * z;
  for (int k = 0; k < model.q(); ++k) {
    const int off = model.level_offset(k) - model.p;
    for (int l = 0; l < model.factors[k].levels; ++l)
      inner(off + l, off + l) += 1.0 / theta.kappa[k];
  }
  return Eigen::MatrixXd::Identity(model.n, model.n) -
         z * inner.ldlt().solve(z.transpose());
}

CinvBlocks cinv_blocks(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const Eigen::MatrixXd z = dense_z(model);
  const int p = model.p, b = (int)z.cols();
  const Eigen::MatrixXd a = model.X.transpose() * model.X;      // X^T X
  const Eigen::MatrixXd bb = model.X.transpose() * z;           // X^T Z
  Eigen::MatrixXd d = z.transpose() * z;                        // Z^T Z + G^-1
  for (int k = 0; k < model.q(); ++k) {
    const int off = model.level_offset(k) - p;
    for (int l = 0; l < model.factors[k].levels; ++l)
      d(off + l, off + l) += 1.0 / theta.kappa[k];
  }
  const Eigen::MatrixXd dinv = spd_inverse(d, "D");
  CinvBlocks blocks;
  blocks.cxx = (a - bb * dinv * bb.transpose()).inverse();
  blocks.cxz = -blocks.cxx * bb * dinv;
  blocks.czx = blocks.cxz.transpose();
  blocks.czz = dinv + dinv * bb.transpose() * blocks.cxx * bb * dinv;
  (void)b;
  return blocks;
}

double ypy_l2(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const LBasis lb = build_l_basis(model.X);
  const Eigen::MatrixXd h = dense_h(model, theta);
  const Eigen::VectorXd y2 = lb.l2.transpose() * model.y;
  return y2.dot((lb.l2.transpose() * h * lb.l2).ldlt().solve(y2));
}

double log_likelihood_l2(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const LBasis lb = build_l_basis(model.X);
  const Eigen::MatrixXd h = dense_h(model, theta);
  const Eigen::MatrixXd l2hl2 = lb.l2.transpose() * h * lb.l2;
  const Eigen::VectorXd y2 = lb.l2.transpose() * model.y;
  const double nv = model.n - model.p;
  // log|L2^T H L2| = log|H| + log|X^T H^-1 X| + log|L^T L|; the last term
  // is a theta-independent constant of the contrast basis, removed here so
  // this route matches the closed form exactly rather than up to a shift.
  Eigen::MatrixXd lmat(model.n, model.n);
  lmat << lb.l1, lb.l2;
  const double logdet_ltl = spd_logdet(lmat.transpose() * lmat, "L^T L");
  return -0.5 * (nv * std::log(2.0 * kPi * theta.sigma2) +
                 spd_logdet(l2hl2, "L2^T H L2") - logdet_ltl +
                 y2.dot(l2hl2.ldlt().solve(y2)) / theta.sigma2);
}

LogdetIdentity logdet_identity(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const Eigen::MatrixXd h = dense_h(model, theta);
  const Eigen::MatrixXd hinv = spd_inverse(h, "H");
  LogdetIdentity id;
  id.lhs = spd_logdet(h, "H") +
           spd_logdet(model.X.transpose() * hinv * model.X, "X^T H^-1 X");
  double logdet_g = 0.0;
  for (int k = 0; k < model.q(); ++k)
    logdet_g += model.factors[k].levels * std::log(theta.kappa[k]);
  id.rhs = spd_logdet(dense_c(model, theta), "C") + logdet_g;
  return id;
}

double trace_p_hdot_dense(const ModelSpec& model, const Theta& theta, int k) {
  require_dense_scale(model.n);
  return (dense_p(model, theta) * dense_hdot(model, k)).trace();
}

InfoMatrix info_dense(const ModelSpec& model, const Theta& theta, InfoKind kind) {
  require_dense_scale(model.n);
  if (kind != InfoKind::observed && kind != InfoKind::fisher)
    throw std::invalid_argument("info_dense: kind must be observed or fisher");
  const int q = model.q();
  const double s2 = theta.sigma2;
  const Eigen::MatrixXd p = dense_p(model, theta);
  const Eigen::VectorXd py = p * model.y;
  const double ypy = model.y.dot(py);

  std::vector<Eigen::MatrixXd> hdot(q), phdot(q);
  for (int k = 0; k < q; ++k) {
    hdot[k] = dense_hdot(model, k);
    phdot[k] = p * hdot[k];
  }

  InfoMatrix info;
  info.kind = kind;
  info.values.resize(1 + q, 1 + q);
  const double nv = model.n - model.p;
  if (kind == InfoKind::fisher) {
    info.values(0, 0) = nv / (2.0 * s2 * s2);
    for (int i = 0; i < q; ++i) {
      info.values(0, 1 + i) = info.values(1 + i, 0) =
          phdot[i].trace() / (2.0 * s2);
      for (int j = 0; j <= i; ++j)
        info.values(1 + i, 1 + j) = info.values(1 + j, 1 + i) =
            0.5 * (phdot[i] * phdot[j]).trace();
    }
  } else {
    info.values(0, 0) = ypy / (s2 * s2 * s2) - nv / (2.0 * s2 * s2);
    for (int i = 0; i < q; ++i) {
      const Eigen::VectorXd hpy = hdot[i] * py;
      info.values(0, 1 + i) = info.values(1 + i, 0) =
          py.dot(hpy) / (2.0 * s2 * s2);
      for (int j = 0; j <= i; ++j) {
        // Hddot terms vanish for the linear variance structure.
        const double tr_term = -0.5 * (phdot[i] * phdot[j]).trace();
        const double quad = py.dot(hdot[i] * (p * (hdot[j] * py))) / s2;
        info.values(1 + i, 1 + j) = info.values(1 + j, 1 + i) = tr_term + quad;
      }
    }
  }
  return info;
}

InfoMatrix average_info_dense(const ModelSpec& model, const Theta& theta) {
  require_dense_scale(model.n);
  const int q = model.q();
  const double s2 = theta.sigma2;
  const Eigen::MatrixXd p = dense_p(model, theta);
  const Eigen::VectorXd xi = p * model.y;

  std::vector<Eigen::VectorXd> eta(q), zeta(q);
  for (int k = 0; k < q; ++k) {
    eta[k] = dense_hdot(model, k) * xi;
    zeta[k] = p * eta[k];
  }

  InfoMatrix info;
  info.kind = InfoKind::average;
  info.values.resize(1 + q, 1 + q);
  info.values(0, 0) = model.y.dot(xi) / (2.0 * s2 * s2 * s2);
  for (int i = 0; i < q; ++i) {
    info.values(0, 1 + i) = info.values(1 + i, 0) =
        xi.dot(eta[i]) / (2.0 * s2 * s2);
    for (int j = 0; j <= i; ++j)
      info.values(1 + i, 1 + j) = info.values(1 + j, 1 + i) =
          eta[i].dot(zeta[j]) / (2.0 * s2);
  }
  return info;
}

}  // namespace remlkit::oracle
