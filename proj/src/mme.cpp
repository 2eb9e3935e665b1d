#include "remlkit/mme.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "remlkit/amd.hpp"

namespace remlkit {

int solve_thread_budget() {
  const char* env = std::getenv("REMLKIT_THREADS");
  if (!env) return 1;
  const int v = std::atoi(env);
  return v > 0 ? v : 1;
}

MmeContext::MmeContext(const ModelSpec& model, bool use_amd) : model_(&model) {
  const int p = model.p, order = model.system_order();
  TripletBuilder tb(order);

  // Fixed block X^T X.
  const Eigen::MatrixXd xtx = model.X.transpose() * model.X;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j <= i; ++j) tb.add(i, j, xtx(i, j));

  // X^T Z_k and the diagonal counts Z_k^T Z_k.
  for (int k = 0; k < model.q(); ++k) {
    const auto& f = model.factors[k];
    const int off = model.level_offset(k);
    Eigen::MatrixXd xtz = Eigen::MatrixXd::Zero(p, f.levels);
    for (int r = 0; r < model.n; ++r) {
      const int l = f.level_of_row[r];
      if (l >= 0) xtz.col(l) += model.X.row(r).transpose();
    }
    for (int l = 0; l < f.levels; ++l)
      for (int j = 0; j < p; ++j)
        if (xtz(j, l) != 0.0) tb.add(off + l, j, xtz(j, l));
    const auto counts = f.level_counts();
    for (int l = 0; l < f.levels; ++l) tb.add(off + l, off + l, (double)counts[l]);
  }

  // Cross blocks Z_j^T Z_k: co-occurrence counts.
  for (int k = 0; k < model.q(); ++k) {
    const auto& fk = model.factors[k];
    const int offk = model.level_offset(k);
    for (int j = 0; j < k; ++j) {
      const auto& fj = model.factors[j];
      const int offj = model.level_offset(j);
      for (int r = 0; r < model.n; ++r) {
        const int lk = fk.level_of_row[r], lj = fj.level_of_row[r];
        if (lk >= 0 && lj >= 0) tb.add(offk + lk, offj + lj, 1.0);
      }
    }
  }

  base_ = tb.build();

  random_diag_entry_.resize(order - p);
  for (int i = p; i < order; ++i)
    random_diag_entry_[i - p] = base_.pattern.col_ptr[i];

  const std::vector<int> perm =
      use_amd ? amd_order(base_.pattern) : natural_order(order);
  plan_ = symbolic_factor(base_.pattern, perm);

  rhs_ = wt_apply(model.y);
}

void MmeContext::set_theta(const Theta& theta) {
  if ((int)theta.kappa.size() != model_->q())
    throw std::invalid_argument("mme: kappa size mismatch");
  theta.check(kKappaMin);
  factor_.reset();

  std::vector<double> values = base_.values;
  for (int k = 0; k < model_->q(); ++k) {
    const auto& f = model_->factors[k];
    const int off = model_->level_offset(k) - model_->p;
    const double ginv = 1.0 / theta.kappa[k];
    for (int l = 0; l < f.levels; ++l)
      values[random_diag_entry_[off + l]] += ginv;
  }
  factor_ = numeric_factor(values, plan_);
  theta_ = theta;
}

const LdlFactor& MmeContext::factor() const {
  if (!factor_) throw std::logic_error("mme: set_theta not called");
  return *factor_;
}

double MmeContext::logdet_g() const {
  if (!factor_) throw std::logic_error("mme: set_theta not called");
  double s = 0.0;
  for (int k = 0; k < model_->q(); ++k)
    s += model_->factors[k].levels * std::log(theta_.kappa[k]);
  return s;
}

SparseSym MmeContext::c_matrix() const {
  SparseSym c = base_;
  if (factor_) {
    for (int k = 0; k < model_->q(); ++k) {
      const auto& f = model_->factors[k];
      const int off = model_->level_offset(k) - model_->p;
      for (int l = 0; l < f.levels; ++l)
        c.values[random_diag_entry_[off + l]] += 1.0 / theta_.kappa[k];
    }
  }
  return c;
}

Eigen::VectorXd MmeContext::wt_apply(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(order());
  out.head(model_->p) = model_->X.transpose() * v;
  for (int k = 0; k < model_->q(); ++k)
    model_->factors[k].accumulate_zt(v, out.data() + model_->level_offset(k));
  return out;
}

Eigen::VectorXd MmeContext::w_apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = model_->X * x.head(model_->p);
  for (int k = 0; k < model_->q(); ++k)
    model_->factors[k].scatter_z(x.data() + model_->level_offset(k), out);
  return out;
}

Eigen::VectorXd MmeContext::solve(const Eigen::VectorXd& b) const {
  if (b.size() != order()) throw std::invalid_argument("mme: rhs size mismatch");
  Eigen::VectorXd x = b;
  factor().solve_inplace(x.data(), 1);
  return x;
}

Eigen::MatrixXd MmeContext::solve_multi(const Eigen::MatrixXd& b) const {
  if (b.rows() != order()) throw std::invalid_argument("mme: rhs size mismatch");
  Eigen::MatrixXd x = b;
  const int r = (int)x.cols();
  const int nthreads = std::min(solve_thread_budget(), r);
  const LdlFactor& f = factor();
  if (nthreads <= 1 || r < 8) {
    f.solve_inplace(x.data(), r);
    return x;
  }
  std::vector<std::thread> pool;
  const int chunk = (r + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    const int lo = t * chunk, hi = std::min(r, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      f.solve_inplace(x.data() + (std::ptrdiff_t)lo * x.rows(), hi - lo);
    });
  }
  for (auto& th : pool) th.join();
  return x;
}

MmeContext::Solution MmeContext::solve_mme() const {
  Solution s;
  const Eigen::VectorXd x = solve(rhs_);
  s.tau_hat = x.head(model_->p);
  s.u_tilde = x.tail(order() - model_->p);
  s.residual = model_->y - w_apply(x);
  return s;
}

Eigen::VectorXd MmeContext::apply_p(const Eigen::VectorXd& v) const {
  if (v.size() != model_->n) throw std::invalid_argument("apply_p: length mismatch");
  return v - w_apply(solve(wt_apply(v)));
}

Eigen::MatrixXd MmeContext::apply_p_multi(const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd b(order(), v.cols());
  for (int c = 0; c < v.cols(); ++c) b.col(c) = wt_apply(v.col(c));
  b = solve_multi(b);
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (int c = 0; c < v.cols(); ++c) out.col(c) = v.col(c) - w_apply(b.col(c));
  return out;
}

double MmeContext::trace_p_hdot(int k) const {
  if (k < 0 || k >= model_->q())
    throw std::invalid_argument("trace_p_hdot: k out of range");
  const auto& f = model_->factors[k];
  // B = W^T Z_k, assembled record by record.
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(order(), f.levels);
  for (int r = 0; r < model_->n; ++r) {
    const int l = f.level_of_row[r];
    if (l < 0) continue;
    b.col(l).head(model_->p) += model_->X.row(r).transpose();
    for (int j = 0; j < model_->q(); ++j) {
      const int lj = model_->factors[j].level_of_row[r];
      if (lj >= 0) b(model_->level_offset(j) + lj, l) += 1.0;
    }
  }
  const Eigen::MatrixXd x = solve_multi(b);
  double tr = 0.0;
  for (int c : f.level_counts()) tr += c;
  tr -= (b.array() * x.array()).sum();
  return tr;
}

void MmeContext::dump(const std::string& matrix_path,
                      const std::string& rhs_path) const {
  write_matrix_market(matrix_path, c_matrix());
  std::ofstream os(rhs_path);
  if (!os) throw std::runtime_error("cannot open for write: " + rhs_path);
  os.precision(17);
  for (int i = 0; i < rhs_.size(); ++i) os << rhs_[i] << "\n";
}

}  // namespace remlkit
