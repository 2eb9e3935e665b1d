#ifndef REMLKIT_MME_HPP
#define REMLKIT_MME_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "remlkit/ldl.hpp"
#include "remlkit/model.hpp"
#include "remlkit/sparse.hpp"

namespace remlkit {

/// Henderson mixed-model equations C (tau; u) = W^T y with W = [X, Z],
/// C = [[X^T X, X^T Z], [Z^T X, Z^T Z + G^-1]] and R = I.
///
/// The sparsity pattern is theta-independent: only 1/gamma_k added to the
/// random diagonal blocks changes between iterations, so the fill-reducing
/// ordering and symbolic analysis are done once and reused across every
/// refactorization.
class MmeContext {
 public:
  explicit MmeContext(const ModelSpec& model, bool use_amd = true);

  /// Installs theta and refactors numerically. Throws on kappa below the
  /// floor (G^-1 would blow up) and NotPositiveDefinite on bad pivots.
  void set_theta(const Theta& theta);
  bool factored() const { return factor_.has_value(); }

  int order() const { return base_.pattern.m; }
  const SparseSymPattern& pattern() const { return base_.pattern; }
  const SymbolicPlan& plan() const { return plan_; }
  const LdlFactor& factor() const;
  double logdet_c() const { return factor().logdet; }
  double logdet_g() const;  // sum_k b_k log gamma_k at the current theta

  /// Current C (base W^T W plus the G^-1 diagonal), e.g. for dumping.
  SparseSym c_matrix() const;
  const Eigen::VectorXd& rhs() const { return rhs_; }

  Eigen::VectorXd wt_apply(const Eigen::VectorXd& v) const;  // W^T v
  Eigen::VectorXd w_apply(const Eigen::VectorXd& x) const;   // W x

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Multi-RHS solve, columns of B independent; parallelized across up to
  /// REMLKIT_THREADS workers.
  Eigen::MatrixXd solve_multi(const Eigen::MatrixXd& b) const;

  struct Solution {
    Eigen::VectorXd tau_hat;
    Eigen::VectorXd u_tilde;
    Eigen::VectorXd residual;  // e = y - X tau - Z u
  };
  Solution solve_mme() const;

  /// P v = v - W C^-1 W^T v (R = I); never forms P.
  Eigen::VectorXd apply_p(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply_p_multi(const Eigen::MatrixXd& v) const;

  /// tr(P Hdot_k) = tr(Z_k^T Z_k) - tr(B^T C^-1 B), B = W^T Z_k; one
  /// multi-RHS solve with b_k columns.
  double trace_p_hdot(int k) const;

  void dump(const std::string& matrix_path, const std::string& rhs_path) const;

 private:
  const ModelSpec* model_;
  SparseSym base_;                     // W^T W, lower triangle
  std::vector<int> random_diag_entry_; // value index of each random diagonal
  SymbolicPlan plan_;
  Eigen::VectorXd rhs_;                // W^T y
  Theta theta_;
  std::optional<LdlFactor> factor_;
};

int solve_thread_budget();  // REMLKIT_THREADS, default 1

}  // namespace remlkit

#endif
