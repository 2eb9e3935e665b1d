#ifndef REMLKIT_MODEL_HPP
#define REMLKIT_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "remlkit/table.hpp"

namespace remlkit {

/// One random-effect factor: indicator design Z_k stored as a row-to-level
/// map (each row carries at most one level; -1 when the factor is not
/// observed on that record). Levels are ordered by first appearance.
struct RandomFactor {
  std::string name;
  int levels = 0;
  std::vector<int> level_of_row;  // size n, entries in [-1, levels)
  std::vector<std::string> level_names;

  /// w += Z_k^T v  (w has `levels` entries)
  void accumulate_zt(const Eigen::VectorXd& v, double* w) const;
  /// v += Z_k w
  void scatter_z(const double* w, Eigen::VectorXd& v) const;
  /// column counts n_l = (Z_k^T Z_k)_{ll}
  std::vector<int> level_counts() const;
};

/// y = X tau + sum_k Z_k u_k + e with var(u_k) = sigma^2 gamma_k I and
/// var(e) = sigma^2 I, so var(y) = sigma^2 H(kappa),
/// H = I + sum_k gamma_k Z_k Z_k^T. Immutable once built.
struct ModelSpec {
  int n = 0;
  int p = 0;
  Eigen::MatrixXd X;  // n x p, intercept in column 0
  std::vector<RandomFactor> factors;
  Eigen::VectorXd y;

  int q() const { return (int)factors.size(); }
  int total_levels() const;          // b = sum b_k
  int system_order() const { return p + total_levels(); }
  int level_offset(int k) const;     // position of factor k inside u
};

/// Variance parameters theta = (sigma^2, kappa_1..kappa_q).
struct Theta {
  double sigma2 = 1.0;
  std::vector<double> kappa;

  void check(double kappa_min = 0.0) const;  // throws on out-of-domain values
};

constexpr double kKappaMin = 1e-8;

ModelSpec build_model(const DataTable& table, const ModelDescriptor& desc);

/// H(kappa) v = v + sum_k kappa_k Z_k Z_k^T v, never forming H.
Eigen::VectorXd h_matvec(const ModelSpec& model, const Theta& theta,
                         const Eigen::VectorXd& v);

/// Hdot_k v = Z_k Z_k^T v (independent of theta; the variance structure is
/// linear in kappa). k is zero-based.
Eigen::VectorXd hdot_matvec(const ModelSpec& model, int k,
                            const Eigen::VectorXd& v);

}  // namespace remlkit

#endif
