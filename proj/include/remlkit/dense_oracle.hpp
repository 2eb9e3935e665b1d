#ifndef REMLKIT_DENSE_ORACLE_HPP
#define REMLKIT_DENSE_ORACLE_HPP

#include <Eigen/Dense>

#include "remlkit/info.hpp"
#include "remlkit/model.hpp"

// First-principles dense reference implementations. Everything here is
// O(n^3) and guarded by a hard size cap; the point is verification of the
// sparse fast path, not production use.
namespace remlkit::oracle {

constexpr int kDenseThreshold = 500;
void require_dense_scale(int n, int threshold = kDenseThreshold);

Eigen::MatrixXd dense_z(const ModelSpec& model);               // n x b
Eigen::MatrixXd dense_h(const ModelSpec& model, const Theta& theta);
Eigen::MatrixXd dense_hdot(const ModelSpec& model, int k);     // Z_k Z_k^T
Eigen::MatrixXd dense_c(const ModelSpec& model, const Theta& theta);

/// L = [L1, L2] with L1^T X = I_p and L2^T X = 0, built from an orthogonal
/// decomposition of range(X) (K = [K1, K2], B = I).
struct LBasis {
  Eigen::MatrixXd k1, k2;  // orthonormal bases of range(X) and its complement
  Eigen::MatrixXd l1, l2;
};
LBasis build_l_basis(const Eigen::MatrixXd& x);

struct ProjectorReport {
  double dev_k1k1;   // |P_X - K1 K1^T|
  double dev_k2k2;   // |(I - P_X) - K2 K2^T|
  double dev_l2form; // |(I - P_X) - L2 (L2^T L2)^-1 L2^T|
  double dev_idem;   // |P_X^2 - P_X|
  double max_dev() const;
};
ProjectorReport projector_identities(const Eigen::MatrixXd& x);

/// P evaluated three ways: H^-1 form, L2 contrast form, and the
/// mixed-model-equation form I - W C^-1 W^T (R = I).
struct PForms {
  Eigen::MatrixXd via_hinv;
  Eigen::MatrixXd via_l2;
  Eigen::MatrixXd via_c;
  double max_dev;
};
PForms p_three_ways(const ModelSpec& model, const Theta& theta);

/// P for an arbitrary SPD H: H^-1 form vs L2 form (no MME route without a
/// variance decomposition). Returns the elementwise max deviation.
double p_equivalence(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h);

Eigen::MatrixXd dense_p(const ModelSpec& model, const Theta& theta);
Eigen::MatrixXd dense_p(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h);

/// |(X^T H^-1 X)^-1 - (L1^T H L1 - L1^T H L2 (L2^T H L2)^-1 L2^T H L1)|
double xhx_identity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h);

/// Woodbury: H^-1 = I - Z (Z^T Z + G^-1)^-1 Z^T for R = I.
Eigen::MatrixXd woodbury_hinv(const ModelSpec& model, const Theta& theta);

struct CinvBlocks {
  Eigen::MatrixXd cxx, cxz, czx, czz;
};
CinvBlocks cinv_blocks(const ModelSpec& model, const Theta& theta);

/// Restricted log-likelihood through the error-contrast (L2) route.
double log_likelihood_l2(const ModelSpec& model, const Theta& theta);
double ypy_l2(const ModelSpec& model, const Theta& theta);

struct LogdetIdentity {
  double lhs;  // log|H| + log|X^T H^-1 X|
  double rhs;  // log|C| + log|G|  (log|R| = 0)
};
LogdetIdentity logdet_identity(const ModelSpec& model, const Theta& theta);

/// Observed or Fisher information from the dense P (second-derivative terms
/// with Hddot vanish: the variance structure is linear in kappa).
InfoMatrix info_dense(const ModelSpec& model, const Theta& theta, InfoKind kind);

/// Same quadratic forms as the sparse average-information path, but built
/// from the explicit dense P.
InfoMatrix average_info_dense(const ModelSpec& model, const Theta& theta);

double trace_p_hdot_dense(const ModelSpec& model, const Theta& theta, int k);

}  // namespace remlkit::oracle

#endif
