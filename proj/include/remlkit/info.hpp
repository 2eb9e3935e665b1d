#ifndef REMLKIT_INFO_HPP
#define REMLKIT_INFO_HPP

#include <Eigen/Dense>
#include <cmath>

namespace remlkit {

enum class InfoKind { observed, fisher, average, remainder };

/// (1+q) x (1+q) symmetric information approximation; row/col 0 is sigma^2,
/// rows 1..q follow kappa order.
struct InfoMatrix {
  InfoKind kind = InfoKind::average;
  Eigen::MatrixXd values;
};

struct ScoreVec {
  double s_sigma2 = 0.0;
  Eigen::VectorXd s_kappa;

  Eigen::VectorXd full() const {
    Eigen::VectorXd s(1 + s_kappa.size());
    s[0] = s_sigma2;
    s.tail(s_kappa.size()) = s_kappa;
    return s;
  }
  double inf_norm() const { return full().cwiseAbs().maxCoeff(); }
};

}  // namespace remlkit

#endif
