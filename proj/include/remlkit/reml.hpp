#ifndef REMLKIT_REML_HPP
#define REMLKIT_REML_HPP

#include <optional>
#include <vector>

#include "remlkit/info.hpp"
#include "remlkit/mme.hpp"
#include "remlkit/model.hpp"

namespace remlkit {

enum class FitMethod { newton, fisher, ai };

struct FitOptions {
  FitMethod method = FitMethod::ai;
  bool profile_sigma2 = true;   // closed-form sigma^2 between kappa updates
  int max_iter = 50;
  double tol_score = 1e-6;      // scaled by (1 + |loglik|)
  double tol_loglik = 1e-8;
  int max_halvings = 20;
  double kappa_min = kKappaMin;
  int dense_threshold = 500;    // cap for newton/fisher (dense information)
  std::optional<Theta> theta0;
};

struct IterRecord {
  int iter = 0;
  Theta theta;
  double loglik = 0.0;
  double score_norm = 0.0;
  int halvings = 0;
  bool steepest_ascent = false;
};

struct FitResult {
  Theta theta_hat;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_score_norm = 0.0;
  std::vector<IterRecord> trace;
  InfoMatrix final_info;            // average information at theta_hat
  Eigen::VectorXd std_errors;       // sqrt diag of final_info^-1
  std::vector<bool> at_boundary;    // kappa pinned at the floor
};

/// Likelihood/derivative evaluator over the sparse MME path. One symbolic
/// analysis at construction; set_theta triggers a numeric refactorization
/// and invalidates the per-theta caches.
class RemlEvaluator {
 public:
  explicit RemlEvaluator(const ModelSpec& model);

  const ModelSpec& model() const { return *model_; }
  MmeContext& mme() { return ctx_; }
  const Theta& theta() const { return theta_; }
  void set_theta(const Theta& theta);

  double log_likelihood();
  double ypy();                        // y^T P y, cached per theta
  const Eigen::VectorXd& py();         // P y = residual e (R = I)
  ScoreVec score();
  InfoMatrix average_info();
  double profile_sigma2();             // y^T P y / (n - p)

 private:
  const ModelSpec* model_;
  MmeContext ctx_;
  Theta theta_;
  bool have_theta_ = false;
  std::optional<Eigen::VectorXd> py_;
  std::optional<std::vector<double>> traces_;  // tr(P Hdot_k)
  const std::vector<double>& trace_terms();
};

// Convenience one-shot wrappers (each builds its own evaluator).
double log_likelihood(const ModelSpec& model, const Theta& theta);
ScoreVec score(const ModelSpec& model, const Theta& theta);
InfoMatrix average_info(const ModelSpec& model, const Theta& theta);
double profile_sigma2(const ModelSpec& model, const std::vector<double>& kappa);

/// Remainder (I_O + I)/2 - I_A. Dense-oracle scale only: the observed and
/// Fisher sides need explicit P. For this variance structure the
/// (sigma2,sigma2) and all (kappa,kappa) entries vanish identically.
InfoMatrix splitting_check(const ModelSpec& model, const Theta& theta,
                           int dense_threshold = 500);

FitResult fit(const ModelSpec& model, const FitOptions& opts = {});

}  // namespace remlkit

#endif
