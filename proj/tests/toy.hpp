// Shared fixtures: a four-record, one-factor model small enough to solve by
// hand, plus a simulated-dataset loader.
#ifndef REMLKIT_TESTS_TOY_HPP
#define REMLKIT_TESTS_TOY_HPP

#include "remlkit/datagen.hpp"
#include "remlkit/model.hpp"

namespace remlkit::testing {

// y = (1,2,3,4), intercept only, one factor with levels (a,a,b,b).
// With sigma^2 = 1, kappa = 1:
//   C = [[4,2,2],[2,3,0],[2,0,3]], rhs = (10,3,7),
//   tau_hat = 5/2, u = (-2/3, 2/3), e = (-5/6, 1/6, -1/6, 5/6),
//   y'Py = 7/3, log|C| = log 12, log|G| = 0.
inline ModelSpec toy_model() {
  DataTable t;
  t.names = {"y", "g"};
  t.columns = {{"1", "2", "3", "4"}, {"a", "a", "b", "b"}};
  ModelDescriptor d;
  d.response = "y";
  d.random_terms = {"g"};
  return build_model(t, d);
}

inline Theta toy_theta(double sigma2 = 1.0, double kappa = 1.0) {
  Theta th;
  th.sigma2 = sigma2;
  th.kappa = {kappa};
  return th;
}

inline ModelSpec bench_model(const BenchParams& params) {
  const BenchDataset ds = generate(params);
  return build_model(ds.to_table(), ds.descriptor());
}

inline ModelSpec mini_model(std::uint64_t seed = 7) {
  BenchParams p = preset("P1-mini");
  p.seed = seed;
  return bench_model(p);
}

// small enough (n well under the dense-oracle cap) for O(n^3) comparisons
inline BenchParams tiny_params(std::uint64_t seed = 7) {
  BenchParams p = preset("P1-mini");
  p.years = 3;
  p.centres = 4;
  p.varieties = 12;
  p.poisson_mean = 1.5;
  p.control_varieties = 2;
  p.seed = seed;
  return p;
}

inline ModelSpec tiny_model(std::uint64_t seed = 7) {
  return bench_model(tiny_params(seed));
}

}  // namespace remlkit::testing

#endif
